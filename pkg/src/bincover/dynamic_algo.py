"""Dynamic online bin covering at ratio 3/2+eps under arrivals and
departures.

Big and medium items follow the static procedures (with dummy items standing
in for extractions so removals funnel through one deletion path); small items
live in the chain and group structures, which bound the migration each event
may trigger.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .chains import ChainError, SeqChains, _smalls
from .core import (
    Bin,
    BinKind,
    BinStore,
    HALF,
    Item,
    ItemClass,
    MigrationLedger,
    ONE,
    Size,
    ZERO,
    biggest,
    classify,
    is_barely_covered,
    is_covered,
    is_well_covered,
)
from .groups import GroupedBS
from .static_algo import Violation, big_entries, nonbig_entries


class DynamicState:
    """State of the dynamic algorithm; 1/eps must be an integer."""

    def __init__(self, eps: Size, ledger: MigrationLedger | None = None):
        inv = ONE / eps
        if eps <= 0 or eps > HALF or inv.denominator != 1:
            raise ValueError("eps must lie in (0, 1/2] with 1/eps integral")
        self.eps = eps
        self.k = int(inv)
        self.ledger = ledger or MigrationLedger()
        self.store = BinStore(self.ledger)
        self.bb: set[int] = set()
        self.bm: set[int] = set()
        self.m: set[int] = set()
        self.seq = SeqChains(self.store, eps)
        self.bs = GroupedBS(self.store, eps, self.seq)
        self.unit_bins: dict[int, Size] = {}
        self._dummy_ids = itertools.count(-1, -1)
        self._big_depth = 0
        self.max_big_event_depth = 0

    # -- shared helpers --------------------------------------------------------

    def _set_of(self, kind: BinKind) -> set[int]:
        return {BinKind.BB: self.bb, BinKind.BM: self.bm, BinKind.M: self.m}[kind]

    def _new_bin(self, kind: BinKind) -> Bin:
        b = self.store.new_bin(kind)
        self._set_of(kind).add(b.id)
        return b

    def _rekind(self, bin_id: int, kind: BinKind) -> None:
        b = self.store.bins[bin_id]
        if b.kind in (BinKind.BB, BinKind.BM, BinKind.M):
            self._set_of(b.kind).discard(bin_id)
        b.kind = kind
        if kind in (BinKind.BB, BinKind.BM, BinKind.M):
            self._set_of(kind).add(bin_id)

    def _drop_if_empty(self, bin_id: int) -> None:
        b = self.store.bins.get(bin_id)
        if b is not None and b.is_empty():
            if b.kind in (BinKind.BB, BinKind.BM, BinKind.M):
                self._set_of(b.kind).discard(bin_id)
            self.store.delete_bin(bin_id)

    def _sum_m(self) -> Size:
        return sum((self.store.bins[bid].load for bid in self.m), ZERO)

    def _bs_bins(self) -> list[int]:
        return self.bs.all_bins()

    def _bigs_of_ids(self, ids) -> list[tuple[int, Size]]:
        return [e for bid in ids for e in big_entries(self.store.bins[bid])]

    def _max_item_size(self, ids) -> Size:
        best = ZERO
        for bid in ids:
            for s in self.store.bins[bid].items.values():
                if s > best:
                    best = s
        return best

    def _sync_bs_kinds(self) -> None:
        for bid in self._bs_bins():
            b = self.store.bins[bid]
            want = BinKind.BSC if is_covered(b) else BinKind.BSP
            if b.kind is not want:
                b.kind = want

    def greedy_push_medium(self, item_id: int, size: Size) -> int:
        open_bins = [bid for bid in self.m if self.store.bins[bid].load < ONE]
        if open_bins:
            target = min(open_bins, key=lambda bid: (-self.store.bins[bid].load, bid))
        else:
            target = self._new_bin(BinKind.M).id
        self.store.place(item_id, size, target)
        return target

    def greedy_pull(self, target_id: int, donor_ids: list[int]) -> Size:
        target = self.store.bins[target_id]
        moved = ZERO
        while target.load < ONE:
            live = [
                bid
                for bid in donor_ids
                if bid != target_id
                and bid in self.store.bins
                and nonbig_entries(self.store.bins[bid])
            ]
            if not live:
                break
            donor = min(live, key=lambda bid: (self.store.bins[bid].load, bid))
            victim = biggest(nonbig_entries(self.store.bins[donor]))
            assert victim is not None
            self.store.move(victim[0], target_id)
            moved += victim[1]
            self._drop_if_empty(donor)
        return moved

    # -- events ------------------------------------------------------------------

    def on_arrive(self, item: Item) -> None:
        if item.id in self.store.item_bin or item.id in self.unit_bins:
            raise ValueError(f"duplicate item id {item.id}")
        self.ledger.begin_event(item.size)
        self.ledger.grant_free_placement(item.id)
        self.bs.gapfill_calls_per_group = {}
        try:
            if item.size == ONE:
                self.unit_bins[item.id] = item.size
                return
            cls = classify(item.size, self.eps)
            if cls is ItemClass.SMALL:
                g = self.bs.select_group_for_small(item.size)
                self.bs.insert_small([(item.id, item.size)], g, 1)
            elif cls is ItemClass.MEDIUM:
                self._insert_medium(item.id, item.size)
            else:
                self._insert_big(item.id, item.size, allow_bm=True)
        finally:
            self._sync_bs_kinds()
            self.ledger.end_event()

    def on_depart(self, item_id: int) -> None:
        if item_id in self.unit_bins:
            size = self.unit_bins.pop(item_id)
            self.ledger.begin_event(size)
            self.ledger.end_event()
            return
        if item_id not in self.store.item_bin:
            raise KeyError(f"item {item_id} is not live")
        size = self.store.item_size[item_id]
        self.ledger.begin_event(size)
        self.bs.gapfill_calls_per_group = {}
        try:
            self._depart(item_id)
        finally:
            self._sync_bs_kinds()
            self.ledger.end_event()

    # -- departures ---------------------------------------------------------------

    def _depart(self, item_id: int) -> None:
        bid = self.store.item_bin[item_id]
        size = self.store.item_size[item_id]
        b = self.store.bins[bid]
        is_big = size > HALF
        self.store.remove(item_id)
        if bid in self.bm:
            if is_big:
                self._depart_big_from_bm(bid)
            else:
                self._depart_medium_from_bm(bid)
        elif bid in self.bb:
            self._depart_big_from_bb(bid)
        elif bid in self.m:
            self._depart_medium_from_m(bid)
        elif b.kind is BinKind.GB:
            self._depart_small_from_gb(bid, item_id)
        elif bid in self.seq.all_bins():
            self.seq.handle_departure(bid)
        else:
            gi, chain = self.bs.locate(bid)
            if is_big:
                self._repair_bs_removal(bid, gi + 1)
            else:
                self._depart_small_from_group(bid, gi, chain)

    def _depart_small_from_gb(self, bid: int, item_id: int) -> None:
        gi = self.bs.group_of_gb(bid)
        group = self.bs.groups[gi]
        keys = list(group.pieces.pop(item_id, {}).keys())
        self.bs.repair_buffer_anchor(gi, keys)

    def _depart_small_from_group(self, bid: int, gi: int, chain) -> None:
        b = self.store.bins[bid]
        if is_well_covered(b, self.eps):
            return
        last_small = self.bs.last_group_with_smalls()
        if last_small is not None and gi + 1 == last_small:
            idx = chain.bins.index(bid)
            later_smalls = any(
                _smalls(self.store.bins[x], self.eps) for x in chain.bins[idx + 1 :]
            )
            if not later_smalls and not self.bs.buffer_entries(
                self.bs.groups[gi], chain
            ):
                return
        self.bs.gap_fill(bid)

    def _depart_medium_from_m(self, bid: int) -> None:
        b = self.store.bins[bid]
        if b.is_empty():
            self._drop_if_empty(bid)
            return
        if is_covered(b):
            return
        stash = sorted(b.items.items(), key=lambda e: (-e[1], e[0]))
        for iid, _ in stash:
            self.store.remove(iid)
        self._drop_if_empty(bid)
        for iid, s in stash:
            self._insert_medium(iid, s)

    def _depart_medium_from_bm(self, bid: int) -> None:
        b = self.store.bins[bid]
        if is_covered(b):
            return
        self.greedy_pull(bid, sorted(self.m))
        if is_covered(b):
            return
        assert not self.m, "medium pull left M bins while the target is uncovered"
        big = big_entries(b)[0]
        self.store.remove(big[0])
        if b.is_empty():
            self._drop_if_empty(bid)
        else:
            self._rekind(bid, BinKind.M)
        # the freed big may re-enter BM by evicting a smaller one; only that
        # evictee is barred from returning to BM
        self._insert_big(big[0], big[1], allow_bm=True)

    def _depart_big_from_bm(self, bid: int) -> None:
        b = self.store.bins[bid]
        stash = sorted(b.items.items(), key=lambda e: (-e[1], e[0]))
        for iid, _ in stash:
            self.store.remove(iid)
        self._drop_if_empty(bid)
        for iid, s in stash:
            self._insert_medium(iid, s)

    def _depart_big_from_bb(self, bid: int) -> None:
        nbb = len(self.bb)
        nbs = len(self._bs_bins())
        b = self.store.bins[bid]
        remaining = big_entries(b)[0]
        if nbb >= nbs:
            pick = max(
                self._bigs_of_ids(self.bb),
                key=lambda e: (e[1], 1 if self.store.item_bin[e[0]] == bid else 0, -e[0]),
            )
            if self.store.item_bin[pick[0]] == bid:
                self.store.remove(remaining[0])
                self._drop_if_empty(bid)
                self._insert_big(remaining[0], remaining[1], allow_bm=True)
            else:
                target = self.store.item_bin[pick[0]]
                self.store.remove(pick[0])
                self.store.move(remaining[0], target)
                self._drop_if_empty(bid)
                self._insert_big(pick[0], pick[1], allow_bm=True)
        else:
            donor = min(
                self._bs_bins(),
                key=lambda x: (self.bs.big_of(x)[1], x),
            )
            gi, _ = self.bs.locate(donor)
            iid, size = self.bs.big_of(donor)
            self.store.remove(iid)
            self.store.place(iid, size, bid)
            self._repair_bs_removal(donor, gi + 1)

    def _repair_bs_removal(self, bin_id: int, g: int) -> None:
        """A big item left the given BS bin: repair the group structure, the
        doubling sizes, and the BB/BS balance."""
        self.bs.group_delete(bin_id, g)
        self.bs.normalize()
        if len(self._bs_bins()) == len(self.bb) - 2:
            self._dissolve_top_bb_pair()

    def _dissolve_top_bb_pair(self) -> None:
        entries = sorted(self._bigs_of_ids(self.bb), key=lambda e: (-e[1], e[0]))
        i1, i2 = entries[0], entries[1]
        b1 = self.store.item_bin[i1[0]]
        b2 = self.store.item_bin[i2[0]]
        if b1 != b2:
            # make one bin hold the two largest big items
            other = [e for e in big_entries(self.store.bins[b1]) if e[0] != i1[0]][0]
            self.store.remove(other[0])
            self.store.move(i2[0], b1)
            self.store.place(other[0], other[1], b2)
        self.store.remove(i1[0])
        self.store.remove(i2[0])
        self._drop_if_empty(b1)
        self._insert_big(i1[0], i1[1], allow_bm=True)
        self._insert_big(i2[0], i2[1], allow_bm=True)

    # -- arrivals -------------------------------------------------------------------

    def _insert_medium(self, item_id: int, size: Size) -> None:
        self.greedy_push_medium(item_id, size)
        bs_bins = self._bs_bins()
        others = set(bs_bins) | self.bb
        if not others or self._sum_m() < ONE - self._max_item_size(others):
            return
        if not bs_bins:
            assert len(self.bb) == 1
            bid = next(iter(self.bb))
            bigs = sorted(big_entries(self.store.bins[bid]), key=lambda e: (e[1], e[0]))
            smaller = bigs[0]
            self.store.remove(smaller[0])
            self._rekind(bid, BinKind.BM)
            self.greedy_pull(bid, sorted(self.m))
            assert is_covered(self.store.bins[bid])
            self._insert_big(smaller[0], smaller[1], allow_bm=True)
        else:
            # swap the biggest big item of BS for a same-size dummy, cover a
            # fresh BM bin with it, then retire the dummy via big deletion
            top_bin = max(bs_bins, key=lambda x: (self.bs.big_of(x)[1], -x))
            iid, isize = self.bs.big_of(top_bin)
            dummy = next(self._dummy_ids)
            self.store.remove(iid)
            self.ledger.grant_free_placement(dummy)
            self.store.place(dummy, isize, top_bin)
            fresh = self._new_bin(BinKind.BM)
            self.store.place(iid, isize, fresh.id)
            self.greedy_pull(fresh.id, sorted(self.m))
            assert is_covered(self.store.bins[fresh.id])
            self._depart(dummy)

    def _insert_big(self, item_id: int, size: Size, *, allow_bm: bool) -> None:
        self._big_depth += 1
        self.max_big_event_depth = max(self.max_big_event_depth, self._big_depth)
        try:
            if self._big_depth > 6:
                raise AssertionError("big-item recursion exceeded the expected fan-out")
            bm_bigs = self._bigs_of_ids(self.bm)
            min_bm = min((s for _, s in bm_bigs), default=None)
            if allow_bm and (
                size + self._sum_m() >= ONE or (min_bm is not None and size > min_bm)
            ):
                self._insert_big_into_bm(item_id, size, min_bm)
                return
            bs_bins = self._bs_bins()
            bs_bigs = [self.bs.big_of(bid) for bid in bs_bins]
            min_bs = min((s for _, s in bs_bigs), default=None)
            max_bb = max((s for _, s in self._bigs_of_ids(self.bb)), default=ZERO)
            if (min_bs is not None and size > min_bs) or (
                size >= max_bb and len(bs_bins) <= len(self.bb)
            ):
                self._insert_big_into_bs(item_id, size, min_bs)
                return
            self._insert_big_into_bb(item_id, size)
        finally:
            self._big_depth -= 1

    def _insert_big_into_bm(self, item_id: int, size: Size, min_bm: Size | None) -> None:
        covers_with_m = size + self._sum_m() >= ONE
        fresh = self._new_bin(BinKind.BM)
        self.store.place(item_id, size, fresh.id)
        self.greedy_pull(fresh.id, sorted(self.m))
        if is_covered(self.store.bins[fresh.id]):
            assert covers_with_m
            return
        assert min_bm is not None and size > min_bm
        evict = min(
            (
                e
                for bid in self.bm
                if bid != fresh.id
                for e in big_entries(self.store.bins[bid])
            ),
            key=lambda e: (e[1], e[0]),
        )
        evict_bin = self.store.item_bin[evict[0]]
        self.store.remove(evict[0])
        self._rekind(evict_bin, BinKind.M)
        self.greedy_pull(fresh.id, [evict_bin])
        assert is_covered(self.store.bins[fresh.id])
        self._drop_if_empty(evict_bin)
        self._insert_big(evict[0], evict[1], allow_bm=False)

    def _insert_big_into_bs(self, item_id: int, size: Size, min_bs: Size | None) -> None:
        total = len(self.bs.groups)
        if total == 0:
            g = 1
        elif min_bs is not None and size <= min_bs:
            g = total
        else:
            g = next(
                gi + 1
                for gi in range(total)
                if any(
                    self.bs.big_of(bid)[1] < size
                    for c in self.bs.groups[gi].chains
                    for bid in c.bins
                )
            )
        self.bs.group_insert(item_id, size, g)
        self.bs.normalize()
        if len(self._bs_bins()) == len(self.bb) + 2:
            self._dummy_pair_rebalance()

    def _dummy_pair_rebalance(self) -> None:
        bb_bigs = self._bigs_of_ids(self.bb)
        if bb_bigs:
            copy_size = max(s for _, s in bb_bigs)
        else:
            copy_size = min(self.bs.big_of(bid)[1] for bid in self._bs_bins())
        d1 = next(self._dummy_ids)
        d2 = next(self._dummy_ids)
        fresh = self._new_bin(BinKind.BB)
        self.ledger.grant_free_placement(d1)
        self.ledger.grant_free_placement(d2)
        self.store.place(d1, copy_size, fresh.id)
        self.store.place(d2, copy_size, fresh.id)
        self._depart(d1)
        self._depart(d2)

    def _insert_big_into_bb(self, item_id: int, size: Size) -> None:
        bs_bins = self._bs_bins()
        if len(bs_bins) == len(self.bb) + 1:
            donor = min(bs_bins, key=lambda x: (self.bs.big_of(x)[1], x))
            gi, _ = self.bs.locate(donor)
            iid, isize = self.bs.big_of(donor)
            fresh = self._new_bin(BinKind.BB)
            self.store.place(item_id, size, fresh.id)
            self.store.remove(iid)
            self.store.place(iid, isize, fresh.id)
            self._repair_bs_removal(donor, gi + 1)
        else:
            assert self.bb, "big item fell through to an empty BB"
            evict = max(self._bigs_of_ids(self.bb), key=lambda e: (e[1], -e[0]))
            assert size < evict[1]
            target = self.store.item_bin[evict[0]]
            self.store.remove(evict[0])
            self.store.place(item_id, size, target)
            self._insert_big(evict[0], evict[1], allow_bm=True)

    # -- reporting --------------------------------------------------------------------

    def objective(self) -> int:
        covered = sum(1 for b in self.store.bins.values() if b.load >= ONE)
        return covered + len(self.unit_bins)

    def live_items(self) -> list[Item]:
        items = [
            Item(i, s) for i, s in self.store.item_size.items() if i >= 0
        ]
        items += [Item(i, s) for i, s in self.unit_bins.items()]
        return sorted(items, key=lambda it: it.id)

    # -- invariants ---------------------------------------------------------------------

    def check_invariants(self) -> list[Violation]:
        out: list[Violation] = []
        eps = self.eps
        seq_bins = set(self.seq.all_bins())
        group_bins = set(self._bs_bins())
        gb_bins = set(self.bs.gb_bins())
        tracked = self.bb | self.bm | self.m | seq_bins | group_bins | gb_bins
        for bid in self.store.bins:
            if bid not in tracked:
                out.append(Violation("D-I1", f"bin {bid} belongs to no structure"))
        if len(tracked) != len(self.bb) + len(self.bm) + len(self.m) + len(seq_bins) + len(
            group_bins
        ) + len(gb_bins):
            out.append(Violation("D-I1", "bin sets overlap"))

        for bid in sorted(self.store.bins):
            b = self.store.bins[bid]
            bigs = big_entries(b)
            mediums = b.of_class(eps, ItemClass.MEDIUM)
            smalls = b.of_class(eps, ItemClass.SMALL)
            if any(i < 0 for i in b.items):
                out.append(Violation("D-I1", f"bin {bid} retains a dummy item"))
            if bid in self.bb:
                if len(b.items) != 2 or len(bigs) != 2:
                    out.append(Violation("D-I1", f"BB bin {bid} composition broken"))
            elif bid in self.bm:
                if len(bigs) != 1 or smalls or not is_covered(b):
                    out.append(Violation("D-I1", f"BM bin {bid} composition broken"))
            elif bid in self.m:
                if bigs or smalls:
                    out.append(Violation("D-I1", f"M bin {bid} holds non-medium items"))
            elif bid in group_bins:
                if len(bigs) != 1 or mediums:
                    out.append(Violation("D-I1", f"BS bin {bid} composition broken"))
                want = BinKind.BSC if is_covered(b) else BinKind.BSP
                if b.kind is not want:
                    out.append(Violation("D-I1", f"BS bin {bid} kind out of sync"))
                if is_covered(b) and not is_well_covered(b, eps):
                    out.append(Violation("D-I1", f"BSC bin {bid} is not well-covered"))
            elif bid in seq_bins or bid in gb_bins:
                if bigs or mediums:
                    out.append(
                        Violation("D-I1", f"small-item bin {bid} holds larger items")
                    )
            if bid not in gb_bins and is_covered(b) and not is_barely_covered(b, eps):
                out.append(Violation("D-I1", f"bin {bid} covered but not barely"))

        if abs(len(self.bb) - len(group_bins)) > 1:
            out.append(
                Violation("D-I2", f"|BB|={len(self.bb)} vs |BS|={len(group_bins)}")
            )

        bm_bigs = [s for _, s in self._bigs_of_ids(self.bm)]
        bs_bigs = [self.bs.big_of(bid)[1] for bid in group_bins]
        bb_bigs = [s for _, s in self._bigs_of_ids(self.bb)]
        if bm_bigs and (bs_bigs or bb_bigs):
            if min(bm_bigs) < max(bs_bigs + bb_bigs):
                out.append(Violation("D-I3", "BM bigs below BS/BB bigs"))
        if bs_bigs and bb_bigs and min(bs_bigs) < max(bb_bigs):
            out.append(Violation("D-I3", "BS bigs below BB bigs"))

        others = group_bins | self.bb
        if others and self._sum_m() >= ONE - self._max_item_size(others):
            out.append(Violation("D-I4", "M items could cover a bin with a big item"))

        bsp = [bid for bid in group_bins if self.store.bins[bid].load < ONE]
        if seq_bins and any(not self.store.bins[b].is_empty() for b in seq_bins) and bsp:
            out.append(Violation("D-I5", "small-only bins coexist with partial BS bins"))

        uncovered_m = [bid for bid in self.m if self.store.bins[bid].load < ONE]
        if len(uncovered_m) > 1:
            out.append(Violation("D-I6", f"M holds {len(uncovered_m)} uncovered bins"))

        out += [Violation(p.split(":")[0], p.split(": ", 1)[1]) for p in self.seq.check()]
        out += [Violation(p.split(":")[0], p.split(": ", 1)[1]) for p in self.bs.check()]
        return out
