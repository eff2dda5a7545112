"""Static online bin covering at ratio 3/2+eps with O(1/eps) migration.

Bins are kept in six typed sets (two-big, big+medium, big+small covered,
big+small partial, medium-only, small-only) under invariants I1-I7; arrivals
dispatch to per-class insertion procedures that restore the invariants by
moving a bounded total size.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

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
    smallest,
)

Entry = tuple[int, Size]


@dataclass
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


def big_entries(b: Bin) -> list[Entry]:
    return [(i, s) for i, s in b.items.items() if s > HALF]


def nonbig_entries(b: Bin) -> list[Entry]:
    return [(i, s) for i, s in b.items.items() if s <= HALF]


class StaticState:
    """State of the static algorithm; events are applied strictly in order."""

    def __init__(self, eps: Size, ledger: MigrationLedger | None = None):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.eps = min(eps, HALF)
        self.ledger = ledger or MigrationLedger()
        self.store = BinStore(self.ledger)
        self.bb: set[int] = set()
        self.bm: set[int] = set()
        self.bsc: set[int] = set()
        self.bsp: set[int] = set()
        self.m: set[int] = set()
        self.s: set[int] = set()
        self.unit_bins: dict[int, Size] = {}
        self._insert_depth = 0
        self.max_big_reinsert_depth = 0

    # -- helpers -------------------------------------------------------------

    def _set_of(self, kind: BinKind) -> set[int]:
        return {
            BinKind.BB: self.bb,
            BinKind.BM: self.bm,
            BinKind.BSC: self.bsc,
            BinKind.BSP: self.bsp,
            BinKind.M: self.m,
            BinKind.S: self.s,
        }[kind]

    def _new_bin(self, kind: BinKind) -> Bin:
        b = self.store.new_bin(kind)
        self._set_of(kind).add(b.id)
        return b

    def _rekind(self, bin_id: int, kind: BinKind) -> None:
        b = self.store.bins[bin_id]
        self._set_of(b.kind).discard(bin_id)
        b.kind = kind
        self._set_of(kind).add(bin_id)

    def _drop_if_empty(self, bin_id: int) -> None:
        b = self.store.bins.get(bin_id)
        if b is not None and b.is_empty():
            self._set_of(b.kind).discard(bin_id)
            self.store.delete_bin(bin_id)

    def _sync_bs(self, bin_id: int) -> None:
        b = self.store.bins[bin_id]
        if b.kind in (BinKind.BSC, BinKind.BSP):
            want = BinKind.BSC if is_covered(b) else BinKind.BSP
            if b.kind is not want:
                self._rekind(bin_id, want)

    def _bigs_of(self, ids: set[int]) -> list[Entry]:
        return [e for bid in ids for e in big_entries(self.store.bins[bid])]

    def _max_item_size(self, ids: set[int]) -> Size:
        best = ZERO
        for bid in ids:
            for s in self.store.bins[bid].items.values():
                if s > best:
                    best = s
        return best

    def _sum_m(self) -> Size:
        return sum((self.store.bins[bid].load for bid in self.m), ZERO)

    @property
    def bs(self) -> set[int]:
        return self.bsc | self.bsp

    # -- greedy procedures -----------------------------------------------------

    def greedy_push(self, item_id: int, size: Size, into: BinKind) -> int:
        """Insert into the most loaded uncovered bin of the set, opening a
        new bin when every bin is covered (or the set is empty)."""
        ids = self._set_of(into)
        open_bins = [bid for bid in ids if self.store.bins[bid].load < ONE]
        if open_bins:
            target = min(open_bins, key=lambda bid: (-self.store.bins[bid].load, bid))
        else:
            target = self._new_bin(into).id
        self.store.place(item_id, size, target)
        self._sync_bs(target)
        return target

    def greedy_pull(self, target_id: int, donor_ids: list[int]) -> Size:
        """Move largest non-big items from least loaded donors into the
        target until it is covered or no donor has non-big items left.
        Returns the total size moved (< 1 when the target has a big item)."""
        target = self.store.bins[target_id]
        had_big = bool(big_entries(target))
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
            self._sync_bs(donor)
            self._drop_if_empty(donor)
        if had_big and moved >= ONE:
            raise AssertionError("greedy pull moved a full unit into a big-item bin")
        return moved

    # -- events ---------------------------------------------------------------

    def on_arrive(self, item: Item) -> None:
        if item.id in self.store.item_bin or item.id in self.unit_bins:
            raise ValueError(f"duplicate item id {item.id}")
        self.ledger.begin_event(item.size)
        self.ledger.grant_free_placement(item.id)
        try:
            if item.size == ONE:
                self.unit_bins[item.id] = item.size
                return
            cls = classify(item.size, self.eps)
            if cls is ItemClass.SMALL:
                self._insert_small(item.id, item.size)
            elif cls is ItemClass.MEDIUM:
                self._insert_medium(item.id, item.size)
            else:
                self._insert_big(item.id, item.size, allow_bm=True)
        finally:
            self.ledger.end_event()

    def on_depart(self, item_id: int) -> None:
        raise NotImplementedError("the static algorithm does not support departures")

    # -- insertion procedures ---------------------------------------------------

    def _insert_small(self, item_id: int, size: Size) -> None:
        if self.bsp:
            self.greedy_push(item_id, size, BinKind.BSP)
        else:
            self.greedy_push(item_id, size, BinKind.S)

    def _insert_medium(self, item_id: int, size: Size) -> None:
        self.greedy_push(item_id, size, BinKind.M)
        bs_bb = self.bs | self.bb
        if not bs_bb or self._sum_m() < ONE - self._max_item_size(bs_bb):
            return
        if not self.bs:
            # the one BB bin donates its smaller big; the bin becomes a BM bin
            assert len(self.bb) == 1
            bid = next(iter(self.bb))
            bigs = sorted(big_entries(self.store.bins[bid]), key=lambda e: (e[1], e[0]))
            smaller_big = bigs[0]
            self.store.remove(smaller_big[0])
            self._rekind(bid, BinKind.BM)
            self.greedy_pull(bid, sorted(self.m))
            assert is_covered(self.store.bins[bid])
            self._insert_big(smaller_big[0], smaller_big[1], allow_bm=True)
        else:
            top = max(
                (e for bid in self.bs for e in big_entries(self.store.bins[bid])),
                key=lambda e: (e[1], -e[0]),
            )
            bid = self.store.item_bin[top[0]]
            stash = [e for e in self.store.bins[bid].items.items() if e[0] != top[0]]
            for sid, _ in stash:
                self.store.remove(sid)
            self._rekind(bid, BinKind.BM)
            self.greedy_pull(bid, sorted(self.m))
            assert is_covered(self.store.bins[bid])
            if len(self.bb) == len(self.bs) + 2:
                self._dissolve_largest_bb()
            for sid, ssize in sorted(stash, key=lambda e: (-e[1], e[0])):
                self._insert_small(sid, ssize)

    def _dissolve_largest_bb(self) -> None:
        """Remove the two biggest big items from BB (merging their bins if
        distinct) and reinsert them; both land in BS by size."""
        entries = sorted(self._bigs_of(self.bb), key=lambda e: (-e[1], e[0]))
        i1, i2 = entries[0], entries[1]
        b1 = self.store.item_bin[i1[0]]
        b2 = self.store.item_bin[i2[0]]
        self.store.remove(i1[0])
        self.store.remove(i2[0])
        if b1 != b2:
            leftover = next(iter(self.store.bins[b2].items.items()))
            self.store.move(leftover[0], b1)
            self._set_of(BinKind.BB).discard(b2)
            self.store.delete_bin(b2)
        else:
            self._drop_if_empty(b1)
        self._insert_big(i1[0], i1[1], allow_bm=True)
        self._insert_big(i2[0], i2[1], allow_bm=True)

    def _insert_big(self, item_id: int, size: Size, *, allow_bm: bool) -> None:
        self._insert_depth += 1
        self.max_big_reinsert_depth = max(self.max_big_reinsert_depth, self._insert_depth - 1)
        try:
            if self._insert_depth > 3:
                raise AssertionError("big-item reinsertion depth exceeded 2")
            bm_bigs = self._bigs_of(self.bm)
            min_bm = min((s for _, s in bm_bigs), default=None)
            if allow_bm and (
                size + self._sum_m() >= ONE or (min_bm is not None and size > min_bm)
            ):
                self._insert_big_into_bm(item_id, size, min_bm)
                return
            bs_bigs = self._bigs_of(self.bs)
            min_bs = min((s for _, s in bs_bigs), default=None)
            max_bb = max((s for _, s in self._bigs_of(self.bb)), default=ZERO)
            if (min_bs is not None and size > min_bs) or (
                size >= max_bb and len(self.bs) <= len(self.bb)
            ):
                self._insert_big_into_bs(item_id, size)
                return
            self._insert_big_into_bb(item_id, size)
        finally:
            self._insert_depth -= 1

    def _insert_big_into_bm(self, item_id: int, size: Size, min_bm: Size | None) -> None:
        covers_with_m = size + self._sum_m() >= ONE
        fresh = self._new_bin(BinKind.BM)
        self.store.place(item_id, size, fresh.id)
        self.greedy_pull(fresh.id, sorted(self.m))
        if is_covered(self.store.bins[fresh.id]):
            assert covers_with_m
            return
        # second pull: evict the smallest big item of BM and drain its bin
    # (now an M bin) until the fresh bin is covered, then reinsert the evictee
        assert min_bm is not None and size > min_bm
        evict = min(
            (e for bid in self.bm if bid != fresh.id for e in big_entries(self.store.bins[bid])),
            key=lambda e: (e[1], e[0]),
        )
        evict_bin = self.store.item_bin[evict[0]]
        self.store.remove(evict[0])
        self._rekind(evict_bin, BinKind.M)
        self.greedy_pull(fresh.id, [evict_bin])
        assert is_covered(self.store.bins[fresh.id])
        self._drop_if_empty(evict_bin)
        self._insert_big(evict[0], evict[1], allow_bm=False)

    def _insert_big_into_bs(self, item_id: int, size: Size) -> None:
        fresh = self._new_bin(BinKind.BSP)
        self.store.place(item_id, size, fresh.id)
        self.greedy_pull(fresh.id, sorted(self.s))
        self._sync_bs(fresh.id)
        if not is_covered(self.store.bins[fresh.id]):
            # XB: bins of BS holding small items and a big smaller than the newcomer
            xb = [
                bid
                for bid in self.bs
                if bid != fresh.id
                and any(s <= self.eps for s in self.store.bins[bid].items.values())
                and big_entries(self.store.bins[bid])[0][1] < size
            ]
            if xb:
                pool: list[int] = []
                bsp_xb = sorted(b for b in xb if b in self.bsp)
                if bsp_xb:
                    pool.append(bsp_xb[0])
                bsc_xb = [b for b in xb if b in self.bsc]
                if bsc_xb:
                    pool.append(
                        min(
                            bsc_xb,
                            key=lambda bid: (big_entries(self.store.bins[bid])[0][1], bid),
                        )
                    )
                self.greedy_pull(fresh.id, pool)
                self._sync_bs(fresh.id)
        if len(self.bs) == len(self.bb) + 2:
            pair = sorted(
                self.bs,
                key=lambda bid: (big_entries(self.store.bins[bid])[0][1], bid),
            )[:2]
            keep, other = pair
            stash: list[Entry] = []
            for bid in pair:
                for e in list(nonbig_entries(self.store.bins[bid])):
                    self.store.remove(e[0])
                    stash.append(e)
            moved_big = big_entries(self.store.bins[other])[0]
            self.store.move(moved_big[0], keep)
            self._set_of(self.store.bins[other].kind).discard(other)
            self.store.delete_bin(other)
            self._rekind(keep, BinKind.BB)
            for sid, ssize in sorted(stash, key=lambda e: (-e[1], e[0])):
                self._insert_small(sid, ssize)

    def _insert_big_into_bb(self, item_id: int, size: Size) -> None:
        if len(self.bs) == len(self.bb) + 1:
            target = min(
                self.bs,
                key=lambda bid: (big_entries(self.store.bins[bid])[0][1], bid),
            )
            stash = list(nonbig_entries(self.store.bins[target]))
            for sid, _ in stash:
                self.store.remove(sid)
            self.store.place(item_id, size, target)
            self._rekind(target, BinKind.BB)
            for sid, ssize in sorted(stash, key=lambda e: (-e[1], e[0])):
                self._insert_small(sid, ssize)
        else:
            assert self.bb, "big item fell through to an empty BB"
            evict = max(self._bigs_of(self.bb), key=lambda e: (e[1], -e[0]))
            assert size < evict[1]
            target = self.store.item_bin[evict[0]]
            self.store.remove(evict[0])
            self.store.place(item_id, size, target)
            self._insert_big(evict[0], evict[1], allow_bm=True)

    # -- reporting ---------------------------------------------------------------

    def objective(self) -> int:
        covered = sum(1 for b in self.store.bins.values() if b.load >= ONE)
        return covered + len(self.unit_bins)

    def live_items(self) -> list[Item]:
        items = [Item(i, s) for i, s in self.store.item_size.items()]
        items += [Item(i, s) for i, s in self.unit_bins.items()]
        return sorted(items, key=lambda it: it.id)

    # -- invariants ----------------------------------------------------------------

    def check_invariants(self) -> list[Violation]:
        out: list[Violation] = []
        eps = self.eps
        for bid, b in sorted(self.store.bins.items()):
            classes = {classify(s, eps) for s in b.items.values()}
            bigs = big_entries(b)
            mediums = b.of_class(eps, ItemClass.MEDIUM)
            smalls = b.of_class(eps, ItemClass.SMALL)
            kind = b.kind
            if kind is BinKind.BB:
                if len(b.items) != 2 or len(bigs) != 2:
                    out.append(Violation("I1", f"BB bin {bid} is not exactly two big items"))
            elif kind is BinKind.BM:
                if len(bigs) != 1 or smalls:
                    out.append(Violation("I1", f"BM bin {bid} composition broken"))
                if not is_covered(b):
                    out.append(Violation("I1", f"BM bin {bid} is not covered"))
            elif kind is BinKind.BSC:
                if len(bigs) != 1 or mediums:
                    out.append(Violation("I1", f"BSC bin {bid} composition broken"))
                if not is_covered(b):
                    out.append(Violation("I1", f"BSC bin {bid} is not covered"))
            elif kind is BinKind.BSP:
                if len(bigs) != 1 or mediums:
                    out.append(Violation("I1", f"BSP bin {bid} composition broken"))
                if is_covered(b):
                    out.append(Violation("I1", f"BSP bin {bid} is covered"))
            elif kind is BinKind.M:
                if bigs or smalls:
                    out.append(Violation("I1", f"M bin {bid} holds non-medium items"))
            elif kind is BinKind.S:
                if bigs or mediums:
                    out.append(Violation("I1", f"S bin {bid} holds non-small items"))
            else:
                out.append(Violation("I1", f"bin {bid} has kind {kind.value}"))
            if len(classes) == 3:
                out.append(Violation("I1", f"bin {bid} mixes all three classes"))
            if is_covered(b) and not is_barely_covered(b, eps):
                out.append(Violation("I1", f"bin {bid} is covered but not barely covered"))
            if not is_covered(b) and bigs and mediums:
                out.append(Violation("I1", f"uncovered bin {bid} mixes big and medium"))

        if abs(len(self.bb) - len(self.bs)) > 1:
            out.append(Violation("I2", f"|BB|={len(self.bb)} vs |BS|={len(self.bs)}"))

        def spread(ids: set[int]) -> tuple[Size | None, Size]:
            sizes = [s for _, s in self._bigs_of(ids)]
            return (min(sizes) if sizes else None, max(sizes) if sizes else ZERO)

        for code, hi_ids, lo_ids, tag in (
            ("I3", self.bm, self.bs | self.bb, "BM vs BS+BB"),
            ("I3", self.bm | self.bsc, self.bsp | self.bb, "BM+BSC vs BSP+BB"),
            ("I3", self.bm | self.bs, self.bb, "BM+BS vs BB"),
        ):
            lo_min, _ = spread(hi_ids)
            _, hi_max = spread(lo_ids)
            if lo_min is not None and lo_min < hi_max:
                out.append(Violation(code, f"big ordering broken ({tag})"))

        bs_bb = self.bs | self.bb
        if bs_bb and self._sum_m() >= ONE - self._max_item_size(bs_bb):
            out.append(Violation("I4", "M items could cover a bin with a big item"))

        if self.s and self.bsp:
            out.append(Violation("I5", "small-only bins coexist with partial BS bins"))

        with_smalls = [
            bid
            for bid in self.bsp
            if any(s <= eps for s in self.store.bins[bid].items.values())
        ]
        if len(with_smalls) > 1:
            out.append(Violation("I6", "multiple BSP bins hold small items"))
        elif with_smalls:
            top = max(s for _, s in self._bigs_of(self.bsp))
            if big_entries(self.store.bins[with_smalls[0]])[0][1] != top:
                out.append(Violation("I6", "small items sit in a non-maximal BSP bin"))

        for code_set, name in ((self.s, "S"), (self.m, "M")):
            uncovered = [bid for bid in code_set if self.store.bins[bid].load < ONE]
            if len(uncovered) > 1:
                out.append(Violation("I7", f"{name} holds {len(uncovered)} uncovered bins"))
        return out
