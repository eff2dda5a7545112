"""Group structure over the big+small bins: parallel chains sharing one
group buffer bin per group.

Groups double in size (2^{g-1} * ceil(eps*|BS|) bins) and each is cut into
parallel chains of 1/eps bins.  The chains' buffer bins are simulated by a
single physical group buffer bin: every buffered item lives on that bin and
is assigned to chain buffers by exact fractional pieces, which may be
rearranged or split freely at zero migration cost.
"""

from __future__ import annotations

from fractions import Fraction

from .chains import (
    ChainError,
    Entry,
    SeqChains,
    _max_small,
    _smalls,
    is_at_most_well_covered,
    is_chain,
    pull_cascade,
    push_cascade,
)
from .core import (
    Bin,
    BinKind,
    BinStore,
    HALF,
    ONE,
    Size,
    ZERO,
    biggest,
    is_covered,
    is_well_covered,
    smallest,
)


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


class ParallelChain:
    """Ordered real bins of one parallel chain; the buffer is virtual."""

    _next_key = 0

    def __init__(self) -> None:
        self.key = ParallelChain._next_key
        ParallelChain._next_key += 1
        self.bins: list[int] = []


class Group:
    def __init__(self, gb_bin: int) -> None:
        self.chains: list[ParallelChain] = []
        self.gb = gb_bin
        # item id -> chain key -> fraction of the item assigned there
        self.pieces: dict[int, dict[int, Fraction]] = {}

    def size(self) -> int:
        return sum(len(c.bins) for c in self.chains)


BufferEntry = tuple[int, Size, Fraction]  # (item id, item size, fraction)


class GroupedBS:
    """The grouped big+small bins, with the small-only chains as group G+1."""

    def __init__(self, store: BinStore, eps: Size, seq: SeqChains):
        self.store = store
        self.eps = eps
        self.k = int(ONE / eps)
        self.seq = seq
        self.groups: list[Group] = []
        self.gapfill_depth = 0
        self.max_gapfill_depth = 0
        self.gapfill_calls_per_group: dict[int, int] = {}

    # -- basic queries ------------------------------------------------------

    def all_bins(self) -> list[int]:
        return [bid for g in self.groups for c in g.chains for bid in c.bins]

    def gb_bins(self) -> list[int]:
        return [g.gb for g in self.groups]

    def locate(self, bin_id: int) -> tuple[int, ParallelChain]:
        """0-based group index and chain of a real bin."""
        for gi, g in enumerate(self.groups):
            for c in g.chains:
                if bin_id in c.bins:
                    return gi, c
        raise KeyError(f"bin {bin_id} not in any group")

    def group_of_gb(self, bin_id: int) -> int:
        for gi, g in enumerate(self.groups):
            if g.gb == bin_id:
                return gi
        raise KeyError(f"bin {bin_id} is not a group buffer")

    def big_of(self, bin_id: int) -> Entry:
        bigs = [(i, s) for i, s in self.store.bins[bin_id].items.items() if s > HALF]
        if len(bigs) != 1:
            raise ChainError(f"group bin {bin_id} does not hold exactly one big item")
        return bigs[0]

    def virtual_big(self, chain: ParallelChain) -> Size:
        return self.big_of(chain.bins[-1])[1]

    def buffer_entries(self, group: Group, chain: ParallelChain) -> list[BufferEntry]:
        out = []
        for iid, frs in group.pieces.items():
            fr = frs.get(chain.key)
            if fr:
                out.append((iid, self.store.item_size[iid], fr))
        return out

    def _buffer_anchor(self, entries: list[BufferEntry]) -> BufferEntry | None:
        whole = [e for e in entries if e[2] == 1]
        if not whole:
            return None
        return max(whole, key=lambda e: (e[1], -e[0]))

    def buffer_is_well_covered(self, group: Group, chain: ParallelChain) -> bool:
        entries = self.buffer_entries(group, chain)
        vb = self.virtual_big(chain)
        load = sum((s * f for _, s, f in entries), ZERO)
        if vb + load < ONE:
            return False
        anchor = self._buffer_anchor(entries)
        if anchor is None:
            return False
        if vb + load - anchor[1] >= ONE:
            return False
        if vb + anchor[1] >= ONE and len(entries) > 1:
            return False
        return True

    def buffer_overfull(self, group: Group, chain: ParallelChain) -> bool:
        entries = self.buffer_entries(group, chain)
        vb = self.virtual_big(chain)
        load = sum((s * f for _, s, f in entries), ZERO)
        if vb + load < ONE:
            return False
        return not self.buffer_is_well_covered(group, chain)

    # -- smalls bookkeeping ----------------------------------------------------

    def group_has_smalls(self, gi: int) -> bool:
        g = self.groups[gi]
        if g.pieces:
            return True
        return any(
            _smalls(self.store.bins[bid], self.eps)
            for c in g.chains
            for bid in c.bins
        )

    def group_min_small(self, gi: int) -> Size | None:
        g = self.groups[gi]
        best: Size | None = None
        for c in g.chains:
            for bid in c.bins:
                low = smallest(_smalls(self.store.bins[bid], self.eps))
                if low and (best is None or low[1] < best):
                    best = low[1]
        for iid in g.pieces:
            s = self.store.item_size[iid]
            if best is None or s < best:
                best = s
    # pieces are small items by construction
        return best

    def group_max_small(self, gi: int) -> Size:
        g = self.groups[gi]
        best = ZERO
        for c in g.chains:
            for bid in c.bins:
                best = max(best, _max_small(self.store.bins[bid], self.eps))
        for iid in g.pieces:
            best = max(best, self.store.item_size[iid])
        return best

    def last_group_with_smalls(self) -> int | None:
        """1-based index; G+1 stands for the small-only chains."""
        if self.seq.has_smalls():
            return len(self.groups) + 1
        for gi in range(len(self.groups) - 1, -1, -1):
            if self.group_has_smalls(gi):
                return gi + 1
        return None

    def select_group_for_small(self, size: Size) -> int:
        """Target group for an arriving small item (1-based; G+1 = chains)."""
        total = len(self.groups)
        for gi in range(total):
            low = self.group_min_small(gi)
            if low is not None and low < size:
                return gi + 1
        if self.seq.chains:
            for bid in self.seq.all_bins():
                low = smallest(self.store.bins[bid].items.items())
                if low is not None and low[1] < size:
                    return total + 1
        last = self.last_group_with_smalls()
        if last is None:
            return 1 if total >= 1 else total + 1
        if last == total + 1:
            return last
        g = self.groups[last - 1]
        uncovered = any(
            not is_covered(self.store.bins[bid]) for c in g.chains for bid in c.bins
        )
        if uncovered:
            return last
        return last + 1

    # -- buffer mechanics -------------------------------------------------------

    def _buffer_insert(self, group: Group, chain: ParallelChain, items: list[Entry]) -> None:
        """Physically place in-hand items on the group buffer bin and assign
        them wholly to this chain's virtual buffer."""
        for iid, size in items:
            self.store.place(iid, size, group.gb)
            group.pieces[iid] = {chain.key: ONE}

    def _buffer_evict(self, group: Group, chain: ParallelChain) -> list[BufferEntry]:
        """Evict smallest entries (fractions before whole items on ties) while
        the virtual buffer is more than well-covered."""
        out: list[BufferEntry] = []
        while self.buffer_overfull(group, chain):
            entries = self.buffer_entries(group, chain)
            victim = min(entries, key=lambda e: (e[1], e[2], e[0]))
            del group.pieces[victim[0]][chain.key]
            if not group.pieces[victim[0]]:
                del group.pieces[victim[0]]
            out.append(victim)
        return out

    def _buffer_pull(
        self, group: Group, chain: ParallelChain, target: int, *, single: bool = False
    ) -> None:
        """Pull whole items from the virtual buffer into a chain bin,
        consolidating a fractional top item first (free)."""
        tbin = self.store.bins[target]
        while not is_well_covered(tbin, self.eps):
            entries = self.buffer_entries(group, chain)
            if not entries:
                break
            anchor = self._buffer_anchor(entries)
            if anchor is None:
                top = max(entries, key=lambda e: (e[1], -e[0]))
                self._consolidate(group, chain, top[0])
                anchor = (top[0], top[1], ONE)
            del group.pieces[anchor[0]]
            self.store.move(anchor[0], target)
            if single:
                break

    def _consolidate(self, group: Group, chain: ParallelChain, iid: int) -> None:
        """Gather all pieces of an item into one chain buffer (zero cost)."""
        group.pieces[iid] = {chain.key: ONE}

    def repair_buffer_anchor(self, gi: int, chain_keys: list[int]) -> None:
        """After losing entries, restore each buffer's whole-anchor property
        by consolidating its largest remaining item (zero cost)."""
        group = self.groups[gi]
        for c in group.chains:
            if c.key not in chain_keys:
                continue
            entries = self.buffer_entries(group, c)
            if not entries:
                continue
            anchor = self._buffer_anchor(entries)
            top = max(entries, key=lambda e: (e[1], -e[0]))
            if anchor is None or anchor[1] < top[1]:
                self._consolidate(group, c, top[0])

    # -- small-item insertion ------------------------------------------------------

    def insert_small(self, X: list[Entry], g: int, scenario: int) -> None:
        """Insert in-hand small items into group g (1-based; G+1 delegates to
        the sequential chains)."""
        if not X:
            return
        if g >= len(self.groups) + 1:
            self.seq.insert(X, scenario)
            return
        group = self.groups[g - 1]
        free_chain = None
        for c in group.chains:
            if any(not _smalls(self.store.bins[bid], self.eps) for bid in c.bins):
                free_chain = c
                break
        if free_chain is not None:
            idx = self._select_bin(free_chain, X, scenario)
            leftover = push_cascade(self.store, free_chain.bins, idx, X, self.eps)
            if leftover:
                raise ChainError("push into a chain with a small-free bin overflowed")
            return
        # every real bin holds smalls: target the chain whose buffer's
        # largest entry is smallest, overflow may spill to the next group
        chain = min(
            group.chains,
            key=lambda c: (
                max((e[1] for e in self.buffer_entries(group, c)), default=ZERO),
                group.chains.index(c),
            ),
        )
        to_buffer: list[Entry]
        if scenario == 1:
            idx = self._first_with_smaller(chain, X[0][1])
            if idx is None:
                to_buffer = X
            else:
                to_buffer = push_cascade(self.store, chain.bins, idx, X, self.eps)
        else:
            to_buffer = push_cascade(self.store, chain.bins, 0, X, self.eps)
        self._buffer_insert(group, chain, to_buffer)
        overflow = self._buffer_evict(group, chain)
        if overflow:
            self._spill_to_next_group(g, group, chain, overflow)

    def _select_bin(self, chain: ParallelChain, X: list[Entry], scenario: int) -> int:
        if scenario == 2:
            return 0
        size = X[0][1]
        idx = self._first_with_smaller(chain, size)
        if idx is not None:
            return idx
        for i, bid in enumerate(chain.bins):
            b = self.store.bins[bid]
            if is_covered(b):
                continue
            if i == 0 or is_well_covered(self.store.bins[chain.bins[i - 1]], self.eps):
                return i
        raise ChainError(f"chain {chain.key} offers no insertion slot")

    def _first_with_smaller(self, chain: ParallelChain, size: Size) -> int | None:
        for i, bid in enumerate(chain.bins):
            low = smallest(_smalls(self.store.bins[bid], self.eps))
            if low is not None and low[1] < size:
                return i
        return None

    def _spill_to_next_group(
        self, g: int, group: Group, chain: ParallelChain, overflow: list[BufferEntry]
    ) -> None:
        """Trade the evicted (possibly fractional) entries for whole items and
        push those into the next group."""
        s_y = sum((s * f for _, s, f in overflow), ZERO)
        q = max(s * f for _, s, f in overflow)
        in_y = {iid for iid, _, _ in overflow}
        candidates: dict[int, Size] = {
            iid: self.store.item_size[iid] for iid in group.pieces
        }
        for iid, size, _ in overflow:
            candidates[iid] = size
        order = sorted(
            candidates.items(), key=lambda kv: (kv[1], 0 if kv[0] in in_y else 1, kv[0])
        )
        z: list[Entry] = []
        s_z = ZERO
        for iid, size in order:
            if s_z >= s_y:
                break
            z.append((iid, size))
            s_z += size
        z_ids = {iid for iid, _ in z}
        gaps: dict[int, Fraction] = {}
        for iid, size in z:
            for ckey, fr in group.pieces.pop(iid, {}).items():
                gaps[ckey] = gaps.get(ckey, ZERO) + fr * size
            self.store.remove(iid)
        leftover = [e for e in overflow if e[0] not in z_ids]
        for iid, size, fr in sorted(leftover, key=lambda e: (-e[1], e[0])):
            remaining = fr
            for ckey in sorted(gaps):
                room = gaps[ckey]
                if room <= 0 or remaining <= 0:
                    continue
                bite = min(remaining, room / size)
                group.pieces.setdefault(iid, {})
                group.pieces[iid][ckey] = group.pieces[iid].get(ckey, ZERO) + bite
                gaps[ckey] = room - bite * size
                remaining -= bite
            if remaining > 0:
                raise ChainError("gap refill ran out of freed buffer space")
        self.repair_buffer_anchor(g - 1, [c.key for c in group.chains])
        z.sort(key=lambda e: (-e[1], e[0]))
        z1: list[Entry] = []
        s1 = ZERO
        while z and s1 < q:
            z1.append(z.pop(0))
            s1 += z1[-1][1]
        z2 = z
        self.insert_small(z2, g + 1, 2)
        self.insert_small(z1, g + 1, 2)

    # -- gap repair -------------------------------------------------------------

    def is_gap_bin(self, bin_id: int) -> bool:
        """Uncovered non-buffer bin with small items positioned after it."""
        b = self.store.bins[bin_id]
        if is_covered(b):
            return False
        try:
            gi, chain = self.locate(bin_id)
        except KeyError:
            ci, idx = self.seq.locate(bin_id)
            if idx == len(self.seq.chains[ci]) - 1:
                return False
            flat = self.seq.all_bins()
            after = flat[flat.index(bin_id) + 1 :]
            return any(_smalls(self.store.bins[x], self.eps) for x in after)
        idx = chain.bins.index(bin_id)
        group = self.groups[gi]
        for bid in chain.bins[idx + 1 :]:
            if _smalls(self.store.bins[bid], self.eps):
                return True
        if self.buffer_entries(group, chain):
            return True
        for later in range(gi + 1, len(self.groups)):
            if self.group_has_smalls(later):
                return True
        return self.seq.has_smalls()

    def gap_fill(self, bin_id: int) -> None:
        """Repair a maximal gap bin; recursion cascades into later groups."""
        self.gapfill_depth += 1
        self.max_gapfill_depth = max(self.max_gapfill_depth, self.gapfill_depth)
        try:
            self._gap_fill_inner(bin_id)
        finally:
            self.gapfill_depth -= 1

    def _chain_pull_with_buffer(self, group: Group, chain: ParallelChain, idx: int) -> None:
        """Pull along a parallel chain, with the virtual buffer as the final
        source once the real bins downstream run out of smalls."""
        bins = chain.bins
        j = idx
        while j < len(bins):
            b = self.store.bins[bins[j]]
            if is_covered(b):
                break
            while not is_well_covered(b, self.eps):
                victim = None
                for x in bins[j + 1 :]:
                    victim = biggest(_smalls(self.store.bins[x], self.eps))
                    if victim is not None:
                        break
                if victim is not None:
                    self.store.move(victim[0], b.id)
                    continue
                if self.buffer_entries(group, chain):
                    self._buffer_pull(group, chain, b.id, single=True)
                    continue
                break
            j += 1

    def _gap_fill_inner(self, bin_id: int) -> None:
        try:
            gi, chain = self.locate(bin_id)
        except KeyError:
            self.seq.repair_uncovered(bin_id)
            return
        self.gapfill_calls_per_group[gi] = self.gapfill_calls_per_group.get(gi, 0) + 1
        group = self.groups[gi]
        idx = chain.bins.index(bin_id)
        self._chain_pull_with_buffer(group, chain, idx)
        last = chain.bins[-1]
        last_small = self.last_group_with_smalls()
        if last_small is not None and gi + 1 == last_small:
            return
        if is_well_covered(self.store.bins[last], self.eps):
            return
        # drag the largest smalls of the next group forwards
        nxt = gi + 1  # 0-based index of the next group; == len(groups) means S
        while not is_well_covered(self.store.bins[last], self.eps):
            entry = self._take_largest_small_after(nxt)
            if entry is None:
                break
            self.store.place(entry[0], entry[1], last)
        self._repair_group_gaps(nxt)

    def _repair_group_gaps(self, gi: int) -> None:
        """Repair every maximal gap bin of group gi (0-based; len(groups)
        addresses the sequential chains), limiting the recursion width."""
        if gi >= len(self.groups):
            for bid in reversed(self.seq.uncovered_nonbuffer_bins()):
                if self.is_gap_bin(bid):
                    self.seq.repair_uncovered(bid)
            self.seq.cleanup_empty_buffers()
            return
        group = self.groups[gi]
        guard = 0
        while True:
            guard += 1
            if guard > 100:
                raise ChainError("gap repair did not converge")
            maximal = []
            for c in group.chains:
                in_chain = [bid for bid in c.bins if self.is_gap_bin(bid)]
                if in_chain:
                    maximal.append(in_chain[-1])
            if not maximal:
                return
            if len(maximal) > 4:
                self._limit_gap_bins(gi)
                continue
            for bid in maximal:
                if self.is_gap_bin(bid):
                    self.gap_fill(bid)

    def _take_largest_small_after(self, gi: int):
        """Remove and return the largest small item of group gi (0-based;
        len(groups) = the sequential chains).  None when there are none."""
        if gi >= len(self.groups):
            if not self.seq.has_smalls():
                return None
            return self.seq.take_largest_small()
        group = self.groups[gi]
        best: tuple[int, int, Size] | None = None  # (bin, item, size)
        for c in group.chains:
            for bid in c.bins:
                top = biggest(_smalls(self.store.bins[bid], self.eps))
                if top and (best is None or top[1] > best[2]):
                    best = (bid, top[0], top[1])
        if best is not None:
            self.store.remove(best[1])
            return (best[1], best[2])
        if group.pieces:
            iid = max(group.pieces, key=lambda i: (self.store.item_size[i], -i))
            size = self.store.item_size[iid]
            keys = list(group.pieces.pop(iid).keys())
            self.store.remove(iid)
            self.repair_buffer_anchor(gi, keys)
            return (iid, size)
        return None

    def _limit_gap_bins(self, gi: int) -> None:
        """Redistribute smalls among the first bins of the group's chains so
        that at most four of them remain uncovered."""
        group = self.groups[gi]
        fst = [c.bins[0] for c in group.chains]
        last_small = self.last_group_with_smalls()
        if last_small == gi + 1:
            fst = [
                bid
                for bid in fst
                if self.is_gap_bin(bid) or is_covered(self.store.bins[bid])
            ]
        uncovered = [bid for bid in fst if not is_covered(self.store.bins[bid])]
        if len(uncovered) <= 4:
            return
        ranked = sorted(
            fst,
            key=lambda bid: (
                -(smallest(_smalls(self.store.bins[bid], self.eps)) or (0, ZERO))[1],
                bid,
            ),
        )
        donors = ranked[:4]
        targets = [bid for bid in fst if bid not in donors]
        while True:
            open_targets = [
                bid for bid in targets if not is_covered(self.store.bins[bid])
            ]
            if not open_targets:
                break
            live = [
                bid
                for bid in donors
                if _smalls(self.store.bins[bid], self.eps)
            ]
            if not live:
                raise ChainError("gap redistribution ran out of donor items")
            donor = min(live, key=lambda bid: (-self.store.bins[bid].load, bid))
            victim = biggest(_smalls(self.store.bins[donor], self.eps))
            assert victim is not None
            self.store.move(victim[0], open_targets[0])


    # -- auxiliary group operations ---------------------------------------------

    def group_insert(self, iid: int, size: Size, g: int) -> None:
        """Insert a big item as a new bin of group g (1-based), creating the
        group when g lies just past the end."""
        if g == len(self.groups) + 1:
            gb = self.store.new_bin(BinKind.GB)
            self.groups.append(Group(gb.id))
        group = self.groups[g - 1]
        fresh = self.store.new_bin(BinKind.BSP)
        self.store.place(iid, size, fresh.id)
        short = [c for c in group.chains if len(c.bins) < self.k]
        if short:
            chain = short[0]
            pos = len(chain.bins)
            for i, bid in enumerate(chain.bins):
                if self.big_of(bid)[1] < size:
                    pos = i
                    break
            chain.bins.insert(pos, fresh.id)
        else:
            chain = ParallelChain()
            chain.bins.append(fresh.id)
            group.chains.append(chain)
        if self.is_gap_bin(fresh.id):
            self.gap_fill(fresh.id)

    def _drain_buffer(self, group: Group, chain: ParallelChain) -> list[Entry]:
        """Remove every item with a piece in this chain's buffer (wholly)."""
        stash: list[Entry] = []
        for iid in [i for i, frs in group.pieces.items() if chain.key in frs]:
            del group.pieces[iid]
            size = self.store.item_size[iid]
            self.store.remove(iid)
            stash.append((iid, size))
        return stash

    def group_delete(self, bin_id: int, g: int) -> None:
        """Repair group g after the big item of bin_id was removed; the
        bin's smalls and affected buffer contents are reinserted at the end."""
        group = self.groups[g - 1]
        gi, chain = self.locate(bin_id)
        assert gi == g - 1
        b = self.store.bins[bin_id]
        stash: list[Entry] = [(i, s) for i, s in b.items.items()]
        for iid, _ in stash:
            self.store.remove(iid)
        chain.bins.remove(bin_id)
        self.store.delete_bin(bin_id)
        stash += self._drain_buffer(group, chain)
        if not chain.bins:
            group.chains.remove(chain)
            if not group.chains:
                self._delete_group(g - 1)
        else:
            others_short = [
                c for c in group.chains if c is not chain and len(c.bins) < self.k
            ]
            if others_short:
                donor_chain = others_short[0]
                moved = donor_chain.bins.pop()
                moved_bin = self.store.bins[moved]
                for e in list(_smalls(moved_bin, self.eps)):
                    self.store.remove(e[0])
                    stash.append(e)
                stash += self._drain_buffer(group, donor_chain)
                if not donor_chain.bins:
                    group.chains.remove(donor_chain)
                size = self.big_of(moved)[1]
                pos = len(chain.bins)
                for i, bid in enumerate(chain.bins):
                    if self.big_of(bid)[1] < size:
                        pos = i
                        break
                chain.bins.insert(pos, moved)
                if self.is_gap_bin(moved):
                    self.gap_fill(moved)
        for iid, size in sorted(stash, key=lambda e: (-e[1], e[0])):
            target = self.select_group_for_small(size)
            self.insert_small([(iid, size)], target, 1)

    def _delete_group(self, gi: int) -> None:
        group = self.groups[gi]
        if group.pieces:
            raise ChainError("deleting a group whose buffer still holds items")
        self.store.delete_bin(group.gb)
        self.groups.pop(gi)

    def group_push(self, g: int) -> None:
        """Move a big item of minimal size from group g into the next group
        (creating a new last group when g is last)."""
        group = self.groups[g - 1]
        pick = min(
            (bid for c in group.chains for bid in c.bins),
            key=lambda bid: (self.big_of(bid)[1], bid),
        )
        iid, size = self.big_of(pick)
        nxt = self.groups[g] if g < len(self.groups) else None
        self.store.remove(iid)
        self.group_delete(pick, g)
        if nxt is not None and nxt in self.groups:
            self.group_insert(iid, size, self.groups.index(nxt) + 1)
        else:
            self.group_insert(iid, size, len(self.groups) + 1)

    def group_pull(self, g: int) -> None:
        """Move a big item of maximal size from group g+1 into group g."""
        if g >= len(self.groups):
            raise ChainError("group_pull needs a successor group")
        target = self.groups[g - 1]
        source = self.groups[g]
        pick = max(
            (bid for c in source.chains for bid in c.bins),
            key=lambda bid: (self.big_of(bid)[1], -bid),
        )
        iid, size = self.big_of(pick)
        self.store.remove(iid)
        self.group_delete(pick, self.groups.index(source) + 1)
        self.group_insert(iid, size, self.groups.index(target) + 1)

    def normalize(self) -> None:
        """Restore the doubling group sizes by pushing/pulling big items;
        the exact push/pull counts follow from the size deficits."""
        guard = 0
        while True:
            guard += 1
            if guard > 10_000:
                raise ChainError("group normalization did not converge")
            total = sum(g.size() for g in self.groups)
            if total == 0:
                return
            c = ceil_frac(self.eps * total)
            changed = False
            for gi in range(len(self.groups)):
                target = (1 << gi) * c
                size = self.groups[gi].size()
                if gi == len(self.groups) - 1:
                    if size > target:
                        self.group_push(gi + 1)
                        changed = True
                    break
                if size > target:
                    self.group_push(gi + 1)
                    changed = True
                    break
                if size < target:
                    self.group_pull(gi + 1)
                    changed = True
                    break
            if not changed:
                return

    # -- validation -----------------------------------------------------------

    def check(self) -> list[str]:
        problems: list[str] = []
        total = sum(g.size() for g in self.groups)
        c = ceil_frac(self.eps * total) if total else 0
        if total and len(self.groups) > 2 and (1 << (len(self.groups) - 2)) > self.k:
            problems.append(f"D-I9: {len(self.groups)} groups exceed log(1/eps)+2")
        for gi, g in enumerate(self.groups):
            target = (1 << gi) * c
            if gi < len(self.groups) - 1 and g.size() != target:
                problems.append(
                    f"D-I9: group {gi + 1} holds {g.size()} bins, expected {target}"
                )
            if gi == len(self.groups) - 1 and g.size() > target:
                problems.append(
                    f"D-I9: last group holds {g.size()} bins, cap {target}"
                )
            want_chains = ceil_frac(self.eps * Fraction(g.size()))
            if len(g.chains) != want_chains:
                problems.append(
                    f"D-I9: group {gi + 1} has {len(g.chains)} chains, expected {want_chains}"
                )
            short = [ch for ch in g.chains if len(ch.bins) < self.k]
            if len(short) > 1:
                problems.append(f"D-I9: group {gi + 1} has several short chains")
            for ch in g.chains:
                if len(ch.bins) > self.k:
                    problems.append(f"D-I9: chain {ch.key} longer than 1/eps")
                if not ch.bins:
                    problems.append(f"D-I9: chain {ch.key} is empty")
                    continue
                if not is_chain(self.store, ch.bins, self.eps):
                    problems.append(f"D-I10: chain {ch.key} breaks the chain ordering")
                problems += self._check_chain_profile(g, ch)
            problems += self._check_buffer(gi, g)
        problems += self._check_cross_group_order()
        problems += self._check_g_star()
        return problems

    def _check_chain_profile(self, group: Group, ch: ParallelChain) -> list[str]:
        problems = []
        states = []
        for bid in ch.bins:
            b = self.store.bins[bid]
            bigs = [(i, s) for i, s in b.items.items() if s > HALF]
            if len(bigs) != 1:
                problems.append(f"D-I10: bin {bid} lacks exactly one big item")
            if not is_at_most_well_covered(b, self.eps):
                problems.append(f"D-I10: bin {bid} is more than well-covered")
            states.append(
                (is_well_covered(b, self.eps), bool(_smalls(b, self.eps)))
            )
        well_prefix = 0
        while well_prefix < len(states) and states[well_prefix][0]:
            well_prefix += 1
        tail = states[well_prefix:]
        if any(w for w, _ in tail):
            problems.append(f"D-I10: well-covered bins of chain {ch.key} are not a prefix")
        holders = [i for i, (_, has) in enumerate(tail) if has]
        if len(holders) > 1 or (holders and holders[0] != 0):
            problems.append(
                f"D-I10: chain {ch.key} has stray uncovered small-holding bins"
            )
        return problems

    def _check_buffer(self, gi: int, group: Group) -> list[str]:
        problems = []
        gb = self.store.bins[group.gb]
        if gb.kind is not BinKind.GB:
            problems.append(f"D-I9: buffer bin {gb.id} has kind {gb.kind.value}")
        if set(gb.items) != set(group.pieces):
            problems.append(f"D-I9: group {gi + 1} piece map out of sync with its buffer bin")
        if any(s > self.eps for s in gb.items.values()):
            problems.append(f"D-I9: group buffer {gb.id} holds a non-small item")
        keys = {c.key for c in group.chains}
        for iid, frs in group.pieces.items():
            if sum(frs.values(), ZERO) != ONE:
                problems.append(f"D-I9: fractions of item {iid} do not sum to 1")
            if any(f <= 0 for f in frs.values()):
                problems.append(f"D-I9: item {iid} has a non-positive piece")
            if not set(frs) <= keys:
                problems.append(f"D-I9: item {iid} assigned to a missing chain")
        for c in group.chains:
            entries = self.buffer_entries(group, c)
            if not entries:
                continue
            anchor = self._buffer_anchor(entries)
            top = max(e[1] for e in entries)
            if anchor is None or anchor[1] < top:
                problems.append(
                    f"D-I9: buffer of chain {c.key} lacks a whole maximal item"
                )
            real_lows = [
                smallest(_smalls(self.store.bins[bid], self.eps))
                for bid in c.bins
            ]
            lows = [e[1] for e in real_lows if e is not None]
            if lows and top > min(lows):
                problems.append(
                    f"D-I10: buffer of chain {c.key} holds items above the chain tail"
                )
            vb = self.virtual_big(c)
            load = sum((s * f for _, s, f in entries), ZERO)
            if vb + load >= ONE and not self.buffer_is_well_covered(group, c):
                problems.append(
                    f"D-I9: buffer of chain {c.key} is more than well-covered"
                )
        return problems

    def _check_cross_group_order(self) -> list[str]:
        problems = []
        for gi in range(len(self.groups)):
            g = self.groups[gi]
            min_big = min(
                (self.big_of(bid)[1] for c in g.chains for bid in c.bins),
                default=None,
            )
            low_small = self.group_min_small(gi)
            if gi + 1 < len(self.groups):
                nx = self.groups[gi + 1]
                next_max_big = max(
                    (self.big_of(bid)[1] for c in nx.chains for bid in c.bins),
                    default=ZERO,
                )
                if min_big is not None and min_big < next_max_big:
                    problems.append(f"D-I11: big ordering breaks after group {gi + 1}")
                next_max_small = self.group_max_small(gi + 1)
            else:
                next_max_small = self.seq.max_small()
            if low_small is not None and low_small < next_max_small:
                problems.append(f"D-I11: small ordering breaks after group {gi + 1}")
        return problems

    def _check_g_star(self) -> list[str]:
        first_not_well = None
        for gi, g in enumerate(self.groups):
            for c in g.chains:
                for bid in c.bins:
                    if not is_well_covered(self.store.bins[bid], self.eps):
                        first_not_well = gi + 1
                        break
                if first_not_well:
                    break
            if first_not_well:
                break
        last_small = self.last_group_with_smalls() or 0
        if first_not_well is not None and last_small > first_not_well:
            return [
                f"D-I12: group {first_not_well} has uncovered bins while group "
                f"{last_small} still holds small items"
            ]
        return []
