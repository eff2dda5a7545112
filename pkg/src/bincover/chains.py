"""Chains of bins ordered by non-increasing item sizes.

A chain is a totally ordered list of bins, each holding at most one big item
and no mediums, with big and small sizes non-increasing along the order.
``push_cascade`` inserts small items and shunts the excess toward the tail;
``pull_cascade`` refills a hole by dragging the biggest smalls forward.

The module also owns the sequential-chain decomposition of the small-only
bin set: chains of 1/eps+1 .. 2/eps+1 bins whose last bin is a buffer that
absorbs overflow and interrupts cascades.
"""

from __future__ import annotations

from fractions import Fraction

from .core import (
    Bin,
    BinKind,
    BinStore,
    HALF,
    ONE,
    Size,
    ZERO,
    biggest,
    is_at_most_well_covered_sizes,
    is_covered,
    is_well_covered,
    smallest,
)

Entry = tuple[int, Size]  # (item id, size)


class ChainError(RuntimeError):
    """A cascade precondition or postcondition failed: an algorithm bug."""


def _smalls(b: Bin, eps: Size) -> list[Entry]:
    return [(i, s) for i, s in b.items.items() if s <= eps]


def _bigs(b: Bin) -> list[Entry]:
    return [(i, s) for i, s in b.items.items() if s > HALF]


def _max_small(b: Bin, eps: Size) -> Size:
    found = biggest(_smalls(b, eps))
    return found[1] if found else ZERO


def _min_small(b: Bin, eps: Size) -> Size | None:
    found = smallest(_smalls(b, eps))
    return found[1] if found else None


def is_chain(store: BinStore, bin_ids: list[int], eps: Size) -> bool:
    """Composition and ordering rules for a chain of real bins."""
    prev_big: Size | None = None
    seen_bigless = False
    prev_min_small: Size | None = None
    for bid in bin_ids:
        b = store.bins[bid]
        bigs = _bigs(b)
        if len(bigs) > 1:
            return False
        if any(eps < s <= HALF for s in b.items.values()):
            return False
        if bigs:
            if seen_bigless:
                return False
            big = bigs[0][1]
            if prev_big is not None and big > prev_big:
                return False
            prev_big = big
        else:
            seen_bigless = True
        top = biggest(_smalls(b, eps))
        if top is not None:
            if prev_min_small is not None and top[1] > prev_min_small:
                return False
        low = smallest(_smalls(b, eps))
        if low is not None:
            prev_min_small = low[1]
    return True


def eligible(store: BinStore, X: list[Entry], bin_ids: list[int], idx: int, eps: Size) -> bool:
    """X may be inserted into bin_ids[idx] and the list remains a chain."""
    if not X:
        return True
    if any(s > eps for _, s in X):
        return False
    x_max = max(s for _, s in X)
    x_min = min(s for _, s in X)
    for j in range(idx):
        low = _min_small(store.bins[bin_ids[j]], eps)
        if low is not None and low < x_max:
            return False
    for j in range(idx + 1, len(bin_ids)):
        if _max_small(store.bins[bin_ids[j]], eps) > x_min:
            return False
    return True


def push_cascade(
    store: BinStore,
    bin_ids: list[int],
    idx: int,
    X: list[Entry],
    eps: Size,
) -> list[Entry]:
    """Insert the in-hand items X at position idx and cascade the evictions.

    Each step inserts the incoming set, then evicts smallest smalls while the
    bin is more than well-covered.  Returns whatever falls off the last bin
    (in hand, removed from the store).  The per-step pre/postconditions of
    the push lemma are enforced as hard failures.
    """
    cur = sorted(X, key=lambda e: (-e[1], e[0]))
    j = idx
    while j < len(bin_ids) and cur:
        b = store.bins[bin_ids[j]]
        if not eligible(store, cur, bin_ids, j, eps):
            raise ChainError(f"push into bin {b.id}: set not eligible")
        big_sizes = [s for _, s in _bigs(b)]
        if not is_at_most_well_covered_sizes([s for _, s in cur] + big_sizes, eps):
            raise ChainError(f"push into bin {b.id}: X with big not at most well-covered")
        pre_small_max = _max_small(b, eps)
        if len(cur) > 1 and min(s for _, s in cur) < pre_small_max:
            raise ChainError(f"push into bin {b.id}: multi-item set below existing smalls")
        x_total = sum((s for _, s in cur), ZERO)
        x_max = max(s for _, s in cur)

        for item_id, size in cur:
            store.place(item_id, size, b.id)
        evicted: list[Entry] = []
        while not is_at_most_well_covered(b, eps):
            victim = smallest(_smalls(b, eps))
            if victim is None:
                raise ChainError(f"bin {b.id} overpacked with no small to evict")
            store.remove(victim[0])
            evicted.append(victim)

        if evicted:
            if not is_well_covered(b, eps):
                raise ChainError(f"bin {b.id} evicted items but is not well-covered")
            y_sizes = [s for _, s in evicted]
            if not is_at_most_well_covered_sizes(y_sizes + big_sizes, eps):
                raise ChainError(f"bin {b.id}: pushed-out set with big not at most well-covered")
            if max(y_sizes) > x_max:
                raise ChainError(f"bin {b.id}: pushed-out max exceeds incoming max")
            if sum(y_sizes, ZERO) > x_total + x_max:
                raise ChainError(f"bin {b.id}: pushed-out size exceeds s(X)+s_max(X)")
        cur = sorted(evicted, key=lambda e: (-e[1], e[0]))
        j += 1
    return cur


def is_at_most_well_covered(b: Bin, eps: Size) -> bool:
    return is_at_most_well_covered_sizes(list(b.items.values()), eps)


def pull_cascade(store: BinStore, bin_ids: list[int], idx: int, eps: Size) -> None:
    """Refill bin_ids[idx] by pulling biggest smalls forward along the chain.

    Mirrors the pull recursion: an uncovered bin drains the nearest
    succeeding bin that still holds smalls (small-free bins in between are
    transparent) until it is well-covered, then the repair moves on.
    """
    j = idx
    while j < len(bin_ids) - 1:
        b = store.bins[bin_ids[j]]
        if is_covered(b):
            break
        nxt_was_well = is_well_covered(store.bins[bin_ids[j + 1]], eps)
        free_before = ONE - b.load
        psi = max(
            (_max_small(store.bins[x], eps) for x in bin_ids[j + 1 :]),
            default=ZERO,
        )
        moved = ZERO
        while not is_well_covered(b, eps):
            victim = None
            for x in bin_ids[j + 1 :]:
                victim = biggest(_smalls(store.bins[x], eps))
                if victim is not None:
                    break
            if victim is None:
                break
            store.move(victim[0], b.id)
            moved += victim[1]
        if nxt_was_well and not is_well_covered(b, eps):
            raise ChainError(f"bin {b.id} not well-covered after pulling a well-covered successor")
        if moved > free_before + psi:
            raise ChainError(f"bin {b.id}: pulled size exceeds the pull bound")
        j += 1


class SeqChains:
    """Sequential chain decomposition of the small-only bins.

    Non-last chains hold 1/eps+1 .. 2/eps+1 bins, the last at most
    2/eps+2; every chain's last bin is its buffer.  Non-buffer bins are
    well-covered, buffers are non-empty and at most well-covered, and the
    global small-item order follows the chain order.
    """

    def __init__(self, store: BinStore, eps: Size):
        if (ONE / eps).denominator != 1:
            raise ValueError("sequential chains require 1/eps to be an integer")
        self.store = store
        self.eps = eps
        self.k = int(ONE / eps)
        self.chains: list[list[int]] = []

    # -- queries -----------------------------------------------------------

    def all_bins(self) -> list[int]:
        return [bid for chain in self.chains for bid in chain]

    def is_buffer(self, bin_id: int) -> bool:
        return any(chain and chain[-1] == bin_id for chain in self.chains)

    def locate(self, bin_id: int) -> tuple[int, int]:
        for ci, chain in enumerate(self.chains):
            if bin_id in chain:
                return ci, chain.index(bin_id)
        raise KeyError(f"bin {bin_id} not in sequential chains")

    def has_smalls(self) -> bool:
        return any(not self.store.bins[bid].is_empty() for bid in self.all_bins())

    def max_small(self) -> Size:
        best = ZERO
        for bid in self.all_bins():
            best = max(best, _max_small(self.store.bins[bid], self.eps))
        return best

    def take_largest_small(self) -> Entry:
        """Remove and return the largest small item (for cross-group pulls).
        The caller repairs any gap this opens."""
        best: tuple[int, Entry] | None = None
        for bid in self.all_bins():
            top = biggest(self.store.bins[bid].items.items())
            if top and (best is None or top[1] > best[1][1]):
                best = (bid, top)
        if best is None:
            raise ChainError("no small items to take")
        self.store.remove(best[1][0])
        return best[1]

    def uncovered_nonbuffer_bins(self) -> list[int]:
        out = []
        for chain in self.chains:
            for bid in chain[:-1]:
                if not is_covered(self.store.bins[bid]):
                    out.append(bid)
        return out

    # -- operations ----------------------------------------------------------

    def insert(self, X: list[Entry], scenario: int) -> None:
        """Insert in-hand small items.

        Scenario 1 is a single item routed to the first bin holding anything
        smaller; scenario 2 is a set no bigger than one bin whose items
        dominate every small in the structure, routed to the very front.
        """
        if not X:
            return
        if not self.chains:
            fresh = self.store.new_bin(BinKind.S)
            self.chains.append([fresh.id])
        if scenario == 1:
            if len(X) != 1:
                raise ChainError("scenario 1 inserts exactly one item")
            size = X[0][1]
            ci, idx = self._first_bin_with_smaller(size)
        else:
            if sum((s for _, s in X), ZERO) > ONE:
                raise ChainError("scenario 2 set exceeds unit size")
            top = self.max_small()
            if top and min(s for _, s in X) < top:
                raise ChainError("scenario 2 set below existing smalls")
            ci, idx = 0, 0
        chain = self.chains[ci]
        leftover = push_cascade(self.store, chain, idx, X, self.eps)
        if leftover:
            fresh = self.store.new_bin(BinKind.S)
            for item_id, size in leftover:
                self.store.place(item_id, size, fresh.id)
            chain.append(fresh.id)
            if len(chain) == 2 * self.k + 2:
                self._split(ci)

    def _first_bin_with_smaller(self, size: Size) -> tuple[int, int]:
        for ci, chain in enumerate(self.chains):
            for idx, bid in enumerate(chain):
                low = smallest(self.store.bins[bid].items.items())
                if low is not None and low[1] < size:
                    return ci, idx
        last = len(self.chains) - 1
        return last, len(self.chains[last]) - 1

    def _split(self, ci: int) -> None:
        chain = self.chains[ci]
        first, second = chain[: self.k + 1], chain[self.k + 1 :]
        self.chains[ci : ci + 1] = [first, second]

    def handle_departure(self, bin_id: int) -> None:
        """Repair after a small item left the given bin (already removed)."""
        ci, idx = self.locate(bin_id)
        b = self.store.bins[bin_id]
        if idx == len(self.chains[ci]) - 1:
            if b.is_empty():
                self._restore(ci)
            return
        if is_well_covered(b, self.eps):
            return
        self.repair_uncovered(bin_id)

    def repair_uncovered(self, bin_id: int) -> None:
        """Pull the chain to re-cover a non-buffer bin, then fix the buffer,
        the chain length, and any hole that repair opened."""
        ci, idx = self.locate(bin_id)
        pull_cascade(self.store, self.chains[ci], idx, self.eps)
        self._restore(ci)

    def cleanup_empty_buffers(self) -> None:
        """Drop buffers drained by cross-group pulls and re-balance lengths."""
        ci = 0
        while ci < len(self.chains):
            chain = self.chains[ci]
            if chain and self.store.bins[chain[-1]].is_empty():
                self._restore(ci)
                continue
            ci += 1

    def _restore(self, ci: int) -> None:
        guard = 0
        while True:
            guard += 1
            if guard > 10_000:
                raise ChainError("chain restore did not converge")
            if ci >= len(self.chains):
                return
            chain = self.chains[ci]
            while chain and self.store.bins[chain[-1]].is_empty():
                self.store.delete_bin(chain.pop())
            if not chain:
                del self.chains[ci]
                return
            pre_buffer = chain[-2] if len(chain) >= 2 else None
            if len(chain) < self.k + 1 and ci < len(self.chains) - 1:
                nxt = self.chains[ci + 1]
                if len(nxt) > self.k + 1:
                    chain.append(nxt.pop(0))
                else:
                    chain.extend(nxt)
                    del self.chains[ci + 1]
                if pre_buffer is not None and not is_covered(self.store.bins[pre_buffer]):
                    pull_cascade(self.store, chain, chain.index(pre_buffer), self.eps)
                continue
            # buffer is non-empty and length is legal; any remaining hole sits
            # directly before the buffer and is permitted only on the buffer
            holes = [bid for bid in chain[:-1] if not is_covered(self.store.bins[bid])]
            if holes:
                pull_cascade(self.store, chain, chain.index(holes[0]), self.eps)
                if self.store.bins[chain[-1]].is_empty():
                    continue
            return

    # -- validation ----------------------------------------------------------

    def check(self) -> list[str]:
        """D-I7 structure and D-I8 ordering; empty list when legal."""
        problems: list[str] = []
        for ci, chain in enumerate(self.chains):
            if not chain:
                problems.append(f"D-I7: chain {ci} is empty")
                continue
            last = len(self.chains) - 1
            if ci < last and not (self.k + 1 <= len(chain) <= 2 * self.k + 1):
                problems.append(f"D-I7: chain {ci} length {len(chain)} outside bounds")
            if ci == last and len(chain) > 2 * self.k + 2:
                problems.append(f"D-I7: last chain length {len(chain)} too long")
            for bid in chain:
                b = self.store.bins[bid]
                if b.kind is not BinKind.S:
                    problems.append(f"D-I7: bin {bid} in S has kind {b.kind.value}")
                if any(s > self.eps for s in b.items.values()):
                    problems.append(f"D-I7: bin {bid} in S holds a non-small item")
            for bid in chain[:-1]:
                if not is_well_covered(self.store.bins[bid], self.eps):
                    problems.append(f"D-I7: non-buffer bin {bid} not well-covered")
            buf = self.store.bins[chain[-1]]
            if buf.is_empty():
                problems.append(f"D-I7: buffer bin {buf.id} is empty")
            elif not is_at_most_well_covered(buf, self.eps):
                problems.append(f"D-I7: buffer bin {buf.id} more than well-covered")
        ordered = self.all_bins()
        prev_min: Size | None = None
        for bid in ordered:
            b = self.store.bins[bid]
            top = biggest(b.items.items())
            if top is not None and prev_min is not None and top[1] > prev_min:
                problems.append(f"D-I8: bin {bid} breaks the global small ordering")
            low = smallest(b.items.items())
            if low is not None:
                prev_min = low[1]
        return problems
