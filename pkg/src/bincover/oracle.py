"""Ground-truth solvers: exact optimum, greedy baseline, offline reference.

The exact solver is a memoized maximal-partition search over the instance's
size multiset: the largest remaining item always sits in some minimally
covered part of an optimal partition (swap argument), so the recursion only
enumerates minimal covered multisets containing the current maximum.
Memoization is keyed by the size multiset, so prefixes of one stream reuse
each other's subproblems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import Item, ONE, Size, ZERO


class InstanceTooLarge(ValueError):
    """The instance exceeds the exact solver's item limit."""


@dataclass
class OracleLimits:
    max_items_exact: int = 18

    def __post_init__(self) -> None:
        if self.max_items_exact < 1:
            raise ValueError("max_items_exact must be >= 1")


@dataclass
class Packing:
    """A partition of items into bins; the objective counts covered bins."""

    bins: list[list[Item]] = field(default_factory=list)

    @property
    def objective(self) -> int:
        return sum(1 for b in self.bins if sum(i.size for i in b) >= ONE)

    def total_size(self) -> Size:
        return sum((i.size for b in self.bins for i in b), ZERO)


# Multiset key -> max number of covered parts.  Global on purpose: replays
# evaluate every prefix of a stream and the sub-multisets repeat heavily.
_OPT_MEMO: dict[tuple[tuple[Size, int], ...], int] = {}


def _multiset_key(counts: dict[Size, int]) -> tuple[tuple[Size, int], ...]:
    return tuple((s, c) for s, c in sorted(counts.items(), reverse=True) if c > 0)


def _minimal_covers(sizes: list[Size], avail: list[int]):
    """Yield count vectors of minimal covered multisets that contain one copy
    of the largest available size.

    Sizes are enumerated in non-increasing order, so the last chosen item is
    the smallest and crosses the load-1 threshold: removing any item other
    than the designated maximum uncovers the set.
    """
    n = len(sizes)
    first = next(i for i in range(n) if avail[i] > 0)
    take = [0] * n
    take[first] = 1
    suffix = [ZERO] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + sizes[i] * avail[i]

    def rec(i: int, cur: Size):
        if i == n or cur + suffix[i] < ONE:
            return
        yield from rec(i + 1, cur)
        s = sizes[i]
        start = take[i]
        while take[i] < avail[i]:
            take[i] += 1
            cur += s
            if cur >= ONE:
                yield tuple(take)
                break
            yield from rec(i + 1, cur)
        take[i] = start

    if sizes[first] >= ONE:
        yield tuple(take)
    else:
        yield from rec(first, sizes[first])


def _solve(counts: dict[Size, int]) -> int:
    key = _multiset_key(counts)
    cached = _OPT_MEMO.get(key)
    if cached is not None:
        return cached
    sizes = [s for s, _ in key]
    avail = [c for _, c in key]
    total = sum(s * c for s, c in key)
    if total < ONE:
        _OPT_MEMO[key] = 0
        return 0
    upper = int(total)
    best = 0
    for take in _minimal_covers(sizes, avail):
        rest = {sizes[i]: avail[i] - take[i] for i in range(len(sizes))}
        value = 1 + _solve(rest)
        if value > best:
            best = value
            if best == upper:
                break
    _OPT_MEMO[key] = best
    return best


def _reconstruct(counts: dict[Size, int], target: int) -> list[dict[Size, int]]:
    """Recover one optimal set of covered parts (as size multisets)."""
    if target == 0:
        return []
    key = _multiset_key(counts)
    sizes = [s for s, _ in key]
    avail = [c for _, c in key]
    for take in _minimal_covers(sizes, avail):
        rest = {sizes[i]: avail[i] - take[i] for i in range(len(sizes))}
        if 1 + _solve(rest) == target:
            part = {sizes[i]: take[i] for i in range(len(sizes)) if take[i]}
            return [part] + _reconstruct(rest, target - 1)
    raise AssertionError("memoized optimum not reproducible")


def opt_exact(items: list[Item], limits: OracleLimits | None = None) -> tuple[int, Packing]:
    """Maximum number of covered bins over all partitions, with a witness."""
    limits = limits or OracleLimits()
    if len(items) > limits.max_items_exact:
        raise InstanceTooLarge(
            f"{len(items)} items exceed the exact limit of {limits.max_items_exact}"
        )
    counts: dict[Size, int] = {}
    for it in items:
        counts[it.size] = counts.get(it.size, 0) + 1
    best = _solve(counts)
    parts = _reconstruct(dict(counts), best)

    by_size: dict[Size, list[Item]] = {}
    for it in sorted(items, key=lambda x: x.id):
        by_size.setdefault(it.size, []).append(it)
    bins: list[list[Item]] = []
    for part in parts:
        chosen: list[Item] = []
        for size, count in part.items():
            for _ in range(count):
                chosen.append(by_size[size].pop())
        bins.append(chosen)
    leftovers = [it for pool in by_size.values() for it in pool]
    if leftovers:
        bins.append(sorted(leftovers, key=lambda x: x.id))
    return best, Packing(bins)


def greedy_cover(items: list[Item]) -> Packing:
    """Single-open-bin greedy: add each item in order, close the bin once
    covered.  Works online and is the classical 2-approximation."""
    bins: list[list[Item]] = []
    open_bin: list[Item] = []
    load = ZERO
    for it in items:
        open_bin.append(it)
        load += it.size
        if load >= ONE:
            bins.append(open_bin)
            open_bin = []
            load = ZERO
    if open_bin:
        bins.append(open_bin)
    return Packing(bins)


@dataclass
class OfflineResult:
    count: int
    packing: Packing
    exact: bool


def offline_reference(
    items: list[Item],
    eps: Fraction | None = None,
    limits: OracleLimits | None = None,
) -> OfflineResult:
    """Offline black box for the amortized algorithm.

    Exact at desk scale; beyond the exact limit it falls back to greedy on
    non-increasing sizes, flagged so callers know only the factor-2 guarantee
    applies.
    """
    del eps  # the exact solver ignores the approximation parameter
    limits = limits or OracleLimits()
    if len(items) <= limits.max_items_exact:
        count, packing = opt_exact(items, limits)
        return OfflineResult(count, packing, exact=True)
    ordered = sorted(items, key=lambda it: (-it.size, it.id))
    packing = greedy_cover(ordered)
    return OfflineResult(packing.objective, packing, exact=False)
