"""Exact-arithmetic primitives shared by every bin covering algorithm.

Sizes are exact rationals (``fractions.Fraction``), so equality-sensitive
predicates like "barely covered" never depend on floating point tolerances.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator

Size = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)

_DECIMAL_RE = re.compile(r"^(\d+)(?:\.(\d+))?$")
_FRACTION_RE = re.compile(r"^(\d+)/(\d+)$")


class SizeParseError(ValueError):
    """Raised for malformed or out-of-range size literals."""


def parse_size(text: str) -> Size:
    """Parse a decimal or ``p/q`` literal to an exact rational.

    ``"0.1"`` parses to exactly 1/10, never to a binary float.
    """
    text = text.strip()
    m = _DECIMAL_RE.match(text)
    if m:
        whole, frac = m.group(1), m.group(2)
        value = Fraction(int(whole))
        if frac:
            value += Fraction(int(frac), 10 ** len(frac))
        return value
    m = _FRACTION_RE.match(text)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise SizeParseError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    raise SizeParseError(f"not a decimal or p/q literal: {text!r}")


def parse_item_size(text: str) -> Size:
    """Parse an item size; item sizes must lie in (0, 1]."""
    value = parse_size(text)
    if not ZERO < value <= ONE:
        raise SizeParseError(f"item size {text!r} outside (0, 1]")
    return value


def format_size(value: Fraction) -> str:
    """Render a rational as ``p/q`` (always with an explicit denominator)."""
    return f"{value.numerator}/{value.denominator}"


class ItemClass(Enum):
    BIG = "big"
    MEDIUM = "medium"
    SMALL = "small"


def classify(size: Size, eps: Size) -> ItemClass:
    """Classify a size: big in (1/2, 1], medium in (eps, 1/2], small in (0, eps].

    Boundaries resolve downward: ``size == eps`` is small, ``size == 1/2``
    is medium.
    """
    if not ZERO < size <= ONE:
        raise ValueError(f"size {size} outside (0, 1]")
    if not ZERO < eps <= HALF:
        raise ValueError(f"eps {eps} outside (0, 1/2]")
    if size > HALF:
        return ItemClass.BIG
    if size > eps:
        return ItemClass.MEDIUM
    return ItemClass.SMALL


@dataclass(frozen=True)
class Item:
    """An identified item with an exact size in (0, 1]."""

    id: int
    size: Size

    def __post_init__(self) -> None:
        if not ZERO < self.size <= ONE:
            raise ValueError(f"item {self.id}: size {self.size} outside (0, 1]")


class BinKind(Enum):
    BB = "BB"    # two big items, nothing else
    BM = "BM"    # one big item plus medium items, barely covered
    BSC = "BSC"  # one big item plus small items, covered
    BSP = "BSP"  # one big item, no mediums, not covered
    M = "M"      # medium items only
    S = "S"      # small items only
    GB = "GB"    # group buffer: small items only, may be overpacked


class CoverState(Enum):
    """Strongest applicable cover label for a bin."""

    UNCOVERED = "uncovered"
    BARELY_COVERED = "barely-covered"
    WELL_COVERED = "well-covered"
    OVER_COVERED = "over-covered"


class Bin:
    """A bin: a set of item ids with their sizes and a running exact load."""

    __slots__ = ("id", "kind", "items", "load")

    def __init__(self, bin_id: int, kind: BinKind):
        self.id = bin_id
        self.kind = kind
        self.items: dict[int, Size] = {}
        self.load: Size = ZERO

    def __repr__(self) -> str:
        sizes = ", ".join(str(s) for s in sorted(self.items.values(), reverse=True))
        return f"Bin({self.id}, {self.kind.value}, load={self.load}, [{sizes}])"

    def add(self, item_id: int, size: Size) -> None:
        if item_id in self.items:
            raise ValueError(f"item {item_id} already in bin {self.id}")
        self.items[item_id] = size
        self.load += size

    def remove(self, item_id: int) -> Size:
        size = self.items.pop(item_id)
        self.load -= size
        return size

    def entries(self) -> Iterator[tuple[int, Size]]:
        return iter(self.items.items())

    def of_class(self, eps: Size, cls: ItemClass) -> list[tuple[int, Size]]:
        return [(i, s) for i, s in self.items.items() if classify(s, eps) is cls]

    def is_empty(self) -> bool:
        return not self.items


def biggest(entries: Iterable[tuple[int, Size]]) -> tuple[int, Size] | None:
    """Largest entry by size; ties broken by smallest item id."""
    best: tuple[int, Size] | None = None
    for i, s in entries:
        if best is None or s > best[1] or (s == best[1] and i < best[0]):
            best = (i, s)
    return best


def smallest(entries: Iterable[tuple[int, Size]]) -> tuple[int, Size] | None:
    """Smallest entry by size; ties broken by smallest item id."""
    best: tuple[int, Size] | None = None
    for i, s in entries:
        if best is None or s < best[1] or (s == best[1] and i < best[0]):
            best = (i, s)
    return best


def max_size(entries: Iterable[tuple[int, Size]]) -> Size:
    """s_max convention: 0 on the empty set."""
    found = biggest(entries)
    return found[1] if found else ZERO


def min_size(entries: Iterable[tuple[int, Size]]) -> Size | None:
    """s_min convention: None stands for +infinity on the empty set."""
    found = smallest(entries)
    return found[1] if found else None


def _present_classes(sizes: Iterable[Size], eps: Size) -> dict[ItemClass, list[Size]]:
    groups: dict[ItemClass, list[Size]] = {}
    for s in sizes:
        groups.setdefault(classify(s, eps), []).append(s)
    return groups


def is_covered_sizes(sizes: Iterable[Size]) -> bool:
    return sum(sizes, ZERO) >= ONE


def is_barely_covered_sizes(sizes: list[Size], eps: Size) -> bool:
    """Covered, and removing the biggest item of the smallest present class
    uncovers the bin."""
    load = sum(sizes, ZERO)
    if load < ONE:
        return False
    groups = _present_classes(sizes, eps)
    for cls in (ItemClass.SMALL, ItemClass.MEDIUM, ItemClass.BIG):
        if cls in groups:
            return load - max(groups[cls]) < ONE
    raise ValueError("empty bin has no cover state")


def is_well_covered_sizes(sizes: list[Size], eps: Size) -> bool:
    """Barely covered, plus: if the biggest big and the biggest non-big item
    can cover a bin on their own, the bin holds at most two items."""
    if not is_barely_covered_sizes(sizes, eps):
        return False
    bigs = [s for s in sizes if classify(s, eps) is ItemClass.BIG]
    rest = [s for s in sizes if classify(s, eps) is not ItemClass.BIG]
    top_big = max(bigs) if bigs else ZERO
    top_rest = max(rest) if rest else ZERO
    if top_big + top_rest >= ONE:
        return len(sizes) <= 2
    return True


def is_at_most_well_covered_sizes(sizes: list[Size], eps: Size) -> bool:
    """Uncovered, or exactly well-covered (items could be added to reach
    well-covered; nothing needs removing)."""
    if sum(sizes, ZERO) < ONE:
        return True
    return is_well_covered_sizes(sizes, eps)


def is_more_than_well_covered_sizes(sizes: list[Size], eps: Size) -> bool:
    return not is_at_most_well_covered_sizes(sizes, eps)


def is_covered(b: Bin) -> bool:
    return b.load >= ONE


def is_barely_covered(b: Bin, eps: Size) -> bool:
    return is_barely_covered_sizes(list(b.items.values()), eps)


def is_well_covered(b: Bin, eps: Size) -> bool:
    return is_well_covered_sizes(list(b.items.values()), eps)


def is_at_most_well_covered(b: Bin, eps: Size) -> bool:
    return is_at_most_well_covered_sizes(list(b.items.values()), eps)


def is_more_than_well_covered(b: Bin, eps: Size) -> bool:
    return not is_at_most_well_covered(b, eps)


def cover_state(b: Bin, eps: Size) -> CoverState:
    """Strongest applicable label for a non-empty bin."""
    if b.is_empty():
        raise ValueError("cover state of an empty bin is undefined")
    sizes = list(b.items.values())
    if sum(sizes, ZERO) < ONE:
        return CoverState.UNCOVERED
    if not is_barely_covered_sizes(sizes, eps):
        return CoverState.OVER_COVERED
    if is_well_covered_sizes(sizes, eps):
        return CoverState.WELL_COVERED
    return CoverState.BARELY_COVERED


class LedgerError(RuntimeError):
    """Ledger misuse: recording a move outside an event."""


@dataclass
class LedgerRow:
    event_index: int
    trigger: Size
    moved: Size


class MigrationLedger:
    """Per-event and cumulative moved-size accounting.

    Convention: the arriving item's first placement and the departing item's
    removal are free; every later change of bin assignment within the event
    costs the moved item's full size each time it moves. Fractional
    rearrangements inside a group buffer are never recorded.
    """

    def __init__(self) -> None:
        self.rows: list[LedgerRow] = []
        self.cumulative_moved: Size = ZERO
        self.cumulative_arrived_departed: Size = ZERO
        self._current: LedgerRow | None = None
        self._free_once: set[int] = set()

    @property
    def in_event(self) -> bool:
        return self._current is not None

    def begin_event(self, trigger: Size, *, count_trigger: bool = True) -> None:
        if self._current is not None:
            raise LedgerError("previous event not ended")
        self._current = LedgerRow(len(self.rows), trigger, ZERO)
        if count_trigger:
            self.cumulative_arrived_departed += trigger
        self._free_once.clear()

    def grant_free_placement(self, item_id: int) -> None:
        """The next placement of this item id costs nothing (arrivals, dummies)."""
        self._free_once.add(item_id)

    def charge_placement(self, item_id: int, size: Size) -> None:
        if self._current is None:
            raise LedgerError("move recorded outside an event")
        if item_id in self._free_once:
            self._free_once.discard(item_id)
            return
        self._current.moved += size
        self.cumulative_moved += size

    def record_move(self, item: Item) -> None:
        self.charge_placement(item.id, item.size)

    def end_event(self) -> tuple[Size, Fraction]:
        if self._current is None:
            raise LedgerError("no event in progress")
        row = self._current
        self._current = None
        self._free_once.clear()
        self.rows.append(row)
        factor = row.moved / row.trigger if row.trigger > 0 else ZERO
        return row.moved, factor

    def amortized_factor(self) -> Fraction:
        if self.cumulative_arrived_departed == 0:
            return ZERO
        return self.cumulative_moved / self.cumulative_arrived_departed


class BinStore:
    """Bin ownership and item placement shared by the algorithm states.

    All placements of live items funnel through here so migration charging
    stays consistent: removal is free, placement is charged unless the item
    holds a one-shot free-placement grant.
    """

    def __init__(self, ledger: MigrationLedger):
        self.ledger = ledger
        self.bins: dict[int, Bin] = {}
        self.item_bin: dict[int, int] = {}
        self.item_size: dict[int, Size] = {}
        self._next_bin_id = 0

    def new_bin(self, kind: BinKind) -> Bin:
        b = Bin(self._next_bin_id, kind)
        self._next_bin_id += 1
        self.bins[b.id] = b
        return b

    def delete_bin(self, bin_id: int) -> None:
        b = self.bins.pop(bin_id)
        if not b.is_empty():
            raise ValueError(f"deleting non-empty bin {bin_id}")

    def place(self, item_id: int, size: Size, bin_id: int) -> None:
        if item_id in self.item_bin:
            raise ValueError(f"item {item_id} is already placed")
        self.bins[bin_id].add(item_id, size)
        self.item_bin[item_id] = bin_id
        self.item_size[item_id] = size
        self.ledger.charge_placement(item_id, size)

    def remove(self, item_id: int) -> Size:
        bin_id = self.item_bin.pop(item_id)
        del self.item_size[item_id]
        return self.bins[bin_id].remove(item_id)

    def move(self, item_id: int, to_bin: int) -> None:
        size = self.remove(item_id)
        self.place(item_id, size, to_bin)

    def bin_of(self, item_id: int) -> Bin:
        return self.bins[self.item_bin[item_id]]
