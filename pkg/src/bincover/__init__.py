"""Online bin covering with bounded migration.

Library + CLI: static and dynamic online algorithms with invariant checkers,
an amortized repacking algorithm, an exact optimum oracle, and adversarial
lower-bound instance generators.
"""

from .core import (
    Bin,
    BinKind,
    CoverState,
    Item,
    ItemClass,
    MigrationLedger,
    Size,
    classify,
    cover_state,
    parse_size,
)
from .oracle import OracleLimits, Packing, greedy_cover, offline_reference, opt_exact

__all__ = [
    "Bin",
    "BinKind",
    "CoverState",
    "Item",
    "ItemClass",
    "MigrationLedger",
    "OracleLimits",
    "Packing",
    "Size",
    "classify",
    "cover_state",
    "greedy_cover",
    "offline_reference",
    "opt_exact",
    "parse_size",
]
