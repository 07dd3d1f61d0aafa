"""Multi-RAT traffic aggregation: optimal macro/small-cell splitting and a
fluid discrete-event simulator for comparing it against association baselines."""

__version__ = "0.1.0"

from .allocator import (
    Allocation,
    UeLinkState,
    de_split,
    effective_rate,
    opt_alloc,
    oracle_alloc,
    split_ratio,
)

__all__ = [
    "Allocation",
    "UeLinkState",
    "de_split",
    "effective_rate",
    "opt_alloc",
    "oracle_alloc",
    "split_ratio",
    "__version__",
]
