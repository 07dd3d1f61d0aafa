"""Comparison policies: WLAN-preferred and threshold-gated association, plus
the delay-equalizing split (computed per flow via allocator.de_split).

WP and Rel12 route each file over exactly one RAT; the aggregating policies
(the optimal splitter and DE) may use both legs at once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "Policy",
    "Route",
    "PolicyConfig",
    "wp_decide",
    "rel12_decide",
    "tune_rel12_threshold",
]


class Policy(enum.Enum):
    PROPOSED = "Proposed"
    WP = "WP"
    REL12 = "Rel12"
    DE = "DE"


class Route(enum.Enum):
    MACRO_ONLY = "MacroOnly"
    SMALL_CELL_ONLY = "SmallCellOnly"


@dataclass(frozen=True)
class PolicyConfig:
    policy: Policy
    wp_snr_threshold_db: float = 2.0
    rel12_sinr_threshold_db: float = 5.0

    def __post_init__(self):
        # +-inf is meaningful (always / never offload); NaN is not
        if math.isnan(self.wp_snr_threshold_db) or math.isnan(self.rel12_sinr_threshold_db):
            raise ValueError("policy thresholds must not be NaN")


def wp_decide(
    macro_snr_db: float, best_ap_snr_db: float | None, cfg: PolicyConfig
) -> Route:
    """WLAN-preferred: take the strongest AP whenever it clears the decode
    threshold (boundary inclusive); otherwise stay on the macro."""
    if best_ap_snr_db is not None and best_ap_snr_db >= cfg.wp_snr_threshold_db:
        return Route.SMALL_CELL_ONLY
    return Route.MACRO_ONLY


def rel12_decide(
    macro_sinr_db: float, best_ap_snr_db: float | None, cfg: PolicyConfig
) -> Route:
    """Interworking: offload via the WP rule only when the macro SINR drops
    below the (empirically tuned) gate; a healthy macro keeps the flow."""
    if macro_sinr_db < cfg.rel12_sinr_threshold_db:
        return wp_decide(macro_sinr_db, best_ap_snr_db, cfg)
    return Route.MACRO_ONLY


def tune_rel12_threshold(scenario, grid: list[float], jobs: int = 1) -> float:
    """Picks the Rel12 gate maximizing 5th-percentile flow throughput.

    Runs the scenario once per candidate with identical seeds (common random
    numbers), averaging the edge rate over the configured seeds. Ties go to
    the smaller threshold.
    """
    from .orchestrator import evaluate_rel12_candidates

    if not grid:
        raise ValueError("tune_rel12_threshold: empty grid")
    if len(grid) == 1:
        return grid[0]
    edges = evaluate_rel12_candidates(scenario, grid, jobs=jobs)
    best = max(range(len(grid)), key=lambda i: (edges[i], -grid[i]))
    return grid[best]
