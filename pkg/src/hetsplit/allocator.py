"""Proportional-fair resource splitting across a macrocell and small cells.

Each user k downloads through two legs at once: a macrocell share alpha_k of
peak capacity p_k, and a small cell whose rate r_k is discounted by the wired
backhaul delay l into an effective rate

    r_eff = (1/r + l/f)^-1

for a file of f bits (the file spends l seconds on the backhaul before the
small cell can serve it). Allocating macro fractions to maximize
sum_k log(r_eff_k + alpha_k p_k) subject to sum alpha = 1 has a closed-form
water-filling solution: every served user ends up at a common level

    r_eff_k / p_k + alpha_k = A,

and users whose ratio r_eff_k/p_k already exceeds the level get nothing.
`opt_alloc` computes this exactly; `oracle_alloc` solves the same program by
bisection on the level and exists to cross-check `opt_alloc` in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import waterfill

__all__ = [
    "UeLinkState",
    "Allocation",
    "effective_rate",
    "opt_alloc",
    "split_ratio",
    "de_split",
    "oracle_alloc",
    "sum_log_objective",
]


@dataclass(slots=True)
class UeLinkState:
    """Radio snapshot for one UE at allocation time.

    file_size_bits is the remaining size of the head-of-line file; the
    backhaul delay amortizes over it when computing the effective rate.
    """

    ue_id: int
    macro_peak_bps: float
    smallcell_rate_bps: float
    backhaul_delay_s: float
    file_size_bits: float


@dataclass(slots=True)
class Allocation:
    """Macro resource fractions per UE plus the common water level."""

    fractions: dict[int, float]
    water_level: float
    active_set: set[int] = field(default_factory=set)

    def alpha(self, ue_id: int) -> float:
        return self.fractions[ue_id]


def effective_rate(r_bps: float, delay_s: float, file_bits: float) -> float:
    """Small-cell rate discounted by backhaul delay for a file of given size.

    Equals f / (l + f/r): the file takes l seconds on the backhaul plus f/r
    on the air. Returns 0 for UEs outside small-cell coverage (r == 0) and
    r itself when the delay is zero.
    """
    if not (math.isfinite(r_bps) and math.isfinite(delay_s) and math.isfinite(file_bits)):
        raise ValueError("effective_rate: inputs must be finite")
    if r_bps < 0 or delay_s < 0:
        raise ValueError("effective_rate: rate and delay must be >= 0")
    if file_bits <= 0:
        raise ValueError("effective_rate: file_bits must be > 0")
    if r_bps == 0.0:
        return 0.0
    if delay_s == 0.0:
        return r_bps
    # min() guards the float round trip 1/(1/r), which can exceed r by an ulp
    return min(r_bps, 1.0 / (1.0 / r_bps + delay_s / file_bits))


def _state_arrays(states: list[UeLinkState]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = len(states)
    p = np.fromiter((s.macro_peak_bps for s in states), dtype=np.float64, count=n)
    r = np.fromiter((s.smallcell_rate_bps for s in states), dtype=np.float64, count=n)
    l = np.fromiter((s.backhaul_delay_s for s in states), dtype=np.float64, count=n)
    f = np.fromiter((s.file_size_bits for s in states), dtype=np.float64, count=n)

    ok = np.isfinite(p) & np.isfinite(r) & np.isfinite(l) & np.isfinite(f)
    ok &= (p >= 0) & (r >= 0) & (l >= 0) & (f > 0)
    if not ok.all():
        bad = int(np.nonzero(~ok)[0][0])
        raise ValueError(f"invalid link state for ue_id={states[bad].ue_id}")
    dead = (p == 0) & (r == 0)
    if dead.any():
        bad = int(np.nonzero(dead)[0][0])
        raise ValueError(
            f"ue_id={states[bad].ue_id} has no capacity on either RAT; "
            "reject such UEs before allocation"
        )
    return p, r, l, f


def _effective_rates(r: np.ndarray, l: np.ndarray, f: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        reff = np.minimum(r, 1.0 / (1.0 / r + l / f))
    return np.where(r > 0, reff, 0.0)


def _ratios(p: np.ndarray, reff: np.ndarray) -> np.ndarray:
    # p == 0 with small-cell coverage: infinite ratio, never served on macro
    ratios = np.full(p.shape, np.inf, dtype=np.float64)
    pos = p > 0
    ratios[pos] = reff[pos] / p[pos]
    return ratios


def opt_alloc(states: list[UeLinkState]) -> Allocation:
    """Optimal macro fractions for the sum-log objective.

    Sorts UEs by r_eff/p ascending and pours the unit resource until each
    served UE sits at the common level; UEs whose ratio exceeds the level
    are eliminated and receive alpha = 0 (their small cell already serves
    them better than any macro share would).
    """
    if not states:
        raise ValueError("opt_alloc: empty UE list")
    ue_ids = [s.ue_id for s in states]

    p, r, l, f = _state_arrays(states)
    reff = _effective_rates(r, l, f)
    ratios = _ratios(p, reff)

    finite = np.isfinite(ratios)
    if finite.all():
        alphas, level, _ = waterfill(ratios)
    else:
        if not finite.any():
            raise ValueError("opt_alloc: no UE with macro capacity; nothing to allocate")
        alphas = np.zeros(len(states), dtype=np.float64)
        sub_alphas, level, _ = waterfill(ratios[finite])
        alphas[finite] = sub_alphas

    fractions = dict(zip(ue_ids, alphas.tolist()))
    if len(fractions) != len(states):
        raise ValueError("opt_alloc: duplicate ue_id")
    active_idx = np.nonzero(alphas > 0.0)[0]
    active = {ue_ids[i] for i in active_idx.tolist()}
    return Allocation(fractions=fractions, water_level=float(level), active_set=active)


def split_ratio(alpha: float, macro_peak_bps: float, r_eff_bps: float) -> float:
    """Fraction of the file's bits routed over the macro leg.

    The file is split in the ratio of the leg rates, so the macro share is
    alpha*p / (alpha*p + r_eff); with that split both legs finish together
    under the effective-rate model.
    """
    if not (math.isfinite(alpha) and math.isfinite(macro_peak_bps) and math.isfinite(r_eff_bps)):
        raise ValueError("split_ratio: inputs must be finite")
    if not 0.0 <= alpha <= 1.0 or macro_peak_bps < 0 or r_eff_bps < 0:
        raise ValueError("split_ratio: inputs out of range")
    macro_rate = alpha * macro_peak_bps
    total = macro_rate + r_eff_bps
    if total == 0.0:
        raise ValueError("split_ratio: both legs have zero rate")
    return macro_rate / total


def de_split(
    alpha: float,
    macro_peak_bps: float,
    r_bps: float,
    delay_s: float,
    file_bits: float,
) -> float:
    """Macro bit fraction that equalizes the two legs' completion delays.

    Minimizes max(x*f/(alpha*p), l + (1-x)*f/r) over x in [0, 1]. The macro
    delay rises with x and the small-cell delay falls, so the minimum sits
    where they cross; the crossing is clamped to 1 when the macro leg can
    finish the whole file before the backhaul delay elapses.
    """
    for name, v in (("alpha", alpha), ("macro_peak_bps", macro_peak_bps),
                    ("r_bps", r_bps), ("delay_s", delay_s), ("file_bits", file_bits)):
        if not math.isfinite(v):
            raise ValueError(f"de_split: {name} must be finite")
    if not 0.0 <= alpha <= 1.0 or macro_peak_bps < 0 or r_bps < 0 or delay_s < 0:
        raise ValueError("de_split: inputs out of range")
    if file_bits <= 0:
        raise ValueError("de_split: file_bits must be > 0")

    macro_rate = alpha * macro_peak_bps
    if macro_rate == 0.0 and r_bps == 0.0:
        raise ValueError("de_split: both legs have zero rate")
    if r_bps == 0.0:
        return 1.0
    if macro_rate == 0.0:
        return 0.0
    x = macro_rate * (delay_s * r_bps + file_bits) / (file_bits * (macro_rate + r_bps))
    return min(x, 1.0)


def sum_log_objective(states: list[UeLinkState], fractions: dict[int, float]) -> float:
    """Sum of log(r_eff + alpha*p) over the given UEs, in log-units."""
    total = 0.0
    for s in states:
        reff = effective_rate(s.smallcell_rate_bps, s.backhaul_delay_s, s.file_size_bits)
        total += math.log(reff + fractions[s.ue_id] * s.macro_peak_bps)
    return total


def oracle_alloc(states: list[UeLinkState], tol: float, max_iter: int = 200) -> Allocation:
    """Independent solver for the same program, used to cross-check opt_alloc.

    Bisects on the water level A: sum_k max(0, A - r_eff_k/p_k) is increasing
    in A, so the level meeting the unit-resource constraint is found to
    arbitrary precision without reusing any of opt_alloc's machinery.
    """
    if not states:
        raise ValueError("oracle_alloc: empty UE list")
    if tol <= 0:
        raise ValueError("oracle_alloc: tol must be > 0")

    p, r, l, f = _state_arrays(states)
    reff = _effective_rates(r, l, f)
    ratios = _ratios(p, reff)
    finite = np.isfinite(ratios)
    if not finite.any():
        raise ValueError("oracle_alloc: no UE with macro capacity")
    rho = ratios[finite]

    lo = float(rho.min())          # allocates 0
    hi = float(rho.max()) + 1.0    # allocates >= 1
    level = 0.5 * (lo + hi)
    for _ in range(max_iter):
        level = 0.5 * (lo + hi)
        used = float(np.maximum(0.0, level - rho).sum())
        if abs(used - 1.0) <= min(tol, 1e-12):
            break
        if used > 1.0:
            hi = level
        else:
            lo = level
    raw = np.maximum(0.0, level - rho)
    used = float(raw.sum())
    if abs(used - 1.0) > tol:
        raise RuntimeError(
            f"oracle_alloc: bisection did not converge (residual {used - 1.0:.3e})"
        )

    alphas = np.zeros(len(states), dtype=np.float64)
    alphas[finite] = raw / used  # snap to exact feasibility
    ue_ids = [s.ue_id for s in states]
    fractions = {ue: float(a) for ue, a in zip(ue_ids, alphas)}
    active = {ue for ue, a in fractions.items() if a > 0.0}
    return Allocation(fractions=fractions, water_level=level, active_set=active)
