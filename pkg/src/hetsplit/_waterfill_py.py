"""Pure numpy water-filling kernel, the fallback for the compiled extension."""

import numpy as np


def waterfill(ratios: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Allocate a unit resource over users with per-user floors `ratios`.

    Implements the sort-and-shrink procedure: sort floors ascending, start
    with everyone active, and drop the highest-floor user while their share
    would be non-positive. The surviving prefix is the largest N for which
    the level (sum of the N smallest floors + 1)/N clears the N-th floor.

    Returns (alphas, level, n_active) with alphas aligned to the input order,
    alphas[k] = max(0, level - ratios[k]) and sum(alphas) == 1.
    """
    n = ratios.shape[0]
    if n == 0:
        raise ValueError("waterfill: empty input")

    # ties carry equal allocations either way, so sort stability is moot
    order = np.argsort(ratios)
    srt = ratios[order]
    csum = np.cumsum(srt)
    counts = np.arange(1, n + 1, dtype=np.float64)
    levels = (csum + 1.0) / counts
    feasible = np.nonzero(levels - srt > 0.0)[0]
    # the single smallest floor always clears: level_1 = floor_1 + 1
    n_active = int(feasible[-1]) + 1
    level = float(levels[n_active - 1])

    alphas = np.zeros(n, dtype=np.float64)
    alphas[order[:n_active]] = level - srt[:n_active]
    return alphas, level, n_active
