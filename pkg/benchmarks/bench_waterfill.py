#!/usr/bin/env python3
"""Times the compiled water-filling kernel against the pure numpy fallback.

Usage: python benchmarks/bench_waterfill.py [--repeats N]

The small-K columns reflect the simulator's per-event call pattern (one
sector's active UEs); the large-K columns reflect the scaling check.
"""

import argparse
import time

import numpy as np

from hetsplit import _waterfill_py
from hetsplit.kernels import USING_COMPILED

try:
    from hetsplit import _waterfill
except ImportError:
    _waterfill = None


def bench(fn, instances, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for ratios in instances:
            fn(ratios)
        best = min(best, (time.perf_counter() - t0) / len(instances))
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    sizes = [4, 8, 16, 32, 64, 256, 1024, 2 ** 14, 2 ** 17, 2 ** 20]
    print(f"compiled kernel available: {_waterfill is not None} "
          f"(package currently uses: {'compiled' if USING_COMPILED else 'pure'})")
    print(f"{'K':>9} {'pure':>12} {'compiled':>12} {'speedup':>8}")
    for k in sizes:
        n_inst = max(1, min(2000, 200_000 // k))
        instances = [rng.uniform(0.0, 3.0, k) for _ in range(n_inst)]
        t_pure = bench(_waterfill_py.waterfill, instances, args.repeats)
        if _waterfill is None:
            print(f"{k:>9} {t_pure*1e6:>10.2f}us {'n/a':>12} {'n/a':>8}")
            continue
        t_comp = bench(_waterfill.waterfill, instances, args.repeats)
        print(f"{k:>9} {t_pure*1e6:>10.2f}us {t_comp*1e6:>10.2f}us "
              f"{t_pure/t_comp:>7.1f}x")


if __name__ == "__main__":
    main()
