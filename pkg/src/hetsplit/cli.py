"""Command-line entry point.

    hetsplit run <config> --out <dir> [--jobs N] [--master-seed S]
    hetsplit validate <config>
    hetsplit tune-rel12 <config> --grid a,b,c [--jobs N]

The HETSPLIT_OUT environment variable overrides the run output directory.
Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .baselines import tune_rel12_threshold
from .config import validate_config_text
from .orchestrator import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetsplit",
        description="Multi-RAT traffic aggregation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured experiment sweep")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (or set HETSPLIT_OUT)")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--master-seed", type=int, default=0)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")

    p_tune = sub.add_parser("tune-rel12", help="grid-search the Rel12 SINR gate")
    p_tune.add_argument("config")
    p_tune.add_argument("--grid", required=True,
                        help="comma-separated candidate thresholds in dB")
    p_tune.add_argument("--jobs", type=int, default=1)
    return parser


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None, [str(exc)]
    return validate_config_text(text)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    cfg, diagnostics = _load(args.config)
    if args.command == "validate":
        for d in diagnostics:
            print(d)
        return EXIT_OK if cfg is not None and not diagnostics else EXIT_CONFIG
    if cfg is None or diagnostics:
        for d in diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        out_dir = os.environ.get("HETSPLIT_OUT") or args.out
        if not out_dir:
            print("error: --out (or HETSPLIT_OUT) is required", file=sys.stderr)
            return EXIT_CONFIG
        try:
            paths = run_experiment(cfg, out_dir, jobs=args.jobs,
                                   master_seed=args.master_seed)
        except Exception as exc:
            print(f"runtime error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        for name in ("flows", "summary", "cdf", "manifest"):
            print(paths[name])
        return EXIT_OK

    if args.command == "tune-rel12":
        try:
            grid = [float(x) for x in args.grid.split(",") if x.strip() != ""]
        except ValueError:
            print("error: --grid must be comma-separated numbers", file=sys.stderr)
            return EXIT_CONFIG
        if not grid:
            print("error: --grid is empty", file=sys.stderr)
            return EXIT_CONFIG
        try:
            best = tune_rel12_threshold(cfg, grid, jobs=args.jobs)
        except Exception as exc:
            print(f"runtime error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(repr(best))
        return EXIT_OK

    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
