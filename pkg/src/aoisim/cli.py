"""Command-line entry point.

    aoisim run <config> [--output DIR] [--seed N] [--threads N] [--mode M]
    aoisim report <config> [--output FILE] [--seed N]

Exit codes: 0 on success, 2 on configuration errors, 3 on runtime failures.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .engine import Mode
from .experiments import emit_policy_report, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoisim",
                                     description="Peak-AoI simulator for Poisson bipolar "
                                                 "networks with adaptive channel access")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured sweep")
    run.add_argument("config", help="path to the experiment configuration")
    run.add_argument("--output", default="out", help="output directory (default: out)")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for realizations (results are identical "
                          "for any thread count)")
    run.add_argument("--mode", choices=[m.value for m in Mode], default=None,
                     help="override actual/dominant mode")

    report = sub.add_parser("report", help="per-node policy audit on one realization")
    report.add_argument("config", help="path to the experiment configuration")
    report.add_argument("--output", default="policy_report.csv", help="output CSV path")
    report.add_argument("--seed", type=int, default=None, help="override the master seed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = parse_config(text)
        if args.seed is not None:
            spec.base = dataclasses.replace(spec.base, master_seed=args.seed)
        if getattr(args, "mode", None):
            spec.base = dataclasses.replace(spec.base, mode=Mode(args.mode))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            if args.threads < 1:
                print("error: --threads must be at least 1", file=sys.stderr)
                return EXIT_CONFIG
            rows = run_sweep(spec, args.output, threads=args.threads, config_text=text)
            print(f"wrote {len(rows)} sweep rows to {args.output}/sweep.csv")
        else:
            rows = emit_policy_report(spec, args.output)
            print(f"wrote policy report for {len(rows)} nodes to {args.output}")
    except Exception as exc:  # noqa: BLE001 - map anything unexpected to exit 3
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
