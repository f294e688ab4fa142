"""Command-line entry point.

Subcommands: ``simulate``, ``nsweep``, ``equivalence``, ``audit``, each taking
a config file plus optional ``--out``, ``--seed``, ``--threads`` overrides.
Exit codes: 0 on success, 1 on a failed audit or aborted run, 2 on a config
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .harness import (
    ConfigError,
    load_config,
    run_equivalence_sweep,
    run_growth_experiment,
    run_nsweep,
    run_verification_suite,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hartreelab",
        description="Pseudospectral torus simulator and modified-energy laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "evolve the configured data and write the growth CSV"),
        ("nsweep", "almost-conservation increments across thresholds"),
        ("equivalence", "static E2-vs-E1 ratios across thresholds"),
        ("audit", "run the verification suite and write the audit report"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="path to a key = value config file")
        cmd.add_argument("--out", default=None, help="output directory override")
        cmd.add_argument("--seed", type=int, default=None, help="initial-data seed override")
        cmd.add_argument("--threads", type=int, default=1, help="sweep worker count")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, initial_seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = args.out
    try:
        if args.command == "simulate":
            csv_path, _ = run_growth_experiment(cfg, out)
            print(csv_path)
            status_path = csv_path.replace("growth.csv", "growth_status.txt")
            with open(status_path, "r", encoding="utf-8") as fh:
                ok = any(line.strip() == "status: ok" for line in fh)
            return 0 if ok else 1
        if args.command == "nsweep":
            csv_path, rows = run_nsweep(cfg, out, threads=args.threads)
            print(csv_path)
            return 0 if len(rows) == len(cfg.sweep_n) else 1
        if args.command == "equivalence":
            csv_path, rows = run_equivalence_sweep(cfg, out, threads=args.threads)
            print(csv_path)
            return 0 if len(rows) == len(cfg.sweep_n) else 1
        if args.command == "audit":
            report = run_verification_suite(cfg, out or cfg.output_dir)
            for line in report.lines():
                print(line)
            return 0 if report.passed else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
