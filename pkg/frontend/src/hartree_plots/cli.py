"""Command-line figure renderer: ``plot <kind> <csv> --out <png> [--fit]``."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotJob, render
from .io import SCHEMAS, SchemaError

__all__ = ["main"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render figures from simulator CSV outputs"
    )
    parser.add_argument("kind", choices=sorted(SCHEMAS), help="figure kind")
    parser.add_argument("csv", help="input CSV path")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--fit", action="store_true", help="draw a fitted power-law slope")
    args = parser.parse_args(argv)
    job = PlotJob(kind=args.kind, csv_path=args.csv, out_path=args.out, fit=args.fit)
    try:
        print(render(job))
    except (SchemaError, OSError, ValueError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
