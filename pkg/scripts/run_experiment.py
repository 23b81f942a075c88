#!/usr/bin/env python3
"""Run the full experiment on a synthetic corpus and print the reports.

Generates data, assembles datasets, trains baseline models, optimizes the
hyperparameters and prints the default/optimized error tables plus the RMSE
improvement table side by side.

Usage:
    python3 scripts/run_experiment.py [--config CFG] [--out DIR] [--seed N] [--budget N]
"""

import argparse
import csv
import sys
import tempfile
from pathlib import Path

from promokit import cli


def print_table(path: Path, title: str) -> None:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    print(f"\n== {title} ==")
    for i, row in enumerate(rows):
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
        if i == 0:
            print("-" * (sum(widths) + 2 * (len(widths) - 1)))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--budget", type=int, default=None)
    args = parser.parse_args()

    out = args.out or tempfile.mkdtemp(prefix="promokit-")
    common = ["--out", out]
    if args.config:
        common += ["--config", args.config]
    if args.seed is not None:
        common += ["--seed", str(args.seed)]

    for command in ("synth", "prepare", "train"):
        code = cli.main([command, *common])
        if code != 0:
            return code
    optimize = ["optimize", *common]
    if args.budget is not None:
        optimize += ["--budget", str(args.budget)]
    code = cli.main(optimize)
    if code != 0:
        return code

    out_dir = Path(out)
    print_table(out_dir / "report_default.csv", "default hyperparameters, test errors")
    print_table(out_dir / "report_optimized.csv", "optimized hyperparameters, test errors")
    print_table(out_dir / "report_rmse_diff.csv", "validation RMSE improvement")
    print(f"\nartifacts in {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
