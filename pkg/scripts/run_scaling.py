#!/usr/bin/env python3
"""Sample-complexity scaling experiment over a geometric domain grid.

Measures q-samples + p-queries of the sublinear tester and of the
explicit-mass baseline for n = 2^10 .. 2^18, fits log-log slopes, and
writes a CSV. The tester's slope sits near 0.55 (sqrt(n) with log drift);
the baseline's near 1 because its linear scan dominates.
"""
import argparse
import sys

from idtest.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--lo", type=int, default=10, help="smallest exponent of 2")
    ap.add_argument("--hi", type=int, default=18, help="largest exponent of 2")
    ap.add_argument("--trials-per-point", type=int, default=3)
    ap.add_argument("--out", default="scaling.csv")
    args = ap.parse_args()

    grid = ",".join(str(2**e) for e in range(args.lo, args.hi + 1))
    return cli_main([
        "bench",
        "--n-grid", grid,
        "--eps", str(args.eps),
        "--seed", str(args.seed),
        "--trials-per-point", str(args.trials_per_point),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
