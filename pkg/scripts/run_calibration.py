#!/usr/bin/env python3
"""Calibrate the sample-size multipliers on the n = 400 reference suite.

Searches a grid around the shipped defaults, checks the Wilson-lower-bound
gates for the accept/reject contracts and the comparator's Case 1 / Case 2
separation, and writes the recommendation to calibration.json. The shipped
dataclass defaults (c1=64, c2=4, c3=8, c4=3, gamma=1) are the output of
this script; rerun it after changing thresholds or sample-size formulas.
"""
import argparse
import json
import sys
import time

from idtest.harness import calibrate_constants


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="calibration.json")
    args = ap.parse_args()

    space = {
        "c1": [32.0, 64.0, 128.0],
        "c2": [2.0, 4.0, 8.0],
        "c3": [4.0, 8.0, 16.0],
        "c4": [1.0, 2.0, 3.0, 4.0],
        "gamma": [1.0, 1.1],
    }
    t0 = time.perf_counter()
    result = calibrate_constants(
        search_space=space,
        n=args.n,
        eps=args.eps,
        trials=args.trials,
        master_seed=args.seed,
    )
    result["elapsed_s"] = round(time.perf_counter() - t0, 1)
    with open(args.out, "w") as fh:
        json.dump(result, fh, sort_keys=True, indent=2)
    print(json.dumps(result["recommended"], sort_keys=True))
    print(f"wrote {args.out} after {result['elapsed_s']}s "
          f"({len(result['evaluations'])} evaluations)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
