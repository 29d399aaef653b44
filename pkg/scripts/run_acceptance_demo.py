#!/usr/bin/env python3
"""One-screen demonstration of all the probabilistic contracts.

Runs the accept/reject trial suites, the comparator separation check, and
the scaling slopes with smaller trial counts than the acceptance tests,
printing a compact summary. For the binding verification run
`pytest tests/test_acceptance.py -v` instead.
"""
import argparse
import sys
import time

from idtest.harness import (
    lemma_check,
    make_instance,
    run_trials,
    scaling_experiment,
    wilson_interval,
)
from idtest.tester import TesterConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = TesterConfig(eps=0.5)
    print(f"config: {cfg.to_dict()}")
    for kind, params, want in [
        ("identical-uniform", {}, "accept"),
        ("random-half", {}, "reject"),
        ("eps-perturbed", {"eps": 0.5}, "reject"),
    ]:
        inst = make_instance(kind, 400, seed=args.seed, **params)
        t0 = time.perf_counter()
        rep = run_trials(inst, cfg, trials=args.trials,
                         master_seed=args.seed, jobs=args.jobs)
        rate = rep.accept_rate if want == "accept" else 1 - rep.accept_rate
        lo = wilson_interval(
            rep.accepts if want == "accept" else rep.trials - rep.accepts,
            rep.trials,
        )[0]
        print(f"{kind:18s} {want} rate={rate:.3f} wilson_lo={lo:.3f} "
              f"mean_q={rep.mean_q_samples:.0f} mean_p={rep.mean_p_queries:.0f} "
              f"({time.perf_counter()-t0:.1f}s)")

    t0 = time.perf_counter()
    lemma = lemma_check(400, 0.1, trials=args.trials, master_seed=args.seed)
    print(f"comparator case1 rate={lemma['case1']['rate']:.3f} "
          f"case2 rate={lemma['case2']['rate']:.3f} "
          f"gap-case1 rate={lemma['gap']['case1_rate']:.2f} "
          f"({time.perf_counter()-t0:.1f}s)")

    t0 = time.perf_counter()
    sc = scaling_experiment([2**e for e in range(10, 19)], 0.5,
                            trials_per_point=2, master_seed=args.seed)
    print(f"scaling slope={sc['slope_total']:.3f} "
          f"baseline={sc['slope_baseline']:.3f} ({time.perf_counter()-t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
