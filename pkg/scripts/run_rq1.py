"""RQ1: which RESTARTS^n_p configuration works at all?

Runs the four-configuration grid (1x100%, 40x1%, 20x2%, 8x5%) on the
initialisation-lag suite and on the default suite, then prints, per
configuration, how many runs ended without a final result.

    python scripts/run_rq1.py --out results/rq1 [--reps 10] [--t-total-ms 3000]
"""

import argparse
from collections import Counter
from pathlib import Path

from betrun.budget import STANDARD_GRID
from betrun.campaign import CampaignConfig, run_campaign
from betrun.surrogates import default_suite, make_subject_suite
from betrun.surrogates.suite import shipped_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/rq1"))
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--t-total-ms", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=2020)
    args = ap.parse_args()

    suites = {"lagged": make_subject_suite(shipped_config("rq1_lagged_suite.txt")),
              "default": default_suite()}
    for name, subjects in suites.items():
        cfg = CampaignConfig(subjects=subjects, strategies=list(STANDARD_GRID),
                             t_total_ms=args.t_total_ms, repetitions=args.reps,
                             master_seed=args.seed)
        records = run_campaign(cfg, args.out / f"{name}.jsonl")
        print(f"\n{name} suite, {len(subjects)} subjects x {args.reps} repetitions, "
              f"t_total = {args.t_total_ms} ms")
        print(f"{'strategy':<18}{'t_k ms':>8}{'no result':>11}{'survivor errored':>18}{'runs':>6}")
        for strategy in STANDARD_GRID:
            runs = [r for r in records if r.strategy == strategy.label]
            outcome = Counter(r.failure for r in runs)
            print(f"{str(strategy):<18}{runs[0].t_k_ms:>8}{outcome['no_viable_candidate']:>11}"
                  f"{outcome['survivor_errored']:>18}{len(runs):>6}")


if __name__ == "__main__":
    main()
