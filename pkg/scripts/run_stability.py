"""Stability: internal-error rates of baseline vs RESTARTS^8_5% across master seeds.

Each master seed is one full default campaign; the script prints the share of
runs with an internal error per strategy and counts the seeds where
Bet-and-Run errs less often.

    python scripts/run_stability.py --out results/stability [--seeds 20] [--reps 30]
"""

import argparse
from pathlib import Path

from betrun.budget import BASELINE, RestartStrategy
from betrun.campaign import CampaignConfig, error_tally, run_campaign
from betrun.stats import stability_test
from betrun.surrogates import default_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/stability"))
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=1000)
    ap.add_argument("--reps", type=int, default=30)
    args = ap.parse_args()

    bar = RestartStrategy(8, 0.05)
    subjects = default_suite()
    wins = 0
    print(f"{'seed':>6}{'BL errors':>11}{'BAR errors':>12}{'BL frac':>9}{'BAR frac':>10}{'p':>10}")
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        cfg = CampaignConfig(subjects=subjects, repetitions=args.reps, master_seed=seed)
        records = run_campaign(cfg, args.out / f"seed-{seed}.jsonl")
        tally = error_tally(records)
        bl, br = tally[BASELINE.label], tally[bar.label]
        per_subject = {label: [sum(r.error_count for r in records
                                   if r.subject == s.name and r.strategy == label)
                               for s in subjects] for label in (BASELINE.label, bar.label)}
        p = stability_test(per_subject[BASELINE.label], per_subject[bar.label]).p_value
        wins += br.error_run_fraction < bl.error_run_fraction
        print(f"{seed:>6}{bl.errors:>11}{br.errors:>12}{bl.error_run_fraction:>9.3f}"
              f"{br.error_run_fraction:>10.3f}{p:>10.2g}")
    print(f"\nBet-and-Run errs less often in {wins}/{args.seeds} campaigns")


if __name__ == "__main__":
    main()
