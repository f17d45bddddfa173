"""RQ2: baseline vs RESTARTS^8_5% on the default desk-scale suite.

Runs the shipped default campaign, analyzes it and writes the aggregate
report next to the raw records.

    python scripts/run_rq2.py --out results/rq2 [--reps 30] [--seed 20200110]
"""

import argparse
from pathlib import Path

from betrun.analysis import analyze_records, render_report, write_lines
from betrun.campaign import parse_config, run_campaign
from betrun.surrogates.suite import shipped_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/rq2"))
    ap.add_argument("--reps", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--theta", type=float, default=0.5)
    args = ap.parse_args()

    cfg = parse_config(shipped_config("default_campaign.cfg"))
    if args.reps is not None:
        cfg.repetitions = args.reps
    if args.seed is not None:
        cfg.master_seed = args.seed
    args.out.mkdir(parents=True, exist_ok=True)
    records = run_campaign(cfg, args.out / "records.jsonl")
    result = analyze_records(records, theta=args.theta)
    write_lines(result.lines(), args.out / "comparisons.jsonl")
    text, machine = render_report(result.lines())
    (args.out / "report.txt").write_text(text)
    write_lines(machine, args.out / "report.jsonl")
    print(text)


if __name__ == "__main__":
    main()
