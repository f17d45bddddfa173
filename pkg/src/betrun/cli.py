"""``betrun`` command line: run campaigns, analyze records, render reports, query oracles.

Exit codes: 0 success; 2 campaign completed with per-run failures;
3 invalid input or aborted.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from betrun import analysis
from betrun.budget import BASELINE, BudgetError, BudgetMode, RestartStrategy
from betrun.campaign import (CampaignAborted, CampaignConfig, ConfigError, load_config,
                             read_records, run_campaign)
from betrun.stats import ALPHA, exact_rank_sum, rank_sum_test
from betrun.surrogates import SubjectError, load_suite, make_subject_suite, parse_suite, preset_subject, reference_optimum
from betrun.surrogates.suite import shipped_config

EXIT_OK, EXIT_FAILURES, EXIT_INVALID = 0, 2, 3

log = logging.getLogger("betrun")


def _effective(name: str, values: dict) -> None:
    print(f"betrun {name} effective config: {json.dumps(values, sort_keys=True)}", file=sys.stderr)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INVALID


def _subjects(spec: str) -> list:
    """A suite file path, or the name of a shipped suite (``default``, ``oracle``, ...)."""
    path = Path(spec)
    if path.exists():
        return load_suite(path)
    name = spec if spec.endswith(".txt") else f"{spec}_suite.txt"
    try:
        return make_subject_suite(parse_suite(shipped_config(name)))
    except FileNotFoundError:
        raise ConfigError(f"no suite file or shipped suite named {spec!r}") from None


def cmd_run(args) -> int:
    try:
        if args.config:
            config = load_config(args.config)
        else:
            config = CampaignConfig(subjects=_subjects("default"))
        if args.subjects:
            config.subjects = _subjects(args.subjects)
        if (args.n is None) != (args.p_percent is None):
            raise ConfigError("--n and --p-percent go together")
        if args.n is not None:
            config.strategies = [RestartStrategy.from_percent(args.n, args.p_percent)]
        for attr, flag in (("t_total_ms", "t_total_ms"), ("repetitions", "reps"),
                           ("master_seed", "seed"), ("workers", "workers"),
                           ("adapter", "adapter")):
            value = getattr(args, flag)
            if value is not None:
                setattr(config, attr, value)
        if os.environ.get("BETRUN_WORKERS"):
            config.workers = int(os.environ["BETRUN_WORKERS"])
        if args.mode:
            config.mode = BudgetMode(args.mode)
        config.validate()
    except BudgetError as exc:
        return _fail(f"{type(exc).__name__}: {exc}")
    except (ConfigError, SubjectError, OSError, ValueError) as exc:
        return _fail(f"invalid configuration: {exc}")

    _effective("run", {**config.effective(), "out": str(args.out)})
    try:
        records = run_campaign(config, args.out, workdir=args.workdir)
    except CampaignAborted as exc:
        return _fail(f"campaign aborted: {exc}")
    for rec in records:
        log.info("%s %s rep %d: phases %s, failure %s", rec.subject, rec.strategy, rec.repetition,
                 [p for p, _ in rec.phases], rec.failure)
    failures = sum(rec.failure != "none" for rec in records)
    print(f"{len(records)} records in {args.out}; {failures} runs without a final result",
          file=sys.stderr)
    return EXIT_FAILURES if failures else EXIT_OK


def _load(path) -> list:
    if not Path(path).exists():
        raise FileNotFoundError(f"no such record file: {path}")
    return read_records(path)


def _single_strategy(records, path) -> str:
    labels = sorted({r.strategy for r in records})
    if len(labels) != 1:
        raise analysis.AnalysisError(f"{path} should hold one strategy, found {labels}")
    return labels[0]


def cmd_analyze(args) -> int:
    _effective("analyze", {"records": args.records, "baseline": args.baseline, "bar": args.bar,
                           "theta": args.theta, "alpha": args.alpha, "out": args.out})
    try:
        if args.records:
            if args.baseline or args.bar:
                raise analysis.AnalysisError("give --records or --baseline/--bar, not both")
            records = _load(args.records)
            baseline, bar = None, None
        else:
            if not (args.baseline and args.bar):
                raise analysis.AnalysisError("need --records, or both --baseline and --bar")
            base_recs, bar_recs = _load(args.baseline), _load(args.bar)
            baseline = _single_strategy(base_recs, args.baseline)
            bar = _single_strategy(bar_recs, args.bar)
            if baseline == bar:
                raise analysis.AnalysisError("both files hold the same strategy")
            if not {r.subject for r in base_recs} & {r.subject for r in bar_recs}:
                raise analysis.AnalysisError("the record files share no subject")
            records = base_recs + bar_recs
        if not records:
            raise analysis.AnalysisError("no records to analyze")
        subjects = {}
        for rec in records:
            subjects.setdefault(rec.subject, set()).add(rec.strategy)
        if all(len(s) < 2 for s in subjects.values()):
            raise analysis.AnalysisError("no subject was run under both strategies")
        result = analysis.analyze_records(records, args.theta, args.alpha, baseline, bar)
    except (analysis.AnalysisError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    analysis.write_lines(result.lines(), args.out)
    print(f"{len(result.comparisons)} comparisons written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    _effective("report", {"input": args.input, "out": args.out, "jsonl": args.jsonl})
    if not Path(args.input).exists():
        return _fail(f"no such comparison file: {args.input}")
    try:
        lines = analysis.read_lines(args.input)
    except (ValueError, OSError) as exc:
        return _fail(f"unreadable comparison file: {exc}")
    text, machine = analysis.render_report(lines)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.jsonl:
        analysis.write_lines(machine, args.jsonl)
    return EXIT_OK


def _sample(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_oracle(args) -> int:
    _effective("oracle", {"rank_sum": args.rank_sum, "mvc": args.mvc, "tsp": args.tsp})
    try:
        if args.rank_sum:
            xs, ys = map(_sample, args.rank_sum)
            if len(xs) + len(ys) <= 20:
                result = exact_rank_sum(xs, ys)
            else:
                result = rank_sum_test(xs, ys)
            print(f"p = {result.pvalue:.12g}")
        elif args.mvc or args.tsp:
            name = args.mvc or args.tsp
            subject = _oracle_subject(name, "mvc" if args.mvc else "tsp")
            value = reference_optimum(subject)
            print(int(value) if args.mvc else value)
        else:
            return _fail("oracle needs --rank-sum, --mvc or --tsp")
    except (SubjectError, ValueError) as exc:
        return _fail(f"{type(exc).__name__}: {exc}")
    return EXIT_OK


def _oracle_subject(name: str, family: str):
    """A builtin preset, or a subject from the shipped oracle suite by name."""
    try:
        subject = preset_subject(name)
    except SubjectError:
        suite = make_subject_suite(parse_suite(shipped_config("oracle_suite.txt")))
        matches = [s for s in suite if s.name == name]
        if not matches:
            raise SubjectError(f"unknown {family} subject {name!r}") from None
        subject = matches[0]
    if subject.family != family:
        raise SubjectError(f"{name!r} is a {subject.family} subject")
    return subject


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="betrun", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log per-run phases")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a campaign and write raw records")
    run.add_argument("--config", help="campaign config file (key = value, [subjects])")
    run.add_argument("--n", type=int, help="instances started per run (with --p-percent)")
    run.add_argument("--p-percent", type=float, help="evaluation window, percent of t_total")
    run.add_argument("--t-total-ms", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--workers", type=int, help="worker processes (BETRUN_WORKERS overrides)")
    run.add_argument("--seed", type=int, help="campaign master seed")
    run.add_argument("--mode", choices=[m.value for m in BudgetMode])
    run.add_argument("--subjects", help="suite file or shipped suite name")
    run.add_argument("--adapter", choices=["inprocess", "subprocess"])
    run.add_argument("--workdir", help="keep checkpoint files under this directory")
    run.add_argument("--out", required=True, help="raw record file (JSON lines, appended)")
    run.set_defaults(func=cmd_run)

    an = sub.add_parser("analyze", help="eligibility filter and per-subject rank-sum tests")
    an.add_argument("--records", help="combined record file")
    an.add_argument("--baseline", help=f"record file of the baseline ({BASELINE.label})")
    an.add_argument("--bar", help="record file of the Bet-and-Run strategy")
    an.add_argument("--theta", type=float, default=0.5, help="eligibility error threshold")
    an.add_argument("--alpha", type=float, default=ALPHA)
    an.add_argument("--out", required=True, help="comparison file (JSON lines)")
    an.set_defaults(func=cmd_analyze)

    rep = sub.add_parser("report", help="render the aggregate table and summaries")
    rep.add_argument("--in", dest="input", required=True, help="comparison file from analyze")
    rep.add_argument("--out", help="text report path (stdout if omitted)")
    rep.add_argument("--jsonl", help="machine-readable report path")
    rep.set_defaults(func=cmd_report)

    orc = sub.add_parser("oracle", help="brute-force optima and exact rank-sum p-values")
    group = orc.add_mutually_exclusive_group(required=True)
    group.add_argument("--rank-sum", nargs=2, metavar=("XS", "YS"), help="comma-separated samples")
    group.add_argument("--mvc", help="MVC preset or oracle-suite subject name")
    group.add_argument("--tsp", help="TSP preset or oracle-suite subject name")
    orc.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
