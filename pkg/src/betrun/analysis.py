"""Raw campaign records -> eligibility, per-subject comparisons, stability, tallies.

The output is a list of JSON-serializable dicts (one ``kind`` per line) that
the report renderer consumes.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from betrun.campaign import error_tally, filter_eligibility, split_strategies
from betrun.checkpoint import Direction
from betrun.stats import (ALPHA, ComparisonRecord, SampleSet, StabilityResult, aggregate,
                          classify, significant_class_report, stability_test)

log = logging.getLogger(__name__)


class AnalysisError(ValueError):
    pass


@dataclass
class Analysis:
    baseline: str
    bar: str
    theta: float
    alpha: float
    verdicts: list
    comparisons: list
    stability: StabilityResult
    tallies: dict
    warnings: list = field(default_factory=list)

    def lines(self) -> list:
        out = [{"kind": "config", "baseline": self.baseline, "bar": self.bar,
                "theta": self.theta, "alpha": self.alpha}]
        out += [c.to_dict() for c in self.comparisons]
        out += [v.to_dict() for v in self.verdicts]
        out.append({"kind": "stability", "p_value": self.stability.p_value,
                    "baseline_total": self.stability.baseline_total,
                    "bar_total": self.stability.bar_total})
        for label in (self.baseline, self.bar):
            if label in self.tallies:
                out.append(self.tallies[label].to_dict())
        out += [{"kind": "warning", "message": w} for w in self.warnings]
        return out


def complete_triples(records, baseline: str, bar: str) -> tuple:
    """Keep (subject, repetition) pairs that have a record for both strategies."""
    present = {}
    for rec in records:
        if rec.strategy in (baseline, bar):
            present.setdefault((rec.subject, rec.repetition), set()).add(rec.strategy)
    keep = {k for k, v in present.items() if v == {baseline, bar}}
    kept = [r for r in records if r.strategy in (baseline, bar) and (r.subject, r.repetition) in keep]
    dropped = sum(r.strategy in (baseline, bar) for r in records) - len(kept)
    return kept, dropped


def _schema(records) -> dict:
    schemas = {}
    for rec in records:
        schema = [tuple(x) for x in rec.schema]
        if schemas.setdefault(rec.subject, schema) != schema:
            raise AnalysisError(f"schema mismatch for subject {rec.subject}")
    return schemas


def analyze_records(records, theta: float = 0.5, alpha: float = ALPHA,
                    baseline: str | None = None, bar: str | None = None) -> Analysis:
    if not records:
        raise AnalysisError("no records to analyze")
    baseline, bar = split_strategies(records, baseline, bar)
    schemas = _schema(records)
    kept, dropped = complete_triples(records, baseline, bar)
    warnings = []
    if dropped:
        warnings.append(f"ignored {dropped} records without a matching run of the other strategy")
    if not kept:
        raise AnalysisError("no subject has runs under both strategies")
    verdicts = filter_eligibility(kept, theta, baseline, bar)

    cells = {}
    for rec in kept:
        cells.setdefault((rec.subject, rec.strategy), []).append(rec)
    comparisons, base_err, bar_err = [], [], []
    for verdict in verdicts:
        if not verdict.eligible:
            continue
        subject = verdict.subject
        base_runs, bar_runs = cells[(subject, baseline)], cells[(subject, bar)]
        base_err.append(sum(r.error_count for r in base_runs))
        bar_err.append(sum(r.error_count for r in bar_runs))
        for metric, direction in schemas[subject]:
            xs = [r.final["metrics"][metric] for r in base_runs if r.succeeded]
            ys = [r.final["metrics"][metric] for r in bar_runs if r.succeeded]
            if not xs or not ys:
                warnings.append(f"{subject}/{metric}: no successful runs on one side, skipped")
                continue
            sample = SampleSet(metric, Direction(direction), tuple(xs), tuple(ys))
            comparisons.append(classify(sample, alpha, subject))
    for w in warnings:
        log.warning(w)
    return Analysis(baseline, bar, theta, alpha, verdicts, comparisons,
                    stability_test(base_err, bar_err), error_tally(kept), warnings)


def write_lines(lines, path) -> None:
    text = "".join(json.dumps(line, sort_keys=True, separators=(",", ":")) + "\n" for line in lines)
    Path(path).write_text(text, encoding="utf-8")


def read_lines(path) -> list:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def render_report(lines) -> tuple:
    """Text report and its machine-readable companion from analysis lines."""
    comparisons = [ComparisonRecord.from_dict(d) for d in lines if d.get("kind") == "comparison"]
    config = next((d for d in lines if d.get("kind") == "config"), None)
    table = aggregate(comparisons)
    hits = significant_class_report(comparisons)

    text = []
    if config:
        text.append(f"Bet-and-Run {config['bar']} (BAR) vs baseline {config['baseline']} (BL), "
                    f"alpha = {config['alpha']}")
        text.append("")
    text.append(table.render().rstrip("\n"))
    text.append("")
    text.append("Significant differences:")
    if not hits:
        text.append("  none")
    for metric, subject, direction in hits:
        text.append(f"  {metric:<20} {subject:<16} {direction.value}")

    verdicts = [d for d in lines if d.get("kind") == "eligibility"]
    if verdicts:
        eligible = sum(d["eligible_for_baseline"] and d["eligible_for_bar"] for d in verdicts)
        reasons = {}
        for d in verdicts:
            if d["reason"] != "OK":
                reasons[d["reason"]] = reasons.get(d["reason"], 0) + 1
        detail = ", ".join(f"{k} {v}" for k, v in sorted(reasons.items())) or "none excluded"
        text.append("")
        text.append(f"Eligible subjects: {eligible} of {len(verdicts)} ({detail})")
    for d in lines:
        if d.get("kind") == "stability":
            text.append(f"Stability: p = {d['p_value']:.6g}; internal errors "
                        f"BL {d['baseline_total']}, BAR {d['bar_total']}")
    for d in lines:
        if d.get("kind") == "tally":
            frac = d["errors"] / d["runs"] if d["runs"] else 0.0
            run_frac = d["error_runs"] / d["runs"] if d["runs"] else 0.0
            text.append(f"Errors {d['strategy']}: {d['errors']} over {d['runs']} runs "
                        f"(fraction {frac:.4f}, runs with errors {run_frac:.4f})")

    machine = table.to_dicts() + [
        {"kind": "significant", "metric": m, "subject": s, "direction": v.value} for m, s, v in hits
    ]
    return "\n".join(text) + "\n", machine
