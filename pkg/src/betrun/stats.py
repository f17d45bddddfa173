"""Wilcoxon rank-sum comparisons and their aggregation.

Small samples (pooled size <= 12) use the exact permutation distribution of
the rank sum; larger ones use the normal approximation with tie-corrected
variance and continuity correction.  All tests are two-sided.
"""

import enum
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

from betrun.checkpoint import FITNESS, Direction

ALPHA = 0.05
EXACT_MAX_TOTAL = 12


class RankSumResult(NamedTuple):
    statistic: float  # rank sum of the first sample
    pvalue: float


class Verdict(enum.Enum):
    EQUAL = "equal"
    BAR_WORSE = "bar_worse"
    BAR_BETTER = "bar_better"


def midranks(values) -> list:
    """1-based ranks, ties receiving the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _check(xs, ys):
    if len(xs) == 0 or len(ys) == 0:
        raise ValueError("rank-sum test needs two non-empty samples")
    if not all(math.isfinite(v) for v in itertools.chain(xs, ys)):
        raise ValueError("samples must be finite")


def rank_sum_test(xs, ys) -> RankSumResult:
    xs, ys = [float(v) for v in xs], [float(v) for v in ys]
    _check(xs, ys)
    n1, n2 = len(xs), len(ys)
    if n1 + n2 <= EXACT_MAX_TOTAL:
        return exact_rank_sum(xs, ys)
    return normal_rank_sum(xs, ys)


def exact_rank_sum(xs, ys) -> RankSumResult:
    """Enumerate every assignment of the pooled ranks to the first sample."""
    _check(xs, ys)
    n1 = len(xs)
    ranks = midranks(list(xs) + list(ys))
    twice = [int(round(2 * r)) for r in ranks]  # midranks are multiples of 1/2
    total = len(twice)
    centre = n1 * (total + 1)  # twice the null mean of the rank sum
    observed = abs(sum(twice[:n1]) - centre)
    extreme = count = 0
    for chosen in itertools.combinations(twice, n1):
        count += 1
        if abs(sum(chosen) - centre) >= observed:
            extreme += 1
    return RankSumResult(sum(ranks[:n1]), extreme / count)


def normal_rank_sum(xs, ys) -> RankSumResult:
    _check(xs, ys)
    n1, n2 = len(xs), len(ys)
    pooled = list(xs) + list(ys)
    ranks = midranks(pooled)
    w = sum(ranks[:n1])
    u = w - n1 * (n1 + 1) / 2
    n = n1 + n2
    ties = {}
    for v in pooled:
        ties[v] = ties.get(v, 0) + 1
    tie_term = sum(t ** 3 - t for t in ties.values())
    var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return RankSumResult(w, 1.0)
    z = (abs(u - n1 * n2 / 2) - 0.5) / math.sqrt(var)
    return RankSumResult(w, min(1.0, math.erfc(z / math.sqrt(2))))


@dataclass(frozen=True)
class SampleSet:
    metric: str
    direction: Direction
    baseline: tuple
    bar: tuple

    def __post_init__(self):
        _check(self.baseline, self.bar)


@dataclass(frozen=True)
class ComparisonRecord:
    subject: str
    metric: str
    p_value: float
    direction: Verdict
    significant: bool

    def to_dict(self) -> dict:
        return {
            "kind": "comparison",
            "subject": self.subject,
            "metric": self.metric,
            "p_value": self.p_value,
            "direction": self.direction.value,
            "significant": self.significant,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonRecord":
        return cls(d["subject"], d["metric"], float(d["p_value"]),
                   Verdict(d["direction"]), bool(d["significant"]))


def classify(sample: SampleSet, alpha: float = ALPHA, subject: str = "") -> ComparisonRecord:
    """Orient the rank comparison by the metric's direction."""
    nb, na = len(sample.bar), len(sample.baseline)
    ranks = midranks(list(sample.bar) + list(sample.baseline))
    # compare mean ranks exactly: 2*R_bar*n_baseline vs 2*R_baseline*n_bar
    bar_side = int(round(2 * sum(ranks[:nb]))) * na
    base_side = int(round(2 * sum(ranks[nb:]))) * nb
    p = rank_sum_test(sample.bar, sample.baseline).pvalue
    if bar_side == base_side:
        verdict = Verdict.EQUAL
    else:
        bar_lower = bar_side < base_side
        lower_better = sample.direction is Direction.LOWER_IS_BETTER
        verdict = Verdict.BAR_BETTER if bar_lower == lower_better else Verdict.BAR_WORSE
    significant = verdict is not Verdict.EQUAL and p < alpha
    return ComparisonRecord(subject, sample.metric, p, verdict, significant)


def metric_label(metric: str) -> str:
    return " ".join(w.capitalize() for w in metric.split("_"))


def metric_order(metrics) -> list:
    """Fitness score first, then first-seen order."""
    seen = list(dict.fromkeys(metrics))
    return sorted(seen, key=lambda m: (m != FITNESS, seen.index(m)))


@dataclass
class AggregateRow:
    metric: str
    equal: int = 0
    equal_same: int = 0  # EQUAL with p = 1.0
    worse: int = 0
    worse_sig: int = 0
    better: int = 0
    better_sig: int = 0

    @property
    def total(self) -> int:
        return self.equal + self.worse + self.better

    def cells(self) -> list:
        return [f"{self.equal} ({self.equal_same})", f"{self.worse} ({self.worse_sig})",
                f"{self.better} ({self.better_sig})"]


@dataclass
class AggregateTable:
    rows: list

    def row(self, metric: str) -> AggregateRow:
        for r in self.rows:
            if r.metric == metric:
                return r
        raise KeyError(metric)

    def render(self) -> str:
        header = ["Metric", "BAR = BL", "BAR < BL", "BAR > BL"]
        body = [[metric_label(r.metric), *r.cells()] for r in self.rows]
        widths = [max(len(line[c]) for line in [header, *body]) for c in range(4)]

        def fmt(line):
            return "  ".join(
                [line[0].ljust(widths[0])] + [cell.rjust(w) for cell, w in zip(line[1:], widths[1:])]
            ).rstrip()

        rule = "-" * len(fmt(header))
        return "\n".join([fmt(header), rule, *map(fmt, body)]) + "\n"

    def to_dicts(self) -> list:
        return [
            {"kind": "aggregate", "metric": r.metric, "equal": r.equal, "equal_same": r.equal_same,
             "worse": r.worse, "worse_sig": r.worse_sig, "better": r.better,
             "better_sig": r.better_sig}
            for r in self.rows
        ]


def aggregate(records) -> AggregateTable:
    rows = {}
    for metric in metric_order(r.metric for r in records):
        rows[metric] = AggregateRow(metric)
    for rec in records:
        row = rows[rec.metric]
        if rec.direction is Verdict.EQUAL:
            row.equal += 1
            row.equal_same += rec.p_value == 1.0
        elif rec.direction is Verdict.BAR_WORSE:
            row.worse += 1
            row.worse_sig += rec.significant
        else:
            row.better += 1
            row.better_sig += rec.significant
    return AggregateTable(list(rows.values()))


class StabilityResult(NamedTuple):
    p_value: float
    baseline_total: int
    bar_total: int


def stability_test(baseline_errors, bar_errors) -> StabilityResult:
    """Rank-sum test over per-subject internal-error counts."""
    if len(baseline_errors) != len(bar_errors):
        raise ValueError("per-subject error vectors differ in length")
    if not baseline_errors:
        return StabilityResult(1.0, 0, 0)
    p = rank_sum_test(baseline_errors, bar_errors).pvalue
    return StabilityResult(p, int(sum(baseline_errors)), int(sum(bar_errors)))


def significant_class_report(records) -> list:
    """``(metric, subject, direction)`` for significant non-EQUAL records, by metric."""
    order = metric_order(r.metric for r in records)
    hits = [r for r in records if r.significant and r.direction is not Verdict.EQUAL]
    hits.sort(key=lambda r: (order.index(r.metric), r.direction is Verdict.BAR_BETTER, r.subject))
    return [(r.metric, r.subject, r.direction) for r in hits]
