"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n>: PASS|FAIL`` line (visible with
``pytest -v``) before asserting.
"""

import itertools
import os
import random
import signal
import subprocess
import sys
import time
from collections import Counter

import pytest

from betrun.adapter import InProcessAdapter, InstanceReport
from betrun.analysis import analyze_records
from betrun.budget import BASELINE, STANDARD_GRID, BudgetMode, RestartStrategy, plan_budget
from betrun.campaign import CampaignConfig, run_campaign
from betrun.checkpoint import FITNESS
from betrun.cli import main as cli_main
from betrun.orchestrator import Failure, run_bet_and_run, select_survivor
from betrun.rng import SeedSource
from betrun.stats import ComparisonRecord, Verdict, aggregate, exact_rank_sum, rank_sum_test
from betrun.surrogates import default_suite, make_subject_suite, reference_optimum
from betrun.surrogates.suite import shipped_config

BAR = RestartStrategy(8, 0.05)


@pytest.fixture
def verdict(capsys, request):
    def report(number, ok, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} ({request.node.name}) {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return report


def test_criterion_01_budget_arithmetic(verdict):
    got = [(p.t_k, p.t_f) for p in (plan_budget(s, 300_000) for s in STANDARD_GRID)]
    expected = [(300_000, 0), (3_000, 180_000), (6_000, 180_000), (15_000, 180_000)]
    verdict(1, got == expected, f"(t_k, t_f) = {got}")


def test_criterion_02_rq1_lagged_failure_mode(verdict, tmp_path):
    subjects = make_subject_suite(shipped_config("rq1_lagged_suite.txt"))
    reps = 10
    cfg = CampaignConfig(subjects=subjects, t_total_ms=3000, repetitions=reps, master_seed=2020,
                         strategies=[RestartStrategy(40, 0.01), RestartStrategy(20, 0.02), BAR])
    recs = run_campaign(cfg, tmp_path / "rq1.jsonl")
    t_k = {r.strategy: r.t_k_ms for r in recs}
    short_fail = all(r.failure == Failure.NO_VIABLE_CANDIDATE.value
                     for r in recs if r.strategy in ("n40_p1", "n20_p2"))
    per_rep = Counter(r.repetition for r in recs if r.strategy == "n8_p5"
                      and r.final is not None and r.final["produced_output"])
    worst = min(per_rep.get(k, 0) for k in range(reps))
    ok = short_fail and worst >= 9 and len(subjects) == 10
    verdict(2, ok, f"t_k = {t_k}; 40x1%/20x2% all NO_VIABLE_CANDIDATE: {short_fail}; "
                   f"8x5% final results per repetition: min {worst}/10")


def test_criterion_03_elitism(verdict):
    rng = random.Random(3)
    cases = shifted = empty = 0
    ok = True
    for _ in range(10_000):
        n = rng.randint(1, 12)
        starters = []
        for i in range(n):
            produced = rng.random() < 0.85
            starters.append(InstanceReport(i, i, float(rng.randint(0, 6)) if produced else None,
                                           errored=rng.random() < 0.2, produced_output=produced))
        eligible = [i for i, s in enumerate(starters) if s.produced_output and not s.errored]
        got = select_survivor(starters)
        cases += 1
        if not eligible:
            empty += 1
            ok &= got is None
            continue
        best = min(starters[i].score for i in eligible)
        ok &= got == min(i for i in eligible if starters[i].score == best)
        minima = [i for i in eligible if starters[i].score == best]
        if len(minima) == 1:
            starters[got].errored = True
            rest = [i for i in eligible if i != got]
            expected = None
            if rest:
                nxt = min(starters[i].score for i in rest)
                expected = min(i for i in rest if starters[i].score == nxt)
            ok &= select_survivor(starters) == expected
            shifted += 1
    verdict(3, ok, f"{cases} lists, {shifted} errored-minimum injections, {empty} all-ineligible")


class Metering(InProcessAdapter):
    def __init__(self):
        super().__init__()
        self.spent = 0

    def spawn(self, subject, seed, timeout_ms, checkpoint_path):
        self.spent += timeout_ms
        return super().spawn(subject, seed, timeout_ms, checkpoint_path)


def test_criterion_04_strict_budget_fairness(verdict, tmp_path):
    subjects = make_subject_suite("""
        mvc,2,vertices=12:20,fault=0.18
        tsp,2,cities=10:20,fault=0.18
        plateau,2,rate=0.005:0.03,fault=0.18
        lagged,2,targets=20:80,lag_ms=50,fault=0.18
    """)
    rng = random.Random(4)
    t_total = 1000
    violations = runs = 0
    for mode in (BudgetMode.STRICT, BudgetMode.EMULATED_PAUSE):
        for k in range(200):
            while True:
                strategy = RestartStrategy.from_percent(rng.randint(1, 12), rng.choice([1, 2, 5, 10, 20, 50]))
                if strategy.n * strategy.p <= 1:
                    break
            subject = rng.choice(subjects)
            adapter = Metering()
            out = run_bet_and_run(subject, strategy, t_total, mode, adapter,
                                  SeedSource(rng.getrandbits(63), subject.name, k))
            bound = t_total if mode is BudgetMode.STRICT else t_total + out.plan.t_k
            runs += 1
            violations += not (out.charged_budget <= bound and adapter.spent <= bound
                               and adapter.spent <= out.charged_budget)
    verdict(4, violations == 0, f"{runs} runs (200 strict, 200 emulated-pause), {violations} violations")


def labelling_oracle(xs, ys) -> float:
    """Two-sided p by enumerating which pooled positions form the first sample."""
    pooled = xs + ys
    n1 = len(xs)
    twice = [2 * sum(v < w for v in pooled) + sum(v == w for v in pooled) + 1 for w in pooled]
    centre = n1 * (len(pooled) + 1)
    observed = abs(sum(twice[:n1]) - centre)
    hits = total = 0
    for chosen in itertools.combinations(range(len(pooled)), n1):
        total += 1
        hits += abs(sum(twice[i] for i in chosen) - centre) >= observed
    return hits / total


def test_criterion_05_rank_sum_oracle(verdict):
    grid = [1.0, 2.0, 3.0]
    samples = [list(c) for size in range(1, 7)
               for c in itertools.combinations_with_replacement(grid, size)]
    worst = 0.0
    pairs = 0
    for xs in samples:
        for ys in samples:
            worst = max(worst, abs(exact_rank_sum(xs, ys).pvalue - labelling_oracle(xs, ys)))
            pairs += 1
    constant = rank_sum_test([5, 5, 5], [5, 5, 5]).pvalue
    reference = rank_sum_test([1, 2, 3], [4, 5, 6]).pvalue
    ok = worst <= 1e-12 and constant == 1.0 and reference == 0.1
    verdict(5, ok, f"{pairs} pairs, max |diff| = {worst:.1e}; constant p = {constant}; "
                   f"[1,2,3] vs [4,5,6] p = {reference}")


def test_criterion_06_rq2_surrogates(verdict, tmp_path):
    subjects = [s for s in default_suite() if s.family in ("plateau", "lagged")]
    cfg = CampaignConfig(subjects=subjects, t_total_ms=2000, repetitions=30, master_seed=20200110)
    result = analyze_records(run_campaign(cfg, tmp_path / "rq2.jsonl"))
    fitness = {c.subject: c for c in result.comparisons if c.metric == FITNESS}
    plateau_better = sum(c.direction is Verdict.BAR_BETTER and c.p_value < 0.05
                         for s, c in fitness.items() if s.startswith("plateau"))
    lagged_same = sum(not c.significant for s, c in fitness.items() if s.startswith("lagged"))
    ok = plateau_better >= 4 and lagged_same >= 4
    verdict(6, ok, f"plateau BAR_BETTER significant {plateau_better}/6; "
                   f"lagged not significant {lagged_same}/6")


@pytest.mark.slow
def test_criterion_07_stability_mechanism(verdict, tmp_path):
    subjects = default_suite()
    assert len(subjects) == 24
    wins, rows = 0, []
    for k in range(20):
        cfg = CampaignConfig(subjects=subjects, t_total_ms=2000, repetitions=30,
                             master_seed=1000 + k)
        recs = run_campaign(cfg, tmp_path / f"c{k}.jsonl")
        frac = {}
        for label in (BASELINE.label, BAR.label):
            side = [r for r in recs if r.strategy == label]
            frac[label] = sum(r.error_count > 0 for r in side) / len(side)
        wins += frac[BAR.label] < frac[BASELINE.label]
        rows.append(f"{frac[BASELINE.label]:.3f}/{frac[BAR.label]:.3f}")
    verdict(7, wins >= 16, f"BAR error-run fraction below baseline in {wins}/20 master seeds "
                           f"(BL/BAR: {' '.join(rows[:5])} ...)")


def test_criterion_08_table_rendering(verdict):
    recs = [ComparisonRecord(f"e{i}", FITNESS, 1.0, Verdict.EQUAL, False) for i in range(28)]
    recs += [ComparisonRecord(f"w{i}", FITNESS, 0.01 if i < 2 else 0.3, Verdict.BAR_WORSE, i < 2)
             for i in range(19)]
    recs += [ComparisonRecord(f"b{i}", FITNESS, 0.01 if i < 4 else 0.3, Verdict.BAR_BETTER, i < 4)
             for i in range(43)]
    rendered = aggregate(recs).render()
    row = next(line for line in rendered.splitlines() if line.startswith("Fitness Score"))
    normalized = " ".join(row.split()[2:])
    verdict(8, normalized == "28 (28) 19 (2) 43 (4)", f"row {row!r}")


def _pipeline(tmp_path, tag, suite):
    out = tmp_path / tag
    out.mkdir()
    codes = [
        cli_main(["run", "--subjects", str(suite), "--reps", "5", "--t-total-ms", "2000",
                  "--seed", "77", "--workers", "1", "--out", str(out / "rec.jsonl")]),
        cli_main(["analyze", "--records", str(out / "rec.jsonl"), "--out", str(out / "cmp.jsonl")]),
        cli_main(["report", "--in", str(out / "cmp.jsonl"), "--out", str(out / "report.txt"),
                  "--jsonl", str(out / "report.jsonl")]),
    ]
    files = [(out / f).read_bytes() for f in ("rec.jsonl", "cmp.jsonl", "report.txt", "report.jsonl")]
    return codes, files


def test_criterion_09_determinism_and_resume(verdict, tmp_path):
    suite = tmp_path / "suite.txt"
    suite.write_text(shipped_config("default_suite.txt"))
    codes_a, files_a = _pipeline(tmp_path, "a", suite)
    codes_b, files_b = _pipeline(tmp_path, "b", suite)
    identical = files_a == files_b and codes_a[0] in (0, 2) and codes_a[1:] == [0, 0]

    cmd = [sys.executable, "-m", "betrun", "run", "--subjects", str(suite), "--reps", "5",
           "--t-total-ms", "2000", "--seed", "77", "--out", str(tmp_path / "killed.jsonl")]
    env = {**os.environ, "BETRUN_WORKERS": "1"}
    proc = subprocess.Popen(cmd, env=env, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    target = tmp_path / "killed.jsonl"
    deadline = time.monotonic() + 120
    while time.monotonic() < deadline and proc.poll() is None:
        if target.exists() and target.read_bytes().count(b"\n") >= 60:
            break
        time.sleep(0.005)
    proc.send_signal(signal.SIGKILL)
    proc.wait()
    written = target.read_bytes().count(b"\n")
    subprocess.run(cmd, env=env, capture_output=True, check=False)
    resumed = target.read_bytes() == files_a[0]
    interrupted = written < 240
    verdict(9, identical and resumed and interrupted,
            f"repeat byte-identical: {identical}; killed after {written}/240 records, "
            f"resumed file identical: {resumed}")


def test_criterion_10_surrogate_oracles(verdict):
    suite = make_subject_suite(shipped_config("oracle_suite.txt"))
    adapter = InProcessAdapter()
    results, ok = [], True
    for subject in suite:
        problem_size = subject.get("vertices") or (3 if subject.get("preset") == "k3" else None)
        if subject.family == "mvc" and problem_size is not None and problem_size <= 20:
            need = 25
        elif subject.get("preset") == "unit-square":
            need = 30
        else:
            continue
        optimum = reference_optimum(subject)
        hits = sum(
            abs(run_bet_and_run(subject, BASELINE, 2000, BudgetMode.STRICT, adapter,
                                SeedSource(10, subject.name, k)).final.score - optimum) < 1e-9
            for k in range(30))
        ok &= hits >= need
        results.append(f"{subject.name}: {hits}/30 at {optimum:g} (need {need})")
    verdict(10, ok and len(results) == 5, "; ".join(results))
