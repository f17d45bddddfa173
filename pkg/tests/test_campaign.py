import pytest

from betrun.budget import BASELINE, BudgetMode, InfeasibleSplit, RestartStrategy
from betrun.campaign import (CampaignAborted, CampaignConfig, ConfigError, ErrorTally,
                             error_tally, filter_eligibility, parse_config, read_records,
                             run_campaign)
from betrun.surrogates import make_subject_suite
from betrun.surrogates.suite import shipped_config

SUBJECTS = make_subject_suite("""
tsp,1,name=t,cities=10,fault=0.3
plateau,1,name=p,rate=0.01,fault=0.3
""")


def config(**kw):
    base = dict(subjects=SUBJECTS, strategies=[BASELINE, RestartStrategy(8, 0.05)],
                t_total_ms=2000, repetitions=3, workers=1, master_seed=5)
    base.update(kw)
    return CampaignConfig(**base)


def test_cardinality_and_order(tmp_path):
    recs = run_campaign(config(), tmp_path / "r.jsonl")
    assert len(recs) == 12
    assert [r.key for r in recs] == [(s.name, st.label, k) for s in SUBJECTS
                                    for st in (BASELINE, RestartStrategy(8, 0.05)) for k in range(3)]
    assert len((tmp_path / "r.jsonl").read_text().splitlines()) == 12
    assert len((tmp_path / "r.jsonl.timing").read_text().splitlines()) == 12
    assert all(r.survivor_seed is not None or r.failure != "none" for r in recs)


def test_resume_is_byte_identical(tmp_path):
    full = tmp_path / "full.jsonl"
    run_campaign(config(), full)
    part = tmp_path / "part.jsonl"
    run_campaign(config(), part, stop_after=7)
    first7 = part.read_bytes()
    assert len(first7.splitlines()) == 7
    resumed = run_campaign(config(), part)
    assert len(resumed) == 12
    assert part.read_bytes().startswith(first7)
    assert part.read_bytes() == full.read_bytes()


def test_resume_repairs_torn_line(tmp_path):
    full = tmp_path / "full.jsonl"
    run_campaign(config(), full)
    torn = tmp_path / "torn.jsonl"
    lines = full.read_bytes().splitlines(keepends=True)
    torn.write_bytes(b"".join(lines[:5]) + lines[5][:40])
    assert len(read_records(torn)) == 5
    run_campaign(config(), torn)
    assert torn.read_bytes() == full.read_bytes()


def test_pool_size_does_not_change_results(tmp_path):
    run_campaign(config(), tmp_path / "one.jsonl")
    run_campaign(config(workers=3), tmp_path / "three.jsonl")
    assert (tmp_path / "one.jsonl").read_bytes() == (tmp_path / "three.jsonl").read_bytes()


def test_keeps_checkpoints_in_workdir(tmp_path):
    run_campaign(config(repetitions=1), tmp_path / "r.jsonl", workdir=tmp_path / "ck")
    assert (tmp_path / "ck" / "t" / "n8_p5" / "rep-000" / "survivor.ckpt").exists()


def test_foreign_records_abort(tmp_path):
    run_campaign(config(), tmp_path / "r.jsonl")
    with pytest.raises(CampaignAborted):
        run_campaign(config(master_seed=6), tmp_path / "r.jsonl")


def test_unwritable_output_aborts(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(CampaignAborted):
        run_campaign(config(), blocker / "r.jsonl")


@pytest.mark.parametrize("kw", [dict(repetitions=0), dict(workers=0), dict(theta=1.5),
                                dict(subjects=[]), dict(adapter="nope")])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        config(**kw).validate()


def test_infeasible_strategy_rejected():
    with pytest.raises(InfeasibleSplit):
        config(strategies=[RestartStrategy(40, 0.03)], t_total_ms=300_000).validate()


def test_parse_shipped_config():
    cfg = parse_config(shipped_config("default_campaign.cfg"))
    assert len(cfg.subjects) == 24 and cfg.repetitions == 30 and cfg.t_total_ms == 2000
    assert cfg.strategies == [BASELINE, RestartStrategy(8, 0.05)]
    assert cfg.mode is BudgetMode.STRICT and cfg.master_seed == 20200110


@pytest.mark.parametrize("text", ["bogus = 1\n[subjects]\nplateau,1",
                                  "repetitions = x\n[subjects]\nplateau,1",
                                  "[other]\n", "just words\n[subjects]\nplateau,1"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_workers_env_default(monkeypatch):
    monkeypatch.setenv("BETRUN_WORKERS", "5")
    assert CampaignConfig(subjects=SUBJECTS).workers == 5


def test_eligibility_examples(make_record):
    recs = [make_record("clean", s, k) for s in ("n1_p100", "n8_p5") for k in range(30)]
    recs += [make_record("bad-bl", "n1_p100", k, failure="no_viable_candidate") for k in range(30)]
    recs += [make_record("bad-bl", "n8_p5", k) for k in range(30)]
    verdicts = {v.subject: v for v in filter_eligibility(recs, 0.5)}
    assert verdicts["clean"].eligible and verdicts["clean"].reason == "OK"
    assert not verdicts["bad-bl"].eligible_for_baseline and verdicts["bad-bl"].eligible_for_bar
    assert verdicts["bad-bl"].reason == "BASELINE_ERRORS"


def test_eligibility_synthetic_campaign(make_record):
    # error counts per (subject, side), out of 10 runs; theta = 0.5 tolerates 5
    plan = {"a": (0, 0), "b": (6, 0), "c": (0, 7), "d": (9, 10), "e": (5, 5)}
    recs = []
    for subject, (bl, bar) in plan.items():
        for k in range(10):
            recs.append(make_record(subject, "n1_p100", k, error_count=int(k < bl)))
            recs.append(make_record(subject, "n8_p5", k, error_count=int(k < bar)))
    reasons = {v.subject: v.reason for v in filter_eligibility(recs, 0.5)}
    assert reasons == {"a": "OK", "b": "BASELINE_ERRORS", "c": "BAR_ERRORS",
                       "d": "BOTH_ERRORS", "e": "OK"}
    assert len(reasons) == len(plan)  # conservation


def test_eligibility_needs_both_sides(make_record):
    recs = [make_record("a", "n1_p100"), make_record("a", "n8_p5"), make_record("b", "n1_p100")]
    with pytest.raises(ValueError):
        filter_eligibility(recs)


def test_error_tally(make_record):
    recs = [make_record("a", s, k) for s in ("n1_p100", "n8_p5") for k in range(4)]
    tallies = error_tally(recs)
    assert all((t.errors, t.fraction) == (0, 0.0) for t in tallies.values())
    assert round(ErrorTally("bl", 578, 500, 3210).fraction, 4) == 0.1801
    recs.append(make_record("b", "n1_p100", 0, error_count=2))
    t = error_tally(recs)["n1_p100"]
    assert (t.errors, t.error_runs, t.runs) == (2, 1, 5)
