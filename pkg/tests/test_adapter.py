import time

import pytest

from betrun.adapter import GRACE_MS, InProcessAdapter, SpawnFailure, SubprocessAdapter
from betrun.checkpoint import FITNESS, read_checkpoints
from betrun.surrogates import Subject, make_subject_suite

MVC = make_subject_suite("mvc,1,name=m,vertices=12,fault=0")[0]
FAULTY = make_subject_suite("plateau,1,name=f,fault=1")[0]
LAGGED = make_subject_suite("lagged,1,name=l,targets=20,lag_ms=50,fault=0")[0]


def test_inprocess_harvest_at_cutoff(tmp_path):
    adapter = InProcessAdapter()
    handle = adapter.spawn(MVC, 1, 500, tmp_path / "a.ckpt")
    report = adapter.harvest(handle, cutoff=250, index=3)
    assert report.index == 3 and report.elapsed_ms == 200
    assert report.produced_output and not report.errored and report.eligible
    assert report.metrics[FITNESS] == report.score
    full = adapter.harvest(handle)
    assert full.elapsed_ms == 500 and full.score <= report.score


def test_no_output_before_first_checkpoint(tmp_path):
    adapter = InProcessAdapter()
    report = adapter.harvest(adapter.spawn(LAGGED, 1, 60, tmp_path / "l.ckpt"), cutoff=60)
    assert not report.produced_output and not report.errored and not report.eligible


def test_fault_marks_errored_but_keeps_score(tmp_path):
    adapter = InProcessAdapter()
    report = adapter.harvest(adapter.spawn(FAULTY, 1, 1000, tmp_path / "f.ckpt"))
    assert report.errored and report.error_count == 1 and report.exit_code == 1
    assert report.produced_output and report.score is not None and not report.eligible


def test_unknown_subject_is_spawn_failure(tmp_path):
    with pytest.raises(SpawnFailure):
        InProcessAdapter().spawn(Subject("x", "nonsense"), 1, 100, tmp_path / "x.ckpt")
    with pytest.raises(SpawnFailure):
        InProcessAdapter().spawn("not a subject", 1, 100, tmp_path / "x.ckpt")


def test_non_positive_timeout_rejected(tmp_path):
    with pytest.raises(SpawnFailure):
        InProcessAdapter().spawn(MVC, 1, 0, tmp_path / "x.ckpt")


def test_subprocess_matches_inprocess_records(tmp_path):
    sub = SubprocessAdapter()
    handle = sub.spawn(MVC, 7, 600, tmp_path / "s.ckpt")
    report = sub.harvest(handle)
    ref = InProcessAdapter().harvest(InProcessAdapter().spawn(MVC, 7, 600, tmp_path / "i.ckpt"))
    assert handle.state == "exited" and report.exit_code == 0
    # wall-clock pacing may drop the last tick under load, never change a value
    sub_recs = read_checkpoints(tmp_path / "s.ckpt").records
    ref_recs = read_checkpoints(tmp_path / "i.ckpt").records
    assert sub_recs and sub_recs == ref_recs[: len(sub_recs)]
    assert report.score >= ref.score


def test_subprocess_overrun_is_killed(tmp_path):
    hang = tmp_path / "hang.sh"
    hang.write_text("#!/bin/sh\nsleep 30\n")
    hang.chmod(0o755)
    adapter = SubprocessAdapter(python=str(hang))
    started = time.monotonic()
    handle = adapter.spawn(MVC, 1, 200, tmp_path / "h.ckpt")
    report = adapter.harvest(handle)
    waited = time.monotonic() - started
    assert handle.state == "killed"
    assert report.errored and not report.produced_output
    assert waited < (200 + GRACE_MS) / 1000 + 5


def test_subprocess_spawn_failure(tmp_path):
    adapter = SubprocessAdapter(python=str(tmp_path / "missing-python"))
    with pytest.raises(SpawnFailure):
        adapter.spawn(MVC, 1, 100, tmp_path / "m.ckpt")
