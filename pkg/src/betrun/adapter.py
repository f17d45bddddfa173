"""Black-box launch / time-limit / harvest contract for anytime optimizers.

An adapter spawns an optimizer instance for ``(subject, seed, timeout)``; the
instance appends records to its own checkpoint file.  Once the instance has
terminated, ``harvest`` reads the file back into an :class:`InstanceReport`.
The orchestrator never talks to an optimizer in any other way.
"""

import json
import logging
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from betrun.checkpoint import FITNESS, Header, read_checkpoints
from betrun.surrogates import AnytimeRun, Subject, SubjectError, build_problem, fault_model
from betrun.surrogates.base import DEFAULT_INTERVAL_MS

log = logging.getLogger(__name__)

GRACE_MS = 250


class SpawnFailure(RuntimeError):
    pass


@dataclass
class InstanceReport:
    index: int
    seed: int
    score: float | None = None
    metrics: dict = field(default_factory=dict)
    errored: bool = False
    produced_output: bool = False
    error_count: int = 0
    elapsed_ms: int | None = None
    exit_code: int | None = None
    startup_ms: int = 0
    dropped_lines: int = 0

    @property
    def eligible(self) -> bool:
        return self.produced_output and not self.errored

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "seed": self.seed,
            "score": self.score,
            "metrics": dict(self.metrics),
            "errored": self.errored,
            "produced_output": self.produced_output,
            "error_count": self.error_count,
            "elapsed_ms": self.elapsed_ms,
            "exit_code": self.exit_code,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceReport":
        keys = ("index", "seed", "score", "metrics", "errored", "produced_output",
                "error_count", "elapsed_ms", "exit_code")
        return cls(**{k: d[k] for k in keys if k in d})

    @classmethod
    def spawn_failed(cls, index: int, seed: int) -> "InstanceReport":
        return cls(index, seed, errored=True, error_count=1)


@dataclass
class InstanceHandle:
    subject: Subject
    seed: int
    timeout_ms: int
    checkpoint_path: Path
    state: str = "running"  # running | exited | killed
    exit_code: int | None = None
    elapsed_ms: int = 0
    proc: subprocess.Popen | None = None
    started_at: float = 0.0

    @property
    def alive(self) -> bool:
        return self.state == "running"

    def wait(self):
        """Block until the instance is gone, killing it after timeout + grace."""
        if self.proc is None or not self.alive:
            return self
        deadline = self.started_at + (self.timeout_ms + GRACE_MS) / 1000
        try:
            self.proc.wait(timeout=max(0.0, deadline - time.monotonic()))
            self.state = "exited"
        except subprocess.TimeoutExpired:
            log.warning("instance %s/%d overran its timeout, killing", self.subject, self.seed)
            self.proc.kill()
            self.proc.wait()
            self.state = "killed"
        self.exit_code = self.proc.returncode
        self.elapsed_ms = int((time.monotonic() - self.started_at) * 1000)
        return self

    def kill(self):
        if self.proc is not None and self.alive:
            self.proc.kill()
            self.proc.wait()
            self.state = "killed"
            self.exit_code = self.proc.returncode
            self.elapsed_ms = int((time.monotonic() - self.started_at) * 1000)


def harvest(handle: InstanceHandle, cutoff: int | None = None, index: int = 0) -> InstanceReport:
    """Read a terminated instance's checkpoint file.

    With a cutoff the last record at or before it is used, otherwise the last
    record.  Any recorded error or a non-zero exit marks the report errored;
    the score is kept for diagnostics either way.
    """
    handle.wait()
    ckpt = read_checkpoints(handle.checkpoint_path)
    records = ckpt.records
    usable = records if cutoff is None else [r for r in records if r.elapsed <= cutoff]
    error_count = max((r.error_count for r in records), default=0)
    report = InstanceReport(
        index=index,
        seed=handle.seed,
        error_count=error_count,
        exit_code=handle.exit_code,
        errored=error_count > 0 or handle.exit_code != 0,
        startup_ms=ckpt.header.startup_ms if ckpt.header else 0,
        dropped_lines=ckpt.dropped_lines,
    )
    if usable:
        last = usable[-1]
        report.produced_output = True
        report.score = last.score
        report.metrics = {FITNESS: last.score, **last.metrics}
        report.elapsed_ms = last.elapsed
    return report


class OptimizerAdapter:
    """Base adapter; subclasses implement :meth:`spawn`."""

    interval_ms = DEFAULT_INTERVAL_MS

    def schema(self, subject: Subject) -> tuple:
        return self._problem(subject).schema

    def _problem(self, subject: Subject):
        if not isinstance(subject, Subject):
            raise SpawnFailure(f"unknown subject {subject!r}")
        try:
            return build_problem(subject)
        except SubjectError as exc:
            raise SpawnFailure(f"unknown subject {subject.name!r}: {exc}") from exc

    def spawn(self, subject: Subject, seed: int, timeout_ms: int, checkpoint_path) -> InstanceHandle:
        raise NotImplementedError

    def harvest(self, handle: InstanceHandle, cutoff: int | None = None, index: int = 0) -> InstanceReport:
        return harvest(handle, cutoff, index)


class InProcessAdapter(OptimizerAdapter):
    """Runs surrogates synchronously on the virtual work-time clock.

    ``spawn`` returns an already-terminated handle: the optimizer loop is
    bounded by the timeout, so enforcement is exact.
    """

    def __init__(self, interval_ms: int = DEFAULT_INTERVAL_MS):
        self.interval_ms = interval_ms

    def spawn(self, subject, seed, timeout_ms, checkpoint_path):
        if timeout_ms <= 0:
            raise SpawnFailure(f"timeout must be positive, got {timeout_ms}")
        problem = self._problem(subject)
        fault_ms = fault_model(subject).fault_time(subject.name, seed, problem.lag_ms, self.interval_ms)
        run = AnytimeRun(problem, seed, timeout_ms, self.interval_ms, fault_ms)
        path = Path(checkpoint_path)
        header = Header(subject.name, seed, problem.schema, 0)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write(header.to_line() + "\n")
                for record in run:
                    fh.write(record.to_line() + "\n")
        except OSError as exc:
            raise SpawnFailure(f"cannot write checkpoint {path}: {exc}") from exc
        return InstanceHandle(subject, seed, timeout_ms, path, state="exited",
                              exit_code=run.exit_code, elapsed_ms=run.elapsed_ms)


class SubprocessAdapter(OptimizerAdapter):
    """Runs each instance as a child process paced by the wall clock.

    The child honours its own deadline (like a tool-level global timeout);
    the adapter additionally kills it ``GRACE_MS`` after the timeout.
    """

    def __init__(self, interval_ms: int = DEFAULT_INTERVAL_MS, python: str = sys.executable):
        self.interval_ms = interval_ms
        self.python = python

    def spawn(self, subject, seed, timeout_ms, checkpoint_path):
        if timeout_ms <= 0:
            raise SpawnFailure(f"timeout must be positive, got {timeout_ms}")
        self._problem(subject)
        path = Path(checkpoint_path)
        cmd = [
            self.python, "-m", "betrun.worker",
            "--subject", json.dumps(subject.to_dict(), sort_keys=True),
            "--seed", str(seed),
            "--timeout-ms", str(timeout_ms),
            "--interval-ms", str(self.interval_ms),
            "--checkpoint", str(path),
            "--spawned-at", repr(time.time()),
        ]
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("")
            started = time.monotonic()
            with open(path.with_suffix(".stderr"), "w") as err:
                proc = subprocess.Popen(cmd, stdout=subprocess.DEVNULL, stderr=err,
                                        env={**os.environ, "PYTHONUNBUFFERED": "1"})
        except OSError as exc:
            raise SpawnFailure(f"cannot start instance: {exc}") from exc
        return InstanceHandle(subject, seed, timeout_ms, path, proc=proc, started_at=started)
