"""Subjects, the anytime loop and fault injection shared by all surrogate families.

Surrogates run on a virtual work-time clock: initialisation costs ``lag_ms``,
every iteration costs ``step_ms`` and checkpoints are taken on a fixed grid of
``interval_ms``.  Nothing depends on the wall clock, so a (subject, seed,
timeout) triple always yields the same checkpoint stream.
"""

from dataclasses import dataclass

from betrun.checkpoint import FITNESS, CheckpointRecord, Direction
from betrun.rng import unit_float

DEFAULT_FAULT_RATE = 0.18
DEFAULT_INTERVAL_MS = 100


class SubjectError(ValueError):
    pass


class SubjectTooLarge(SubjectError):
    pass


@dataclass(frozen=True)
class Subject:
    name: str
    family: str
    params: tuple = ()

    def get(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def to_dict(self) -> dict:
        return {"name": self.name, "family": self.family, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Subject":
        return cls(d["name"], d["family"], tuple(sorted(d.get("params", {}).items())))

    def __str__(self):
        return self.name


class AnytimeProblem:
    """One surrogate subject.  Subclasses define init_state / step / measure."""

    schema: tuple = ((FITNESS, Direction.LOWER_IS_BETTER),)
    lag_ms: int = 0
    step_ms: int = 10

    def init_state(self, seed: int):
        raise NotImplementedError

    def step(self, state):
        raise NotImplementedError

    def measure(self, state) -> tuple:
        """Return ``(score, metrics)`` of the best-so-far solution."""
        raise NotImplementedError


@dataclass(frozen=True)
class FaultInjection:
    """Seed-dependent transient errors.

    Whether an instance faults is a pure function of (subject, seed); a faulty
    instance crashes shortly after initialisation, within one checkpoint
    interval, so a fresh seed avoids the fault while a restart of the same seed
    reproduces it.
    """

    rate: float = DEFAULT_FAULT_RATE

    def is_faulty(self, subject: str, seed: int) -> bool:
        return unit_float("fault", subject, seed) < self.rate

    def fault_time(self, subject: str, seed: int, lag_ms: int,
                   interval_ms: int = DEFAULT_INTERVAL_MS):
        if not self.is_faulty(subject, seed):
            return None
        offset = int(unit_float("fault-time", subject, seed) * interval_ms)
        return lag_ms + 1 + offset


class AnytimeRun:
    """Iterate the checkpoint records of one instance; ``exit_code`` is set when exhausted.

    Records fall on multiples of ``interval_ms`` up to ``timeout_ms`` and are
    only emitted once initialisation (``lag_ms``) is over.  A fault emits one
    record with ``error_count = 1`` and ends the run with exit code 1.
    """

    def __init__(self, problem: AnytimeProblem, seed: int, timeout_ms: int,
                 interval_ms: int = DEFAULT_INTERVAL_MS, fault_ms=None):
        self.problem = problem
        self.seed = seed
        self.timeout_ms = timeout_ms
        self.interval_ms = interval_ms
        self.fault_ms = fault_ms
        self.exit_code = None
        self.elapsed_ms = 0

    def __iter__(self):
        problem = self.problem
        state = problem.init_state(self.seed)
        t = problem.lag_ms
        tick = self.interval_ms
        fault = self.fault_ms
        while True:
            nxt = tick if fault is None else min(tick, fault)
            if nxt > self.timeout_ms:
                self.elapsed_ms = self.timeout_ms
                self.exit_code = 0
                return
            while t + problem.step_ms <= nxt:
                state = problem.step(state)
                t += problem.step_ms
            if nxt == fault:
                score, metrics = problem.measure(state)
                yield CheckpointRecord(fault, score, 1, metrics)
                self.elapsed_ms = fault
                self.exit_code = 1
                return
            if tick >= problem.lag_ms:
                score, metrics = problem.measure(state)
                yield CheckpointRecord(tick, score, 0, metrics)
            tick += self.interval_ms
