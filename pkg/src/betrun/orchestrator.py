"""Bet-and-Run: start n seeded instances, evaluate at t_k, keep one, run it out.

The four phases are executed against an adapter:

1. start ``n`` instances with distinct seeds and timeout ``t_k``;
2. harvest each at cutoff ``t_k``;
3. keep the eligible instance with the lowest score (first index on ties);
4. restart the survivor from scratch with the same seed for the survivor
   timeout and harvest it.

Phase (i) is charged ``n * t_k`` however the instances are scheduled.
"""

import enum
import tempfile
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path

from betrun.adapter import InstanceReport, OptimizerAdapter, SpawnFailure
from betrun.budget import BudgetMode, BudgetPlan, RestartStrategy, plan_budget, survivor_timeout
from betrun.rng import SeedSource


class Failure(enum.Enum):
    NONE = "none"
    NO_VIABLE_CANDIDATE = "no_viable_candidate"
    SURVIVOR_ERRORED = "survivor_errored"


class Phase(enum.Enum):
    START_PHASE = "start"
    EVALUATION = "evaluation"
    ELITISM = "elitism"
    RUN_PHASE = "run"


@dataclass(frozen=True)
class PhaseEvent:
    phase: Phase
    at_ms: int  # offset on the charged-budget timeline
    detail: dict = field(default_factory=dict)


@dataclass
class RunOutcome:
    strategy: RestartStrategy
    plan: BudgetPlan
    mode: BudgetMode
    starters: list
    survivor_index: int | None
    final: InstanceReport | None
    failure: Failure
    charged_budget: int
    events: list = field(default_factory=list)

    @property
    def survivor_seed(self) -> int | None:
        if self.survivor_index is None:
            return None
        return self.starters[self.survivor_index].seed

    @property
    def error_count(self) -> int:
        """Internal errors of the run: those of the final instance if one ran."""
        if self.final is not None:
            return self.final.error_count
        return 1 if any(s.errored for s in self.starters) else 0


def select_survivor(starters) -> int | None:
    """Smallest index among eligible reports with the minimum score, or None."""
    best = None
    for i, report in enumerate(starters):
        if not report.eligible:
            continue
        if best is None or report.score < starters[best].score:
            best = i
    return best


def phase_log(outcome: RunOutcome) -> list:
    return list(outcome.events)


def _launch(adapter, subject, seed, timeout, path, index):
    try:
        return adapter.spawn(subject, seed, timeout, path), None
    except SpawnFailure:
        return None, InstanceReport.spawn_failed(index, seed)


def run_bet_and_run(subject, strategy: RestartStrategy, t_total: int,
                    mode: BudgetMode, adapter: OptimizerAdapter, seeds,
                    workdir=None) -> RunOutcome:
    """Execute one Bet-and-Run run of ``strategy`` on ``subject``.

    ``seeds`` maps an instance slot to its seed (e.g. a :class:`SeedSource`).
    Checkpoint files go to ``workdir`` (a temporary directory if omitted).
    """
    plan = plan_budget(strategy, t_total)
    n, t_k = strategy.n, plan.t_k
    slot_seeds = [int(seeds(i)) for i in range(n)]
    if len(set(slot_seeds)) != n:
        raise ValueError("seed source produced duplicate seeds")
    ctx = tempfile.TemporaryDirectory(prefix="betrun-") if workdir is None else nullcontext(workdir)
    with ctx as root:
        root = Path(root)
        events = [PhaseEvent(Phase.START_PHASE, 0, {"n": n, "t_k": t_k, "seeds": slot_seeds})]

        # (i) all n instances are in flight together, then (ii) harvested at t_k
        launched = [
            _launch(adapter, subject, seed, t_k, root / f"starter-{i:02d}.ckpt", i)
            for i, seed in enumerate(slot_seeds)
        ]
        starters = [
            failed if handle is None else adapter.harvest(handle, cutoff=t_k, index=i)
            for i, (handle, failed) in enumerate(launched)
        ]
        evaluated_at = n * t_k
        events.append(PhaseEvent(Phase.EVALUATION, evaluated_at,
                                 {"scores": [s.score if s.eligible else None for s in starters]}))

        survivor = select_survivor(starters)
        if strategy.is_baseline:
            failure = Failure.NONE if survivor is not None else Failure.NO_VIABLE_CANDIDATE
            return RunOutcome(strategy, plan, mode, starters, survivor, starters[0],
                              failure, evaluated_at, events)

        events.append(PhaseEvent(Phase.ELITISM, evaluated_at, {"survivor": survivor}))
        if survivor is None:
            return RunOutcome(strategy, plan, mode, starters, None, None,
                              Failure.NO_VIABLE_CANDIDATE, evaluated_at, events)

        timeout = survivor_timeout(plan, mode)
        if timeout == 0:
            # nothing left to run: the evaluated instance is the result
            return RunOutcome(strategy, plan, mode, starters, survivor, starters[survivor],
                              Failure.NONE, evaluated_at, events)

        # (iv) full restart of the survivor, same seed
        seed = slot_seeds[survivor]
        handle, final = _launch(adapter, subject, seed, timeout, root / "survivor.ckpt", survivor)
        if handle is not None:
            final = adapter.harvest(handle, cutoff=None, index=survivor)
            elapsed = handle.elapsed_ms
        else:
            elapsed = 0
        events.append(PhaseEvent(Phase.RUN_PHASE, evaluated_at,
                                 {"timeout": timeout, "elapsed": elapsed, "seed": seed}))
        failure = Failure.SURVIVOR_ERRORED if final.errored else Failure.NONE
        return RunOutcome(strategy, plan, mode, starters, survivor, final, failure,
                          evaluated_at + timeout, events)


__all__ = [
    "Failure",
    "Phase",
    "PhaseEvent",
    "RunOutcome",
    "SeedSource",
    "phase_log",
    "run_bet_and_run",
    "select_survivor",
]
