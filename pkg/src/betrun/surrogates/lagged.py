"""Nested coverage targets behind an initialisation lag.

Targets form a forest: a target becomes reachable once its parent is covered
and only reachable targets are worked on, each covered with probability
``cover_prob`` per iteration.  A fraction of targets (and their descendants)
is infeasible.  Score is the number of feasible targets still uncovered, so
it only ever decreases.  Nothing is reported before ``lag_ms``.
"""

from dataclasses import dataclass

import numpy as np

from betrun.checkpoint import FITNESS, Direction
from betrun.rng import generator
from betrun.surrogates.base import AnytimeProblem, SubjectError


@dataclass
class CoverageState:
    rng: np.random.Generator
    covered: np.ndarray


class LaggedCoverageProblem(AnytimeProblem):
    schema = (
        (FITNESS, Direction.LOWER_IS_BETTER),
        ("target_coverage", Direction.HIGHER_IS_BETTER),
    )

    def __init__(self, targets: int, lag_ms: int, structure_seed: int, depth=4,
                 cover_prob=0.25, infeasible=0.1, step_ms=10):
        if targets < 1:
            raise SubjectError("need at least one coverage target")
        if depth < 1:
            raise SubjectError("depth must be at least 1")
        if not 0 < cover_prob <= 1:
            raise SubjectError("cover_prob must lie in (0, 1]")
        if lag_ms < 0:
            raise SubjectError("lag must be non-negative")
        self.n_targets = targets
        self.lag_ms = lag_ms
        self.cover_prob = cover_prob
        self.step_ms = step_ms

        rng = generator(structure_seed)
        level = np.minimum((np.arange(targets) * depth) // targets, depth - 1)
        parent = np.full(targets, -1)
        for t in range(targets):
            if level[t] > 0:
                candidates = np.flatnonzero(level == level[t] - 1)
                parent[t] = candidates[rng.integers(len(candidates))]
        feasible = rng.random(targets) >= infeasible
        for t in range(targets):  # parents precede children
            if parent[t] >= 0 and not feasible[parent[t]]:
                feasible[t] = False
        self.level, self.parent, self.feasible = level, parent, feasible
        self.is_root = parent < 0
        self._parent_idx = np.where(self.is_root, 0, parent)

    def reachable(self, covered):
        unlocked = self.is_root | covered[self._parent_idx]
        return unlocked & self.feasible & ~covered

    def init_state(self, seed):
        return CoverageState(generator(seed), np.zeros(self.n_targets, dtype=bool))

    def step(self, s: CoverageState) -> CoverageState:
        hit = self.reachable(s.covered) & (s.rng.random(self.n_targets) < self.cover_prob)
        s.covered = s.covered | hit
        return s

    def measure(self, s: CoverageState):
        score = float((self.feasible & ~s.covered).sum())
        return score, {"target_coverage": float(s.covered.mean())}
