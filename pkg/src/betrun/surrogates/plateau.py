"""Synthetic anytime process with a seed-dependent plateau.

Fitness starts at 100 and decays toward a ceiling ``q(seed)`` drawn from
{10, 20, ..., 90}: ``f = q + (100 - q) * exp(-progress)``, where progress
grows by ``rate * step_ms * Exp(1)`` per iteration.  Because f is monotone
in q at any fixed progress, early fitness predicts the final plateau.
"""

import math
from dataclasses import dataclass

import numpy as np

from betrun.checkpoint import FITNESS, Direction
from betrun.rng import generator, mix
from betrun.surrogates.base import AnytimeProblem, SubjectError

LEVELS = tuple(range(10, 100, 10))
START = 100.0


def ceiling(seed: int) -> float:
    return float(LEVELS[mix("plateau", seed) % len(LEVELS)])


@dataclass
class PlateauState:
    rng: np.random.Generator
    q: float
    progress: float = 0.0
    fitness: float = START


class PlateauProblem(AnytimeProblem):
    schema = ((FITNESS, Direction.LOWER_IS_BETTER),)

    def __init__(self, rate: float, step_ms=10):
        if rate <= 0:
            raise SubjectError("decay rate must be positive")
        self.rate = rate
        self.step_ms = step_ms

    def init_state(self, seed):
        return PlateauState(generator(seed), ceiling(seed))

    def step(self, s: PlateauState) -> PlateauState:
        s.progress += self.rate * self.step_ms * s.rng.exponential()
        s.fitness = min(s.fitness, s.q + (START - s.q) * math.exp(-s.progress))
        return s

    def measure(self, s: PlateauState):
        return s.fitness, {}
