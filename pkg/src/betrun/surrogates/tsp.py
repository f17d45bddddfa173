"""Euclidean TSP solved by best-improvement 2-opt with random restarts.

Each iteration applies the best strictly improving 2-opt move.  At a local
optimum the next iteration restarts from a fresh random tour; the best tour
seen so far is archived.
"""

from dataclasses import dataclass

import numpy as np

from betrun.checkpoint import FITNESS, Direction
from betrun.rng import generator
from betrun.surrogates.base import AnytimeProblem, SubjectError

EPS = 1e-12


@dataclass
class TourState:
    rng: np.random.Generator
    tour: np.ndarray
    length: float
    best_tour: np.ndarray
    best_length: float
    local_optimum: bool = False
    restarts: int = 0


class TspProblem(AnytimeProblem):
    schema = ((FITNESS, Direction.LOWER_IS_BETTER),)

    def __init__(self, coords, step_ms=10):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2 or len(coords) < 3:
            raise SubjectError("need at least three 2-D cities")
        self.coords = coords
        self.n = len(coords)
        diff = coords[:, None, :] - coords[None, :, :]
        self.dist = np.sqrt((diff ** 2).sum(axis=-1))
        self.step_ms = step_ms
        i, j = np.triu_indices(self.n, k=2)
        ok = ~((i == 0) & (j == self.n - 1))  # these two edges are adjacent
        self._i, self._j = i[ok], j[ok]

    def tour_length(self, tour) -> float:
        tour = np.asarray(tour)
        return float(self.dist[tour, np.roll(tour, -1)].sum())

    def _fresh(self, rng):
        tour = rng.permutation(self.n)
        return tour, self.tour_length(tour)

    def init_state(self, seed):
        rng = generator(seed)
        tour, length = self._fresh(rng)
        return TourState(rng, tour, length, tour.copy(), length)

    def best_move(self, tour):
        """Best 2-opt move ``(delta, i, j)``: reverse ``tour[i+1 : j+1]``."""
        if len(self._i) == 0:
            return 0.0, 0, 0
        a, b = tour, np.roll(tour, -1)
        i, j = self._i, self._j
        d = self.dist
        delta = d[a[i], a[j]] + d[b[i], b[j]] - d[a[i], b[i]] - d[a[j], b[j]]
        k = int(np.argmin(delta))
        return float(delta[k]), int(i[k]), int(j[k])

    def step(self, s: TourState) -> TourState:
        if s.local_optimum:
            s.tour, s.length = self._fresh(s.rng)
            s.local_optimum = False
            s.restarts += 1
        else:
            delta, i, j = self.best_move(s.tour)
            if delta < -EPS:
                s.tour[i + 1 : j + 1] = s.tour[i + 1 : j + 1][::-1].copy()
                s.length = self.tour_length(s.tour)
            else:
                s.local_optimum = True
        if s.length < s.best_length - EPS:
            s.best_tour, s.best_length = s.tour.copy(), s.length
        return s

    def measure(self, s: TourState):
        return float(s.best_length), {}


def random_cities(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, 2)) * 100.0


PRESETS = {
    "unit-square": [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
}
