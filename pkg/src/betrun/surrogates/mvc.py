"""Minimum vertex cover solved by a generational GA with elitism.

A candidate is a boolean vertex mask.  After mutation each child drops one
randomly chosen redundant vertex (one whose neighbours are all in the mask),
a cheap local improvement that never uncovers an edge.  Fitness is
``uncovered_edges * n_vertices + cover_size``, so every feasible cover beats
every infeasible one and, among feasible covers, smaller is better.
"""

from dataclasses import dataclass

import numpy as np

from betrun.checkpoint import FITNESS, Direction
from betrun.rng import generator
from betrun.surrogates.base import AnytimeProblem, SubjectError


@dataclass
class GaState:
    rng: np.random.Generator
    pop: np.ndarray
    fit: np.ndarray
    best: np.ndarray
    best_fit: int
    generation: int = 0


class MvcProblem(AnytimeProblem):
    schema = (
        (FITNESS, Direction.LOWER_IS_BETTER),
        ("cover_size", Direction.LOWER_IS_BETTER),
        ("edge_coverage", Direction.HIGHER_IS_BETTER),
    )

    def __init__(self, n_vertices, edges, pop_size=80, mutation_rate=None,
                 elite=2, tournament=2, prune=True, step_ms=10):
        edges = [tuple(sorted(map(int, e))) for e in edges]
        if n_vertices < 1:
            raise SubjectError("graph needs at least one vertex")
        if any(u == v for u, v in edges):
            raise SubjectError("self-loops are not allowed")
        if len(set(edges)) != len(edges):
            raise SubjectError("duplicate edges are not allowed")
        if any(not 0 <= u < n_vertices or not 0 <= v < n_vertices for u, v in edges):
            raise SubjectError("edge endpoint out of range")
        if not 0 <= elite < pop_size:
            raise SubjectError("elite count must be smaller than the population")
        self.n_vertices = n_vertices
        self.edges = edges
        self.u = np.array([e[0] for e in edges], dtype=np.intp)
        self.v = np.array([e[1] for e in edges], dtype=np.intp)
        self.pop_size = pop_size
        self.mutation_rate = 1.5 / n_vertices if mutation_rate is None else mutation_rate
        self.elite = elite
        self.tournament = tournament
        self.prune = prune
        self.step_ms = step_ms
        self.adj = np.zeros((n_vertices, n_vertices), dtype=bool)
        self.adj[self.u, self.v] = self.adj[self.v, self.u] = True

    def fitness(self, masks: np.ndarray) -> np.ndarray:
        masks = np.atleast_2d(masks)
        uncovered = (~(masks[:, self.u] | masks[:, self.v])).sum(axis=1)
        return uncovered * self.n_vertices + masks.sum(axis=1)

    def init_state(self, seed):
        rng = generator(seed)
        pop = rng.random((self.pop_size, self.n_vertices)) < 0.5
        fit = self.fitness(pop)
        i = int(np.argmin(fit))
        return GaState(rng, pop, fit, pop[i].copy(), int(fit[i]))

    def _select(self, rng, fit, k):
        contenders = rng.integers(0, len(fit), size=(k, self.tournament))
        winner = np.argmin(fit[contenders], axis=1)
        return contenders[np.arange(k), winner]

    def _prune(self, rng, masks: np.ndarray) -> np.ndarray:
        """Drop one random redundant vertex (all neighbours covered) per child."""
        outside = self.adj[None, :, :] & ~masks[:, None, :]
        redundant = masks & ~outside.any(axis=2)
        pick = np.argmax(rng.random(masks.shape) * redundant, axis=1)
        rows = np.flatnonzero(redundant.any(axis=1))
        masks[rows, pick[rows]] = False
        return masks

    def step(self, s: GaState) -> GaState:
        rng = s.rng
        n_children = self.pop_size - self.elite
        mothers = s.pop[self._select(rng, s.fit, n_children)]
        fathers = s.pop[self._select(rng, s.fit, n_children)]
        children = np.where(rng.random(mothers.shape) < 0.5, mothers, fathers)
        children ^= rng.random(children.shape) < self.mutation_rate
        if self.prune:
            children = self._prune(rng, children)
        elite_idx = np.argsort(s.fit, kind="stable")[: self.elite]
        pop = np.concatenate([s.pop[elite_idx], children])
        fit = np.concatenate([s.fit[elite_idx], self.fitness(children)])
        i = int(np.argmin(fit))
        if fit[i] < s.best_fit:
            s.best, s.best_fit = pop[i].copy(), int(fit[i])
        s.pop, s.fit = pop, fit
        s.generation += 1
        return s

    def measure(self, s: GaState):
        covered = s.best[self.u] | s.best[self.v]
        coverage = float(covered.mean()) if len(self.edges) else 1.0
        return float(s.best_fit), {"cover_size": float(s.best.sum()), "edge_coverage": coverage}


def random_graph(n_vertices: int, edge_prob: float, rng: np.random.Generator) -> list:
    iu, ju = np.triu_indices(n_vertices, k=1)
    keep = rng.random(len(iu)) < edge_prob
    return [(int(a), int(b)) for a, b in zip(iu[keep], ju[keep])]


PRESETS = {
    "k3": (3, [(0, 1), (1, 2), (0, 2)]),
}
