"""Exact optima by exhaustive enumeration, for small subjects only."""

import itertools
import math

import numpy as np

from betrun.surrogates.base import Subject, SubjectTooLarge
from betrun.surrogates.lagged import LaggedCoverageProblem
from betrun.surrogates.mvc import MvcProblem
from betrun.surrogates.plateau import LEVELS, PlateauProblem
from betrun.surrogates.suite import build_problem
from betrun.surrogates.tsp import TspProblem

MAX_MVC_VERTICES = 20
MAX_TSP_CITIES = 10


def min_vertex_cover(n_vertices: int, edges) -> int:
    """Size of a minimum vertex cover, checking all 2**n subsets."""
    if n_vertices > MAX_MVC_VERTICES:
        raise SubjectTooLarge(f"{n_vertices} vertices > {MAX_MVC_VERTICES}")
    masks = np.arange(1 << n_vertices, dtype=np.int64)
    ok = np.ones(len(masks), dtype=bool)
    for u, v in edges:
        ok &= ((masks >> u) | (masks >> v)) & 1 == 1
    sizes = np.zeros(len(masks), dtype=np.int64)
    for bit in range(n_vertices):
        sizes += (masks >> bit) & 1
    return int(sizes[ok].min())


def shortest_tour(dist) -> float:
    """Optimal closed tour length, fixing city 0 and skipping mirrored tours."""
    n = len(dist)
    if n > MAX_TSP_CITIES:
        raise SubjectTooLarge(f"{n} cities > {MAX_TSP_CITIES}")
    best = math.inf
    for perm in itertools.permutations(range(1, n)):
        if n > 3 and perm[0] > perm[-1]:
            continue
        tour = (0,) + perm
        length = sum(dist[tour[i]][tour[(i + 1) % n]] for i in range(n))
        best = min(best, length)
    return float(best)


def reference_optimum(subject: Subject) -> float:
    problem = build_problem(subject)
    if isinstance(problem, MvcProblem):
        return float(min_vertex_cover(problem.n_vertices, problem.edges))
    if isinstance(problem, TspProblem):
        return shortest_tour(problem.dist.tolist())
    if isinstance(problem, PlateauProblem):
        return float(min(LEVELS))
    if isinstance(problem, LaggedCoverageProblem):
        return 0.0
    raise SubjectTooLarge(f"no exact oracle for {subject.family}")
