"""Explainable shortest paths.

The explainability term is a weighted sum of length-weighted Manhattan
distances between 0/1 edge incidences.  Because ``|x_e - xi_e|`` equals
``x_e`` when ``xi_e = 0`` and ``1 - x_e`` when ``xi_e = 1``, the whole
scalarized objective is affine in ``x``::

    alpha * c.x + (1 - alpha) * expl(x) = sum_e w_e x_e + K
    w_e = alpha * c_e + (1 - alpha) * mu_e
    mu_e = l_e * (sum_{i: xi_e = 0} lam_i - sum_{i: xi_e = 1} lam_i)   (e in E_X, else 0)
    K = (1 - alpha) * sum_{e in E_X} l_e * sum_{i: xi_e = 1} lam_i

so any exact shortest-path routine that copes with the signs of ``w`` solves
the explainable problem.  Negative ``w_e`` can only appear on edges used by
some historic solution (for nonnegative confidences).
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .framework import (
    ContractViolation,
    NeighborSet,
    check_alpha,
    explainability_value,
    scalarized_objective,
    solution_distance,
)
from .graph import DirectedGraph, Path, path_cost, path_from_incidence
from .shortest_path import (
    SearchStats,
    dijkstra,
    edge_progression_solver,
    elementary_shortest_path,
    is_acyclic,
    shortest_path_dag,
)


class Backend(str, enum.Enum):
    DIJKSTRA = "Dijkstra"
    DAG_RELAX = "DagRelax"
    BRANCH_AND_BOUND = "BranchAndBound"
    EDGE_PROGRESSION = "EdgeProgression"


@dataclass(frozen=True)
class ExplainableInstance:
    """A shortest-path instance together with its similar historic records.

    ``solution_feature_edges=None`` means every edge is a solution feature.
    With ``symmetric`` an undirected street traversed in either direction
    counts as the same feature: each antiparallel pair of feature edges is
    collapsed onto its lower edge id before distances are taken.
    """

    graph: DirectedGraph
    s: int
    t: int
    neighbors: NeighborSet = field(default_factory=NeighborSet)
    instance_feature_edges: Sequence[int] = ()
    solution_feature_edges: Optional[Sequence[int]] = None
    symmetric: bool = False

    def __post_init__(self):
        g = self.graph
        g.check_node(self.s)
        g.check_node(self.t)
        m = g.edge_count
        fe = np.arange(m) if self.solution_feature_edges is None else np.unique(np.asarray(self.solution_feature_edges, dtype=np.int64))
        ie = np.asarray(self.instance_feature_edges, dtype=np.int64)
        for name, idx in (("instance", ie), ("solution", fe)):
            if idx.size and (idx.min() < 0 or idx.max() >= m):
                raise ContractViolation(f"{name} feature edge outside graph")
        partner = np.full(m, -1, dtype=np.int64)
        if self.symmetric:
            twins = g.reverse_edges()
            reps = np.unique(np.where(twins[fe] >= 0, np.minimum(fe, twins[fe]), fe))
            partner[reps] = twins[reps]
            partner[reps[partner[reps] == reps]] = -1
            fe = reps
        fe.setflags(write=False)
        object.__setattr__(self, "_feature_edges", fe)
        object.__setattr__(self, "_partner", partner)
        for nb in self.neighbors:
            if nb.record.solution_incidence.shape != (m,):
                raise ContractViolation(f"record {nb.record.id!r}: incidence length differs from |E|={m}")

    @property
    def feature_edges(self) -> np.ndarray:
        """Edge ids carrying a solution feature (pair representatives when symmetric)."""
        return self._feature_edges

    def feature_incidence(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if not self.symmetric:
            return x
        y = x.copy()
        reps = self._feature_edges
        mates = self._partner[reps]
        has = mates >= 0
        y[reps[has]] += x[mates[has]]
        return y

    def explainability(self, x: np.ndarray) -> float:
        lengths = self.graph.l
        if not self.symmetric:
            return explainability_value(x, self.neighbors, lengths, self._feature_edges)
        y = self.feature_incidence(x)
        total = 0.0
        for nb in self.neighbors:
            yi = self.feature_incidence(nb.record.solution_incidence)
            total += nb.weight * solution_distance(y, yi, lengths, self._feature_edges)
        return total

    def optimality(self, x: np.ndarray) -> float:
        return math.fsum(self.graph.c * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ReducedCosts:
    combined: np.ndarray
    constant: float
    alpha: float
    mu: np.ndarray

    def value(self, x: np.ndarray) -> float:
        return float(np.dot(self.combined, np.asarray(x, dtype=float))) + self.constant


def reduce_costs(instance: ExplainableInstance, alpha: float, *, mu_offset: float = 0.0) -> ReducedCosts:
    """Fold the explainability term into per-edge costs plus a constant.

    ``mu_offset`` shifts every feature coefficient and exists only so the
    self-check command can demonstrate that a broken reduction is caught.
    """
    alpha = check_alpha(alpha)
    g = instance.graph
    m = g.edge_count
    fe = instance.feature_edges
    lam = instance.neighbors.weights
    mu = np.zeros(m)
    used = np.zeros(m)
    if len(lam):
        inc = np.vstack([instance.feature_incidence(nb.record.solution_incidence) for nb in instance.neighbors])
        used = lam @ inc  # sum of weights of neighbors using each edge
        unused = lam.sum() - used
        mu[fe] = g.l[fe] * (unused[fe] - used[fe]) + mu_offset
        mates = instance._partner[fe]
        has = mates >= 0
        mu[mates[has]] = mu[fe[has]]
    constant = (1.0 - alpha) * float(np.dot(g.l[fe], used[fe]))
    combined = alpha * g.c + (1.0 - alpha) * mu
    combined.setflags(write=False)
    return ReducedCosts(combined, constant, alpha, mu)


@dataclass
class SolveResult:
    solution: Path
    optimality_value: float
    explainability_value: float
    scalarized: float
    alpha: float
    backend: Backend
    stats: SearchStats
    wall_time: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "alpha": self.alpha,
            "edges": list(self.solution.edge_ids),
            "optimality_value": self.optimality_value,
            "explainability_value": self.explainability_value,
            "scalarized": self.scalarized,
            "backend": self.backend.value,
            "stats": asdict(self.stats),
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


def choose_backend(graph: DirectedGraph, combined: np.ndarray) -> Backend:
    if np.all(combined >= 0):
        return Backend.DIJKSTRA
    if is_acyclic(graph):
        return Backend.DAG_RELAX
    return Backend.BRANCH_AND_BOUND


def solve(instance: ExplainableInstance, alpha: float, *, backend: Optional[Backend] = None, mu_offset: float = 0.0) -> SolveResult:
    """Exact minimizer of the scalarized objective over elementary s-t paths.

    Both objective parts are recomputed from the returned path, independent
    of the reduced costs the backend optimized.
    """
    started = time.perf_counter()
    rc = reduce_costs(instance, alpha, mu_offset=mu_offset)
    g = instance.graph
    if backend is None:
        backend = choose_backend(g, rc.combined)
    stats = SearchStats()
    if backend is Backend.DIJKSTRA:
        assert np.all(rc.combined >= 0), "dijkstra dispatched with negative reduced costs"
        path = dijkstra(g, instance.s, instance.t, rc.combined, stats=stats)
    elif backend is Backend.DAG_RELAX:
        path = shortest_path_dag(g, instance.s, instance.t, rc.combined, stats=stats)
    elif backend is Backend.BRANCH_AND_BOUND:
        path = elementary_shortest_path(g, instance.s, instance.t, rc.combined, stats=stats)
    else:
        raise ContractViolation(f"backend {backend} does not solve the elementary problem")
    x = path.incidence(g.edge_count)
    opt = instance.optimality(x)
    expl = instance.explainability(x)
    return SolveResult(
        solution=Path(path.source, path.target, path.edge_ids, opt),
        optimality_value=opt,
        explainability_value=expl,
        scalarized=scalarized_objective(rc.alpha, opt, expl),
        alpha=rc.alpha,
        backend=backend,
        stats=stats,
        wall_time=time.perf_counter() - started,
    )


def evaluate(instance: ExplainableInstance, x: np.ndarray, alpha: float):
    """Direct ``(optimality, explainability, scalarized)`` of path incidence ``x``."""
    alpha = check_alpha(alpha)
    path_from_incidence(instance.graph, instance.s, instance.t, x)
    opt = instance.optimality(x)
    expl = instance.explainability(x)
    return opt, expl, scalarized_objective(alpha, opt, expl)


def solve_edge_progression(instance: ExplainableInstance, alpha: float, *, max_pool: int = 8) -> SolveResult:
    """Explainable s-t edge progression for a small set of feature edges.

    Walks may revisit nodes and edges; the optimality part counts every
    traversal, the explainability part only whether a feature edge was used.
    """
    alpha = check_alpha(alpha)
    if instance.symmetric:
        raise ContractViolation("edge progressions use direction-sensitive features")
    g = instance.graph
    fe = instance.feature_edges.tolist()
    lengths = g.l
    hist = [(nb.weight, nb.record.solution_incidence) for nb in instance.neighbors]

    def penalty(subset):
        total = 0.0
        for lam, xi in hist:
            total += lam * sum(lengths[e] * abs((e in subset) - int(xi[e])) for e in fe)
        return (1.0 - alpha) * total

    started = time.perf_counter()
    stats = SearchStats()
    walk = edge_progression_solver(g, instance.s, instance.t, fe, alpha * g.c, penalty, max_pool=max_pool, stats=stats)
    opt = path_cost(g.c, walk.edge_ids)
    x = walk.incidence(g.edge_count)
    expl = instance.explainability(x)
    return SolveResult(
        solution=Path(walk.source, walk.target, walk.edge_ids, opt),
        optimality_value=opt,
        explainability_value=expl,
        scalarized=scalarized_objective(alpha, opt, expl),
        alpha=alpha,
        backend=Backend.EDGE_PROGRESSION,
        stats=stats,
        wall_time=time.perf_counter() - started,
    )
