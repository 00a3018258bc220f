"""Problem-independent explainability machinery.

A query instance is compared against a database of historic
instance/solution pairs.  The most similar records form a neighbor set,
each weighted by its confidence discounted with instance distance, and a
candidate solution is scored by its weighted distance to the neighbors'
solutions.  Small explainability values mean "looks like what was done
before in similar situations".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Optional, Sequence, Tuple

import numpy as np

StPair = Tuple[int, int]


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


def feature_vector(values: Iterable[float]) -> np.ndarray:
    """Return a read-only 1-D float array after checking every entry is finite."""
    if not isinstance(values, np.ndarray):
        values = list(values)
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ContractViolation("feature vectors must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation("feature values must be finite")
    arr.setflags(write=False)
    return arr


def _incidence(values: Any) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ContractViolation("incidence vectors must be one-dimensional")
    if arr.dtype != np.int8:
        if not np.all((arr == 0) | (arr == 1)):
            raise ContractViolation("incidence vectors must be binary")
        arr = arr.astype(np.int8)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HistoricRecord:
    """One historic data point: instance features, the solution used, and a confidence.

    ``solution_incidence`` is a 0/1 vector over the edge ids of the graph
    topology the record belongs to.  ``timestamp`` is an optional
    ``(date, minutes_of_day)`` pair used by time-window filtering.
    """

    id: Hashable
    instance_features: np.ndarray
    st_pair: StPair
    solution_incidence: np.ndarray
    lam: float = 1.0
    timestamp: Optional[Tuple[str, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "instance_features", feature_vector(self.instance_features))
        object.__setattr__(self, "solution_incidence", _incidence(self.solution_incidence))
        object.__setattr__(self, "st_pair", (int(self.st_pair[0]), int(self.st_pair[1])))
        if not -1.0 <= self.lam <= 1.0:
            raise ContractViolation(f"confidence {self.lam} outside [-1, 1]")


@dataclass(frozen=True)
class Neighbor:
    record: HistoricRecord
    distance: float
    weight: float  # lambda / (1 + beta * distance)


@dataclass(frozen=True)
class NeighborSet:
    entries: Tuple[Neighbor, ...] = ()
    beta: float = 1.0

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def weights(self) -> np.ndarray:
        return np.array([n.weight for n in self.entries], dtype=float)

    def incidence_matrix(self, n_edges: int) -> np.ndarray:
        """Stack the neighbors' solution incidences into an ``(k, n_edges)`` array."""
        if not self.entries:
            return np.zeros((0, n_edges), dtype=np.int8)
        mat = np.vstack([n.record.solution_incidence for n in self.entries])
        if mat.shape[1] != n_edges:
            raise ContractViolation(
                f"neighbor incidence has {mat.shape[1]} entries, graph has {n_edges} edges"
            )
        return mat


def confidence_weight(lam: float, distance: float, beta: float = 1.0) -> float:
    """Discounted confidence ``lam / (1 + beta * distance)``."""
    if beta < 0:
        raise ContractViolation("beta must be nonnegative")
    return lam / (1.0 + beta * distance)


def instance_distance(query: np.ndarray, query_st: StPair, record: HistoricRecord) -> float:
    """Euclidean distance of instance features; infinite when the s-t pairs differ."""
    query = np.asarray(query, dtype=float)
    if query.shape != record.instance_features.shape:
        raise ContractViolation(
            f"feature dimension mismatch: {query.shape} vs {record.instance_features.shape}"
        )
    if tuple(query_st) != record.st_pair:
        return math.inf
    return float(np.linalg.norm(query - record.instance_features))


def _id_key(record: HistoricRecord):
    # ids may be ints or strings; keep each kind internally ordered
    rid = record.id
    return (0, rid, "") if isinstance(rid, (int, np.integer)) else (1, 0, str(rid))


def select_neighbors(
    query: np.ndarray,
    query_st: StPair,
    records: Iterable[HistoricRecord],
    k: int = 5,
    beta: float = 1.0,
    cutoff: Optional[float] = None,
) -> NeighborSet:
    """Pick the ``k`` most similar records.

    Records at infinite distance are never selected.  With ``cutoff`` only
    records within that distance qualify (the threshold form of the
    similarity set); ``k`` still caps the count.  Ties are broken by record id.
    """
    if k < 1:
        raise ContractViolation("k must be at least 1")
    if beta < 0:
        raise ContractViolation("beta must be nonnegative")
    scored = []
    for rec in records:
        d = instance_distance(query, query_st, rec)
        if math.isinf(d) or (cutoff is not None and d > cutoff):
            continue
        scored.append((d, _id_key(rec), rec))
    scored.sort(key=lambda item: (item[0], item[1]))
    entries = tuple(
        Neighbor(rec, d, confidence_weight(rec.lam, d, beta)) for d, _, rec in scored[:k]
    )
    return NeighborSet(entries, beta)


def solution_distance(
    x: np.ndarray, xi: np.ndarray, lengths: np.ndarray, feature_edges: Sequence[int]
) -> float:
    """Length-weighted Manhattan distance between two incidences on ``feature_edges``.

    With unit lengths this is the Hamming distance of the indicator features.
    """
    x = np.asarray(x)
    xi = np.asarray(xi)
    lengths = np.asarray(lengths, dtype=float)
    if x.shape != xi.shape or x.shape != lengths.shape:
        raise ContractViolation("incidence vectors and lengths must share the edge index space")
    idx = np.asarray(feature_edges, dtype=np.intp)
    diff = np.abs(x[idx].astype(float) - xi[idx].astype(float))
    return float(np.dot(lengths[idx], diff))


def explainability_value(
    x: np.ndarray, neighbors: NeighborSet, lengths: np.ndarray, feature_edges: Sequence[int]
) -> float:
    """Weighted sum of solution distances to the neighbors' historic solutions."""
    total = 0.0
    for nb in neighbors:
        total += nb.weight * solution_distance(x, nb.record.solution_incidence, lengths, feature_edges)
    return total


def check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha={alpha} outside [0, 1]")
    return float(alpha)


def scalarized_objective(alpha: float, optimality_value: float, explainability_value: float) -> float:
    check_alpha(alpha)
    return alpha * optimality_value + (1.0 - alpha) * explainability_value
