"""Brute-force references.  Nothing here is clever on purpose.

Everything is checked by exhaustive enumeration with hard size guards; a
guard trip raises ``OracleTooLarge`` instead of silently truncating.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Hashable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .explainable_sp import ExplainableInstance
from .framework import ContractViolation, NeighborSet, check_alpha
from .graph import DirectedGraph, Path
from .shortest_path import tie_tol

DEFAULT_PATH_LIMIT = 10**6
MAX_ITEMS = 26


class OracleTooLarge(RuntimeError):
    pass


def enumerate_elementary_paths(graph: DirectedGraph, s: int, t: int, limit: int = DEFAULT_PATH_LIMIT) -> Iterator[Path]:
    """Yield every elementary s-t path once, in lexicographic edge-id order."""
    s, t = graph.check_node(s), graph.check_node(t)
    if s == t:
        yield Path(s, t, (), 0.0)
        return
    heads = graph.heads.tolist()
    c = graph.c.tolist()
    count = 0
    on_path = bytearray(graph.node_count)
    on_path[s] = 1
    seq: List[int] = []
    stack = [iter(graph.out_edges[s])]
    while stack:
        e = next(stack[-1], None)
        if e is None:
            stack.pop()
            if seq:
                on_path[heads[seq.pop()]] = 0
            continue
        v = heads[e]
        if on_path[v]:
            continue
        if v == t:
            count += 1
            if count > limit:
                raise OracleTooLarge(f"more than {limit} elementary paths")
            edges = tuple(seq) + (e,)
            yield Path(s, t, edges, math.fsum(c[x] for x in edges))
            continue
        seq.append(e)
        on_path[v] = 1
        stack.append(iter(graph.out_edges[v]))


@lru_cache(maxsize=16)
def _path_catalogue(node_count: int, tails: bytes, heads: bytes, s: int, t: int, limit: int):
    # elementary paths depend on topology only; weights vary between instances
    m = len(tails) // 8
    g = DirectedGraph(node_count, np.frombuffer(tails, dtype=np.int64), np.frombuffer(heads, dtype=np.int64), np.zeros(m), np.zeros(m))
    seqs = [p.edge_ids for p in enumerate_elementary_paths(g, s, t, limit)]
    x = np.zeros((len(seqs), m), dtype=np.int64)
    for i, seq in enumerate(seqs):
        x[i, list(seq)] = 1
    x.setflags(write=False)
    return tuple(seqs), x


@dataclass
class PathTable:
    """All elementary paths of an instance with both objective parts evaluated directly."""

    paths: List[Path]
    optimality: np.ndarray
    explainability: np.ndarray

    @classmethod
    def build(cls, instance: ExplainableInstance, limit: int = DEFAULT_PATH_LIMIT) -> "PathTable":
        g = instance.graph
        seqs, x = _path_catalogue(g.node_count, g.tails.tobytes(), g.heads.tobytes(), instance.s, instance.t, limit)
        opt = np.array([math.fsum(row) for row in x * g.c]) if len(seqs) else np.zeros(0)
        paths = [Path(instance.s, instance.t, seq, o) for seq, o in zip(seqs, opt.tolist())]
        # |xi - x| weighted by length, straight from the definition
        fe = instance.feature_edges
        y = np.vstack([instance.feature_incidence(row) for row in x]) if instance.symmetric and len(paths) else x
        expl = np.zeros(len(paths))
        for nb in instance.neighbors:
            yi = instance.feature_incidence(nb.record.solution_incidence)
            expl += nb.weight * (np.abs(y[:, fe] - yi[fe]) @ g.l[fe])
        return cls(paths, opt, expl)

    def best(self, alpha: float) -> Tuple[float, Path]:
        """Smallest value; among values within the tie tolerance the smallest edge sequence."""
        alpha = check_alpha(alpha)
        if not self.paths:
            raise ContractViolation("no s-t path")
        values = alpha * self.optimality + (1.0 - alpha) * self.explainability
        low = float(values.min())
        tied = np.flatnonzero(values <= low + tie_tol(low))
        i = min(tied, key=lambda j: self.paths[j].edge_ids)
        return float(values[i]), self.paths[i]


def brute_force_explainable_sp(instance: ExplainableInstance, alpha: float, limit: int = DEFAULT_PATH_LIMIT) -> Tuple[float, Path]:
    """Minimum scalarized value over all elementary paths, lexicographic tie-break."""
    return PathTable.build(instance, limit).best(alpha)


def brute_force_pareto(instance: ExplainableInstance, alphas: Sequence[float], limit: int = DEFAULT_PATH_LIMIT) -> List[dict]:
    table = PathTable.build(instance, limit)
    curve = []
    for a in alphas:
        value, path = table.best(a)
        i = table.paths.index(path)
        curve.append({
            "alpha": float(a),
            "scalarized": value,
            "optimality_value": float(table.optimality[i]),
            "explainability_value": float(table.explainability[i]),
            "edges": list(path.edge_ids),
        })
    return curve


def partition_gadget(a: Sequence[int]) -> Tuple[float, Tuple[int, ...]]:
    """Hardness gadget: ``min |sum a_j x_j - A/2|`` over all 0/1 vectors.

    The single historic record has solution feature 0 and confidence 1, so
    the explainability term is exactly this gap; zero means a perfect split.
    """
    a = [int(v) for v in a]
    if len(a) > MAX_ITEMS:
        raise OracleTooLarge(f"{len(a)} items exceed the enumeration guard of {MAX_ITEMS}")
    if any(v <= 0 for v in a):
        raise ContractViolation("partition entries must be positive integers")
    half = sum(a) / 2.0
    best = math.inf
    witness: Tuple[int, ...] = ()
    for x in product((0, 1), repeat=len(a)):
        gap = abs(sum(v for v, b in zip(a, x) if b) - half)
        if gap < best:
            best, witness = gap, x
    return best, witness


def has_equal_split(a: Sequence[int]) -> bool:
    """Subset-sum dynamic program: can the multiset be split into equal halves?"""
    total = sum(a)
    if total % 2:
        return False
    reach = 1  # bit k set <=> subset sum k reachable
    for v in a:
        reach |= reach << int(v)
    return bool((reach >> (total // 2)) & 1)


@dataclass(frozen=True)
class KnapsackInstance:
    profits: Tuple[float, ...]
    weights: Tuple[float, ...]
    capacity: float
    groups: Tuple[Hashable, ...] = ()

    def __post_init__(self):
        n = len(self.profits)
        groups = self.groups or tuple("item" for _ in range(n))
        object.__setattr__(self, "groups", tuple(groups))
        if len(self.weights) != n or len(self.groups) != n:
            raise ContractViolation("profits, weights and groups must have equal length")
        if min(self.profits, default=0) < 0 or min(self.weights, default=0) < 0 or self.capacity < 0:
            raise ContractViolation("knapsack data must be nonnegative")

    @property
    def group_labels(self) -> Tuple[Hashable, ...]:
        return tuple(sorted(set(self.groups), key=str))


def knapsack_features(instance: KnapsackInstance, x: Sequence[int], labels: Optional[Sequence[Hashable]] = None) -> np.ndarray:
    """Packed items per group, total packed items, total packed weight."""
    labels = instance.group_labels if labels is None else labels
    counts = [sum(1 for g, b in zip(instance.groups, x) if b and g == lab) for lab in labels]
    return np.array(counts + [sum(x), sum(w for w, b in zip(instance.weights, x) if b)], dtype=float)


def explainable_knapsack(
    instance: KnapsackInstance,
    neighbors: NeighborSet,
    alpha: float,
    historic_instances: Optional[Mapping[Hashable, KnapsackInstance]] = None,
) -> Tuple[float, Tuple[int, ...]]:
    """Enumerate all feasible packings of ``alpha * (-profit) + (1 - alpha) * explainability``.

    A neighbor's features are computed on its own historic instance when one
    is supplied, otherwise on the current item data.
    """
    alpha = check_alpha(alpha)
    n = len(instance.profits)
    if n > MAX_ITEMS:
        raise OracleTooLarge(f"{n} items exceed the enumeration guard of {MAX_ITEMS}")
    labels = instance.group_labels
    hist = []
    for nb in neighbors:
        src = (historic_instances or {}).get(nb.record.id, instance)
        hist.append((nb.weight, knapsack_features(src, nb.record.solution_incidence, labels)))
    best = math.inf
    witness: Tuple[int, ...] = tuple([0] * n)
    for x in product((0, 1), repeat=n):
        if sum(w for w, b in zip(instance.weights, x) if b) > instance.capacity:
            continue
        f = knapsack_features(instance, x, labels)
        expl = sum(lam * float(np.abs(f - fi).sum()) for lam, fi in hist)
        value = alpha * -sum(p for p, b in zip(instance.profits, x) if b) + (1.0 - alpha) * expl
        if value < best - 1e-12:
            best, witness = value, x
    return best, witness


def knapsack_dp(profits: Sequence[float], weights: Sequence[int], capacity: int) -> float:
    """Classical 0/1 knapsack optimum for integer weights."""
    table = [0.0] * (int(capacity) + 1)
    for p, w in zip(profits, weights):
        for cap in range(int(capacity), int(w) - 1, -1):
            table[cap] = max(table[cap], table[cap - int(w)] + p)
    return table[int(capacity)]


def enumerate_progressions(
    graph: DirectedGraph, s: int, t: int, max_uses: int = 2, limit: int = DEFAULT_PATH_LIMIT
) -> Iterator[Tuple[int, ...]]:
    """Every s-t walk in which no edge is traversed more than ``max_uses`` times."""
    heads = graph.heads.tolist()
    uses = [0] * graph.edge_count
    seq: List[int] = []
    count = 0
    if s == t:
        count += 1
        yield ()

    def walk(u):
        nonlocal count
        for e in graph.out_edges[u]:
            if uses[e] >= max_uses:
                continue
            uses[e] += 1
            seq.append(e)
            v = heads[e]
            if v == t:
                count += 1
                if count > limit:
                    raise OracleTooLarge(f"more than {limit} progressions")
                yield tuple(seq)
            yield from walk(v)
            seq.pop()
            uses[e] -= 1

    yield from walk(s)


def brute_force_progression(
    graph: DirectedGraph,
    s: int,
    t: int,
    pool: Sequence[int],
    costs: Sequence[float],
    subset_penalty=None,
    max_uses: int = 2,
    limit: int = DEFAULT_PATH_LIMIT,
) -> Tuple[float, Tuple[int, ...]]:
    pool_set = set(pool)
    best = math.inf
    best_seq: Tuple[int, ...] = ()
    for seq in enumerate_progressions(graph, s, t, max_uses, limit):
        value = float(sum(costs[e] for e in seq))
        if subset_penalty is not None:
            value += subset_penalty(frozenset(pool_set.intersection(seq)))
        if value < best:
            best, best_seq = value, seq
    if math.isinf(best):
        raise ContractViolation("no s-t progression")
    return best, best_seq
