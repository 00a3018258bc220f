"""Exact path algorithms behind the explainable solvers.

Ties between equal-cost optima are broken towards the lexicographically
smallest edge-id sequence so repeated solves return the same representative.
Dijkstra and the DAG pass compare costs exactly; the branch-and-bound and the
progression enumerator accumulate sums along different routes and therefore
treat costs within a relative ``TIE_RTOL`` as equal.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .framework import ContractViolation
from .graph import DirectedGraph, Path, path_cost

TIE_RTOL = 1e-9
# relaxation slack for label correcting; accumulates over at most |V| hops
RELAX_RTOL = 1e-12


class Unreachable(LookupError):
    """No s-t path (or progression) exists."""


class NotADag(ValueError):
    pass


class NegativeCycle(ValueError):
    pass


def tie_tol(value: float) -> float:
    return TIE_RTOL * max(1.0, abs(value))


def improves(cost: float, seq: Sequence[int], best_cost: float, best_seq: Optional[Sequence[int]]) -> bool:
    """Tolerant (cost, edge sequence) ordering used by the branch-and-bound and the oracle."""
    if best_seq is None:
        return True
    tol = tie_tol(best_cost)
    if cost < best_cost - tol:
        return True
    if cost <= best_cost + tol:
        return tuple(seq) < tuple(best_seq)
    return False


@dataclass
class SearchStats:
    expansions: int = 0
    pruned: int = 0
    permutations: int = 0
    incumbents: int = 0


def _cost_list(graph: DirectedGraph, costs) -> List[float]:
    if costs is None:
        costs = graph.c
    arr = np.asarray(costs, dtype=float)
    if arr.shape != (graph.edge_count,):
        raise ContractViolation(f"expected {graph.edge_count} edge costs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation("edge costs must be finite")
    return arr.tolist()


def dijkstra(graph: DirectedGraph, s: int, t: int, costs=None, stats: Optional[SearchStats] = None) -> Path:
    """Minimum-cost s-t path for nonnegative costs (defaults to the nominal weights)."""
    w = _cost_list(graph, costs)
    if any(x < 0 for x in w):
        raise ContractViolation("dijkstra requires nonnegative costs")
    s, t = graph.check_node(s), graph.check_node(t)
    if s == t:
        return Path(s, t, (), 0.0)
    heads = graph.heads.tolist()
    best: Dict[int, Tuple[float, Tuple[int, ...]]] = {s: (0.0, ())}
    heap = [(0.0, (), s)]
    settled = set()
    while heap:
        d, seq, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if stats is not None:
            stats.expansions += 1
        if u == t:
            return Path(s, t, seq, path_cost(w, seq))
        for e in graph.out_edges[u]:
            v = heads[e]
            if v in settled:
                continue
            label = (d + w[e], seq + (e,))
            old = best.get(v)
            if old is None or label < old:
                best[v] = label
                heapq.heappush(heap, (label[0], label[1], v))
    raise Unreachable(f"node {t} is not reachable from {s}")


def topological_order(graph: DirectedGraph) -> List[int]:
    """Kahn's algorithm, smallest ready node first; raises ``NotADag`` on a cycle."""
    indeg = [len(graph.in_edges[v]) for v in range(graph.node_count)]
    ready = [v for v in range(graph.node_count) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for e in graph.out_edges[u]:
            v = int(graph.heads[e])
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != graph.node_count:
        raise NotADag("graph contains a directed cycle")
    return order


def is_acyclic(graph: DirectedGraph) -> bool:
    try:
        topological_order(graph)
    except NotADag:
        return False
    return True


def shortest_path_dag(graph: DirectedGraph, s: int, t: int, costs=None, stats: Optional[SearchStats] = None) -> Path:
    """One relaxation pass in topological order; costs may be negative."""
    w = _cost_list(graph, costs)
    s, t = graph.check_node(s), graph.check_node(t)
    order = topological_order(graph)
    heads = graph.heads.tolist()
    label: Dict[int, Tuple[float, Tuple[int, ...]]] = {s: (0.0, ())}
    for u in order:
        cur = label.get(u)
        if cur is None:
            continue
        if stats is not None:
            stats.expansions += 1
        d, seq = cur
        for e in graph.out_edges[u]:
            cand = (d + w[e], seq + (e,))
            v = heads[e]
            old = label.get(v)
            if old is None or cand < old:
                label[v] = cand
    if t not in label:
        raise Unreachable(f"node {t} is not reachable from {s}")
    _, seq = label[t]
    return Path(s, t, seq, path_cost(w, seq))


def _relax_rounds(n: int, src_idx: np.ndarray, dst_idx: np.ndarray, w: np.ndarray, dist: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Jacobi rounds of ``dist[dst] <- min(dist[dst], dist[src] + w)`` until stable.

    Returns the distances and whether they converged within ``n`` rounds.
    """
    for _ in range(n):
        best, improved = _relax_once(src_idx, dst_idx, w, dist)
        if not improved.any():
            return dist, True
        dist = np.where(improved, best, dist)
    return dist, False


def _relax_once(src_idx, dst_idx, w, dist):
    best = dist.copy()
    np.minimum.at(best, dst_idx, dist[src_idx] + w)
    finite = np.isfinite(dist)
    safe = np.where(finite, dist, 0.0)
    threshold = np.where(finite, safe - RELAX_RTOL * (1.0 + np.abs(safe)), dist)
    return best, best < threshold


def detect_negative_cycle(graph: DirectedGraph, costs=None) -> bool:
    """True iff some directed cycle has negative total cost (up to relaxation slack)."""
    w = np.asarray(_cost_list(graph, costs))
    if graph.edge_count == 0 or np.all(w >= 0):
        return False
    dist = np.zeros(graph.node_count)
    _, converged = _relax_rounds(graph.node_count, graph.tails, graph.heads, w, dist)
    return not converged


def distances_to(graph: DirectedGraph, t: int, costs=None) -> np.ndarray:
    """Minimum walk cost from every node to ``t``.

    ``inf`` marks nodes that cannot reach ``t``; ``-inf`` marks nodes with a
    walk to ``t`` through a negative cycle.
    """
    w = np.asarray(_cost_list(graph, costs))
    n = graph.node_count
    dist = np.full(n, math.inf)
    dist[t] = 0.0
    dist, converged = _relax_rounds(n, graph.heads, graph.tails, w, dist)
    if converged:
        return dist
    for _ in range(n):
        _, improved = _relax_once(graph.heads, graph.tails, w, dist)
        if not improved.any():
            break
        dist = np.where(improved, -math.inf, dist)
    return dist


def _nonneg_distances_to(graph: DirectedGraph, t: int, w: List[float], blocked: Optional[bytearray] = None) -> List[float]:
    """Reverse Dijkstra from ``t`` on ``max(c, 0)``, optionally never entering ``blocked`` nodes."""
    tails = graph.tails.tolist()
    dist = [math.inf] * graph.node_count
    dist[t] = 0.0
    heap = [(0.0, t)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for e in graph.in_edges[v]:
            u = tails[e]
            if blocked is not None and blocked[u]:
                continue
            nd = d + max(w[e], 0.0)
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


CHAIN_MAX_NEGATIVE = 6


def _restricted_distances_to(graph: DirectedGraph, target: int, w: List[float], blocked: FrozenSet[int]) -> List[float]:
    """Reverse Dijkstra over nonnegative edges, never entering ``blocked`` nodes."""
    tails = graph.tails.tolist()
    dist = [math.inf] * graph.node_count
    dist[target] = 0.0
    heap = [(0.0, target)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for e in graph.in_edges[v]:
            u = tails[e]
            if w[e] < 0 or u in blocked:
                continue
            nd = d + w[e]
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def _chains(s: int, t: int, tails: List[int], heads: List[int], negative: Sequence[int]):
    """Orders of negative edges that an elementary s-t path could traverse.

    Yields ``(chain, stops)`` with ``stops = [s, tail1, head1, ..., t]``.
    A chain that would revisit a node is dropped together with all its extensions.
    """

    def grow(chain, stops, seen):
        last = stops[-1]
        if last == t or t not in seen:
            yield chain, stops + [t]
        if last == t:
            return
        for e in negative:
            if e in chain:
                continue
            a, b = tails[e], heads[e]
            if a != last and (a in seen or a == t):
                continue
            if b in seen:
                continue
            yield from grow(chain + (e,), stops + [a, b], seen | {a, b})

    yield from grow((), [s], frozenset([s]))


def _chain_bounds(graph: DirectedGraph, s: int, t: int, w: List[float], negative: Sequence[int]) -> Dict[Tuple[int, ...], List[float]]:
    """Completion bounds keyed by the ordered negative edges a partial path has used.

    Any elementary s-t path lists its negative edges in some order (a chain);
    between consecutive chain edges it runs over nonnegative edges only and
    never touches s, t or an endpoint of another chain edge.  For every chain
    the segment distances under those restrictions are computed once; the
    entry for prefix ``U`` at node ``v`` is the cheapest completion over all
    chains starting with ``U``, with ``v`` inside the segment after ``U``.
    """
    heads = graph.heads.tolist()
    tails = graph.tails.tolist()
    n = graph.node_count
    cache: Dict[Tuple[int, FrozenSet[int]], List[float]] = {}
    out: Dict[Tuple[int, ...], List[float]] = {}
    for chain, stops in _chains(s, t, tails, heads, negative):
        size = len(chain)
        every = frozenset(stops)
        seg = []
        for i in range(size + 1):
            a, b = stops[2 * i], stops[2 * i + 1]
            key = (b, every - {a, b})
            if key not in cache:
                cache[key] = _restricted_distances_to(graph, b, w, key[1])
            seg.append(cache[key])
        tail_cost = 0.0  # cost of the segments after the current one plus their chain edges
        for u in range(size, -1, -1):
            if u < size:
                tail_cost += w[chain[u]] + seg[u + 1][stops[2 * u + 2]]
            if math.isinf(tail_cost):
                break
            row = out.setdefault(chain[:u], [math.inf] * n)
            d = seg[u]
            for v in range(n):
                x = d[v] + tail_cost
                if x < row[v]:
                    row[v] = x
    return out


BoundHook = Callable[[Tuple[int, ...], float], None]


def elementary_shortest_path(
    graph: DirectedGraph,
    s: int,
    t: int,
    costs=None,
    *,
    strengthen: bool = True,
    stats: Optional[SearchStats] = None,
    on_bound: Optional[BoundHook] = None,
) -> Path:
    """Exact minimum-cost elementary s-t path under arbitrary (possibly negative) costs.

    Depth-first branch-and-bound.  The plain bound of a partial path ending
    in ``v`` is its cost plus ``dist+(v) + (sum of min(0, c) over unused
    edges)``, where ``dist+`` is the distance to ``t`` under ``max(c, 0)``.
    With ``strengthen`` (the default) it is raised in several admissible ways:

    * ``dist+`` avoids the nodes of the partial path, and only negative edges
      still reachable off the partial path are counted;
    * the minimum walk cost from ``v`` to ``t``, where no negative cycle
      makes it unbounded;
    * with few negative edges, the chain bound of ``_chain_bounds``.

    Every bound is a valid lower bound on the completions, so their maximum
    is too.  ``on_bound(partial_edges, bound)`` is called for every partial
    path whose bound is evaluated, which lets tests check admissibility.
    """
    w = _cost_list(graph, costs)
    s, t = graph.check_node(s), graph.check_node(t)
    if s == t:
        return Path(s, t, (), 0.0)
    plus = _nonneg_distances_to(graph, t, w)
    if math.isinf(plus[s]):
        raise Unreachable(f"node {t} is not reachable from {s}")
    heads = graph.heads.tolist()
    negative = [e for e in range(graph.edge_count) if w[e] < 0]
    neg_total = sum(w[e] for e in negative)
    neg_ends = [(e, int(graph.tails[e]), heads[e], w[e]) for e in negative]
    walk = distances_to(graph, t, w).tolist() if strengthen and negative else None
    chains = _chain_bounds(graph, s, t, w, negative) if strengthen and 0 < len(negative) <= CHAIN_MAX_NEGATIVE else None

    def bound(v: int, cost: float, neg_used: float, used: Tuple[int, ...], dist: List[float]) -> float:
        if not strengthen:
            return cost + dist[v] + (neg_total - neg_used)
        reward = sum(c for e, a, b, c in neg_ends
                     if (a == v or not visited[a]) and not visited[b] and dist[b] < math.inf and e not in used)
        lb = dist[v] + reward
        if walk is not None:
            lb = max(lb, walk[v])
        if chains is not None:
            chain = chains.get(used)
            if chain is None:
                return math.inf  # no feasible chain starts with these negative edges
            lb = max(lb, chain[v])
        return cost + lb

    best_cost = math.inf
    best_seq: Optional[Tuple[int, ...]] = None
    visited = bytearray(graph.node_count)
    visited[s] = 1
    seq: List[int] = []

    def prunable(lb: float) -> bool:
        if best_seq is None:
            return False
        tol = tie_tol(best_cost)
        if lb > best_cost + tol:
            return True
        # can at best tie; a lexicographically larger prefix cannot win the tie
        if lb >= best_cost - tol:
            return tuple(seq) > best_seq[: len(seq)]
        return False

    # explicit stack of child iterators keeps deep paths off the recursion limit
    def children(u: int, cost: float, neg_used: float, used: Tuple[int, ...]):
        # distances that avoid the partial path also detect dead ends early
        here = _nonneg_distances_to(graph, t, w, visited) if strengthen else plus
        out = []
        for e in graph.out_edges[u]:
            v = heads[e]
            if visited[v] or math.isinf(here[v]):
                continue
            c = cost + w[e]
            if w[e] < 0:
                nu, nused = neg_used + w[e], used + (e,)
            else:
                nu, nused = neg_used, used
            lb = bound(v, c, nu, nused, here)
            out.append((lb, e, v, c, nu, nused))
        out.sort(key=lambda item: (item[0], item[1]))
        return out

    if on_bound is not None:
        on_bound((), bound(s, 0.0, 0.0, (), plus))
    stack = [iter(children(s, 0.0, 0.0, ()))]
    if stats is not None:
        stats.expansions += 1
    while stack:
        item = next(stack[-1], None)
        if item is None:
            stack.pop()
            if seq:
                visited[heads[seq.pop()]] = 0
            continue
        lb, e, v, c, nu, used = item
        seq.append(e)
        if on_bound is not None:
            on_bound(tuple(seq), lb)
        if prunable(lb):
            seq.pop()
            if stats is not None:
                stats.pruned += 1
            continue
        if v == t:
            if improves(c, seq, best_cost, best_seq):
                best_cost, best_seq = c, tuple(seq)
                if stats is not None:
                    stats.incumbents += 1
            seq.pop()
            continue
        visited[v] = 1
        if stats is not None:
            stats.expansions += 1
        stack.append(iter(children(v, c, nu, used)))
    if best_seq is None:
        raise Unreachable(f"no elementary path from {s} to {t}")
    return Path(s, t, best_seq, path_cost(w, best_seq))


def _label_correcting_tree(
    graph: DirectedGraph, src: int, w: List[float], allowed: Sequence[bool]
) -> Tuple[List[float], List[int]]:
    """Bellman-Ford from ``src`` over allowed edges; returns distances and predecessor edges."""
    n = graph.node_count
    dist = [math.inf] * n
    pred = [-1] * n
    dist[src] = 0.0
    tails = graph.tails.tolist()
    heads = graph.heads.tolist()
    edges = [e for e in range(graph.edge_count) if allowed[e]]
    for _ in range(n):
        changed = False
        for e in edges:
            du = dist[tails[e]]
            if du == math.inf:
                continue
            nd = du + w[e]
            v = heads[e]
            old = dist[v]
            if old == math.inf or nd < old - RELAX_RTOL * (1.0 + abs(old)):
                dist[v] = nd
                pred[v] = e
                changed = True
        if not changed:
            return dist, pred
    raise NegativeCycle("negative cycle reachable from node %d" % src)


def _tree_path(graph: DirectedGraph, pred: List[int], src: int, dst: int) -> List[int]:
    seq = []
    cur = dst
    while cur != src:
        e = pred[cur]
        if e < 0 or len(seq) > graph.node_count:
            raise NegativeCycle("predecessor structure is not a tree")
        seq.append(e)
        cur = int(graph.tails[e])
    seq.reverse()
    return seq


SubsetPenalty = Callable[[FrozenSet[int]], float]


def edge_progression_solver(
    graph: DirectedGraph,
    s: int,
    t: int,
    pool: Sequence[int],
    costs=None,
    subset_penalty: Optional[SubsetPenalty] = None,
    *,
    max_pool: int = 8,
    stats: Optional[SearchStats] = None,
) -> Path:
    """Minimum-cost s-t edge progression (walk) with a cost depending on which pool edges it uses.

    The objective is the walk cost under ``costs`` (edges counted with
    multiplicity) plus ``subset_penalty(S)`` where ``S`` is the set of pool
    edges traversed at least once.  Every subset of the pool and every order
    of its edges is tried; the gaps are bridged by shortest walks in the graph
    without the unused pool edges.  The returned ``Path`` may repeat nodes and
    edges; its ``cost`` is the full objective.
    """
    w = _cost_list(graph, costs)
    s, t = graph.check_node(s), graph.check_node(t)
    pool = sorted(set(int(e) for e in pool))
    if len(pool) > max_pool:
        raise ContractViolation(f"pool of {len(pool)} edges exceeds the cap of {max_pool}")
    if any(not 0 <= e < graph.edge_count for e in pool):
        raise ContractViolation("pool edge outside graph")
    if detect_negative_cycle(graph, w):
        raise NegativeCycle("edge costs contain a negative cycle")
    pool_set = set(pool)
    tails = graph.tails.tolist()
    heads = graph.heads.tolist()
    best_cost = math.inf
    best_seq: Optional[Tuple[int, ...]] = None
    for r in range(len(pool) + 1):
        for subset in combinations(pool, r):
            dropped = pool_set.difference(subset)
            allowed = [e not in dropped for e in range(graph.edge_count)]
            penalty = subset_penalty(frozenset(subset)) if subset_penalty is not None else 0.0
            trees = {}
            for src in {s, *(heads[e] for e in subset)}:
                trees[src] = _label_correcting_tree(graph, src, w, allowed)
            for order in permutations(subset):
                if stats is not None:
                    stats.permutations += 1
                legs = list(zip([s] + [heads[e] for e in order], [tails[e] for e in order] + [t]))
                total = penalty + sum(w[e] for e in order)
                for a, b in legs:
                    total += trees[a][0][b]
                if math.isinf(total):
                    continue
                if best_seq is not None and total > best_cost + tie_tol(best_cost):
                    continue
                seq: List[int] = []
                for i, (a, b) in enumerate(legs):
                    seq.extend(_tree_path(graph, trees[a][1], a, b))
                    if i < len(order):
                        seq.append(order[i])
                if improves(total, seq, best_cost, best_seq):
                    best_cost, best_seq = total, tuple(seq)
    if best_seq is None:
        raise Unreachable(f"no edge progression from {s} to {t}")
    return Path(s, t, best_seq, best_cost)
