"""Directed multigraph with nominal weights and fixed lengths per edge."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .framework import ContractViolation


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable directed graph.

    Edge ``e`` runs ``tails[e] -> heads[e]`` with nominal weight ``c[e]`` and
    length ``l[e]``, both nonnegative.  Parallel edges are allowed, self-loops
    are not.  Per-edge *solver* costs (which may be negative) are always passed
    separately.
    """

    node_count: int
    tails: np.ndarray
    heads: np.ndarray
    c: np.ndarray
    l: np.ndarray
    out_edges: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    in_edges: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tails = np.asarray(self.tails, dtype=np.int64)
        heads = np.asarray(self.heads, dtype=np.int64)
        c = np.asarray(self.c, dtype=float)
        lengths = np.asarray(self.l, dtype=float)
        m = len(tails)
        if not (len(heads) == len(c) == len(lengths) == m):
            raise ContractViolation("edge arrays must have equal length")
        if self.node_count < 1:
            raise ContractViolation("graph needs at least one node")
        if m and (tails.min() < 0 or heads.min() < 0 or max(tails.max(), heads.max()) >= self.node_count):
            raise ContractViolation("edge endpoint outside node range")
        if np.any(tails == heads):
            raise ContractViolation("self-loops are not allowed")
        if np.any(c < 0) or np.any(lengths < 0) or not np.all(np.isfinite(c)) or not np.all(np.isfinite(lengths)):
            raise ContractViolation("nominal weights and lengths must be finite and nonnegative")
        for arr in (tails, heads, c, lengths):
            arr.setflags(write=False)
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "l", lengths)
        out: List[List[int]] = [[] for _ in range(self.node_count)]
        inc: List[List[int]] = [[] for _ in range(self.node_count)]
        for e in range(m):
            out[tails[e]].append(e)
            inc[heads[e]].append(e)
        object.__setattr__(self, "out_edges", tuple(tuple(x) for x in out))
        object.__setattr__(self, "in_edges", tuple(tuple(x) for x in inc))

    @property
    def edge_count(self) -> int:
        return len(self.tails)

    def edge(self, e: int) -> Tuple[int, int]:
        return int(self.tails[e]), int(self.heads[e])

    def with_weights(self, c: Sequence[float], l: Optional[Sequence[float]] = None) -> "DirectedGraph":
        return DirectedGraph(self.node_count, self.tails, self.heads, c, self.l if l is None else l)

    def reverse_edges(self) -> np.ndarray:
        """Map each edge to an antiparallel twin (lowest id), or -1 if none exists."""
        index: Dict[Tuple[int, int], int] = {}
        for e in range(self.edge_count):
            index.setdefault((int(self.tails[e]), int(self.heads[e])), e)
        return np.array(
            [index.get((int(self.heads[e]), int(self.tails[e])), -1) for e in range(self.edge_count)],
            dtype=np.int64,
        )

    def check_node(self, v: int) -> int:
        if not 0 <= v < self.node_count:
            raise ContractViolation(f"node {v} not in graph")
        return int(v)


@dataclass(frozen=True)
class Path:
    """An s-t edge sequence; ``cost`` is under whatever costs produced it."""

    source: int
    target: int
    edge_ids: Tuple[int, ...]
    cost: float = 0.0

    def nodes(self, graph: DirectedGraph) -> Tuple[int, ...]:
        seq = [self.source]
        for e in self.edge_ids:
            seq.append(int(graph.heads[e]))
        return tuple(seq)

    def incidence(self, n_edges: int) -> np.ndarray:
        """0/1 indicator of edges used at least once."""
        x = np.zeros(n_edges, dtype=np.int8)
        if self.edge_ids:
            x[list(self.edge_ids)] = 1
        return x

    def is_elementary(self, graph: DirectedGraph) -> bool:
        nodes = self.nodes(graph)
        return len(set(nodes)) == len(nodes)


def validate_walk(graph: DirectedGraph, s: int, t: int, edge_ids: Sequence[int]) -> None:
    """Raise unless ``edge_ids`` chain head-to-tail from ``s`` to ``t``."""
    cur = s
    for e in edge_ids:
        if not 0 <= e < graph.edge_count or graph.tails[e] != cur:
            raise ContractViolation(f"edge {e} does not continue the walk at node {cur}")
        cur = int(graph.heads[e])
    if cur != t:
        raise ContractViolation(f"walk ends at {cur}, expected {t}")


def path_from_incidence(graph: DirectedGraph, s: int, t: int, x: Sequence[int]) -> Path:
    """Recover the elementary s-t path encoded by a 0/1 incidence vector."""
    x = np.asarray(x)
    if x.shape != (graph.edge_count,) or not np.all((x == 0) | (x == 1)):
        raise ContractViolation("incidence must be a 0/1 vector over the edges")
    chosen = set(np.flatnonzero(x).tolist())
    seq: List[int] = []
    cur = s
    seen = {s}
    while cur != t:
        nxt = [e for e in graph.out_edges[cur] if e in chosen]
        if len(nxt) != 1:
            raise ContractViolation(f"incidence is not a simple s-t path (node {cur})")
        e = nxt[0]
        chosen.discard(e)
        seq.append(e)
        cur = int(graph.heads[e])
        if cur in seen:
            raise ContractViolation("incidence revisits a node")
        seen.add(cur)
    if chosen:
        raise ContractViolation("incidence contains edges off the s-t path")
    return Path(s, t, tuple(seq), path_cost(graph.c, seq))



def path_cost(costs: Sequence[float], edge_ids: Iterable[int]) -> float:
    """Correctly rounded total, so every routine reports the same float for one path."""
    return math.fsum(costs[e] for e in edge_ids)


PathLike = Union[str, FsPath]

GRAPH_HEADER = ["edge_id", "tail", "head", "c", "l"]


def write_graph_csv(graph: DirectedGraph, dest: PathLike) -> None:
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRAPH_HEADER)
        for e in range(graph.edge_count):
            w.writerow([e, int(graph.tails[e]), int(graph.heads[e]), repr(float(graph.c[e])), repr(float(graph.l[e]))])


def read_graph_csv(src: PathLike, node_count: Optional[int] = None) -> DirectedGraph:
    """Parse ``edge_id,tail,head,c,l``; edge ids must be exactly ``0..m-1``.

    The node count is inferred as one more than the largest endpoint unless given.
    """
    with open(src, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != GRAPH_HEADER:
            raise GraphFormatError(f"{src}: expected header {','.join(GRAPH_HEADER)}")
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise GraphFormatError(f"{src}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                eid, tail, head = int(row[0]), int(row[1]), int(row[2])
                c, length = float(row[3]), float(row[4])
            except ValueError as exc:
                raise GraphFormatError(f"{src}:{lineno}: {exc}") from None
            if eid in rows:
                raise GraphFormatError(f"{src}:{lineno}: duplicate edge id {eid}")
            rows[eid] = (tail, head, c, length)
    m = len(rows)
    if sorted(rows) != list(range(m)):
        raise GraphFormatError(f"{src}: edge ids must be 0..{m - 1}")
    data = [rows[e] for e in range(m)]
    tails = [r[0] for r in data]
    heads = [r[1] for r in data]
    n = node_count if node_count is not None else (max(tails + heads) + 1 if m else 1)
    try:
        return DirectedGraph(n, tails, heads, [r[2] for r in data], [r[3] for r in data])
    except ContractViolation as exc:
        raise GraphFormatError(f"{src}: {exc}") from None


def graph_from_edges(node_count: int, edges: Iterable[Tuple[int, int, float, float]]) -> DirectedGraph:
    edges = list(edges)
    return DirectedGraph(
        node_count,
        [e[0] for e in edges],
        [e[1] for e in edges],
        [e[2] for e in edges],
        [e[3] for e in edges],
    )
