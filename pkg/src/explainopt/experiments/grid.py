"""Two grid "districts" joined by a few bridge edges."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..framework import ContractViolation
from ..graph import DirectedGraph
from ..seeding import SeedLike, as_rng


@dataclass(frozen=True)
class GridSpec:
    rows: int = 6
    cols: int = 6
    bridge_count: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ContractViolation("grid dimensions must be positive")
        if not 1 <= self.bridge_count <= self.rows:
            raise ContractViolation(f"bridge_count must lie in [1, rows={self.rows}]")


@dataclass(frozen=True)
class DoubleGrid:
    """Generated topology plus bookkeeping.

    ``undirected[e]`` numbers the street each directed edge belongs to (an
    antiparallel pair shares one number); ``bridges`` lists the left-to-right
    bridge edges, ``bridge_pairs`` both directions.
    """

    graph: DirectedGraph
    s: int
    t: int
    spec: GridSpec
    undirected: np.ndarray
    bridges: Tuple[int, ...]
    bridge_pairs: Tuple[int, ...]

    @property
    def n_undirected(self) -> int:
        return int(self.undirected.max()) + 1 if len(self.undirected) else 0


def bridge_rows(rows: int, bridge_count: int) -> List[int]:
    """Evenly spaced rows: the centers of ``bridge_count`` equal row bands."""
    return [((2 * j + 1) * rows) // (2 * bridge_count) for j in range(bridge_count)]


def generate_double_grid(spec: GridSpec, c: Optional[np.ndarray] = None) -> DoubleGrid:
    """Build the topology; weights default to one until sampled."""
    r, k = spec.rows, spec.cols
    half = r * k
    tails: List[int] = []
    heads: List[int] = []
    undirected: List[int] = []

    def street(u, v):
        idx = len(undirected) // 2
        tails.extend((u, v))
        heads.extend((v, u))
        undirected.extend((idx, idx))

    for offset in (0, half):
        for i in range(r):
            for j in range(k - 1):
                street(offset + i * k + j, offset + i * k + j + 1)
        for i in range(r - 1):
            for j in range(k):
                street(offset + i * k + j, offset + (i + 1) * k + j)
    bridges = []
    for i in bridge_rows(r, spec.bridge_count):
        bridges.append(len(tails))
        street(i * k + (k - 1), half + i * k)
    m = len(tails)
    weights = np.ones(m) if c is None else np.asarray(c, dtype=float)
    graph = DirectedGraph(2 * half, tails, heads, weights, weights)
    pairs = tuple(sorted(bridges + [b + 1 for b in bridges]))
    return DoubleGrid(graph, 0, 2 * half - 1, spec, np.array(undirected, dtype=np.int64), tuple(bridges), pairs)


def sample_nominal_weights(grid: DoubleGrid, seed: SeedLike) -> DoubleGrid:
    """Uniform(0, 2) weight per street; lengths equal the weights."""
    rng = as_rng(seed)
    per_street = rng.uniform(0.0, 2.0, size=grid.n_undirected)
    c = per_street[grid.undirected]
    return DoubleGrid(grid.graph.with_weights(c, c), grid.s, grid.t, grid.spec, grid.undirected, grid.bridges, grid.bridge_pairs)


def perturb_weights(c: np.ndarray, sigma: float, seed: SeedLike, undirected: Optional[np.ndarray] = None) -> np.ndarray:
    """Add Normal(0, sigma) noise per street and clamp at zero."""
    if sigma < 0:
        raise ContractViolation("sigma must be nonnegative")
    c = np.asarray(c, dtype=float)
    rng = as_rng(seed)
    if undirected is None:
        noise = rng.normal(0.0, sigma, size=c.shape) if sigma > 0 else np.zeros_like(c)
    else:
        n = int(undirected.max()) + 1 if len(undirected) else 0
        noise = (rng.normal(0.0, sigma, size=n) if sigma > 0 else np.zeros(n))[undirected]
    return np.maximum(c + noise, 0.0)
