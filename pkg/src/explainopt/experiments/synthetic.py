"""The double-grid experiment: random nominal weights, perturbed history, alpha sweep per run."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Tuple

from ..explainable_sp import ExplainableInstance
from ..framework import ContractViolation, select_neighbors
from ..seeding import NOMINAL, SUITE, rng_for
from .grid import DoubleGrid, GridSpec, generate_double_grid, sample_nominal_weights
from .history import build_history
from .sweep import ParetoPoint, alpha_sweep, default_alphas, pareto_payload

FEATURE_MODES = ("all", "bridges")


@dataclass(frozen=True)
class GridProtocol:
    rows: int = 6
    cols: int = 6
    bridges: int = 3
    sigma: float = 2.0
    n_history: int = 50
    k: int = 5
    beta: float = 1.0
    features: str = "all"  # solution features on every edge, or on the bridges only
    symmetric: bool = False
    alphas: int = 101
    runs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.features not in FEATURE_MODES:
            raise ContractViolation(f"features must be one of {FEATURE_MODES}")
        if self.runs < 1:
            raise ContractViolation("need at least one run")
        GridSpec(self.rows, self.cols, self.bridges, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


def make_run(cfg: GridProtocol, run: int) -> Tuple[ExplainableInstance, DoubleGrid]:
    """Instance of run ``run``: nominal weights, history and neighbor set."""
    spec = GridSpec(cfg.rows, cfg.cols, cfg.bridges, cfg.seed)
    grid = sample_nominal_weights(generate_double_grid(spec), rng_for(cfg.seed, run, NOMINAL))
    g = grid.graph
    st = (grid.s, grid.t)
    history = build_history(g, g.c, cfg.n_history, cfg.sigma, st, cfg.seed, grid.bridges, grid.undirected, stream=(run,))
    neighbors = select_neighbors(g.c[list(grid.bridges)], st, history, k=cfg.k, beta=cfg.beta)
    instance = ExplainableInstance(
        graph=g,
        s=grid.s,
        t=grid.t,
        neighbors=neighbors,
        instance_feature_edges=grid.bridges,
        solution_feature_edges=None if cfg.features == "all" else grid.bridges,
        symmetric=cfg.symmetric,
    )
    return instance, grid


def _sweep_run(args) -> List[ParetoPoint]:
    cfg, run = args
    instance, _ = make_run(cfg, run)
    return alpha_sweep(instance, default_alphas(cfg.alphas))


def run_protocol(cfg: GridProtocol, workers: int = 1) -> Tuple[List[List[ParetoPoint]], dict]:
    """All runs of the protocol; results are ordered by run regardless of ``workers``."""
    jobs = [(cfg, r) for r in range(cfg.runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(_sweep_run, jobs))
    else:
        curves = [_sweep_run(j) for j in jobs]
    return curves, pareto_payload({"protocol": "grid", **cfg.to_dict()}, curves)


def suite_config(seed: int, max_side: int = 4, bridges: int = 2, n_history: int = 10, k: int = 5) -> GridProtocol:
    """Small random double grid for oracle cross-checks; side lengths drawn from ``2..max_side``."""
    rows, cols = (int(v) for v in rng_for(seed, SUITE).integers(2, max_side + 1, size=2))
    return GridProtocol(rows=rows, cols=cols, bridges=min(bridges, rows), n_history=n_history, k=k, runs=1, seed=seed)


def suite_instance(seed: int, **kwargs) -> ExplainableInstance:
    return make_run(suite_config(seed, **kwargs), 0)[0]
