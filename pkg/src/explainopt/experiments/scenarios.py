"""Road-network scenarios: ingestion, daytime filtering and a synthetic stand-in.

Topology CSV: ``edge_id,tail,head,x_tail,y_tail,x_head,y_head``; edge lengths
are the Euclidean distances between the endpoint coordinates.

Scenario CSV: ``date,minutes_of_day,<edge id>...`` with one row per recorded
time step and one velocity column per edge.  Gaps in the timeline are fine.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..explainable_sp import ExplainableInstance
from ..framework import ContractViolation, HistoricRecord, select_neighbors
from ..graph import DirectedGraph
from ..seeding import QUERY, SeedLike, as_rng, rng_for
from ..shortest_path import Unreachable, dijkstra
from .history import historic_record
from .sweep import ParetoPoint, alpha_sweep, default_alphas, pareto_payload

TOPOLOGY_COLUMNS = ["edge_id", "tail", "head", "x_tail", "y_tail", "x_head", "y_head"]
WEIGHT_MODES = ("velocity", "travel_time")
MINUTES_PER_DAY = 24 * 60


class ScenarioFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSet:
    """Recorded per-edge velocities on one topology.

    ``topology`` carries the edge lengths; its nominal weights are placeholders.
    """

    topology: DirectedGraph
    dates: Tuple[str, ...]
    minutes: np.ndarray
    velocities: np.ndarray  # (scenarios, edges)

    def __len__(self) -> int:
        return len(self.dates)

    def weights(self, i: int, mode: str = "velocity") -> np.ndarray:
        """Edge weights of scenario ``i``: raw velocity, or length / velocity."""
        if mode not in WEIGHT_MODES:
            raise ContractViolation(f"weight mode must be one of {WEIGHT_MODES}")
        v = self.velocities[i]
        if mode == "velocity":
            return v.copy()
        with np.errstate(divide="ignore"):
            return np.where(v > 0, self.topology.l / np.where(v > 0, v, 1.0), np.inf)

    def subset(self, idx: Sequence[int]) -> "ScenarioSet":
        idx = list(idx)
        return ScenarioSet(self.topology, tuple(self.dates[i] for i in idx), self.minutes[idx], self.velocities[idx])


def _read_topology(path) -> DirectedGraph:
    df = pd.read_csv(path)
    missing = [c for c in TOPOLOGY_COLUMNS if c not in df.columns]
    if missing:
        raise ScenarioFormatError(f"{path}: missing topology columns {missing}")
    df = df.sort_values("edge_id")
    if df["edge_id"].tolist() != list(range(len(df))):
        raise ScenarioFormatError(f"{path}: edge ids must be 0..{len(df) - 1}")
    lengths = np.hypot(df["x_head"].to_numpy(float) - df["x_tail"].to_numpy(float),
                       df["y_head"].to_numpy(float) - df["y_tail"].to_numpy(float))
    tails = df["tail"].to_numpy(np.int64)
    heads = df["head"].to_numpy(np.int64)
    n = int(max(tails.max(), heads.max())) + 1
    return DirectedGraph(n, tails, heads, np.zeros(len(df)), lengths)


def load_scenarios(topology_file, scenario_file) -> ScenarioSet:
    """Parse both files; every edge of the topology needs a velocity column."""
    topo = _read_topology(topology_file)
    df = pd.read_csv(scenario_file, dtype={"date": str}, engine="c")
    for col in ("date", "minutes_of_day"):
        if col not in df.columns:
            raise ScenarioFormatError(f"{scenario_file}: missing column {col!r}")
    edge_cols = [str(e) for e in range(topo.edge_count)]
    have = set(map(str, df.columns))
    for col in edge_cols:
        if col not in have:
            raise ScenarioFormatError(f"{scenario_file}: no column for edge {col}")
    df.columns = [str(c) for c in df.columns]
    block = df[edge_cols]
    values = block.to_numpy(dtype=float, na_value=np.nan) if all(block.dtypes.map(lambda d: d.kind == "f" or d.kind == "i")) else None
    if values is None or np.isnan(values).any():
        _raise_bad_cell(block, scenario_file)
    if (values < 0).any():
        r, c = np.argwhere(values < 0)[0]
        raise ScenarioFormatError(f"{scenario_file}: row {r + 2}, edge {edge_cols[c]}: negative velocity")
    minutes = df["minutes_of_day"].to_numpy()
    if not np.issubdtype(minutes.dtype, np.integer) or ((minutes < 0) | (minutes >= MINUTES_PER_DAY)).any():
        raise ScenarioFormatError(f"{scenario_file}: minutes_of_day must be integers in [0, 1440)")
    return ScenarioSet(topo, tuple(df["date"].tolist()), minutes.astype(np.int64), values)


def _raise_bad_cell(block: pd.DataFrame, src) -> None:
    for c in block.columns:
        col = pd.to_numeric(block[c], errors="coerce")
        bad = np.flatnonzero(col.isna().to_numpy())
        if len(bad):
            r = int(bad[0])
            raise ScenarioFormatError(f"{src}: row {r + 2}, edge {c}: cannot parse {block[c].iloc[r]!r} as a number")
    raise ScenarioFormatError(f"{src}: unparseable velocity block")


def daytime_gap(a: np.ndarray, b: int) -> np.ndarray:
    """Circular distance in minutes between times of day."""
    d = np.abs(np.asarray(a) - b) % MINUTES_PER_DAY
    return np.minimum(d, MINUTES_PER_DAY - d)


def time_window_filter(scenarios: ScenarioSet, query_minutes: int, window_minutes: int) -> List[int]:
    """Indices of scenarios within ``window_minutes`` of the query time of day (date ignored)."""
    if window_minutes < 0:
        raise ContractViolation("window must be nonnegative")
    return np.flatnonzero(daytime_gap(scenarios.minutes, int(query_minutes)) <= window_minutes).tolist()


def scenario_instance(
    scenarios: ScenarioSet,
    query: int,
    st: Tuple[int, int],
    *,
    window: int = 30,
    k: int = 5,
    beta: float = 1.0,
    mode: str = "velocity",
    exclude_self: bool = True,
) -> Tuple[ExplainableInstance, List[HistoricRecord]]:
    """Query scenario ``query`` explained by the time-filtered remainder.

    All edges serve as instance and solution features.  The query row itself
    (same date and time) is dropped from its own history unless
    ``exclude_self`` is off.
    """
    topo = scenarios.topology
    c = scenarios.weights(query, mode)
    graph = topo.with_weights(c)
    every = list(range(topo.edge_count))
    records = []
    for i in time_window_filter(scenarios, scenarios.minutes[query], window):
        if exclude_self and scenarios.dates[i] == scenarios.dates[query] and scenarios.minutes[i] == scenarios.minutes[query]:
            continue
        w = scenarios.weights(i, mode)
        records.append(historic_record(graph, w, st, every, i, timestamp=(scenarios.dates[i], int(scenarios.minutes[i]))))
    neighbors = select_neighbors(c, st, records, k=k, beta=beta)
    inst = ExplainableInstance(graph, st[0], st[1], neighbors, every, None)
    return inst, records


@dataclass(frozen=True)
class ScenarioProtocol:
    queries: int = 50
    window: int = 30
    k: int = 5
    beta: float = 1.0
    alphas: int = 101
    weight_mode: str = "velocity"
    source: Optional[int] = None
    target: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.weight_mode not in WEIGHT_MODES:
            raise ContractViolation(f"weight mode must be one of {WEIGHT_MODES}")
        if self.queries < 1 or self.window < 0 or self.k < 1:
            raise ContractViolation("queries and k must be positive, window nonnegative")


def pick_st(graph: DirectedGraph, seed: SeedLike) -> Tuple[int, int]:
    """Random distinct pair with t reachable from s."""
    rng = as_rng(seed)
    for _ in range(1000):
        s, t = (int(v) for v in rng.choice(graph.node_count, size=2, replace=False))
        try:
            dijkstra(graph, s, t, np.ones(graph.edge_count))
        except Unreachable:
            continue
        return s, t
    raise ContractViolation("no connected node pair found")


def run_scenario_protocol(scenarios: ScenarioSet, cfg: ScenarioProtocol) -> Tuple[List[List[ParetoPoint]], dict]:
    """Alpha sweeps for randomly drawn query scenarios, one curve per query."""
    rng = rng_for(cfg.seed, QUERY)
    if cfg.source is None or cfg.target is None:
        st = pick_st(scenarios.topology, rng)
    else:
        st = (cfg.source, cfg.target)
    count = min(cfg.queries, len(scenarios))
    queries = sorted(int(q) for q in rng.choice(len(scenarios), size=count, replace=False))
    alphas = default_alphas(cfg.alphas)
    curves, sizes = [], []
    for q in queries:
        inst, records = scenario_instance(scenarios, q, st, window=cfg.window, k=cfg.k, beta=cfg.beta, mode=cfg.weight_mode)
        sizes.append(len(records))
        curves.append(alpha_sweep(inst, alphas))
    config = {"protocol": "scenarios", **asdict(cfg), "source": st[0], "target": st[1]}
    extra = {"queries": [{"index": q, "date": scenarios.dates[q], "minutes_of_day": int(scenarios.minutes[q]), "history": n}
                         for q, n in zip(queries, sizes)]}
    return curves, pareto_payload(config, curves, extra)


# ---------------------------------------------------------------- stand-in data

def standin_topology(seed: SeedLike, n_nodes: int = 538, n_edges: int = 1287):
    """Jittered lattice street network, strongly connected, with exact counts.

    A random spanning tree is made two-way; the remaining edges are one-way
    streets drawn from the other lattice neighbours.
    Returns ``(tails, heads, xy)`` with coordinates in km.
    """
    rng = as_rng(seed)
    cols = max(2, int(math.ceil(math.sqrt(n_nodes))))
    pos = [(i // cols, i % cols) for i in range(n_nodes)]
    index = {p: i for i, p in enumerate(pos)}
    xy = np.array([(c * 0.4, r * 0.4) for r, c in pos]) + rng.normal(0.0, 0.06, size=(n_nodes, 2))
    pairs = []
    for i, (r, c) in enumerate(pos):
        for nb in ((r, c + 1), (r + 1, c)):
            j = index.get(nb)
            if j is not None:
                pairs.append((i, j))
    need_extra = n_edges - 2 * (n_nodes - 1)
    if need_extra < 0 or need_extra > 2 * len(pairs) - 2 * (n_nodes - 1):
        raise ContractViolation("edge count incompatible with the lattice")
    # random spanning tree via Kruskal on random keys
    parent = list(range(n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree, rest = [], []
    for k in rng.permutation(len(pairs)):
        a, b = pairs[k]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.append((a, b))
        else:
            rest.append((a, b))
    directed = []
    for a, b in sorted(tree):
        directed += [(a, b), (b, a)]
    oneway = [(a, b) for a, b in rest] + [(b, a) for a, b in rest]
    pick = rng.choice(len(oneway), size=need_extra, replace=False)
    directed += [oneway[i] for i in sorted(pick)]
    tails = np.array([d[0] for d in directed], dtype=np.int64)
    heads = np.array([d[1] for d in directed], dtype=np.int64)
    return tails, heads, xy


def standin_frames(
    seed: int,
    *,
    n_nodes: int = 538,
    n_edges: int = 1287,
    start: str = "2017-03-28",
    days: int = 46,
    step_minutes: int = 15,
    n_scenarios: int = 4363,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Topology and scenario tables shaped like the bus-velocity data.

    Velocities (km/h) follow a per-edge free-flow speed reduced by a sinusoidal
    daytime congestion profile, with multiplicative noise.  Time steps are
    dropped at random until ``n_scenarios`` rows remain.
    """
    rng = as_rng(seed)
    tails, heads, xy = standin_topology(rng, n_nodes, n_edges)
    topo = pd.DataFrame({
        "edge_id": np.arange(len(tails)),
        "tail": tails,
        "head": heads,
        "x_tail": np.round(xy[tails, 0], 5),
        "y_tail": np.round(xy[tails, 1], 5),
        "x_head": np.round(xy[heads, 0], 5),
        "y_head": np.round(xy[heads, 1], 5),
    })
    slots = MINUTES_PER_DAY // step_minutes
    total = days * slots
    if n_scenarios > total:
        raise ContractViolation("more scenarios requested than time steps available")
    keep = np.sort(rng.choice(total, size=n_scenarios, replace=False))
    day0 = dt.date.fromisoformat(start)
    dates = [(day0 + dt.timedelta(days=int(i // slots))).isoformat() for i in keep]
    minutes = (keep % slots) * step_minutes
    free = rng.uniform(20.0, 50.0, size=len(tails))
    depth = rng.uniform(0.1, 0.6, size=len(tails))
    phase = rng.uniform(-60.0, 60.0, size=len(tails))
    # two congestion peaks per day, around 8:00 and 17:00
    angle = 2 * np.pi * (minutes[:, None] - 480.0 - phase[None, :]) / 540.0
    profile = 0.5 * (1.0 + np.cos(angle))
    noise = rng.normal(1.0, 0.1, size=(n_scenarios, len(tails)))
    vel = np.maximum(free[None, :] * (1.0 - depth[None, :] * profile) * noise, 1.0)
    data = pd.DataFrame(np.round(vel, 2), columns=[str(e) for e in range(len(tails))])
    data.insert(0, "minutes_of_day", minutes.astype(np.int64))
    data.insert(0, "date", dates)
    return topo, data


def write_standin(seed: int, topology_path, scenario_path, **kwargs) -> None:
    topo, data = standin_frames(seed, **kwargs)
    topo.to_csv(topology_path, index=False, lineterminator="\n")
    # velocities carry two decimals; integer formatting is much faster than to_csv
    cents = np.rint(data.iloc[:, 2:].to_numpy() * 100).astype(np.int64)
    with open(scenario_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(map(str, data.columns)) + "\n")
        for d, m, row in zip(data["date"], data["minutes_of_day"], cents):
            fh.write(f"{d},{m}," + ",".join(f"{x // 100}.{x % 100:02d}" for x in row.tolist()) + "\n")


def standin_scenarios(seed: int, **kwargs) -> ScenarioSet:
    """In-memory stand-in, identical to what ``write_standin`` followed by ``load_scenarios`` yields."""
    topo, data = standin_frames(seed, **kwargs)
    tails = topo["tail"].to_numpy(np.int64)
    heads = topo["head"].to_numpy(np.int64)
    lengths = np.hypot(topo["x_head"].to_numpy() - topo["x_tail"].to_numpy(), topo["y_head"].to_numpy() - topo["y_tail"].to_numpy())
    graph = DirectedGraph(int(max(tails.max(), heads.max())) + 1, tails, heads, np.zeros(len(tails)), lengths)
    vel = data[[str(e) for e in range(len(tails))]].to_numpy(float)
    return ScenarioSet(graph, tuple(data["date"]), data["minutes_of_day"].to_numpy(np.int64), vel)
