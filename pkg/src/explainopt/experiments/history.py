"""Historic databases built by perturbing nominal weights."""
from __future__ import annotations

import json
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..framework import ContractViolation, HistoricRecord, StPair
from ..graph import DirectedGraph
from ..seeding import HISTORY, rng_for
from ..shortest_path import dijkstra
from .grid import perturb_weights


def historic_record(
    graph: DirectedGraph,
    weights: np.ndarray,
    st: StPair,
    feature_edges: Sequence[int],
    record_id,
    lam: float = 1.0,
    timestamp=None,
) -> HistoricRecord:
    """Record whose solution is the shortest path under ``weights``."""
    path = dijkstra(graph, st[0], st[1], weights)
    return HistoricRecord(
        id=record_id,
        instance_features=np.asarray(weights, dtype=float)[np.asarray(feature_edges, dtype=np.intp)],
        st_pair=st,
        solution_incidence=path.incidence(graph.edge_count),
        lam=lam,
        timestamp=timestamp,
    )


def build_history(
    graph: DirectedGraph,
    c: np.ndarray,
    n: int,
    sigma: float,
    st: StPair,
    seed: int,
    feature_edges: Sequence[int],
    undirected: Optional[np.ndarray] = None,
    stream: Sequence[int] = (),
) -> List[HistoricRecord]:
    """``n`` records from independently perturbed copies of ``c``.

    Record ``i`` draws from stream ``(seed, *stream, HISTORY, i)``.
    """
    if n < 1:
        raise ContractViolation("history needs at least one record")
    records = []
    for i in range(n):
        w = perturb_weights(c, sigma, rng_for(seed, *stream, HISTORY, i), undirected)
        records.append(historic_record(graph, w, st, feature_edges, i))
    return records


# ------------------------------------------------------------- history files
#
# JSON layout: {"config", "s", "t", "instance_feature_edges",
# "solution_feature_edges" (null = all edges), "symmetric", "records": [...]}
# with each record as {"id", "st", "features", "edges", "lam", "timestamp"}.
# Query features are read off the graph file: its weights on the instance
# feature edges.


def history_payload(
    records: Sequence[HistoricRecord],
    s: int,
    t: int,
    instance_feature_edges: Sequence[int],
    solution_feature_edges: Optional[Sequence[int]] = None,
    symmetric: bool = False,
    config: Optional[dict] = None,
) -> dict:
    return {
        "config": config or {},
        "s": int(s),
        "t": int(t),
        "instance_feature_edges": [int(e) for e in instance_feature_edges],
        "solution_feature_edges": None if solution_feature_edges is None else [int(e) for e in solution_feature_edges],
        "symmetric": bool(symmetric),
        "records": [
            {
                "id": r.id,
                "st": [int(r.st_pair[0]), int(r.st_pair[1])],
                "features": [float(v) for v in r.instance_features],
                "edges": np.flatnonzero(r.solution_incidence).tolist(),
                "lam": float(r.lam),
                "timestamp": None if r.timestamp is None else list(r.timestamp),
            }
            for r in records
        ],
    }


def write_history(payload: dict, dest) -> None:
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_history(src, edge_count: int) -> Tuple[dict, List[HistoricRecord]]:
    """Parse a history file; incidences are rebuilt at length ``edge_count``."""
    with open(src, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractViolation(f"{src}: not valid JSON ({exc})") from None
    for key in ("s", "t", "instance_feature_edges", "records"):
        if key not in payload:
            raise ContractViolation(f"{src}: missing key {key!r}")
    records = []
    for i, rec in enumerate(payload["records"]):
        try:
            x = np.zeros(edge_count, dtype=np.int8)
            edges = np.asarray(rec["edges"], dtype=np.int64)
            if edges.size and (edges.min() < 0 or edges.max() >= edge_count):
                raise ContractViolation("edge id outside graph")
            x[edges] = 1
            ts = rec.get("timestamp")
            records.append(HistoricRecord(
                id=rec["id"],
                instance_features=rec["features"],
                st_pair=(int(rec["st"][0]), int(rec["st"][1])),
                solution_incidence=x,
                lam=float(rec.get("lam", 1.0)),
                timestamp=None if ts is None else tuple(ts),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractViolation(f"{src}: record {i}: {exc}") from None
    return payload, records
