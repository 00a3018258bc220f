import io
import re

import numpy as np
import pytest

from explainopt.explainable_sp import ExplainableInstance, solve
from explainopt.framework import HistoricRecord, Neighbor, NeighborSet
from explainopt.graph import DirectedGraph, graph_from_edges
from explainopt.lp import build_mtz_model, export_mtz_lp, format_lp
from explainopt.oracle import enumerate_elementary_paths


def sections(text):
    """Map LP section name -> list of stripped body lines."""
    out, current = {}, None
    for line in text.splitlines():
        if line.startswith("\\"):
            continue
        if not line.startswith(" "):
            current = line.strip()
            out[current] = []
        else:
            out[current].append(line.strip())
    return out


def five_node(neighbors=()):
    edges = [(0, 1, 1.0, 1.0), (0, 2, 2.0, 1.0), (1, 2, 0.5, 1.0), (2, 3, 1.0, 1.0), (1, 3, 2.5, 1.0), (3, 4, 1.0, 1.0), (2, 4, 3.0, 1.0), (3, 1, 0.2, 1.0)]
    g = graph_from_edges(5, edges)
    return ExplainableInstance(g, 0, 4, NeighborSet(tuple(neighbors)))


def one_neighbor(x, w=1.0):
    return Neighbor(HistoricRecord("h", [0.0], (0, 4), x), 0.0, w)


def test_structure_counts():
    inst = five_node()
    g = inst.graph
    text = export_mtz_lp(inst, 0.5)
    sec = sections(text)
    assert list(sec) == ["Minimize", "Subject To", "Bounds", "Binaries", "End"]
    binaries = " ".join(sec["Binaries"]).split()
    assert binaries == [f"x_{e}" for e in range(g.edge_count)]
    assert sec["Bounds"] == [f"t_{v} >= 0" for v in range(g.node_count)]
    rows = " ".join(sec["Subject To"]).split(" ")
    names = [tok[:-1] for tok in rows if tok.endswith(":")]
    assert sum(n.startswith("flow_") for n in names) == g.node_count
    interior = [e for e in range(g.edge_count) if not {*g.edge(e)} & {0, 4}]
    assert [n for n in names if n.startswith("mtz_")] == [f"mtz_{e}" for e in interior]


def test_alpha_one_objective_is_costs():
    inst = five_node([one_neighbor(np.array([1, 0, 1, 1, 0, 1, 0, 0]))])
    text = export_mtz_lp(inst, 1.0)
    obj = sections(text)["Minimize"]
    terms = re.findall(r"([+-]) (\S+) (x_\d+)", " ".join(obj))
    coef = {name: float(v) * (1 if sign == "+" else -1) for sign, v, name in terms}
    assert coef == {f"x_{e}": inst.graph.c[e] for e in range(inst.graph.edge_count)}
    assert "objective constant: 0.0" in text


def test_constant_in_comment():
    inst = five_node([one_neighbor(np.array([1, 0, 1, 1, 0, 1, 0, 0]))])
    model = build_mtz_model(inst, 0.25)
    assert model.constant == pytest.approx(0.75 * 4.0)
    assert f"\\ objective constant: {model.constant!r}" in format_lp(model)


def test_writes_to_path_and_stream(tmp_path):
    inst = five_node()
    text = export_mtz_lp(inst, 0.5, tmp_path / "m.lp", comment="seed 1\nalpha 0.5")
    assert (tmp_path / "m.lp").read_text() == text
    assert text.startswith("\\ seed 1\n\\ alpha 0.5\n")
    buf = io.StringIO()
    export_mtz_lp(inst, 0.5, buf)
    assert buf.getvalue().endswith("End\n")


def test_model_optimum_matches_solve_with_scipy():
    pytest.importorskip("scipy")
    from explainopt.lp import solve_model_with_scipy

    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(30):
        n = 5
        # no edges into s or out of t, so the ordering rows rule out every cycle
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v and v != 0 and u != n - 1 and rng.random() < 0.5]
        if not pairs:
            continue
        m = len(pairs)
        g = DirectedGraph(n, [a for a, _ in pairs], [b for _, b in pairs], rng.uniform(0, 2, m), rng.uniform(0, 2, m))
        paths = list(enumerate_elementary_paths(g, 0, n - 1))
        if not paths:
            continue
        nbs = tuple(
            Neighbor(HistoricRecord(i, [0.0], (0, n - 1), paths[rng.integers(len(paths))].incidence(m)), 0.0, float(rng.uniform(0, 1)))
            for i in range(3)
        )
        inst = ExplainableInstance(g, 0, n - 1, NeighborSet(nbs))
        for alpha in (0.0, 0.5, 1.0):
            value, _ = solve_model_with_scipy(build_mtz_model(inst, alpha))
            assert value == pytest.approx(solve(inst, alpha).scalarized, abs=1e-6)
            checked += 1
    assert checked > 30


def test_cycle_through_source_and_target_is_not_excluded():
    # the ordering rows skip edges at s and t, so a rewarded loop t->3->s survives
    pytest.importorskip("scipy")
    from explainopt.lp import solve_model_with_scipy

    g = graph_from_edges(4, [(0, 1, 1, 1), (1, 2, 1, 1), (2, 3, 1, 1), (3, 0, 1, 1)])
    hist = Neighbor(HistoricRecord("h", [0.0], (0, 2), np.array([1, 1, 1, 1])), 0.0, 1.0)
    inst = ExplainableInstance(g, 0, 2, NeighborSet((hist,)))
    value, chosen = solve_model_with_scipy(build_mtz_model(inst, 0.0))
    assert set(chosen) == {"x_0", "x_1", "x_2", "x_3"}
    assert value == pytest.approx(0.0)
    assert solve(inst, 0.0).scalarized == pytest.approx(2.0)
