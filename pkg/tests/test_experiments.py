import csv
import json

import numpy as np
import pytest

from explainopt.experiments.grid import GridSpec, bridge_rows, generate_double_grid, perturb_weights, sample_nominal_weights
from explainopt.experiments.history import build_history, history_payload, read_history, write_history
from explainopt.experiments.sweep import (
    ParetoPoint,
    aggregate_runs,
    alpha_sweep,
    average_price,
    default_alphas,
    front_size,
    is_monotone,
    nondominated_mask,
    pareto_payload,
    price_of_explainability,
    relative_scores,
    write_pareto_csv,
    write_pareto_json,
)
from explainopt.experiments.synthetic import GridProtocol, make_run, run_protocol, suite_instance
from explainopt.framework import ContractViolation
from explainopt.seeding import HISTORY, rng_for
from explainopt.shortest_path import dijkstra


def point(alpha, rel_opt, rel_exp, opt=1.0, exp=1.0):
    return ParetoPoint(alpha, opt, exp, rel_opt, rel_exp, ())


class TestGrid:
    def test_counts_six_by_six(self):
        grid = generate_double_grid(GridSpec(6, 6, 3))
        assert grid.graph.node_count == 72
        assert grid.graph.edge_count == 246
        assert len(grid.bridges) == 3 and len(grid.bridge_pairs) == 6

    def test_degenerate(self):
        grid = generate_double_grid(GridSpec(1, 1, 1))
        assert grid.graph.node_count == 2
        assert grid.graph.edge_count == 2
        assert (grid.s, grid.t) == (0, 1)

    def test_bridges_join_borders(self):
        grid = generate_double_grid(GridSpec(6, 6, 3))
        for b in grid.bridges:
            u, v = grid.graph.edge(b)
            assert u % 6 == 5 and u < 36
            assert v % 6 == 0 and v >= 36
        assert bridge_rows(6, 3) == [1, 3, 5]

    def test_opposite_corners(self):
        grid = generate_double_grid(GridSpec(4, 5, 2))
        assert grid.s == 0 and grid.t == 39

    def test_deterministic(self):
        a = sample_nominal_weights(generate_double_grid(GridSpec(3, 3, 2)), 5)
        b = sample_nominal_weights(generate_double_grid(GridSpec(3, 3, 2)), 5)
        assert np.array_equal(a.graph.c, b.graph.c)
        assert np.array_equal(a.graph.tails, b.graph.tails)

    def test_bridge_count_checked(self):
        with pytest.raises(ContractViolation):
            GridSpec(3, 3, 0)
        with pytest.raises(ContractViolation):
            GridSpec(3, 3, 4)


class TestWeights:
    def test_range_pairs_and_lengths(self):
        grid = sample_nominal_weights(generate_double_grid(GridSpec(6, 6, 3)), 0)
        c = grid.graph.c
        assert c.min() >= 0 and c.max() <= 2
        assert np.array_equal(c[0::2], c[1::2])
        assert np.array_equal(grid.graph.l, c)

    def test_reproducible(self):
        grid = generate_double_grid(GridSpec(3, 3, 1))
        assert np.array_equal(sample_nominal_weights(grid, 9).graph.c, sample_nominal_weights(grid, 9).graph.c)
        assert not np.array_equal(sample_nominal_weights(grid, 9).graph.c, sample_nominal_weights(grid, 10).graph.c)

    def test_zero_sigma_identity(self):
        c = np.array([0.5, 1.0, 1.5])
        assert np.array_equal(perturb_weights(c, 0.0, 1), c)

    def test_clamped_nonnegative(self):
        c = np.random.default_rng(0).uniform(0, 2, 100000)
        out = perturb_weights(c, 2.0, 1)
        assert out.min() >= 0.0
        assert (out == 0).mean() > 0.1

    def test_pairs_share_noise(self):
        grid = sample_nominal_weights(generate_double_grid(GridSpec(3, 3, 1)), 2)
        out = perturb_weights(grid.graph.c, 1.0, 3, grid.undirected)
        assert np.array_equal(out[0::2], out[1::2])

    def test_negative_sigma(self):
        with pytest.raises(ContractViolation):
            perturb_weights(np.ones(2), -1.0, 0)


class TestHistory:
    def setup_method(self):
        self.grid = sample_nominal_weights(generate_double_grid(GridSpec(4, 4, 2)), 1)

    def test_zero_noise_gives_nominal_path(self):
        g = self.grid.graph
        (rec,) = build_history(g, g.c, 1, 0.0, (self.grid.s, self.grid.t), 0, self.grid.bridges)
        assert np.array_equal(rec.solution_incidence, dijkstra(g, self.grid.s, self.grid.t).incidence(g.edge_count))
        assert rec.instance_features.tolist() == g.c[list(self.grid.bridges)].tolist()
        assert rec.lam == 1.0

    def test_records_optimal_for_own_weights(self):
        g = self.grid.graph
        st = (self.grid.s, self.grid.t)
        recs = build_history(g, g.c, 50, 2.0, st, 4, self.grid.bridges, self.grid.undirected)
        assert len(recs) == 50
        for i, r in enumerate(recs):
            w = perturb_weights(g.c, 2.0, rng_for(4, HISTORY, i), self.grid.undirected)
            assert np.dot(w, r.solution_incidence) == pytest.approx(dijkstra(g, *st, w).cost)

    def test_adding_records_keeps_earlier(self):
        g = self.grid.graph
        st = (self.grid.s, self.grid.t)
        a = build_history(g, g.c, 3, 2.0, st, 4, self.grid.bridges)
        b = build_history(g, g.c, 6, 2.0, st, 4, self.grid.bridges)
        for x, y in zip(a, b):
            assert np.array_equal(x.instance_features, y.instance_features)

    def test_file_roundtrip(self, tmp_path):
        g = self.grid.graph
        st = (self.grid.s, self.grid.t)
        recs = build_history(g, g.c, 4, 2.0, st, 0, self.grid.bridges)
        write_history(history_payload(recs, *st, self.grid.bridges, config={"seed": 0}), tmp_path / "h.json")
        payload, back = read_history(tmp_path / "h.json", g.edge_count)
        assert payload["config"] == {"seed": 0}
        for r, q in zip(recs, back):
            assert np.array_equal(r.solution_incidence, q.solution_incidence)
            assert np.array_equal(r.instance_features, q.instance_features)

    def test_bad_history(self, tmp_path):
        f = tmp_path / "h.json"
        f.write_text('{"s": 0, "t": 1, "instance_feature_edges": [], "records": [{"id": 0, "st": [0, 1], "features": [], "edges": [99]}]}')
        with pytest.raises(ContractViolation, match="record 0"):
            read_history(f, 4)
        f.write_text("{")
        with pytest.raises(ContractViolation, match="JSON"):
            read_history(f, 4)


class TestSweep:
    def test_default_grid(self):
        a = default_alphas()
        assert len(a) == 101 and a[0] == 0.0 and a[-1] == 1.0 and a[50] == 0.5

    def test_single_alpha(self):
        (p,) = alpha_sweep(suite_instance(1), [1.0])
        assert p.relative_optimality == 1.0 and p.relative_explainability == 1.0

    def test_relative_scores(self):
        ro, re = relative_scores([2.0, 3.0], [0.0, 0.0])
        assert ro == [1.0, 1.5] and re == [1.0, 1.0]
        assert relative_scores([1.0], [2.0, 4.0])[1] == [1.0, 0.5]

    def test_nondominated(self):
        assert nondominated_mask([1, 2, 2, 3], [3, 2, 3, 1]) == [True, True, False, True]

    def test_monotone_and_ranges(self):
        for seed in range(15):
            curve = alpha_sweep(suite_instance(seed), default_alphas(21))
            assert is_monotone(curve)
            assert all(p.relative_optimality >= 1.0 for p in curve)
            assert all(0.0 < p.relative_explainability <= 1.0 for p in curve)
            best = min(p.optimality_value for p in curve)
            assert all(p.relative_optimality == 1.0 for p in curve if p.optimality_value == best)
            assert any(p.nondominated for p in curve)

    def test_front_size_and_price(self):
        curve = [
            ParetoPoint(0.0, 3.0, 1.0, 1.5, 1.0, (1,)),
            ParetoPoint(0.5, 3.0, 1.0, 1.5, 1.0, (1,)),
            ParetoPoint(1.0, 2.0, 2.0, 1.0, 0.5, (2,)),
        ]
        assert front_size(curve) == 2
        assert price_of_explainability(curve, 0.9) == 1.5
        assert price_of_explainability(curve, 0.5) == 1.0


class TestAggregate:
    def test_single(self):
        c = [point(0.0, 1.2, 1.0), point(1.0, 1.0, 0.6)]
        assert aggregate_runs([c]) == [{"alpha": 0.0, "rel_opt": 1.2, "rel_exp": 1.0}, {"alpha": 1.0, "rel_opt": 1.0, "rel_exp": 0.6}]

    def test_mean(self):
        avg = aggregate_runs([[point(1.0, 1.0, 0.6)], [point(1.0, 1.0, 0.8)]])
        assert avg[0]["rel_opt"] == 1.0 and avg[0]["rel_exp"] == pytest.approx(0.7)

    def test_grid_mismatch(self):
        with pytest.raises(ContractViolation):
            aggregate_runs([[point(1.0, 1, 1)], [point(0.5, 1, 1)]])
        with pytest.raises(ContractViolation):
            aggregate_runs([])

    def test_average_price(self):
        avg = [{"alpha": 0.0, "rel_opt": 1.3, "rel_exp": 1.0}, {"alpha": 0.5, "rel_opt": 1.1, "rel_exp": 0.92}, {"alpha": 1.0, "rel_opt": 1.0, "rel_exp": 0.7}]
        assert average_price(avg, 0.9) == 1.1


class TestProtocol:
    def test_runs_and_outputs(self, tmp_path):
        cfg = GridProtocol(rows=3, cols=3, bridges=2, n_history=8, alphas=11, runs=3, seed=2)
        curves, payload = run_protocol(cfg)
        assert len(curves) == 3 and all(len(c) == 11 for c in curves)
        assert payload["config"]["runs"] == 3 and len(payload["average"]) == 11
        write_pareto_json(payload, tmp_path / "p.json")
        write_pareto_csv(curves, tmp_path / "p.csv")
        assert json.loads((tmp_path / "p.json").read_text())["runs"][0][0]["alpha"] == 0.0
        rows = list(csv.reader(open(tmp_path / "p.csv")))
        assert rows[0] == ["run", "alpha", "opt", "exp", "rel_opt", "rel_exp"]
        assert len(rows) - 1 == 3 * 11

    def test_workers_do_not_change_results(self):
        cfg = GridProtocol(rows=3, cols=3, bridges=2, n_history=8, alphas=5, runs=4, seed=6)
        a, pa = run_protocol(cfg, workers=1)
        b, pb = run_protocol(cfg, workers=2)
        assert a == b and pa == pb

    def test_adding_runs_keeps_earlier(self):
        small = GridProtocol(rows=3, cols=3, bridges=2, n_history=8, alphas=5, runs=2, seed=6)
        big = GridProtocol(rows=3, cols=3, bridges=2, n_history=8, alphas=5, runs=4, seed=6)
        assert run_protocol(small)[0] == run_protocol(big)[0][:2]

    def test_single_run_average(self):
        cfg = GridProtocol(rows=3, cols=3, bridges=1, n_history=5, alphas=6, runs=1, seed=0)
        curves, payload = run_protocol(cfg)
        for p, avg in zip(curves[0], payload["average"]):
            assert (avg["rel_opt"], avg["rel_exp"]) == (p.relative_optimality, p.relative_explainability)

    def test_bridge_features(self):
        cfg = GridProtocol(rows=4, cols=4, bridges=2, features="bridges", runs=1, seed=0)
        inst, grid = make_run(cfg, 0)
        assert inst.feature_edges.tolist() == list(grid.bridges)
        assert list(inst.instance_feature_edges) == list(grid.bridges)

    def test_payload_extra(self):
        c = [[point(1.0, 1, 1)]]
        assert pareto_payload({"a": 1}, c, {"summary": 2})["summary"] == 2

    def test_rejects_bad_config(self):
        with pytest.raises(ContractViolation):
            GridProtocol(features="edges")
        with pytest.raises(ContractViolation):
            GridProtocol(runs=0)
