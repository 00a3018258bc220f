"""Command-line front end: ``explainopt {gen,ingest,solve,sweep,export-lp,check}``.

Exit codes: 0 success, 1 a self-check failed, 2 usage or input error,
3 a solver or oracle guard tripped.  Every output file carries the resolved
configuration; nothing time-dependent is written, so re-running a command
reproduces its outputs byte for byte.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path as FsPath
from typing import List, Optional, Sequence

import numpy as np

from .explainable_sp import Backend, ExplainableInstance, reduce_costs, solve, evaluate
from .framework import ContractViolation, select_neighbors
from .graph import GraphFormatError, read_graph_csv, write_graph_csv
from .lp import export_mtz_lp
from .oracle import DEFAULT_PATH_LIMIT, OracleTooLarge, PathTable
from .shortest_path import NegativeCycle, NotADag, Unreachable, dijkstra, tie_tol
from .experiments.grid import GridSpec, generate_double_grid, sample_nominal_weights
from .experiments.history import build_history, history_payload, read_history, write_history
from .experiments.scenarios import (
    WEIGHT_MODES,
    ScenarioFormatError,
    ScenarioProtocol,
    load_scenarios,
    run_scenario_protocol,
    scenario_instance,
    write_standin,
)
from .experiments.sweep import (
    alpha_sweep,
    average_price,
    default_alphas,
    front_size,
    is_monotone,
    pareto_payload,
    write_pareto_csv,
    write_pareto_json,
)
from .experiments.synthetic import GridProtocol, make_run, run_protocol, suite_instance
from .seeding import NOMINAL, rng_for

log = logging.getLogger("explainopt")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _dump(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}


def _load_instance(graph_file: str, history_file: str, k: int, beta: float, symmetric: Optional[bool] = None) -> ExplainableInstance:
    for f in (graph_file, history_file):
        if not FsPath(f).is_file():
            raise UsageError(f"no such file: {f}")
    graph = read_graph_csv(graph_file)
    payload, records = read_history(history_file, graph.edge_count)
    ie = payload["instance_feature_edges"]
    st = (int(payload["s"]), int(payload["t"]))
    query = graph.c[np.asarray(ie, dtype=np.int64)]
    neighbors = select_neighbors(query, st, records, k=k, beta=beta)
    return ExplainableInstance(
        graph, st[0], st[1], neighbors, ie, payload.get("solution_feature_edges"),
        payload.get("symmetric", False) if symmetric is None else symmetric,
    )


# ---------------------------------------------------------------- gen

def cmd_gen(args) -> int:
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _config(args)
    if args.kind == "standin":
        write_standin(args.seed, out / "topology.csv", out / "scenarios.csv", days=args.days, n_scenarios=args.scenarios)
        _dump({"config": cfg, "files": ["topology.csv", "scenarios.csv"]}, str(out / "standin.json"))
        log.info("wrote stand-in network to %s", out)
        return EXIT_OK
    spec = GridSpec(args.rows, args.cols, args.bridges, args.seed)
    grid = sample_nominal_weights(generate_double_grid(spec), rng_for(args.seed, 0, NOMINAL))
    g = grid.graph
    st = (grid.s, grid.t)
    records = build_history(g, g.c, args.n_history, args.sigma, st, args.seed, grid.bridges, grid.undirected, stream=(0,))
    write_graph_csv(g, out / "graph.csv")
    with open(out / "weights.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("edge_id,c\n")
        for e, c in enumerate(g.c):
            fh.write(f"{e},{float(c)!r}\n")
    sol_edges = None if args.features == "all" else grid.bridges
    payload = history_payload(records, grid.s, grid.t, grid.bridges, sol_edges, args.symmetric, cfg)
    payload["bridges"] = list(grid.bridges)
    write_history(payload, out / "history.json")
    log.info("wrote graph.csv, weights.csv, history.json to %s", out)
    return EXIT_OK


# ---------------------------------------------------------------- ingest

def cmd_ingest(args) -> int:
    scen = load_scenarios(args.topology, args.scenarios)
    g = scen.topology
    dates = sorted(set(scen.dates))
    summary = {
        "config": _config(args),
        "nodes": g.node_count,
        "edges": g.edge_count,
        "scenarios": len(scen),
        "first_date": dates[0] if dates else None,
        "last_date": dates[-1] if dates else None,
        "days": len(dates),
    }
    if args.query is not None:
        if not 0 <= args.query < len(scen):
            raise UsageError(f"query index must lie in [0, {len(scen)})")
        if args.source is None or args.target is None:
            raise UsageError("--query needs --source and --target")
        st = (args.source, args.target)
        inst, records = scenario_instance(scen, args.query, st, window=args.window, k=args.k, beta=args.beta, mode=args.weight_mode)
        summary["window_matches"] = len(records)
        if args.out_dir:
            out = FsPath(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_graph_csv(inst.graph, out / "graph.csv")
            every = list(range(g.edge_count))
            write_history(history_payload(records, st[0], st[1], every, None, False, _config(args)), out / "history.json")
    else:
        summary["window_matches"] = None
    _dump(summary, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- solve

def cmd_solve(args) -> int:
    inst = _load_instance(args.graph, args.history, args.k, args.beta)
    backend = Backend(args.backend) if args.backend else None
    res = solve(inst, args.alpha, backend=backend)
    payload = {"config": _config(args), "result": res.to_dict(timing=args.timing), "neighbors": [str(n.record.id) for n in inst.neighbors]}
    _dump(payload, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- sweep

def _summary(curves, payload) -> dict:
    avg = payload["average"]
    return {
        "mean_rel_exp_at_alpha_1": avg[-1]["rel_exp"] if avg[-1]["alpha"] == 1.0 else None,
        "average_price_0.9": average_price(avg, 0.9),
        "single_point_fronts": sum(front_size(c) == 1 for c in curves),
        "monotone_runs": sum(is_monotone(c) for c in curves),
    }


def cmd_sweep(args) -> int:
    if args.protocol == "files":
        if not (args.graph and args.history):
            raise UsageError("--protocol files needs --graph and --history")
        inst = _load_instance(args.graph, args.history, args.k, args.beta)
        curves = [alpha_sweep(inst, default_alphas(args.alphas))]
        payload = pareto_payload({"protocol": "files", **_config(args)}, curves)
    elif args.protocol == "scenarios":
        if not (args.topology and args.scenarios):
            raise UsageError("--protocol scenarios needs --topology and --scenarios")
        scen = load_scenarios(args.topology, args.scenarios)
        cfg = ScenarioProtocol(queries=args.runs, window=args.window, k=args.k, beta=args.beta, alphas=args.alphas,
                               weight_mode=args.weight_mode, source=args.source, target=args.target, seed=args.seed)
        curves, payload = run_scenario_protocol(scen, cfg)
        payload["config"]["command"] = _config(args)
    else:
        cfg = GridProtocol(rows=args.rows, cols=args.cols, bridges=args.bridges, sigma=args.sigma, n_history=args.n_history,
                           k=args.k, beta=args.beta, features=args.features, symmetric=args.symmetric,
                           alphas=args.alphas, runs=args.runs, seed=args.seed)
        curves, payload = run_protocol(cfg, workers=args.workers)
        # worker count does not affect results, so keep it out of the echo
        payload["config"]["command"] = {k: v for k, v in _config(args).items() if k != "workers"}
    payload["summary"] = _summary(curves, payload)
    out = FsPath(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pareto_json(payload, out)
    csv_out = FsPath(args.csv) if args.csv else out.with_suffix(".csv")
    write_pareto_csv(curves, csv_out)
    log.info("wrote %s and %s", out, csv_out)
    return EXIT_OK


# ---------------------------------------------------------------- export-lp

def cmd_export_lp(args) -> int:
    inst = _load_instance(args.graph, args.history, args.k, args.beta)
    comment = "config: " + json.dumps(_config(args), sort_keys=True)
    text = export_mtz_lp(inst, args.alpha, None, comment)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- check

CHECK_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def _check_instance(inst: ExplainableInstance, alphas: Sequence[float], limit: int, mu_offset: float, label: str) -> List[dict]:
    failures = []
    table = PathTable.build(inst, limit)
    g = inst.graph
    nominal = dijkstra(g, inst.s, inst.t)
    for a in alphas:
        res = solve(inst, a, mu_offset=mu_offset)
        value, path = table.best(a)
        x = res.solution.incidence(g.edge_count)
        rc = reduce_costs(inst, a, mu_offset=mu_offset)
        direct = evaluate(inst, x, a)[2]
        if not math.isclose(rc.value(x), direct, rel_tol=1e-9, abs_tol=1e-9):
            failures.append({"instance": label, "alpha": a, "identity": "reduction: sum w_e x_e + K equals the scalarized objective",
                             "reduced": rc.value(x), "direct": direct})
        if abs(res.scalarized - value) > 1e-9:
            failures.append({"instance": label, "alpha": a, "identity": "solver value equals oracle value",
                             "solver": res.scalarized, "oracle": value})
        elif res.solution.edge_ids != path.edge_ids:
            failures.append({"instance": label, "alpha": a, "identity": "solver argmin equals oracle argmin",
                             "solver": list(res.solution.edge_ids), "oracle": list(path.edge_ids)})
        if a == 1.0 and abs(res.optimality_value - nominal.cost) > tie_tol(nominal.cost):
            failures.append({"instance": label, "alpha": a, "identity": "alpha=1 reproduces the nominal optimum",
                             "solver": res.optimality_value, "nominal": nominal.cost})
    return failures


def cmd_check(args) -> int:
    alphas = [float(a) for a in args.alphas] if args.alphas else list(CHECK_ALPHAS)
    mu_offset = 1.0 if args.inject_mu_bug else 0.0
    failures: List[dict] = []
    report = {"config": _config(args)}
    if args.too_large:
        # a full default-size grid has far more paths than the cap allows
        inst = make_run(GridProtocol(runs=1, seed=args.seed), 0)[0]
        PathTable.build(inst, args.path_limit if args.path_limit != DEFAULT_PATH_LIMIT else 10_000)
        raise AssertionError("unreachable: the oracle guard did not trip")
    if args.graph or args.history:
        if not (args.graph and args.history):
            raise UsageError("--graph and --history go together")
        inst = _load_instance(args.graph, args.history, args.k, args.beta)
        table = PathTable.build(inst, args.path_limit)
        report["oracle"] = [{"alpha": a, "value": table.best(a)[0], "edges": list(table.best(a)[1].edge_ids)} for a in alphas]
        failures += _check_instance(inst, alphas, args.path_limit, mu_offset, "files")
        report["instances"] = 1
    else:
        for i in range(args.instances):
            seed = args.seed + i
            inst = suite_instance(seed, max_side=args.max_side)
            failures += _check_instance(inst, alphas, args.path_limit, mu_offset, f"seed={seed}")
            curve = alpha_sweep(inst, alphas)
            if not is_monotone(curve):
                failures.append({"instance": f"seed={seed}", "identity": "sweep monotonicity"})
        report["instances"] = args.instances
    report["failures"] = failures
    report["passed"] = not failures
    _dump(report, args.out)
    for f in failures[:10]:
        print(f"FAIL {f['instance']} alpha={f.get('alpha')}: {f['identity']}", file=sys.stderr)
    return EXIT_OK if not failures else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- parser

def _add_history_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=5, help="neighbors per query (default 5)")
    p.add_argument("--beta", type=float, default=1.0, help="distance discount in lambda/(1+beta*d) (default 1)")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rows", type=int, default=6, help="rows per grid half (default 6)")
    p.add_argument("--cols", type=int, default=6, help="columns per grid half (default 6)")
    p.add_argument("--bridges", type=int, default=3, help="bridge edges between the halves, 1..rows (default 3)")
    p.add_argument("--sigma", type=float, default=2.0, help="std. dev. of history weight perturbation (default 2)")
    p.add_argument("--n-history", type=int, default=50, help="historic instances per run (default 50)")
    p.add_argument("--features", choices=("all", "bridges"), default="all",
                   help="solution features on every edge or on the bridges only (default all)")
    p.add_argument("--symmetric", action="store_true", help="treat both directions of a street as one feature")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="explainopt", description="Explainable shortest paths from historic solutions.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a double grid with history, or the stand-in road network")
    p.add_argument("--kind", choices=("grid", "standin"), default="grid", help="what to generate (default grid)")
    _add_grid_flags(p)
    p.add_argument("--days", type=int, default=46, help="stand-in: days of data (default 46)")
    p.add_argument("--scenarios", type=int, default=4363, help="stand-in: recorded time steps kept (default 4363)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ingest", help="load topology and scenario CSVs; optionally build one query's history")
    p.add_argument("--topology", required=True, help="CSV edge_id,tail,head,x_tail,y_tail,x_head,y_head")
    p.add_argument("--scenarios", required=True, help="CSV date,minutes_of_day,<edge ids>")
    p.add_argument("--query", type=int, help="row index of the query scenario")
    p.add_argument("--source", type=int, help="start node for --query")
    p.add_argument("--target", type=int, help="end node for --query")
    p.add_argument("--window", type=int, default=30, help="daytime window in minutes (default 30)")
    p.add_argument("--weight-mode", choices=WEIGHT_MODES, default="velocity", help="edge weight from velocity (default velocity)")
    _add_history_flags(p)
    p.add_argument("--out-dir", help="write graph.csv and history.json for the query here")
    p.add_argument("--out", help="summary JSON (default stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("solve", help="solve one explainable instance")
    p.add_argument("--graph", required=True, help="graph CSV edge_id,tail,head,c,l")
    p.add_argument("--history", required=True, help="history JSON")
    p.add_argument("--alpha", type=float, default=0.5, help="weight of optimality, in [0,1] (default 0.5)")
    p.add_argument("--backend", choices=[b.value for b in Backend if b is not Backend.EDGE_PROGRESSION],
                   help="force a backend (default: automatic)")
    p.add_argument("--timing", action="store_true", help="include wall time (output no longer reproducible)")
    _add_history_flags(p)
    p.add_argument("--out", help="result JSON (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="alpha sweeps: grid protocol, one instance from files, or scenarios")
    p.add_argument("--protocol", choices=("grid", "files", "scenarios"), default="grid", help="default grid")
    _add_grid_flags(p)
    _add_history_flags(p)
    p.add_argument("--alphas", type=int, default=101, help="evenly spaced alpha values in [0,1] (default 101)")
    p.add_argument("--runs", type=int, default=50, help="runs (grid) or query scenarios (scenarios) (default 50)")
    p.add_argument("--workers", type=int, default=1, help="parallel processes for grid runs (default 1)")
    p.add_argument("--graph", help="files protocol: graph CSV")
    p.add_argument("--history", help="files protocol: history JSON")
    p.add_argument("--topology", help="scenarios protocol: topology CSV")
    p.add_argument("--scenarios", help="scenarios protocol: scenario CSV")
    p.add_argument("--window", type=int, default=30, help="scenarios protocol: daytime window (default 30)")
    p.add_argument("--weight-mode", choices=WEIGHT_MODES, default="velocity", help="scenarios protocol (default velocity)")
    p.add_argument("--source", type=int, help="scenarios protocol: start node (default random)")
    p.add_argument("--target", type=int, help="scenarios protocol: end node (default random)")
    p.add_argument("--out", required=True, help="Pareto JSON path")
    p.add_argument("--csv", help="flat CSV path (default: JSON path with .csv)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-lp", help="write the MIP model in LP format")
    p.add_argument("--graph", required=True)
    p.add_argument("--history", required=True)
    p.add_argument("--alpha", type=float, default=0.5, help="(default 0.5)")
    _add_history_flags(p)
    p.add_argument("--out", help="LP file (default stdout)")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("check", help="compare the solver with exhaustive enumeration")
    p.add_argument("--instances", type=int, default=20, help="random small double grids (default 20)")
    p.add_argument("--max-side", type=int, default=3, help="largest rows/cols per half (default 3)")
    p.add_argument("--seed", type=int, default=0, help="first seed (default 0)")
    p.add_argument("--alphas", type=float, nargs="+", help="alpha values (default 0 .25 .5 .75 1)")
    p.add_argument("--graph", help="check one instance from files instead")
    p.add_argument("--history", help="history JSON for --graph")
    _add_history_flags(p)
    p.add_argument("--path-limit", type=int, default=DEFAULT_PATH_LIMIT, help="oracle enumeration cap (default 1000000)")
    p.add_argument("--inject-mu-bug", action="store_true", help="debug: shift every reduced cost by one")
    p.add_argument("--too-large", action="store_true", help="debug: run the oracle on an instance beyond its cap")
    p.add_argument("--out", help="report JSON (default stdout)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ContractViolation, GraphFormatError, ScenarioFormatError, OSError) as exc:
        print(f"explainopt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OracleTooLarge, Unreachable, NegativeCycle, NotADag) as exc:
        print(f"explainopt {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
