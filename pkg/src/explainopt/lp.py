"""MTZ mixed-integer model of the explainable shortest path, written in LP format.

Variables are ``x_<edge>`` (binary, edge on the path) and ``t_<node>``
(continuous order labels, ``>= 0``).  Flow constraints send one unit out of
``s`` and into ``t`` and balance every other node; Miller-Tucker-Zemlin rows
``t_v >= t_u + 1 + (|V| - 1)(x_uv - 1)`` are emitted for edges whose both
endpoints differ from ``s`` and ``t``.  Absolute values in the objective are
resolved by the known historic values, so the linear objective coincides
with the reduced costs; the leftover constant is recorded in a comment
because LP files carry no objective offset.

Note: as formulated, in-flow at ``s`` and out-flow at ``t`` are
unconstrained and edges touching ``s`` or ``t`` have no ordering row, so a
solver may close a cycle ``s -> ... -> t -> ... -> s`` when the return leg
has negative reduced cost.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Dict, List, Optional, TextIO, Tuple, Union

import numpy as np

from .explainable_sp import ExplainableInstance, reduce_costs

Row = Tuple[str, Dict[str, float], str, float]


@dataclass
class MtzModel:
    objective: Dict[str, float]
    constant: float
    rows: List[Row]
    binaries: List[str]
    continuous: List[str]

    def counts(self) -> Dict[str, int]:
        return {
            "binaries": len(self.binaries),
            "continuous": len(self.continuous),
            "flow": sum(1 for r in self.rows if r[0].startswith("flow_")),
            "mtz": sum(1 for r in self.rows if r[0].startswith("mtz_")),
        }


def build_mtz_model(instance: ExplainableInstance, alpha: float) -> MtzModel:
    g = instance.graph
    n = g.node_count
    s, t = instance.s, instance.t
    rc = reduce_costs(instance, alpha)
    xs = [f"x_{e}" for e in range(g.edge_count)]
    ts = [f"t_{v}" for v in range(n)]
    objective = {xs[e]: float(rc.combined[e]) for e in range(g.edge_count)}

    rows: List[Row] = []
    rows.append(("flow_s", {xs[e]: 1.0 for e in g.out_edges[s]}, "=", 1.0))
    rows.append(("flow_t", {xs[e]: 1.0 for e in g.in_edges[t]}, "=", 1.0))
    for u in range(n):
        if u in (s, t):
            continue
        coef: Dict[str, float] = {}
        for e in g.out_edges[u]:
            coef[xs[e]] = coef.get(xs[e], 0.0) + 1.0
        for e in g.in_edges[u]:
            coef[xs[e]] = coef.get(xs[e], 0.0) - 1.0
        rows.append((f"flow_{u}", coef, "=", 0.0))
    big_m = float(n - 1)
    for e in range(g.edge_count):
        u, v = g.edge(e)
        if u in (s, t) or v in (s, t):
            continue
        # t_v - t_u - (n-1) x_uv >= 1 - (n-1)
        rows.append((f"mtz_{e}", {ts[v]: 1.0, ts[u]: -1.0, xs[e]: -big_m}, ">=", 1.0 - big_m))
    return MtzModel(objective, rc.constant, rows, xs, ts)


def _num(v: float) -> str:
    return repr(float(v))


def _expr(coef: Dict[str, float], per_line: int = 6) -> str:
    if not coef:
        return "0 x_0"
    parts = []
    for i, (name, c) in enumerate(coef.items()):
        sign = "-" if c < 0 else "+"
        term = f"{sign} {_num(abs(c))} {name}"
        if i and i % per_line == 0:
            term = "\n   " + term
        parts.append(term)
    return " ".join(parts)


def format_lp(model: MtzModel, comment: Optional[str] = None) -> str:
    out = io.StringIO()
    if comment:
        for line in comment.splitlines():
            out.write(f"\\ {line}\n")
    out.write(f"\\ objective constant: {_num(model.constant)}\n")
    out.write("Minimize\n")
    out.write(f" obj: {_expr(model.objective)}\n")
    out.write("Subject To\n")
    for name, coef, sense, rhs in model.rows:
        out.write(f" {name}: {_expr(coef)} {sense} {_num(rhs)}\n")
    out.write("Bounds\n")
    for name in model.continuous:
        out.write(f" {name} >= 0\n")
    out.write("Binaries\n")
    for i in range(0, len(model.binaries), 10):
        out.write(" " + " ".join(model.binaries[i:i + 10]) + "\n")
    out.write("End\n")
    return out.getvalue()


def export_mtz_lp(
    instance: ExplainableInstance,
    alpha: float,
    destination: Union[str, TextIO, None] = None,
    comment: Optional[str] = None,
) -> str:
    """Render the model; also write it when ``destination`` is a path or text stream."""
    text = format_lp(build_mtz_model(instance, alpha), comment)
    if destination is None:
        return text
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def solve_model_with_scipy(model: MtzModel):
    """Optional cross-check: solve the model with SciPy's HiGHS MILP interface.

    Returns ``(objective including the constant, active binary names)``.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    names = model.binaries + model.continuous
    col = {name: i for i, name in enumerate(names)}
    c = np.zeros(len(names))
    for name, v in model.objective.items():
        c[col[name]] = v
    a = np.zeros((len(model.rows), len(names)))
    lo = np.empty(len(model.rows))
    hi = np.empty(len(model.rows))
    for r, (_, coef, sense, rhs) in enumerate(model.rows):
        for name, v in coef.items():
            a[r, col[name]] += v
        lo[r] = rhs
        hi[r] = rhs if sense == "=" else np.inf
    integrality = np.array([1] * len(model.binaries) + [0] * len(model.continuous))
    ub = np.array([1.0] * len(model.binaries) + [np.inf] * len(model.continuous))
    res = milp(c, constraints=LinearConstraint(a, lo, hi), integrality=integrality, bounds=Bounds(np.zeros(len(names)), ub))
    if not res.success:
        raise RuntimeError(f"MILP failed: {res.message}")
    chosen = [name for name in model.binaries if res.x[col[name]] > 0.5]
    return float(res.fun) + model.constant, chosen
