"""Weighted-sum sweeps, relative scores and run aggregation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..explainable_sp import ExplainableInstance, solve
from ..framework import ContractViolation, check_alpha

SCORE_TOL = 1e-9


@dataclass(frozen=True)
class ParetoPoint:
    alpha: float
    optimality_value: float
    explainability_value: float
    relative_optimality: float
    relative_explainability: float
    solution: Tuple[int, ...]
    nondominated: bool = True

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "opt": self.optimality_value,
            "exp": self.explainability_value,
            "rel_opt": self.relative_optimality,
            "rel_exp": self.relative_explainability,
            "nondominated": self.nondominated,
            "edges": list(self.solution),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParetoPoint":
        return cls(d["alpha"], d["opt"], d["exp"], d["rel_opt"], d["rel_exp"], tuple(d["edges"]), d.get("nondominated", True))


def default_alphas(count: int = 101) -> List[float]:
    if count < 1:
        raise ContractViolation("alpha grid needs at least one value")
    if count == 1:
        return [1.0]
    return [round(float(a), 12) for a in np.linspace(0.0, 1.0, count)]


def _ratio(num: float, den: float) -> float:
    if math.isclose(num, den, rel_tol=1e-12, abs_tol=1e-12):
        return 1.0  # includes 0/0
    if den == 0:
        return math.inf
    return num / den


def relative_scores(opts: Sequence[float], exps: Sequence[float]) -> Tuple[List[float], List[float]]:
    """``opt / best opt`` and ``lowest exp / exp`` over one sweep."""
    best_opt = min(opts)
    low_exp = min(exps)
    return [_ratio(o, best_opt) for o in opts], [_ratio(low_exp, e) for e in exps]


def nondominated_mask(opts: Sequence[float], exps: Sequence[float], tol: float = SCORE_TOL) -> List[bool]:
    mask = []
    for i, (o, e) in enumerate(zip(opts, exps)):
        dominated = any(
            o2 <= o + tol and e2 <= e + tol and (o2 < o - tol or e2 < e - tol)
            for j, (o2, e2) in enumerate(zip(opts, exps))
            if j != i
        )
        mask.append(not dominated)
    return mask


def make_points(alphas: Sequence[float], opts, exps, solutions) -> List[ParetoPoint]:
    rel_o, rel_e = relative_scores(opts, exps)
    nd = nondominated_mask(opts, exps)
    pts = [
        ParetoPoint(float(a), float(o), float(e), ro, re, tuple(sol), flag)
        for a, o, e, ro, re, sol, flag in zip(alphas, opts, exps, rel_o, rel_e, solutions, nd)
    ]
    return sorted(pts, key=lambda p: p.alpha)


def alpha_sweep(instance: ExplainableInstance, alphas: Optional[Sequence[float]] = None) -> List[ParetoPoint]:
    """Solve once per alpha and score the resulting front."""
    alphas = sorted(check_alpha(a) for a in (default_alphas() if alphas is None else alphas))
    if not alphas:
        raise ContractViolation("alpha grid is empty")
    results = [solve(instance, a) for a in alphas]
    return make_points(
        alphas,
        [r.optimality_value for r in results],
        [r.explainability_value for r in results],
        [r.solution.edge_ids for r in results],
    )


def front_size(curve: Sequence[ParetoPoint], tol: float = SCORE_TOL) -> int:
    """Number of distinct nondominated (optimality, explainability) pairs."""
    distinct: List[Tuple[float, float]] = []
    for p in curve:
        if not p.nondominated:
            continue
        if not any(abs(p.optimality_value - o) <= tol and abs(p.explainability_value - e) <= tol for o, e in distinct):
            distinct.append((p.optimality_value, p.explainability_value))
    return len(distinct)


def price_of_explainability(curve: Sequence[ParetoPoint], level: float) -> float:
    """Smallest relative optimality among points reaching ``level`` relative explainability."""
    eligible = [p.relative_optimality for p in curve if p.relative_explainability >= level - SCORE_TOL]
    return min(eligible) if eligible else math.inf


def aggregate_runs(curves: Sequence[Sequence[ParetoPoint]]) -> List[dict]:
    """Per-alpha mean of the relative scores over runs sharing one alpha grid."""
    if not curves:
        raise ContractViolation("nothing to aggregate")
    grid = [p.alpha for p in curves[0]]
    for c in curves[1:]:
        if [p.alpha for p in c] != grid:
            raise ContractViolation("runs use different alpha grids")
    out = []
    for i, a in enumerate(grid):
        out.append({
            "alpha": a,
            "rel_opt": math.fsum(c[i].relative_optimality for c in curves) / len(curves),
            "rel_exp": math.fsum(c[i].relative_explainability for c in curves) / len(curves),
        })
    return out


def average_price(average: Sequence[dict], level: float) -> float:
    """Relative optimality at which the averaged curve first reaches ``level``."""
    eligible = [p["rel_opt"] for p in average if p["rel_exp"] >= level - SCORE_TOL]
    return min(eligible) if eligible else math.inf


def pareto_payload(config: dict, curves: Sequence[Sequence[ParetoPoint]], extra: Optional[dict] = None) -> dict:
    payload = {
        "config": config,
        "runs": [[p.to_dict() for p in c] for c in curves],
        "average": aggregate_runs(curves),
    }
    if extra:
        payload.update(extra)
    return payload


def write_pareto_json(payload: dict, dest) -> None:
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_pareto_csv(curves: Sequence[Sequence[ParetoPoint]], dest) -> None:
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "alpha", "opt", "exp", "rel_opt", "rel_exp"])
        for run, curve in enumerate(curves):
            for p in curve:
                w.writerow([run, repr(p.alpha), repr(p.optimality_value), repr(p.explainability_value),
                            repr(p.relative_optimality), repr(p.relative_explainability)])


def is_monotone(curve: Sequence[ParetoPoint], tol: float = 1e-7) -> bool:
    """Optimality nonincreasing and explainability nondecreasing as alpha grows."""
    for a, b in zip(curve, curve[1:]):
        if b.optimality_value > a.optimality_value + tol * max(1.0, abs(a.optimality_value)):
            return False
        if b.explainability_value < a.explainability_value - tol * max(1.0, abs(a.explainability_value)):
            return False
    return True
