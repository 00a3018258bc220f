"""Explainable combinatorial optimization, instantiated for shortest paths.

Solutions are scored both by their nominal cost and by how closely they
resemble solutions adopted for similar historic instances.
"""
from .explainable_sp import Backend, ExplainableInstance, SolveResult, evaluate, reduce_costs, solve
from .framework import (
    ContractViolation,
    HistoricRecord,
    NeighborSet,
    explainability_value,
    instance_distance,
    select_neighbors,
    solution_distance,
)
from .graph import DirectedGraph, Path, read_graph_csv, write_graph_csv

__all__ = [
    "Backend",
    "ContractViolation",
    "DirectedGraph",
    "ExplainableInstance",
    "HistoricRecord",
    "NeighborSet",
    "Path",
    "SolveResult",
    "evaluate",
    "explainability_value",
    "instance_distance",
    "read_graph_csv",
    "reduce_costs",
    "select_neighbors",
    "solution_distance",
    "solve",
    "write_graph_csv",
]

__version__ = "0.1.0"
