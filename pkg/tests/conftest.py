import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from explainopt.graph import DirectedGraph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_graph(rng, n, p=0.35, low=0.0, high=2.0):
    """Random simple digraph with costs drawn from ``uniform(low, high)``; lengths uniform(0, 2)."""
    tails, heads = [], []
    for u, v in itertools.permutations(range(n), 2):
        if rng.random() < p:
            tails.append(u)
            heads.append(v)
    m = len(tails)
    c = rng.uniform(max(low, 0.0), max(high, 0.0), size=m) if low >= 0 else np.zeros(m)
    return DirectedGraph(n, tails, heads, c, rng.uniform(0.0, 2.0, size=m))


@pytest.fixture
def diamond():
    # 0 -> 1 -> 3 (upper, cost 2+2) and 0 -> 2 -> 3 (lower, cost 1+1)
    return DirectedGraph(4, [0, 1, 0, 2], [1, 3, 2, 3], [2.0, 2.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def standin_files(tmp_path_factory):
    """Full-size stand-in network and scenario table written once per session."""
    from explainopt.experiments.scenarios import write_standin

    d = tmp_path_factory.mktemp("standin")
    write_standin(11, d / "topology.csv", d / "scenarios.csv")
    return d / "topology.csv", d / "scenarios.csv"
