import numpy as np
import pytest
from hypothesis import settings, strategies as st

from gossip_privacy.graphs import (Graph, GraphSpec, build_graph, complete_graph, path_graph,
                                   ring_graph, star_graph)

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def fleet():
    """The ten graphs used for reductions and oracle agreement."""
    return {
        "K2": complete_graph(2), "K3": complete_graph(3), "K4": complete_graph(4),
        "K5": complete_graph(5), "K6": complete_graph(6), "ring4": ring_graph(4),
        "ring6": ring_graph(6), "star5": star_graph(5), "path5": path_graph(5),
        "er12": build_graph(GraphSpec("erdos_renyi", 12, p=0.35, seed=11)),
    }


def mixed_fleet():
    """Deterministic families plus seeded ER/GR/regular graphs, n <= 30."""
    return {
        "K5": complete_graph(5), "ring7": ring_graph(7), "star6": star_graph(6), "path6": path_graph(6),
        "grid9": build_graph(GraphSpec("grid2d", 9)), "grid16": build_graph(GraphSpec("grid2d", 16)),
        "er20": build_graph(GraphSpec("erdos_renyi", 20, p=0.25, seed=3)),
        "gr25": build_graph(GraphSpec("geometric_random", 25, avg_degree=6, seed=4)),
        "reg30": build_graph(GraphSpec("random_regular", 30, degree=4, seed=5)),
        "rew24": build_graph(GraphSpec("rewired_regular", 24, degree=4, rewiring=0.3, seed=6)),
    }


@pytest.fixture(scope="session")
def graph_fleet():
    return fleet()


@pytest.fixture(scope="session")
def reduction_fleet():
    return mixed_fleet()


@st.composite
def connected_graphs(draw, min_n=2, max_n=12):
    n = draw(st.integers(min_n, max_n))
    edges = {(draw(st.integers(0, i - 1)), i) for i in range(1, n)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    edges |= {(min(u, v), max(u, v)) for u, v in extra if u != v}
    return Graph.from_edges(n, sorted(edges))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def accept():
    """Record one PASS/FAIL line per acceptance criterion and fail the test on FAIL."""
    def record(number, ok, text):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
