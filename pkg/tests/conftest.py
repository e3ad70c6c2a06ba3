import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from vrrw.graph import WeightedGraph


def random_connected_graph(rng, n, density=0.5, loop_prob=0.0, weights="float", low=0.5, high=2.0):
    """Random spanning tree plus extra edges; float, unit or small-integer weights."""
    pairs = set()
    order = rng.permutation(n)
    for k in range(1, n):
        i, j = order[k], order[rng.integers(k)]
        pairs.add((min(i, j), max(i, j)))
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < density:
            pairs.add((i, j))
    for i in range(n):
        if rng.random() < loop_prob:
            pairs.add((i, i))
    w = {}
    for e in sorted(pairs):
        if weights == "unit":
            w[(int(e[0]), int(e[1]))] = 1
        elif weights == "int":
            w[(int(e[0]), int(e[1]))] = int(rng.integers(1, 3))
        else:
            w[(int(e[0]), int(e[1]))] = float(rng.uniform(low, high))
    return WeightedGraph(n, w)


@st.composite
def graphs(draw, max_vertices=6, loops=True, weights=st.integers(1, 3)):
    n = draw(st.integers(1, max_vertices))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n, density=draw(st.floats(0, 1)), loop_prob=0.3 if loops else 0.0, weights="unit")
    if n == 1 and not g.weights:
        g = WeightedGraph(1, {(0, 0): 1})
    return WeightedGraph(n, {e: draw(weights) for e in g.weights})


@st.composite
def simplex_points(draw, n):
    raw = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)))
    return raw / raw.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one ``PASS``/``FAIL`` line per acceptance criterion."""

    def record(label: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
