import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ucode.data import bowtie as make_bowtie  # noqa: E402
from ucode.graph import AttributedGraph  # noqa: E402

from helpers import ACCEPTANCE_RESULTS  # noqa: E402
from oracles import random_graph  # noqa: E402


@pytest.fixture
def bowtie():
    return make_bowtie()


@pytest.fixture
def hard_bowtie():
    return np.array([[1, 0], [1, 0], [0, 1], [0, 1], [0, 1]], dtype=float)


@pytest.fixture
def overlap_bowtie():
    return np.array([[1, 0], [1, 0], [0.5, 0.5], [0, 1], [0, 1]], dtype=float)


@pytest.fixture
def make_random_graph():
    def make(seed, n, p=0.4, l=3):
        rng = np.random.default_rng(seed)
        edges = random_graph(rng, n, p)
        if not edges:
            edges = [(0, 1)]
        return AttributedGraph.from_edges(n, edges, rng.normal(size=(n, l)))
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}")
