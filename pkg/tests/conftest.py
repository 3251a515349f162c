import numpy as np
import pytest
from hypothesis import settings

from graphquad import DiffusionOperator, from_edge_list, gen_family

settings.register_profile("repro", derandomize=True, database=None)
settings.load_profile("repro")

ACCEPTANCE_LINES = []


def random_connected_graph(rng, n, extra=None, weighted=True):
    """Random spanning tree plus extra random edges; weights in (0.1, 2)."""
    edges = {}
    perm = rng.permutation(n)
    for i in range(1, n):
        u, v = int(perm[i]), int(perm[rng.integers(0, i)])
        edges[(min(u, v), max(u, v))] = None
    extra = n if extra is None else extra
    for _ in range(extra):
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        edges[(min(u, v), max(u, v))] = None
    out = []
    for u, v in sorted(edges):
        w = float(rng.uniform(0.1, 2.0)) if weighted else 1.0
        out.append((u, v, w))
    return from_edge_list(n, out)


def dense_propagator(g):
    """Independent dense construction of Id + (A - D) / d_max."""
    A = np.zeros((g.n, g.n))
    for u, v, w in g.edges():
        A[u, v] = A[v, u] = w
    deg = A.sum(axis=1)
    dm = deg.max()
    return np.eye(g.n) + (A - np.diag(deg)) / dm


@pytest.fixture
def c4():
    return gen_family("cycle", 4)


@pytest.fixture
def star3():
    return gen_family("star", 3)


@pytest.fixture
def d_c4(c4):
    return DiffusionOperator(c4)


@pytest.fixture
def d_star3(star3):
    return DiffusionOperator(star3)


@pytest.fixture
def acceptance():
    def check(tag, description, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {description}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
