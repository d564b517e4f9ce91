import itertools

import numpy as np
import pytest

from ranslice import _kernels_py
from ranslice.scm import SlicePolicy
from ranslice.topology import InterferenceGraph

try:
    from ranslice import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])


@pytest.fixture
def two_bs_policy():
    return SlicePolicy.from_nested({1: {1: 3, 2: 2}, 2: {1: 2, 2: 3}})


@pytest.fixture
def two_bs_graph():
    return InterferenceGraph.from_edges((1, 2), [(1, 2)])


def brute_partial(rows, adj):
    """Partial-coordination count by plain loops."""
    n, width = len(rows), len(rows[0])
    count = 0
    for r in range(width):
        if any(
            adj[i][j] and rows[i][r] >= 0 and rows[i][r] == rows[j][r]
            for i, j in itertools.combinations(range(n), 2)
        ):
            count += 1
    return count


def brute_full(rows):
    width = len(rows[0])
    return sum(1 for r in range(width) if rows[0][r] >= 0 and all(row[r] == rows[0][r] for row in rows))


def random_policy(rng, n_bs, n_mno, num_rbs, fill=1.0):
    """Policy with per-BS grants summing to at most ``num_rbs``."""
    nested = {}
    for b in range(1, n_bs + 1):
        total = int(rng.integers(0, int(num_rbs * fill) + 1))
        cuts = np.sort(rng.integers(0, total + 1, size=n_mno - 1))
        parts = np.diff(np.concatenate([[0], cuts, [total]]))
        nested[b] = {m + 1: int(c) for m, c in enumerate(parts)}
    return SlicePolicy.from_nested(nested)


def random_graph(rng, n_bs, p=0.5):
    adj = np.zeros((n_bs, n_bs), dtype=bool)
    for i, j in itertools.combinations(range(n_bs), 2):
        if rng.random() < p:
            adj[i, j] = adj[j, i] = True
    return InterferenceGraph(tuple(range(1, n_bs + 1)), adj)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def emit(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
