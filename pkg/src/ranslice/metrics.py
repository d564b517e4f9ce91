"""Shared-RB coordination metrics and cross-run statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import kernels
from .errors import EmptyInput, GridGraphMismatch

FULL_SCOPE_CLUSTER = "cluster"
FULL_SCOPE_COMPONENT = "connected-component"


@dataclass(frozen=True)
class SharedRbStats:
    full_pct: float
    partial_pct: float
    full_count: int
    partial_count: int
    num_rbs: int
    per_mno: dict  # mno_id -> {"full": count, "partial": count}

    def per_mno_pct(self):
        n = self.num_rbs or 1
        return {
            m: {"full": 100.0 * v["full"] / n, "partial": 100.0 * v["partial"] / n}
            for m, v in self.per_mno.items()
        }


def _full_owner(cells, rows):
    """Per column, the MNO owning it at every BS in ``rows`` (or -1)."""
    block = cells[rows]
    first = block[0]
    ok = (first >= 0) & (block == first).all(axis=0)
    return np.where(ok, first, -1)


def shared_rb_stats(grid, graph, full_scope=FULL_SCOPE_CLUSTER, require_edge=True):
    """Fraction of RB indices usable for multi-BS coordination.

    Full: one MNO owns the index at every BS (of the cluster, or of some
    connected component with >= 2 BSs). Partial: some MNO owns the index at
    two BSs joined by an interference edge (any two BSs if not ``require_edge``).
    """
    if tuple(grid.bs_ids) != tuple(graph.bs_ids):
        raise GridGraphMismatch(
            f"grid BSs {grid.bs_ids} do not match graph BSs {graph.bs_ids}"
        )
    cells = np.asarray(grid.cells, dtype=np.int64)
    width = cells.shape[1]
    n = len(graph.bs_ids)
    adj = graph.adjacency if require_edge else ~np.eye(n, dtype=bool)

    if full_scope == FULL_SCOPE_CLUSTER:
        owners = [_full_owner(cells, list(range(n)))]
        full_count = kernels.shared_counts(cells, adj.astype(np.uint8), 0, width)[0]
    elif full_scope == FULL_SCOPE_COMPONENT:
        owners = [_full_owner(cells, comp) for comp in graph.components() if len(comp) >= 2]
        full_count = int(np.any([o >= 0 for o in owners], axis=0).sum()) if owners else 0
    else:
        raise ValueError(f"unknown full_scope {full_scope!r}")

    i, j = np.nonzero(np.triu(adj, 1))
    per_mno = {m: {"full": 0, "partial": 0} for m in grid.owners()}
    if len(i):
        match = (cells[i] == cells[j]) & (cells[i] >= 0)
        partial_mask = match.any(axis=0)
        for m in per_mno:
            per_mno[m]["partial"] = int(((cells[i] == m) & match).any(axis=0).sum())
    else:
        partial_mask = np.zeros(width, dtype=bool)
    for m in per_mno:
        per_mno[m]["full"] = int(np.any([o == m for o in owners], axis=0).sum()) if owners else 0
    partial_count = int(partial_mask.sum())

    pct = (lambda c: 100.0 * c / width) if width else (lambda c: 0.0)
    return SharedRbStats(
        full_pct=pct(full_count),
        partial_pct=pct(partial_count),
        full_count=int(full_count),
        partial_count=partial_count,
        num_rbs=width,
        per_mno=per_mno,
    )


@dataclass(frozen=True)
class AggregateStats:
    n_runs: int
    mean: float
    ci_halfwidth: float
    confidence: float
    std: float


def aggregate_runs(values, confidence=0.95):
    """Mean and Student-t confidence half-width."""
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        raise EmptyInput("aggregate_runs needs at least one value")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    n = x.size
    mean = float(x.mean())
    if n == 1 or np.all(x == x[0]):
        return AggregateStats(n, mean, 0.0, confidence, 0.0)
    s = float(x.std(ddof=1))
    t = float(stats.t.ppf((1.0 + confidence) / 2.0, n - 1))
    return AggregateStats(n, mean, t * s / math.sqrt(n), confidence, s)
