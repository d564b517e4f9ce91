"""Infrastructure-side slicing computation.

Admission control, proportional RB allocation (largest remainder) and
enforcement of the allocation on a per-BS RB grid. Three enforcement
strategies are provided plus an exhaustive oracle for small instances.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InstanceTooLarge, PolicyInvariantViolation
from .middleware import OVER_BUDGET, UNFEASIBLE

UNALLOCATED = -1
ORACLE_LIMIT = 10**6


class EnforcementStrategy(str, enum.Enum):
    FCFS = "fcfs"
    GREEDY = "greedy"
    COORDINATION_AWARE = "coordination"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "fcfs": cls.FCFS,
            "greedy": cls.GREEDY,
            "coordination": cls.COORDINATION_AWARE,
            "coordinationaware": cls.COORDINATION_AWARE,
            "ca": cls.COORDINATION_AWARE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown strategy {name!r}") from None


@dataclass(frozen=True)
class SlicePolicy:
    grants: dict

    @classmethod
    def from_nested(cls, nested):
        return cls(
            {
                (int(b), int(m)): int(c)
                for b, row in nested.items()
                for m, c in row.items()
            }
        )

    def to_nested(self):
        out = {}
        for (b, m), c in sorted(self.grants.items()):
            out.setdefault(str(b), {})[str(m)] = c
        return out

    def mnos(self):
        return sorted({m for _, m in self.grants})

    def bss(self):
        return sorted({b for b, _ in self.grants})

    def at(self, bs_id):
        return {m: c for (b, m), c in sorted(self.grants.items()) if b == bs_id and c > 0}

    def granted(self, bs_id, mno_id):
        return self.grants.get((bs_id, mno_id), 0)

    def total_by_mno(self):
        out = {}
        for (_, m), c in self.grants.items():
            out[m] = out.get(m, 0) + c
        return out

    def validate(self, capacities):
        per_bs = {}
        for (b, m), c in self.grants.items():
            if c < 0 or int(c) != c:
                raise PolicyInvariantViolation(f"grant ({b}, {m}) = {c} is not a non-negative integer")
            if b not in capacities:
                raise PolicyInvariantViolation(f"unknown BS {b}")
            per_bs[b] = per_bs.get(b, 0) + c
        for b, tot in per_bs.items():
            if tot > capacities[b]:
                raise PolicyInvariantViolation(f"BS {b}: {tot} RBs granted > capacity {capacities[b]}")
        return self


def load_policy(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise PolicyInvariantViolation("policy JSON must map bs_id -> {mno_id: count}")
    return SlicePolicy.from_nested(data)


@dataclass(frozen=True, eq=False)
class RBGrid:
    """Owner of every RB at every BS; rows follow ``bs_ids``.

    ``cells`` is padded to the largest ``num_rbs`` with ``UNALLOCATED``.
    """

    bs_ids: tuple[int, ...]
    num_rbs: tuple[int, ...]
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    def __eq__(self, other):
        if not isinstance(other, RBGrid):
            return NotImplemented
        return (
            self.bs_ids == other.bs_ids
            and self.num_rbs == other.num_rbs
            and np.array_equal(self.cells, other.cells)
        )

    @classmethod
    def from_rows(cls, rows):
        """Build from ``{bs_id: sequence of owners}``."""
        bs_ids = tuple(sorted(rows))
        n = tuple(len(rows[b]) for b in bs_ids)
        cells = np.full((len(bs_ids), max(n, default=0)), UNALLOCATED, dtype=np.int64)
        for i, b in enumerate(bs_ids):
            cells[i, : n[i]] = rows[b]
        return cls(bs_ids, n, cells)

    @property
    def width(self):
        return self.cells.shape[1]

    def row(self, bs_id):
        i = self.bs_ids.index(bs_id)
        return self.cells[i, : self.num_rbs[i]]

    def rows(self):
        return {b: self.row(b).tolist() for b in self.bs_ids}

    def allocated_counts(self):
        return {b: int((self.row(b) != UNALLOCATED).sum()) for b in self.bs_ids}

    def counts(self):
        out = {}
        for i, b in enumerate(self.bs_ids):
            owners, n = np.unique(self.cells[i, : self.num_rbs[i]], return_counts=True)
            for m, c in zip(owners, n):
                if m != UNALLOCATED:
                    out[(b, int(m))] = int(c)
        return out

    def indices_of(self, mno_id):
        return {
            b: set(np.flatnonzero(self.row(b) == mno_id).tolist())
            for b in self.bs_ids
            if (self.row(b) == mno_id).any()
        }

    def owners(self):
        return sorted(int(m) for m in np.unique(self.cells) if m != UNALLOCATED)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bs_id", *range(self.width)])
        for i, b in enumerate(self.bs_ids):
            w.writerow([b, *self.cells[i].tolist()])
        return buf.getvalue()


def admission_control(requests, capacities, prices=None):
    """Judge requests in order. Returns ``(admitted, [(request, reason), ...])``."""
    admitted, rejected = [], []
    for req in requests:
        if any(b not in capacities or c > capacities[b] for b, c in req.demanded.items()):
            rejected.append((req, UNFEASIBLE))
            continue
        if prices is not None:
            cost = sum(c * prices[b] for b, c in req.demanded.items())
            if cost > req.max_price:
                rejected.append((req, OVER_BUDGET))
                continue
        admitted.append(req)
    return admitted, rejected


def allocate_slices(admitted, capacities):
    """Grant demands; on oversubscribed BSs scale by largest remainder (tie: lower mno_id)."""
    demand = {}
    for req in admitted:
        for b, c in req.demanded.items():
            if c > 0:
                row = demand.setdefault(b, {})
                row[req.mno_id] = row.get(req.mno_id, 0) + int(c)
    grants = {}
    for b in sorted(demand):
        row = demand[b]
        total, cap = sum(row.values()), capacities[b]
        if total <= cap:
            for m, c in row.items():
                grants[(b, m)] = c
            continue
        floors = {m: c * cap // total for m, c in row.items()}
        rems = {m: c * cap % total for m, c in row.items()}
        left = cap - sum(floors.values())
        for m in sorted(row, key=lambda m: (-rems[m], m))[:left]:
            floors[m] += 1
        for m, c in floors.items():
            grants[(b, m)] = c
    return SlicePolicy(grants)


def _check(policy, graph, capacities):
    for b in graph.bs_ids:
        if b not in capacities:
            raise PolicyInvariantViolation(f"no capacity for BS {b}")
    for b in policy.bss():
        if b not in graph.bs_ids:
            raise PolicyInvariantViolation(f"policy BS {b} not in interference graph")
    policy.validate(capacities)


def _blocks_in_order(policy, bs_id, order):
    at = policy.at(bs_id)
    return [(m, at[m]) for m in order if at.get(m, 0) > 0]


def _paint(graph, capacities, layout):
    width = max(capacities[b] for b in graph.bs_ids)
    cells = np.full((graph.n, width), UNALLOCATED, dtype=np.int64)
    for i, b in enumerate(graph.bs_ids):
        pos = 0
        for m, c in layout[b]:
            cells[i, pos : pos + c] = m
            pos += c
    return cells


def _fcfs_layout(policy, graph, request_order):
    return {b: _blocks_in_order(policy, b, request_order) for b in graph.bs_ids}


def _greedy_layout(policy, graph):
    layout = {}
    for b in graph.bs_ids:
        at = policy.at(b)
        layout[b] = [(m, at[m]) for m in sorted(at, key=lambda m: (-at[m], m))]
    return layout


def canonical_order(policy):
    totals = policy.total_by_mno()
    return sorted(totals, key=lambda m: (-totals[m], m))


def _partial(cells, adj, lo=0, hi=None):
    return kernels.shared_counts(cells, adj, lo, cells.shape[1] if hi is None else hi)[1]


def block_swap_search(cells, layout, graph):
    """Hill-climb over adjacent block swaps at single BSs; strict improvements only."""
    adj = graph.adjacency.astype(np.uint8)
    layout = {b: list(v) for b, v in layout.items()}
    improved = True
    while improved:
        improved = False
        for i, b in enumerate(graph.bs_ids):
            blocks = layout[b]
            start = 0
            for k in range(len(blocks) - 1):
                (m1, c1), (m2, c2) = blocks[k], blocks[k + 1]
                lo, hi = start, start + c1 + c2
                before = _partial(cells, adj, lo, hi)
                cells[i, lo : lo + c2] = m2
                cells[i, lo + c2 : hi] = m1
                if _partial(cells, adj, lo, hi) > before:
                    blocks[k], blocks[k + 1] = blocks[k + 1], blocks[k]
                    improved = True
                    start += c2
                else:
                    cells[i, lo : lo + c1] = m1
                    cells[i, lo + c1 : hi] = m2
                    start += c1
    return cells, layout


def enforce_slicing(policy, graph, strategy, request_order=None, *, capacities):
    """Place granted RBs on the grid. Unallocated RBs always sit at the tail."""
    strategy = EnforcementStrategy.parse(strategy)
    _check(policy, graph, capacities)
    mnos = policy.mnos()
    if request_order is None:
        request_order = mnos
    request_order = list(request_order)
    if not set(m for m in mnos if policy.total_by_mno()[m] > 0) <= set(request_order):
        raise PolicyInvariantViolation("request_order does not cover every MNO in the policy")

    if strategy is EnforcementStrategy.FCFS:
        layout = _fcfs_layout(policy, graph, request_order)
        cells = _paint(graph, capacities, layout)
    elif strategy is EnforcementStrategy.GREEDY:
        layout = _greedy_layout(policy, graph)
        cells = _paint(graph, capacities, layout)
    else:
        adj = graph.adjacency.astype(np.uint8)
        order = canonical_order(policy)
        starts = [
            {b: _blocks_in_order(policy, b, order) for b in graph.bs_ids},
            _fcfs_layout(policy, graph, request_order),
            _greedy_layout(policy, graph),
        ]
        best = None
        for lay in starts:
            c = _paint(graph, capacities, lay)
            score = _partial(c, adj)
            if best is None or score > best[0]:
                best = (score, c, lay)
        cells, layout = block_swap_search(best[1], best[2], graph)
    return RBGrid(graph.bs_ids, tuple(capacities[b] for b in graph.bs_ids), cells)


def multiset_permutations(items):
    """Distinct permutations of ``items`` in lexicographic order."""
    a = sorted(items)
    n = len(a)
    while True:
        yield tuple(a)
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1 :] = reversed(a[i + 1 :])


def _multinomial(counts):
    out, n = 1, 0
    for c in counts:
        n += c
        out *= math.comb(n, c)
    return out


def oracle_enforce(policy, graph, *, capacities, limit=ORACLE_LIMIT):
    """Exhaustive search over all grids consistent with the grant counts.

    Returns ``(grid, best partial shared count)``; ties go to the
    lexicographically smallest grid (row-major, unallocated = -1).
    """
    _check(policy, graph, capacities)
    labels, size = [], 1
    for b in graph.bs_ids:
        at = policy.at(b)
        free = capacities[b] - sum(at.values())
        labels.append([UNALLOCATED] * free + [m for m in sorted(at) for _ in range(at[m])])
        size *= _multinomial([free, *at.values()])
    if size > limit:
        raise InstanceTooLarge(f"{size} labelings exceed the limit of {limit}")

    width = max(capacities[b] for b in graph.bs_ids)
    rows, offsets = [], [0]
    for lab in labels:
        for perm in multiset_permutations(lab):
            row = list(perm) + [UNALLOCATED] * (width - len(perm))
            rows.append(row)
        offsets.append(len(rows))
    arrs = np.array(rows, dtype=np.int64).reshape(len(rows), width)
    choice, best = kernels.oracle_search(
        arrs, np.array(offsets, dtype=np.int64), graph.adjacency.astype(np.uint8)
    )
    cells = np.stack([arrs[offsets[i] + int(k)] for i, k in enumerate(choice)])
    return RBGrid(graph.bs_ids, tuple(capacities[b] for b in graph.bs_ids), cells), int(best)
