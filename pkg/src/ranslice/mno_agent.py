"""MNO side: slice request generation, resource pool and TTI scheduling.

Each MNO minimises ``sum_b p_b*x_b + lam*((load_b + x_b)/C_b)**2`` over
integer RB vectors summing to its demand. The objective is separable and
convex, so allocating one unit at a time to the cheapest marginal BS is exact.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientCapacity
from .middleware import SliceRequest

RB_BANDWIDTH_HZ = 180e3
SPECTRAL_EFFICIENCY_RANGE = (0.5, 6.0)


@dataclass(frozen=True)
class MobileUser:
    mu_id: int
    latitude: float
    longitude: float
    spectral_efficiency: float

    def __post_init__(self):
        if not self.spectral_efficiency > 0:
            raise ValueError("spectral_efficiency must be > 0")


@dataclass(frozen=True)
class MnoProfile:
    mno_id: int
    demand_rbs: int
    lambda_congestion: float = 1.0
    max_price: float = math.inf
    mus: tuple[MobileUser, ...] = ()
    class_id: int = 0

    def __post_init__(self):
        if self.demand_rbs < 1:
            raise ValueError("demand_rbs must be >= 1")
        if self.lambda_congestion < 0:
            raise ValueError("lambda_congestion must be >= 0")


@dataclass
class ResourcePool:
    mno_id: int
    granted: dict = field(default_factory=dict)
    rb_indices: dict = field(default_factory=dict)
    price_paid: float = 0.0

    def apply(self, notification, grid=None):
        """Record an admission and, when the enforced grid is known, the concrete RBs."""
        if not notification.admitted:
            self.granted, self.rb_indices, self.price_paid = {}, {}, 0.0
            return self
        self.granted = {b: int(c) for b, c in notification.decision.granted.items() if c > 0}
        self.price_paid = notification.decision.price
        if grid is not None:
            self.rb_indices = grid.indices_of(self.mno_id)
        return self

    def total_rbs(self):
        return sum(len(v) for v in self.rb_indices.values())


@dataclass(frozen=True)
class Directive:
    kind: str
    rate_floor: float | None = None

    ROUND_ROBIN = "RoundRobin"
    MAX_RATE = "MaxRate"
    MIN_RATE = "MinRateGuarantee"

    def __post_init__(self):
        if self.kind not in (self.ROUND_ROBIN, self.MAX_RATE, self.MIN_RATE):
            raise ValueError(f"unknown directive {self.kind!r}")
        if self.kind == self.MIN_RATE and (self.rate_floor is None or self.rate_floor < 0):
            raise ValueError("MinRateGuarantee needs a rate floor >= 0")

    @classmethod
    def round_robin(cls):
        return cls(cls.ROUND_ROBIN)

    @classmethod
    def max_rate(cls):
        return cls(cls.MAX_RATE)

    @classmethod
    def min_rate(cls, floor):
        return cls(cls.MIN_RATE, float(floor))

    @classmethod
    def parse(cls, text):
        name, _, arg = text.partition(":")
        key = name.strip().lower().replace("_", "").replace("-", "")
        if key in ("roundrobin", "rr"):
            return cls.round_robin()
        if key in ("maxrate", "mr"):
            return cls.max_rate()
        if key in ("minrateguarantee", "minrate"):
            return cls.min_rate(float(arg or 0.0))
        raise ValueError(f"unknown directive {text!r}")


@dataclass(frozen=True)
class TtiSchedule:
    tti_index: int
    assignments: tuple[tuple[int, int, int], ...]
    throughput: dict

    def rb_counts(self):
        out = {}
        for _, _, mu in self.assignments:
            out[mu] = out.get(mu, 0) + 1
        return out


def slice_cost(x, prices, capacities, others_load, lam):
    return sum(
        prices[b] * x.get(b, 0) + lam * ((others_load.get(b, 0) + x.get(b, 0)) / capacities[b]) ** 2
        for b in capacities
    )


def best_response(profile, prices, capacities, others_load):
    """Cost-minimising integer split of ``profile.demand_rbs`` over the BSs."""
    lam = profile.lambda_congestion
    room = {b: capacities[b] - others_load.get(b, 0) for b in capacities}
    if any(r < 0 for r in room.values()):
        raise InsufficientCapacity("others_load exceeds capacity")
    if sum(room.values()) < profile.demand_rbs:
        raise InsufficientCapacity(
            f"MNO {profile.mno_id}: demand {profile.demand_rbs} > free capacity {sum(room.values())}"
        )

    def marginal(b, x):
        load = others_load.get(b, 0) + x
        return prices[b] + lam * (2 * load + 1) / capacities[b] ** 2

    x = {b: 0 for b in sorted(capacities)}
    heap = [(marginal(b, 0), b) for b in x if room[b] > 0]
    heapq.heapify(heap)
    for _ in range(profile.demand_rbs):
        _, b = heapq.heappop(heap)
        x[b] += 1
        if x[b] < room[b]:
            heapq.heappush(heap, (marginal(b, x[b]), b))
    return x


@dataclass(frozen=True)
class DynamicsResult:
    requests: dict
    converged: bool
    rounds: int


def _others(allocs, mno_id, bs_ids):
    load = dict.fromkeys(bs_ids, 0)
    for m, x in allocs.items():
        if m != mno_id:
            for b, c in x.items():
                load[b] += c
    return load


def run_best_response_dynamics(profiles, prices, capacities, max_rounds=100):
    """Round-robin best responses in mno_id order until no MNO wants to move."""
    profiles = sorted(profiles, key=lambda p: p.mno_id)
    if sum(p.demand_rbs for p in profiles) > sum(capacities.values()):
        raise InsufficientCapacity("aggregate demand exceeds aggregate capacity")
    bs_ids = sorted(capacities)
    allocs = {p.mno_id: dict.fromkeys(bs_ids, 0) for p in profiles}

    def improves(p):
        others = _others(allocs, p.mno_id, bs_ids)
        br = best_response(p, prices, capacities, others)
        cur = allocs[p.mno_id]
        if sum(cur.values()) != p.demand_rbs:
            return br
        if any(cur[b] > capacities[b] - others[b] for b in bs_ids):
            return br
        c_cur = slice_cost(cur, prices, capacities, others, p.lambda_congestion)
        c_br = slice_cost(br, prices, capacities, others, p.lambda_congestion)
        # equal-cost alternatives are not moves; prevents cycling between optima
        if c_br < c_cur - 1e-9 * max(1.0, abs(c_cur)):
            return br
        return None

    for rnd in range(1, max_rounds + 1):
        for p in profiles:
            br = improves(p)
            if br is not None:
                allocs[p.mno_id] = br
        if all(improves(p) is None for p in profiles):
            return DynamicsResult(allocs, True, rnd)
    return DynamicsResult(allocs, False, max_rounds)


def generate_request(profile, snapshot, others_load_estimate=None, *, timestamp):
    """Build a slice request from the public DVI view only."""
    prices = {r.bs_id: r.price_per_rb for r in snapshot.records}
    capacities = {r.bs_id: r.num_rbs for r in snapshot.records}
    others = snapshot.loads() if others_load_estimate is None else dict(others_load_estimate)
    missing = set(others) - set(capacities)
    if missing:
        raise KeyError(f"snapshot lacks BSs {sorted(missing)}")
    x = best_response(profile, prices, capacities, others)
    return SliceRequest(
        mno_id=profile.mno_id,
        class_id=profile.class_id,
        timestamp=timestamp,
        demanded={b: c for b, c in x.items()},
        max_price=profile.max_price,
    )


class MnoAgent:
    """One MNO's stateful view: profile, resource pool, timestamp counter."""

    def __init__(self, profile):
        self.profile = profile
        self.pool = ResourcePool(profile.mno_id)
        self.last_timestamp = 0

    def generate_request(self, snapshot, others_load_estimate=None, timestamp=None):
        ts = self.last_timestamp + 1 if timestamp is None else timestamp
        if ts <= self.last_timestamp:
            raise ValueError("timestamps must increase")
        req = generate_request(self.profile, snapshot, others_load_estimate, timestamp=ts)
        self.last_timestamp = ts
        return req

    def receive(self, notification, grid=None):
        self.pool.apply(notification, grid)


def rb_need(floor, spectral_efficiency, rb_bandwidth=RB_BANDWIDTH_HZ):
    """RBs per TTI an MU needs for its accumulated rate to reach ``floor``."""
    if floor is None or floor <= 0:
        return 0
    return max(0, math.ceil(floor / (spectral_efficiency * rb_bandwidth) - 1e-9))


def _best_mu(mus):
    return min(range(len(mus)), key=lambda k: (-mus[k].spectral_efficiency, mus[k].mu_id))


def schedule_tti(pool, mus, directive, tti_index, rb_bandwidth=RB_BANDWIDTH_HZ):
    mus = sorted(mus, key=lambda u: u.mu_id)
    rbs = [(b, r) for b in sorted(pool.rb_indices) for r in sorted(pool.rb_indices[b])]
    if not rbs or not mus:
        return TtiSchedule(tti_index, (), {u.mu_id: 0.0 for u in mus})
    n = len(mus)
    owner = []
    if directive.kind == Directive.ROUND_ROBIN:
        for b in sorted(pool.rb_indices):
            for j, r in enumerate(sorted(pool.rb_indices[b])):
                owner.append((b, r, (tti_index + j) % n))
    elif directive.kind == Directive.MAX_RATE:
        best = _best_mu(mus)
        owner = [(b, r, best) for b, r in rbs]
    else:
        need = [rb_need(directive.rate_floor, u.spectral_efficiency, rb_bandwidth) for u in mus]
        acc = [0] * n
        unsat = sum(1 for k in need if k > 0)
        best = _best_mu(mus)
        p = tti_index % n
        for b, r in rbs:
            if unsat:
                while acc[p] >= need[p]:
                    p = (p + 1) % n
                k = p
                if acc[k] + 1 == need[k]:
                    unsat -= 1
                p = (p + 1) % n
            else:
                k = best
            acc[k] += 1
            owner.append((b, r, k))
    counts = [0] * n
    for _, _, k in owner:
        counts[k] += 1
    throughput = {
        u.mu_id: counts[k] * u.spectral_efficiency * rb_bandwidth for k, u in enumerate(mus)
    }
    return TtiSchedule(
        tti_index, tuple((b, r, mus[k].mu_id) for b, r, k in owner), throughput
    )


def window_rb_counts(pool, mus, directive, start_tti, ttis, rb_bandwidth=RB_BANDWIDTH_HZ):
    """Per-MU RB totals over ``ttis`` consecutive TTIs; same result as summing schedule_tti."""
    mus = sorted(mus, key=lambda u: u.mu_id)
    if not mus or ttis <= 0:
        return {u.mu_id: 0 for u in mus}
    bs_counts = np.array([len(pool.rb_indices[b]) for b in sorted(pool.rb_indices)], dtype=np.int64)
    kind = {
        Directive.ROUND_ROBIN: kernels.ROUND_ROBIN,
        Directive.MAX_RATE: kernels.MAX_RATE,
        Directive.MIN_RATE: kernels.MIN_RATE,
    }[directive.kind]
    need = np.array(
        [rb_need(directive.rate_floor, u.spectral_efficiency, rb_bandwidth) for u in mus],
        dtype=np.int64,
    )
    counts = kernels.window_rb_counts(bs_counts, len(mus), kind, need, _best_mu(mus), start_tti, ttis)
    return {u.mu_id: int(c) for u, c in zip(mus, counts)}


def window_throughput(pool, mus, directive, start_tti, ttis, rb_bandwidth=RB_BANDWIDTH_HZ):
    """Mean per-TTI rate (bits/s) of each MU over the window."""
    counts = window_rb_counts(pool, mus, directive, start_tti, ttis, rb_bandwidth)
    if ttis <= 0:
        return {mu: 0.0 for mu in counts}
    se = {u.mu_id: u.spectral_efficiency for u in mus}
    return {mu: c * se[mu] * rb_bandwidth / ttis for mu, c in counts.items()}


def draw_mus(rng, count, bbox, se_range=SPECTRAL_EFFICIENCY_RANGE, first_id=1):
    """Draw ``count`` MUs uniformly in ``bbox = (lat_min, lat_max, lon_min, lon_max)``."""
    lat_min, lat_max, lon_min, lon_max = bbox
    lats = rng.uniform(lat_min, lat_max, size=count)
    lons = rng.uniform(lon_min, lon_max, size=count)
    se = rng.uniform(se_range[0], se_range[1], size=count)
    return tuple(
        MobileUser(first_id + k, float(lats[k]), float(lons[k]), float(se[k])) for k in range(count)
    )
