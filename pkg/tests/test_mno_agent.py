import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ranslice.errors import InsufficientCapacity
from ranslice.middleware import snapshot_dvi
from ranslice.mno_agent import (
    Directive,
    MnoAgent,
    MnoProfile,
    MobileUser,
    ResourcePool,
    best_response,
    generate_request,
    rb_need,
    run_best_response_dynamics,
    schedule_tti,
    slice_cost,
    window_rb_counts,
)
from ranslice.topology import synthetic_topology


def compositions(total, parts, caps):
    """All integer vectors with 0 <= x_i <= caps[i] summing to ``total``."""
    for x in itertools.product(*(range(c + 1) for c in caps)):
        if sum(x) == total:
            yield x


def brute_min(demand, prices, caps, others, lam):
    bs = sorted(caps)
    best = None
    for x in compositions(demand, len(bs), [caps[b] - others[b] for b in bs]):
        c = sum(prices[b] * xi + lam * ((others[b] + xi) / caps[b]) ** 2 for b, xi in zip(bs, x))
        best = c if best is None else min(best, c)
    return best


def profile(mno=1, demand=4, lam=1.0, mus=()):
    return MnoProfile(mno, demand, lam, 1e9, tuple(mus))


def test_single_bs():
    assert best_response(profile(demand=5), {1: 1.0}, {1: 50}, {1: 0}) == {1: 5}


def test_loaded_bs_avoided():
    x = best_response(profile(demand=4), {1: 1.0, 2: 1.0}, {1: 10, 2: 10}, {1: 5, 2: 0})
    assert x == {1: 0, 2: 4}
    assert slice_cost(x, {1: 1, 2: 1}, {1: 10, 2: 10}, {1: 5, 2: 0}, 1.0) == pytest.approx(
        brute_min(4, {1: 1, 2: 1}, {1: 10, 2: 10}, {1: 5, 2: 0}, 1.0)
    )


def test_tie_break_lower_id():
    x = best_response(profile(demand=2), {1: 1.0, 2: 1.0}, {1: 10, 2: 10}, {1: 0, 2: 0})
    assert x == {1: 1, 2: 1}
    x1 = best_response(profile(demand=1), {1: 1.0, 2: 1.0}, {1: 10, 2: 10}, {1: 0, 2: 0})
    assert x1 == {1: 1, 2: 0}


def test_insufficient_capacity():
    with pytest.raises(InsufficientCapacity):
        best_response(profile(demand=6), {1: 1.0}, {1: 10}, {1: 5})


@settings(max_examples=150, deadline=None)
@given(
    st.integers(1, 3).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(0.0, 3.0), min_size=n, max_size=n),
            st.lists(st.integers(1, 8), min_size=n, max_size=n),
            st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n),
            st.floats(0.0, 20.0),
            st.integers(1, 8),
        )
    )
)
def test_best_response_matches_brute_force(args):
    prices, caps, load_frac, lam, demand = args
    bs = range(1, len(prices) + 1)
    p = dict(zip(bs, prices))
    c = dict(zip(bs, caps))
    o = {b: int(f * c[b]) for b, f in zip(bs, load_frac)}
    if sum(c[b] - o[b] for b in bs) < demand:
        with pytest.raises(InsufficientCapacity):
            best_response(profile(demand=demand, lam=lam), p, c, o)
        return
    x = best_response(profile(demand=demand, lam=lam), p, c, o)
    assert sum(x.values()) == demand
    assert all(0 <= x[b] <= c[b] - o[b] for b in bs)
    assert slice_cost(x, p, c, o, lam) == pytest.approx(brute_min(demand, p, c, o, lam), abs=1e-9)


def test_dynamics_single_mno():
    prof = profile(demand=5)
    res = run_best_response_dynamics([prof], {1: 1.0, 2: 1.2}, {1: 10, 2: 10}, 10)
    assert res.converged and res.rounds == 1
    assert res.requests[1] == best_response(prof, {1: 1.0, 2: 1.2}, {1: 10, 2: 10}, {1: 0, 2: 0})


def test_dynamics_two_symmetric_mnos():
    res = run_best_response_dynamics(
        [profile(1, 4), profile(2, 4)], {1: 1.0, 2: 1.0}, {1: 10, 2: 10}, 10
    )
    assert res.converged
    assert res.requests == {1: {1: 2, 2: 2}, 2: {1: 2, 2: 2}}


def test_dynamics_zero_rounds():
    res = run_best_response_dynamics([profile()], {1: 1.0}, {1: 10}, 0)
    assert not res.converged


def test_dynamics_aggregate_capacity():
    with pytest.raises(InsufficientCapacity):
        run_best_response_dynamics([profile(1, 8), profile(2, 8)], {1: 1.0}, {1: 10}, 5)


def is_nash(requests, profiles, prices, caps):
    for p in profiles:
        others = {b: sum(requests[m][b] for m in requests if m != p.mno_id) for b in caps}
        mine = slice_cost(requests[p.mno_id], prices, caps, others, p.lambda_congestion)
        best = brute_min(p.demand_rbs, prices, caps, others, p.lambda_congestion)
        if mine > best + 1e-9:
            return False
    return True


@pytest.mark.parametrize("seed", range(20))
def test_fixed_point_is_nash(seed):
    rng = np.random.default_rng(seed)
    n_bs, n_mno = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    caps = {b: int(rng.integers(3, 7)) for b in range(1, n_bs + 1)}
    prices = {b: float(rng.uniform(0, 2)) for b in caps}
    budget = sum(caps.values())
    profiles = [
        MnoProfile(m, int(rng.integers(1, max(2, budget // n_mno) + 1)), float(rng.uniform(0, 10)))
        for m in range(1, n_mno + 1)
    ]
    res = run_best_response_dynamics(profiles, prices, caps, 100)
    assert res.converged
    assert is_nash(res.requests, profiles, prices, caps)


def test_generate_request_cold_start():
    topo = synthetic_topology(num_bs=2, num_rbs=50, seed=0)
    snap = snapshot_dvi(topo)
    prof = MnoProfile(3, 10, 2.0, 99.0, (), class_id=1)
    r = generate_request(prof, snap, timestamp=7)
    expected = best_response(prof, topo.prices, topo.capacities, {b: 0 for b in topo.bs_ids})
    assert r.demanded == expected
    assert sum(r.demanded.values()) == 10
    assert (r.mno_id, r.class_id, r.timestamp, r.max_price) == (3, 1, 7, 99.0)


def test_agent_timestamps_increase():
    topo = synthetic_topology(num_bs=2, seed=0)
    agent = MnoAgent(profile(demand=3))
    a = agent.generate_request(snapshot_dvi(topo))
    b = agent.generate_request(snapshot_dvi(topo))
    assert b.timestamp > a.timestamp


def mus(*se):
    return [MobileUser(k + 1, 0.0, 0.0, s) for k, s in enumerate(se)]


def pool(rbs):
    p = ResourcePool(1)
    p.rb_indices = {b: set(v) for b, v in rbs.items()}
    p.granted = {b: len(v) for b, v in rbs.items()}
    return p


def test_schedule_empty_pool():
    s = schedule_tti(pool({}), mus(1.0), Directive.round_robin(), 0)
    assert s.assignments == ()


def test_schedule_no_users():
    assert schedule_tti(pool({1: [0, 1]}), [], Directive.round_robin(), 0).assignments == ()


def test_round_robin_even_split():
    s = schedule_tti(pool({1: [0, 1, 2, 3]}), mus(1.0, 2.0), Directive.round_robin(), 0)
    assert s.rb_counts() == {1: 2, 2: 2}
    assert s.throughput[2] == pytest.approx(2 * 2.0 * 180e3)


def test_round_robin_offset():
    s = schedule_tti(pool({1: [0, 1, 2]}), mus(1.0, 1.0), Directive.round_robin(), 1)
    assert [a[2] for a in s.assignments] == [2, 1, 2]


def test_max_rate():
    s = schedule_tti(pool({1: [0, 1, 2]}), mus(2.0, 1.0), Directive.max_rate(), 5)
    assert s.rb_counts() == {1: 3}


def test_min_rate_guarantee():
    users = mus(1.0, 4.0, 2.0)
    floor = 2 * 1.0 * 180e3  # MU 1 needs 2 RBs, MU 2 needs 1, MU 3 needs 1
    s = schedule_tti(pool({1: range(8)}), users, Directive.min_rate(floor), 0)
    counts = s.rb_counts()
    assert counts == {1: 2, 2: 5, 3: 1}
    for u in users:
        assert s.throughput[u.mu_id] >= floor - 1e-6


def test_rb_need():
    assert rb_need(0.0, 1.0) == 0
    assert rb_need(180e3, 1.0) == 1
    assert rb_need(180e3 + 1, 1.0) == 2


@settings(max_examples=60, deadline=None)
@given(
    st.dictionaries(st.integers(1, 4), st.lists(st.integers(0, 49), unique=True, max_size=12), max_size=4),
    st.lists(st.floats(0.5, 6.0), min_size=1, max_size=6),
    st.sampled_from(["rr", "mr", "min"]),
    st.integers(0, 10),
)
def test_schedule_invariants_and_window_kernel(rbs, se, kind, start):
    p = pool(rbs)
    users = mus(*se)
    directive = {
        "rr": Directive.round_robin(),
        "mr": Directive.max_rate(),
        "min": Directive.min_rate(1.5 * 180e3),
    }[kind]
    total = {u.mu_id: 0 for u in users}
    for t in range(start, start + 5):
        s = schedule_tti(p, users, directive, t)
        cells = [(b, r) for b, r, _ in s.assignments]
        assert len(cells) == len(set(cells))
        assert all(r in p.rb_indices[b] for b, r in cells)
        if kind == "rr":
            for b in p.rb_indices:
                per = [sum(1 for bb, _, m in s.assignments if bb == b and m == u.mu_id) for u in users]
                assert max(per) - min(per) <= 1
        for mu, c in s.rb_counts().items():
            total[mu] += c
    assert window_rb_counts(p, users, directive, start, 5) == total
