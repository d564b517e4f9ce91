"""The compiled kernels and the numpy fallback must agree exactly."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import BACKENDS, brute_full, brute_partial
from ranslice import _kernels_py, kernels

by_backend = pytest.mark.parametrize(
    "backend", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1]
)


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@by_backend
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_shared_counts(backend, seed):
    rng = np.random.default_rng(seed)
    n, w = int(rng.integers(1, 7)), int(rng.integers(0, 15))
    cells = rng.integers(-1, 3, size=(n, w)).astype(np.int64)
    adj = np.triu(rng.random((n, n)) < 0.5, 1)
    adj = (adj | adj.T).astype(np.uint8)
    lo = int(rng.integers(0, w + 1))
    hi = int(rng.integers(lo, w + 1))
    full, partial = backend.shared_counts(cells, adj, lo, hi)
    sub = cells[:, lo:hi].tolist()
    if hi > lo:
        assert partial == brute_partial(sub, adj.tolist())
        assert full == brute_full(sub)
    else:
        assert (full, partial) == (0, 0)


@by_backend
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_search_matches_fallback(backend, seed):
    rng = np.random.default_rng(seed)
    n_bs, w = int(rng.integers(1, 4)), int(rng.integers(1, 5))
    sizes = rng.integers(1, 5, size=n_bs)
    arrs = rng.integers(-1, 3, size=(int(sizes.sum()), w)).astype(np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    adj = np.triu(rng.random((n_bs, n_bs)) < 0.6, 1)
    adj = (adj | adj.T).astype(np.uint8)
    choice, best = backend.oracle_search(arrs, offsets, adj)
    ref_choice, ref_best = _kernels_py.oracle_search(arrs, offsets, adj)
    assert best == ref_best
    assert list(choice) == list(ref_choice)


@by_backend
@pytest.mark.parametrize("kind", [0, 1, 2])
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_window_counts_match_fallback(backend, kind, seed):
    rng = np.random.default_rng(seed)
    n_mus = int(rng.integers(1, 7))
    bs_counts = rng.integers(0, 12, size=int(rng.integers(0, 5))).astype(np.int64)
    need = rng.integers(0, 4, size=n_mus).astype(np.int64)
    best = int(rng.integers(0, n_mus))
    start, ttis = int(rng.integers(0, 20)), int(rng.integers(0, 15))
    got = backend.window_rb_counts(bs_counts, n_mus, kind, need, best, start, ttis)
    ref = _kernels_py.window_rb_counts(bs_counts, n_mus, kind, need, best, start, ttis)
    assert list(got) == list(ref)
    assert int(np.sum(got)) == int(bs_counts.sum()) * ttis
