# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must stay result-identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ROUND_ROBIN, MAX_RATE, MIN_RATE = 0, 1, 2


cdef inline bint _partial_at(const long long[:, ::1] cells, const unsigned char[:, ::1] adj,
                             Py_ssize_t r) noexcept nogil:
    cdef Py_ssize_t n = cells.shape[0], i, j
    cdef long long v
    for i in range(n):
        v = cells[i, r]
        if v < 0:
            continue
        for j in range(i + 1, n):
            if adj[i, j] and cells[j, r] == v:
                return True
    return False


def shared_counts(cells, adj, Py_ssize_t lo, Py_ssize_t hi):
    cdef const long long[:, ::1] c = np.ascontiguousarray(cells, dtype=np.int64)
    cdef const unsigned char[:, ::1] a = np.ascontiguousarray(adj, dtype=np.uint8)
    cdef Py_ssize_t n = c.shape[0], r, i
    cdef long long full = 0, partial = 0, v
    cdef bint same
    if n == 0:
        return 0, 0
    if hi > c.shape[1]:
        hi = c.shape[1]
    with nogil:
        for r in range(lo, hi):
            v = c[0, r]
            if v >= 0:
                same = True
                for i in range(1, n):
                    if c[i, r] != v:
                        same = False
                        break
                if same:
                    full += 1
            if _partial_at(c, a, r):
                partial += 1
    return int(full), int(partial)


def oracle_search(arrs, offsets, adj):
    cdef const long long[:, ::1] A = np.ascontiguousarray(arrs, dtype=np.int64)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const unsigned char[:, ::1] a = np.ascontiguousarray(adj, dtype=np.uint8)
    cdef Py_ssize_t n_bs = off.shape[0] - 1, n_cols = A.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx_arr = np.zeros(n_bs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_arr = np.zeros(n_bs, dtype=np.int64)
    cdef long long[::1] idx = idx_arr
    cdef long long[::1] best_idx = best_arr
    cdef long long best = -1, count, v
    cdef Py_ssize_t r, i, j, b
    cdef bint hit, done = False
    with nogil:
        while not done:
            count = 0
            for r in range(n_cols):
                hit = False
                for i in range(n_bs):
                    v = A[off[i] + idx[i], r]
                    if v < 0:
                        continue
                    for j in range(i + 1, n_bs):
                        if a[i, j] and A[off[j] + idx[j], r] == v:
                            hit = True
                            break
                    if hit:
                        break
                if hit:
                    count += 1
            if count > best:
                best = count
                for b in range(n_bs):
                    best_idx[b] = idx[b]
            # odometer, last BS fastest
            b = n_bs - 1
            while True:
                idx[b] += 1
                if off[b] + idx[b] < off[b + 1]:
                    break
                idx[b] = 0
                if b == 0:
                    done = True
                    break
                b -= 1
    return best_arr, int(best)


def window_rb_counts(bs_counts, Py_ssize_t n_mus, int kind, need, Py_ssize_t best_mu,
                     long long start_tti, long long ttis):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_arr = np.zeros(n_mus, dtype=np.int64)
    if n_mus == 0:
        return out_arr
    cdef const long long[::1] ks = np.ascontiguousarray(bs_counts, dtype=np.int64)
    cdef const long long[::1] nd = np.ascontiguousarray(
        need if need is not None else np.zeros(n_mus, dtype=np.int64), dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] acc_arr = np.zeros(n_mus, dtype=np.int64)
    cdef long long[::1] acc = acc_arr
    cdef long long t, k, total = 0, q, rem, unsat, step
    cdef Py_ssize_t b, u, p, nb = ks.shape[0]
    for b in range(nb):
        total += ks[b]
    with nogil:
        if kind == 1:
            out[best_mu] = total * ttis
        elif kind == 0:
            for t in range(start_tti, start_tti + ttis):
                for b in range(nb):
                    k = ks[b]
                    q = k // n_mus
                    rem = k % n_mus
                    for u in range(n_mus):
                        out[u] += q
                    p = t % n_mus
                    for step in range(rem):
                        out[(p + step) % n_mus] += 1
        else:
            for t in range(start_tti, start_tti + ttis):
                unsat = 0
                for u in range(n_mus):
                    acc[u] = 0
                    if nd[u] > 0:
                        unsat += 1
                p = t % n_mus
                for step in range(total):
                    if unsat > 0:
                        while acc[p] >= nd[p]:
                            p = (p + 1) % n_mus
                        acc[p] += 1
                        if acc[p] == nd[p]:
                            unsat -= 1
                        p = (p + 1) % n_mus
                    else:
                        acc[best_mu] += 1
                for u in range(n_mus):
                    out[u] += acc[u]
    return out_arr
