"""Pure-Python/numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable. Signatures and
results must match ``_kernels.pyx`` exactly.
"""

import itertools

import numpy as np

ROUND_ROBIN, MAX_RATE, MIN_RATE = 0, 1, 2


def _pairs(adj):
    i, j = np.nonzero(np.triu(np.asarray(adj, dtype=bool), 1))
    return i, j


def shared_counts(cells, adj, lo, hi):
    """Return ``(full, partial)`` counts of shared RB indices in columns ``[lo, hi)``."""
    block = np.asarray(cells, dtype=np.int64)[:, lo:hi]
    if block.shape[1] == 0 or block.shape[0] == 0:
        return 0, 0
    first = block[0]
    full = int(((first >= 0) & (block == first).all(axis=0)).sum())
    i, j = _pairs(adj)
    if len(i) == 0:
        return full, 0
    match = (block[i] == block[j]) & (block[i] >= 0)
    partial = int(match.any(axis=0).sum())
    return full, partial


def oracle_search(arrs, offsets, adj):
    """Exhaustive max of the partial count over the product of per-BS arrangements.

    Arrangements of BS ``b`` are rows ``arrs[offsets[b]:offsets[b + 1]]``. The
    product is scanned in lexicographic order (last BS fastest) and only a
    strictly better count replaces the incumbent.
    """
    arrs = np.asarray(arrs, dtype=np.int64)
    offsets = [int(o) for o in offsets]
    n_bs = len(offsets) - 1
    i, j = _pairs(adj)
    blocks = [arrs[offsets[b]:offsets[b + 1]] for b in range(n_bs)]
    best, best_choice = -1, None
    last = blocks[-1]
    for head in itertools.product(*(range(len(b)) for b in blocks[:-1])):
        # rows: (n_last, n_bs, n_cols)
        fixed = [blocks[b][k] for b, k in enumerate(head)]
        grid = np.empty((len(last), n_bs, arrs.shape[1]), dtype=np.int64)
        for b, row in enumerate(fixed):
            grid[:, b, :] = row
        grid[:, -1, :] = last
        if len(i):
            a, c = grid[:, i, :], grid[:, j, :]
            counts = ((a == c) & (a >= 0)).any(axis=1).sum(axis=1)
        else:
            counts = np.zeros(len(last), dtype=np.int64)
        k = int(np.argmax(counts))
        if counts[k] > best:
            best = int(counts[k])
            best_choice = (*head, k)
    return np.array(best_choice, dtype=np.int64), best


def window_rb_counts(bs_counts, n_mus, kind, need, best_mu, start_tti, ttis):
    """Total RBs per MU (indexed by mu rank) accumulated over ``ttis`` TTIs."""
    out = np.zeros(n_mus, dtype=np.int64)
    if n_mus == 0:
        return out
    bs_counts = [int(k) for k in bs_counts]
    total = sum(bs_counts)
    if kind == MAX_RATE:
        out[best_mu] = total * ttis
        return out
    if kind == ROUND_ROBIN:
        for t in range(start_tti, start_tti + ttis):
            off = t % n_mus
            for k in bs_counts:
                out += k // n_mus
                rem = k % n_mus
                idx = (off + np.arange(rem)) % n_mus
                out[idx] += 1
        return out
    need = [int(x) for x in need]
    for t in range(start_tti, start_tti + ttis):
        acc = [0] * n_mus
        unsat = sum(1 for u in range(n_mus) if need[u] > 0)
        p = t % n_mus
        for _ in range(total):
            if unsat:
                while acc[p] >= need[p]:
                    p = (p + 1) % n_mus
                acc[p] += 1
                if acc[p] == need[p]:
                    unsat -= 1
                p = (p + 1) % n_mus
            else:
                acc[best_mu] += 1
        out += np.array(acc, dtype=np.int64)
    return out
