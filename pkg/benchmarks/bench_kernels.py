"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--sweep]

``--sweep`` also times a reduced simulate sweep under each backend, running
each in a subprocess so RANSLICE_PURE_PYTHON takes effect at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ranslice import _kernels_py

try:
    from ranslice import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def shared_counts_case(rng):
    cells = rng.integers(-1, 8, size=(8, 50)).astype(np.int64)
    adj = (rng.random((8, 8)) < 0.4).astype(np.uint8)
    adj = np.triu(adj, 1)
    adj = (adj | adj.T).astype(np.uint8)
    return lambda k: k.shared_counts(cells, adj, 0, 50)


def oracle_case(rng):
    from itertools import permutations

    base = [1, 1, 1, 2, 2, 3, 3, -1]
    perms = np.array(sorted(set(permutations(base))), dtype=np.int64)
    n = len(perms)
    arrs = np.concatenate([perms, perms[: n // 4]])
    offsets = np.array([0, n, n + n // 4], dtype=np.int64)
    adj = np.array([[0, 1], [1, 0]], dtype=np.uint8)
    return lambda k: k.oracle_search(arrs, offsets, adj)


def window_case(rng):
    bs_counts = rng.integers(0, 40, size=8).astype(np.int64)
    n_mus = 15
    need = rng.integers(1, 5, size=n_mus).astype(np.int64)
    return lambda k: k.window_rb_counts(bs_counts, n_mus, 2, need, 3, 0, 100)


CASES = {"shared_counts": shared_counts_case, "oracle_search": oracle_case, "window_rb_counts": window_case}

SWEEP_SNIPPET = (
    "import time; from ranslice.harness import ScenarioConfig, sweep;"
    "t=time.perf_counter(); sweep(ScenarioConfig(num_runs=20)); print(time.perf_counter()-t)"
)


def time_sweep(pure):
    env = dict(os.environ, RANSLICE_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SWEEP_SNIPPET], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sweep", action="store_true")
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<18}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, make in CASES.items():
        fn = make(rng)
        number = 3 if name == "oracle_search" else 200
        py = min(timeit.repeat(lambda: fn(_kernels_py), number=number, repeat=args.repeat)) / number
        if _kernels_c is None:
            print(f"{name:<18}{py * 1e3:>12.3f}{'n/a':>12}{'':>10}")
            continue
        assert np.array_equal(np.asarray(fn(_kernels_py)[0]), np.asarray(fn(_kernels_c)[0]))
        cy = min(timeit.repeat(lambda: fn(_kernels_c), number=number, repeat=args.repeat)) / number
        print(f"{name:<18}{py * 1e3:>12.3f}{cy * 1e3:>12.3f}{py / cy:>9.1f}x")

    if args.sweep:
        py, cy = time_sweep(True), time_sweep(False)
        print(f"{'sweep (20 runs)':<18}{py * 1e3:>12.1f}{cy * 1e3:>12.1f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
