#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on representative workloads (series evaluation over
a large node array as used by the oscillatory sweeps, and the vectorized
quantile inversion as used by discretization) and prints a timing table.
Results of both paths are compared bit-for-bit.

    python benchmarks/bench_kernels.py
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gprimes import kernels  # noqa: E402


def timeit(fn, *args, repeat=5):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    if not kernels.HAVE_NUMBA:
        print("numba not available; nothing to compare")
        return
    a, da = kernels.series_arrays(weighted=True)
    rng = np.random.default_rng(0)

    w = rng.uniform(0.0, 14.0, size=1_000_000)
    targets = np.sort(rng.uniform(1.0, 78000.0, size=100_000))

    # warm up the JIT before timing
    kernels.poly_eval_nb(w[:16], a)
    kernels.poly_inverse_newton_nb(targets[:16], a, da, 0.0, 16.0)

    rows = []
    t_np, r_np = timeit(kernels.poly_eval_np, w, a)
    t_nb, r_nb = timeit(kernels.poly_eval_nb, w, a)
    assert np.array_equal(r_np, r_nb), "poly_eval paths disagree"
    rows.append(("poly_eval (1e6 nodes)", t_np, t_nb))

    t_np, r_np = timeit(kernels.poly_inverse_newton_np, targets, a, da, 0.0, 16.0)
    t_nb, r_nb = timeit(kernels.poly_inverse_newton_nb, targets, a, da, 0.0, 16.0)
    assert np.array_equal(r_np, r_nb), "poly_inverse_newton paths disagree"
    rows.append(("poly_inverse_newton (1e5 targets)", t_np, t_nb))

    print(f"{'kernel':<36} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8}")
    for name, tn, tb in rows:
        print(f"{name:<36} {tn:>10.4f} {tb:>10.4f} {tn / tb:>7.1f}x")
    print("\nboth paths produced bit-identical results")


if __name__ == "__main__":
    main()
