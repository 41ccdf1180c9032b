"""Timing comparison of the compiled vs numpy cone kernels.

Sizes mirror the dominant receive-side linear-matrix block at the scales
the experiment harness actually runs, so the numbers predict end-to-end
solver speedups.

Usage: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from aircov.conic import _kernels_py as kpy

try:
    from aircov.conic import _kernels_cy as kcy
except ImportError:
    kcy = None


def make_case(rng, n, ncols, nnz):
    p = rng.integers(0, n, nnz)
    q = rng.integers(0, n, nnz)
    p, q = np.minimum(p, q), np.maximum(p, q)
    col = np.sort(rng.integers(0, ncols, nnz))
    wt = rng.standard_normal(nnz)
    wt[p == q] *= 0.5
    starts = np.r_[0, np.flatnonzero(np.diff(col)) + 1]
    base = rng.standard_normal((n, n))
    return (p.astype(np.int64), q.astype(np.int64), wt,
            col.astype(np.int64), starts.astype(np.int64),
            rng.standard_normal(ncols), base @ base.T + np.eye(n))


def timeit(fn, reps):
    fn()  # warm
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    rng = np.random.default_rng(0)
    print(f"{'case':<30} {'numpy':>12} {'cython':>12} {'speedup':>9}")
    cases = [
        ("desk block  n=12  nnz=120", 12, 40, 120, 2000),
        ("mid block   n=24  nnz=300", 24, 120, 300, 800),
        ("paper block n=44  nnz=700", 44, 400, 700, 300),
    ]
    for label, n, ncols, nnz, reps in cases:
        p, q, wt, col, starts, x, pmat = make_case(rng, n, ncols, nnz)
        for name, fn_py, fn_cy in [
            ("schur", lambda: kpy.psd_schur(p, q, wt, starts, pmat),
             (lambda: kcy.psd_schur(p, q, wt, starts, pmat)) if kcy else None),
            ("forward", lambda: kpy.psd_forward(p, q, wt, col, x, n),
             (lambda: kcy.psd_forward(p, q, wt, col, x, n)) if kcy else None),
            ("svec", lambda: kpy.svec_pack(pmat),
             (lambda: kcy.svec_pack(pmat)) if kcy else None),
        ]:
            t_py = timeit(fn_py, reps)
            if fn_cy is None:
                print(f"{label + ' ' + name:<30} {t_py * 1e6:>10.1f}us "
                      f"{'n/a':>12} {'':>9}")
                continue
            t_cy = timeit(fn_cy, reps)
            print(f"{label + ' ' + name:<30} {t_py * 1e6:>10.1f}us "
                  f"{t_cy * 1e6:>10.1f}us {t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
