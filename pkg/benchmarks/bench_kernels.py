"""Compare the numba and numpy kernel backends on the three hot paths.

Run from the repository root:

    python benchmarks/bench_kernels.py

The first numba call per kernel includes JIT compilation (cached on disk,
so later runs start fast).
"""

import time

import numpy as np

from rwprofile._kernels import numba_backend, numpy_backend

BACKENDS = (("numpy", numpy_backend), ("numba", numba_backend))


def _time(fn, *args, repeat=5):
    fn(*args)  # warm-up / JIT
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_bin_counts():
    rng = np.random.default_rng(0)
    n = 1_000_000
    bins = rng.integers(0, 300, n).astype(np.int64)
    apis = rng.integers(0, 10, n).astype(np.int64)
    print(f"bin_counts: {n:,} events into a 300x10 grid")
    for name, impl in BACKENDS:
        dt = _time(impl.bin_counts, bins, apis, 300, 10)
        print(f"  {name:>6}: {dt * 1e3:8.2f} ms")


def bench_sliding_scores():
    rng = np.random.default_rng(1)
    counts = rng.poisson(200, (86_400, 10)).astype(np.float64)
    weights = rng.dirichlet(np.ones(10))
    print("sliding_scores: manhattan over a day-long 10-API series")
    for name, impl in BACKENDS:
        dt = _time(impl.sliding_scores, counts, 3, 1, 3.0, 1.0, 1, weights)
        print(f"  {name:>6}: {dt * 1e3:8.2f} ms")


def bench_bocd():
    rng = np.random.default_rng(2)
    series = np.concatenate([rng.normal(10, 1, 1000),
                             rng.normal(40, 2, 1000)])
    print("bocd_map: 2000-step run-length recursion (O(T^2))")
    for name, impl in BACKENDS:
        dt = _time(impl.bocd_map, series, 200.0, 0.0, 1.0, 1.0, 1.0, False,
                   repeat=3)
        print(f"  {name:>6}: {dt * 1e3:8.2f} ms")


if __name__ == "__main__":
    bench_bin_counts()
    bench_sliding_scores()
    bench_bocd()
