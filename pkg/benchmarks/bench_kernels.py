"""Time the numba kernels against their pure-numpy fallbacks.

Run with:

    python benchmarks/bench_kernels.py

The numba column includes a warmup call so JIT compilation is not timed.
Sizes mirror the real workloads: a 120 h SER test produces a few thousand
events over 240 windows, a margin sweep registers 4096 cells, and the
masking Monte Carlo draws ten million cell-windows.
"""

import time

import numpy as np

from wlvmser import kernels

N_CELLS = 4096
N_WINDOWS = 240


def _time(fn, *args, repeat=5):
    fn(*args)  # warmup (and JIT compile for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_window_flips(n_events):
    rng = np.random.default_rng(0)
    windows = np.sort(rng.integers(0, N_WINDOWS, n_events)).astype(np.int64)
    cells = rng.integers(0, N_CELLS, n_events).astype(np.int64)
    return (windows, cells, N_WINDOWS, N_CELLS)


def bench_sweep(n_cells):
    rng = np.random.default_rng(1)
    thresholds = np.clip(np.rint(rng.normal(800, 44, n_cells)), 1, 1200).astype(np.int64)
    return (thresholds, 1200, 10)


def bench_masked(n):
    return (1.5e-3, n, 123)


CASES = [
    ("window_observed_flips", "2.6e3 events", bench_window_flips(2600)),
    ("window_observed_flips", "1e6 events", bench_window_flips(1_000_000)),
    ("sweep_registration", "4096 cells", bench_sweep(4096)),
    ("sweep_registration", "262144 cells", bench_sweep(262_144)),
    ("masked_upsets_mc", "1e7 windows", bench_masked(10_000_000)),
]


def main():
    print(f"active backend: {kernels.BACKEND}")
    header = f"{'kernel':<24} {'case':<14} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, case, args in CASES:
        impls = kernels.IMPLEMENTATIONS[name]
        t_np = _time(impls["numpy"], *args)
        if impls["numba"] is not None:
            t_nb = _time(impls["numba"], *args)
            ratio = f"{t_np / t_nb:7.1f}x"
            nb_col = f"{t_nb * 1e3:8.2f}ms"
        else:
            ratio = "    n/a"
            nb_col = "       n/a"
        print(f"{name:<24} {case:<14} {t_np * 1e3:8.2f}ms {nb_col} {ratio}")


if __name__ == "__main__":
    main()
