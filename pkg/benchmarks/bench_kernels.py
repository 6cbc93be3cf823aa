"""Timing comparison of the jitted and pure-numpy kernel paths.

Runs each kernel on both backends over a few representative shapes and
prints one table row per case.  The jitted path pays compilation on its
first call, so every measurement follows a warmup pass on the same
shapes; what is reported is steady-state time per call.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from majorant._kernels import (
    HAS_NUMBA,
    rotation_sweep_numpy,
    two_cell_search_numpy,
)

if HAS_NUMBA:
    from majorant._kernels import rotation_sweep_numba, two_cell_search_numba


def time_call(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def sweep_args(rng, n):
    pairs = n // 2
    perm = rng.permutation(n)
    ia = perm[:pairs].astype(np.int64)
    ib = perm[pairs : 2 * pairs].astype(np.int64)
    theta = rng.uniform(0.0, np.pi / 2, pairs)
    out = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return ia, ib, np.cos(theta), np.sin(theta), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7, help="timed calls per case")
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    header = f"{'kernel':<16} {'case':<10} {'numpy':>12} {'numba':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for n in (64, 256, 1024):
        call = sweep_args(rng, n)
        numpy_args = call[:4] + (call[4].copy(),)
        t_np = time_call(rotation_sweep_numpy, numpy_args, args.repeats)
        if HAS_NUMBA:
            numba_args = call[:4] + (call[4].copy(),)
            rotation_sweep_numba(*numba_args)  # warmup: compile
            t_nb = time_call(rotation_sweep_numba, numba_args, args.repeats)
            ratio = f"{t_np / t_nb:7.1f}x"
        else:
            t_nb, ratio = float("nan"), "    n/a"
        print(
            f"{'rotation_sweep':<16} {f'n={n}':<10} {t_np * 1e3:10.3f}ms "
            f"{t_nb * 1e3:10.3f}ms {ratio:>8}"
        )

    for grid in (60, 200, 400):
        case = (2.0, 1.0, 1.4, 1.1, grid)
        t_np = time_call(two_cell_search_numpy, case, args.repeats)
        if HAS_NUMBA:
            two_cell_search_numba(*case)  # warmup: compile
            t_nb = time_call(two_cell_search_numba, case, args.repeats)
            ratio = f"{t_np / t_nb:7.1f}x"
        else:
            t_nb, ratio = float("nan"), "    n/a"
        print(
            f"{'two_cell_search':<16} {f'grid={grid}':<10} {t_np * 1e3:10.3f}ms "
            f"{t_nb * 1e3:10.3f}ms {ratio:>8}"
        )


if __name__ == "__main__":
    main()
