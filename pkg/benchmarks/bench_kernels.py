"""
numba vs pure-numpy counting kernels.

    python benchmarks/bench_kernels.py            # N=10^6 digits, b=2, k=3
    python benchmarks/bench_kernels.py -N 5000000 -b 10 -k 4 --repeat 5

The numba timings exclude the first (compiling) call.
"""
import argparse
import time

import numpy as np

from nlab import kernels
from nlab._accel import HAS_NUMBA
from nlab.shiftspace import StarredPattern


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-N", type=int, default=1_000_000)
    ap.add_argument("-b", type=int, default=2)
    ap.add_argument("-k", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    digits = rng.integers(0, args.b, args.N + args.k - 1, dtype=np.int64)
    size = int(kernels.table_offsets(args.b, args.k)[-1])

    rows = []
    t_np, ref = best_of(lambda: kernels.count_windows_numpy(digits, 0, args.N, args.b, args.k, np.zeros(size, np.int64)), args.repeat)
    rows.append(("count_windows", "numpy", t_np))
    if HAS_NUMBA:
        kernels.count_windows_numba(digits[:64], 0, 8, args.b, args.k, np.zeros(size, np.int64))
        t_nb, out = best_of(lambda: kernels.count_windows_numba(digits, 0, args.N, args.b, args.k, np.zeros(size, np.int64)), args.repeat)
        assert np.array_equal(out, ref)
        rows.append(("count_windows", "numba", t_nb))

    # width-2 blocks over base b, starred pattern "*0|1*"
    pattern = StarredPattern.parse("*0|1*", args.b)
    blocks = rng.integers(0, args.b ** 2, args.N, dtype=np.int64)
    allowed = pattern.allowed_table()
    t_np, ref = best_of(lambda: kernels.count_starred_numpy(blocks, args.N - pattern.m + 1, allowed), args.repeat)
    rows.append(("count_starred", "numpy", t_np))
    if HAS_NUMBA:
        kernels.count_starred_numba(blocks[:8], 4, allowed)
        t_nb, out = best_of(lambda: kernels.count_starred_numba(blocks, args.N - pattern.m + 1, allowed), args.repeat)
        assert out == ref
        rows.append(("count_starred", "numba", t_nb))

    print(f"N={args.N} b={args.b} k={args.k} best of {args.repeat}")
    print(f"{'kernel':<15} {'backend':<8} {'seconds':>10} {'Mdigit/s':>10}")
    for name, backend, t in rows:
        print(f"{name:<15} {backend:<8} {t:>10.4f} {args.N / t / 1e6:>10.1f}")
    if not HAS_NUMBA:
        print("numba unavailable or disabled (NLAB_NUMBA=0); numpy only")


if __name__ == "__main__":
    main()
