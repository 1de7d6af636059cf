"""Compare the numba and numpy versions of the Gaussian contraction loop.

    python benchmarks/bench_kernels.py [--repeat 5]

The numba timing excludes compilation (one warm-up call).  The library
picks numba unless SUPERFUND_DISABLE_NUMBA=1 is set.
"""
import argparse
import time

import numpy as np

from superfund import _kernels
from superfund.quadrature import axis_rule, radial_nodes


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.contract_gaussian_numba is None:
        raise SystemExit("numba is not installed")
    poly = np.array([1.0, -0.4, 0.02])
    print(f"{'m':>2} {'level':>5} {'offsets':>7} {'nodes':>7} {'numpy s':>10} {'numba s':>10} {'speedup':>8} {'max diff':>9}")
    for m, level, noff in [(1, 1, 21), (3, 1, 21), (3, 2, 101), (3, 4, 101), (5, 4, 401)]:
        r, wr = radial_nodes(10.0, 0.5, level)
        t, wt = axis_rule(m, 24 * level)
        offsets = np.linspace(0.0, 3.0, noff)
        a = _kernels.contract_gaussian_numpy(r, wr, t, wt, offsets, 0.5, poly)
        b = _kernels.contract_gaussian_numba(r, wr, t, wt, offsets, 0.5, poly)
        tn = best_of(lambda: _kernels.contract_gaussian_numpy(r, wr, t, wt, offsets, 0.5, poly), args.repeat)
        tb = best_of(lambda: _kernels.contract_gaussian_numba(r, wr, t, wt, offsets, 0.5, poly), args.repeat)
        print(f"{m:>2} {level:>5} {noff:>7} {len(r) * len(t):>7} {tn:>10.4f} {tb:>10.4f} "
              f"{tn / tb:>8.1f} {np.max(np.abs(a - b)):>9.1e}")


if __name__ == "__main__":
    main()
