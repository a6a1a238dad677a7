"""Benchmark the banded-attention kernel: numba backend vs numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 256,512,1024] [--dim 64]
                                        [--repeats 5] [--band-divisor 8]

Times one masked attention call (band |i-j| <= n / band-divisor) per backend
and size, best of `repeats` after a warm-up pass so numba's JIT compile time
is not counted.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from freespec import _kernels_numpy

try:
    from freespec import _kernels_numba
except ImportError:
    _kernels_numba = None


def _case(n: int, d: int, band: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, d))
    k = rng.standard_normal((n, d))
    v = rng.standard_normal((n, d))
    idx = np.arange(n)
    mask = np.abs(idx[:, None] - idx[None, :]) <= band
    return q, k, v, 1.0 / np.sqrt(d), mask


def _best_of(fn, args, repeats: int) -> float:
    fn(*args)  # warm-up (JIT compile, cache touch)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="256,512,1024",
                    help="comma list of token counts (default 256,512,1024)")
    ap.add_argument("--dim", type=int, default=64, help="channels (default 64)")
    ap.add_argument("--repeats", type=int, default=5, help="timed repeats (default 5)")
    ap.add_argument("--band-divisor", type=int, default=8,
                    help="band half-width = n / this (default 8)")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]

    if _kernels_numba is None:
        print("numba unavailable; timing the numpy kernel only")
    print(f"{'n':>6} {'d':>4} {'band':>6} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    for n in sizes:
        band = max(1, n // args.band_divisor)
        case = _case(n, args.dim, band)
        t_np = _best_of(_kernels_numpy.attend_masked, case, args.repeats)
        if _kernels_numba is not None:
            t_nb = _best_of(_kernels_numba.attend_masked, case, args.repeats)
            out_np = _kernels_numpy.attend_masked(*case)
            out_nb = _kernels_numba.attend_masked(*case)
            drift = np.abs(out_np - out_nb).max()
            assert drift < 1e-10, f"backend drift {drift}"
            print(f"{n:>6} {args.dim:>4} {band:>6} {t_np * 1e3:>12.2f} "
                  f"{t_nb * 1e3:>12.2f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{n:>6} {args.dim:>4} {band:>6} {t_np * 1e3:>12.2f} {'-':>12} {'-':>8}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
