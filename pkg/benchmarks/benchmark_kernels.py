"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs each hot kernel on realistic problem sizes with both backends and
prints a timing table.  Usage::

    python3 benchmarks/benchmark_kernels.py [--repeats N]

The numba path requires numba to be importable; the comparison calls both
implementations directly, so no environment flag is needed here (the flag
``IDTQC_DISABLE_NUMBA=1`` switches the backend used by the library itself).
"""

import argparse
import time

import numpy as np

from idtqc import _kernels
from idtqc._kernels import _WHT4, _bp_binary_np, _bp_pair_np, _chain_fb_np


def _check_structure(rng, n, n_checks, dmax):
    deg = rng.integers(3, dmax + 1, size=n_checks).astype(np.int32)
    chk = np.full((n_checks, dmax), -1, dtype=np.int32)
    for c in range(n_checks):
        chk[c, : deg[c]] = rng.choice(n, size=deg[c], replace=False)
    return chk, deg


def _time(fn, repeats):
    fn()  # warm-up (includes JIT compilation for the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not _kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba backend unavailable; nothing to compare")

    rng = np.random.default_rng(0)
    n = 4096
    chk, deg = _check_structure(rng, n, n // 4 * 1, 8)
    llr = rng.normal(scale=1.0, size=n)
    chan = rng.random(size=(n, 4)) + 1e-3
    chan /= chan.sum(axis=1, keepdims=True)
    loc = rng.random(size=(n, 4)) + 1e-6
    trans = rng.random(size=(n, 2, 2)) + 1e-6
    iters = 25

    cases = [
        ("bp_binary (N=4096, 25 it)",
         lambda: _kernels._bp_binary_jit(llr, chk, deg, iters),
         lambda: _bp_binary_np(llr, chk, deg, iters)),
        ("bp_pair   (N=4096, 25 it)",
         lambda: _kernels._bp_pair_jit(chan, chk, deg, iters, _WHT4),
         lambda: _bp_pair_np(chan, chk, deg, iters, _WHT4)),
        ("chain_fb  (N=4096)",
         lambda: _kernels._chain_fb_jit(loc, trans),
         lambda: _chain_fb_np(loc, trans)),
    ]

    print(f"{'kernel':<28}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}")
    for name, jit_fn, np_fn in cases:
        t_jit = _time(jit_fn, args.repeats) * 1e3
        t_np = _time(np_fn, args.repeats) * 1e3
        print(f"{name:<28}{t_jit:>12.2f}{t_np:>12.2f}{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
