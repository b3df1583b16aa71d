#!/usr/bin/env python3
"""Benchmark the compiled kernels against their pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--snapshots 4000] [--repeat 5]

Workload sizes default to one two-second clip at the stock rates: 4000
snapshots x 21 primitives for ray synthesis, 63 scalar channels for the
filter and the resampler.
"""

import argparse
import time

import numpy as np

from caster import _kernels


def _time(fn, *args, repeat=5):
    fn(*args)  # warm up (JIT compile / cache load)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--snapshots", type=int, default=4000)
    ap.add_argument("--frames", type=int, default=120)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not _kernels.USING_NUMBA:
        print("numba backend inactive (CASTER_NUMBA=0 or numba missing); "
              "benchmarking the fallback against itself makes no sense")
        return 1
    nb = {"clip_rays": _kernels.clip_rays, "one_euro": _kernels.one_euro,
          "spline_coeffs": _kernels.spline_coeffs,
          "spline_eval": _kernels.spline_eval}
    np_ = {"clip_rays": _kernels.clip_rays_numpy,
           "one_euro": _kernels.one_euro_numpy,
           "spline_coeffs": _kernels.spline_coeffs_numpy,
           "spline_eval": _kernels.spline_eval_numpy}

    rng = np.random.default_rng(0)
    t_snap = args.snapshots
    pos = rng.normal(0.0, 0.05, (t_snap, 21, 3)) + [0.0, 0.0, 0.6]
    order = np.arange(21, dtype=np.int64)
    gains = np.ones((t_snap, 21))
    ray_args = (pos, order, np.roll(order, 1), np.array([0.0, -0.1, -1.5]),
                np.array([0.2, -0.1, 0.1]), 0.004957, 60.48e9, 299792458.0,
                0.5, gains, gains)

    k = args.frames
    chans = rng.normal(0.0, 0.05, (k, 63))
    euro_args = (chans, 1.0 / 30.0, 1.0, 0.5, 0.3)

    knots = np.arange(k) / 30.0
    coeffs = _kernels.spline_coeffs_numpy(knots, chans)
    grid = np.arange(int(knots[-1] * 2000) + 1) / 2000.0
    idx = np.clip(np.searchsorted(knots, grid, side="right") - 1,
                  0, k - 2).astype(np.int64)
    coeff_args = (knots, chans)
    eval_args = (knots, chans, coeffs, idx, grid)

    cases = {"clip_rays": ray_args, "one_euro": euro_args,
             "spline_coeffs": coeff_args, "spline_eval": eval_args}
    sizes = {"clip_rays": f"{t_snap}x21", "one_euro": f"{k}x63",
             "spline_coeffs": f"{k}x63", "spline_eval": f"{len(grid)}x63"}

    print(f"{'kernel':<14} {'size':>10} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, a in cases.items():
        t_np = _time(np_[name], *a, repeat=args.repeat)
        t_nb = _time(nb[name], *a, repeat=args.repeat)
        print(f"{name:<14} {sizes[name]:>10} {t_np * 1e3:>10.3f}ms "
              f"{t_nb * 1e3:>10.3f}ms {t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
