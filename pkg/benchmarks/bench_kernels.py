#!/usr/bin/env python3
"""Time the compiled kernels against the pure-numpy fallback.

The two backends consume identical pre-drawn normals, so the comparison is
apples to apples. Run after building the extension:

    python benchmarks/bench_kernels.py [--paths N] [--repeat K]
"""

import argparse
import math
import time

import numpy as np

from snellmc import _kernels_py
from snellmc.core import TimeGrid
from snellmc.models import LmmSpec, _lmm_step_tables

try:
    from snellmc import _kernels
except ImportError:
    _kernels = None

LMM_VOLS = np.array(
    [
        [0.024063776, 0.024267981, 0.007801289],
        [0.033758193, 0.018222734, -0.001039692],
        [0.040538115, 0.007111945, -0.006052515],
        [0.043033555, -0.004846372, -0.004629562],
    ]
)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(n_paths):
    rng = np.random.default_rng(0)

    z_gbm = rng.standard_normal((n_paths, 49, 2))
    gbm_args = (
        np.log(np.array([68.05, 69.72])),
        np.array([1.0e-5, 1.2e-5]),
        np.array([[0.0084, 0.0], [0.0069, 0.0029]]),
        z_gbm,
        1,
    )
    yield "gbm_paths(49 steps, 2 assets)", gbm_args

    z_hn = rng.standard_normal((n_paths, 49))
    hn_args = (
        math.log(68.05), 0.015 / 252, -0.5, 7.78,
        2.738e-5, 5.238e-5, 0.086, 8.757e-5, z_hn, 1,
    )
    yield "hn_paths(49 days)", hn_args

    returns = rng.normal(0.0, 0.009, 100_000)
    loglik_args = (returns, 0.015 / 252, 7.28, 0.0, 2.738e-5, 5.238e-5, 0.086,
                   float(returns.var()))
    yield "hn_loglik(100k obs)", loglik_args

    spec = LmmSpec(
        initial_forwards=(0.005, 0.006, 0.007, 0.008, 0.009),
        vol_matrix=LMM_VOLS, dt=1 / 360,
    )
    grid = TimeGrid(num_exercise_dates=4, steps_per_exercise=90, dt_years=1 / 360)
    sig, alive, front = _lmm_step_tables(spec, grid)
    z_lmm = rng.standard_normal((max(n_paths // 8, 64), 360, 3))
    lmm_args = (np.asarray(spec.initial_forwards), sig, alive, front,
                0.25, 1 / 360, z_lmm, 90)
    yield f"lmm_paths(360 steps, {z_lmm.shape[0]} paths)", lmm_args

    yield "crr_values(2000 steps)", (68.05, 70.0, 0.015, 0.133, 49 / 252, 2000, True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension not available; showing fallback times only")
    header = f"{'kernel':38s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, call_args in cases(args.paths):
        fallback = best_of(lambda: getattr(_kernels_py, name.split("(")[0])(*call_args),
                           args.repeat)
        if _kernels is not None:
            compiled = best_of(lambda: getattr(_kernels, name.split("(")[0])(*call_args),
                               args.repeat)
            print(f"{name:38s} {fallback * 1e3:9.1f}ms {compiled * 1e3:9.1f}ms "
                  f"{fallback / compiled:7.1f}x")
        else:
            print(f"{name:38s} {fallback * 1e3:9.1f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
