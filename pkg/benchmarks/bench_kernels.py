#!/usr/bin/env python3
"""Benchmark: compiled kernels vs the NumPy fallback.

Times the fused pointwise kernels on solver-sized arrays and a full
forward solve under each backend.  Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

from llgopt import _kernels
from llgopt import scenarios
from llgopt.spectral import Grid
from llgopt.state import SolverConfig, solve_forward


def _time(fn, *args, repeat=200):
    best = math.inf
    for _ in range(5):
        fn(*args)  # warm up
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pointwise(n):
    rng = np.random.default_rng(0)
    vec = lambda: np.ascontiguousarray(rng.standard_normal((3, n, n)))
    scal = lambda: np.ascontiguousarray(rng.standard_normal((n, n)))
    m, u, lap_m, lap_v, v, phi = (vec() for _ in range(6))
    gsq, gmv = scal(), scal()
    cases = {
        "cross": (["cross"], (m, u)),
        "double_cross_rhs": (["double_cross_rhs"], (m, u)),
        "ep_pointwise": (["ep_pointwise"], (m, lap_m, gsq, u)),
        "tangent_pointwise": (["tangent_pointwise"], (v, m, u, lap_m, lap_v, gsq, gmv)),
        "adjoint_pointwise": (["adjoint_pointwise"], (phi, m, u, lap_m, gsq)),
        "gradient_direction": (["gradient_direction"], (phi, m)),
        "sphere_defect": (["sphere_defect"], (m,)),
    }
    print(f"\npointwise kernels on (3, {n}, {n}) arrays (best of 200, microseconds)")
    print(f"{'kernel':<20} {'numpy':>10} {'native':>10} {'speedup':>9}")
    for name, (attr, args) in cases.items():
        times = {}
        for impl_name, impl in (("numpy", _kernels.numpy_impl),
                                ("native", _kernels.native_impl)):
            if impl is None:
                times[impl_name] = None
                continue
            times[impl_name] = _time(getattr(impl, attr[0]), *args) * 1e6
        if times["native"] is None:
            print(f"{name:<20} {times['numpy']:>10.1f} {'n/a':>10}")
        else:
            print(f"{name:<20} {times['numpy']:>10.1f} {times['native']:>10.1f} "
                  f"{times['numpy'] / times['native']:>8.2f}x")


def bench_forward_solve(n=32, nt=512):
    grid = Grid(1.0, 1.0, n, n)
    scen = scenarios.perturbed(grid, 0.5, nt, scale=0.8, seed=1, control_amp=0.1)
    cfg = SolverConfig(nt=nt)
    print(f"\nforward solve, {n}x{n} modes, nt={nt} (one run each)")
    results = {}
    for name in ("numpy", "native"):
        if name == "native" and _kernels.native_impl is None:
            print(f"{name:<10} n/a")
            continue
        _kernels.activate(name)
        t0 = time.perf_counter()
        traj = solve_forward(scen.m0, scen.u, 0.5, cfg)
        elapsed = time.perf_counter() - t0
        results[name] = (elapsed, traj.data[-1].copy())
        print(f"{name:<10} {elapsed * 1e3:9.1f} ms "
              f"({elapsed / nt * 1e6:7.1f} us/step)")
    if len(results) == 2:
        drift = np.abs(results["numpy"][1] - results["native"][1]).max()
        print(f"final-frame backend difference: {drift:.3e}")


if __name__ == "__main__":
    print(f"active kernel implementation at import: {_kernels.IMPL_NAME}")
    if _kernels.native_impl is None:
        print("compiled kernels unavailable; showing NumPy timings only")
    bench_pointwise(32)
    bench_pointwise(128)
    bench_forward_solve()
