#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times each hot kernel per geometry and dimension, then an end-to-end solver
run, under both backends. Run from the repo root:

    python benchmarks/bench_backends.py [--steps 20000] [--reps 20000]
"""

import argparse
import time

import numpy as np

import bregfix as bf
from bregfix import _kernels as K

GEOMS = (("sq_norm", K.SQ_NORM, 0.0),
         ("p_power(4)", K.P_POWER, 4.0),
         ("neg_entropy", K.NEG_ENTROPY, 0.0))


def time_call(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def kernel_timings(reps, dims=(2, 50)):
    rng = np.random.default_rng(0)
    rows = []
    for gname, code, param in GEOMS:
        for d in dims:
            x = rng.uniform(0.2, 2.0, size=d)
            g = K.grad(code, param, x)
            w = np.array([0.25, 0.25, 0.5])
            pts = np.stack([x, x * 1.1, x * 0.9])
            a = np.ones(d)
            b = 0.5 * float(np.dot(a, x))
            cases = [
                ("grad", lambda: K.grad(code, param, x)),
                ("conj_grad", lambda: K.conj_grad(code, param, g)),
                ("div", lambda: K.div(code, param, x, 1.1 * x)),
                ("dual_average", lambda: K.dual_average(code, param, w, pts)),
                ("linear_solve", lambda: K.linear_solve(code, param, g, a, b, True)),
            ]
            for kname, fn in cases:
                rows.append((gname, d, kname, time_call(fn, reps)))
    return rows


def solver_timing(steps):
    sq = bf.squared_norm(2)
    t1 = bf.projection_mapping(sq, bf.Halfspace([1.0, 0.0], 0.0))
    t2 = bf.projection_mapping(sq, bf.Halfspace([0.0, 1.0], 0.0))
    cfg = bf.SolverConfig(geometry=sq, ambient=bf.Box([-1e6, -1e6], [1e6, 1e6]),
                          anchor=np.array([1.0, 1.0]), start=np.array([1.0, 1.0]),
                          max_iter=steps, residual_tol=0.0,
                          reference=np.array([0.0, 0.0]), audit=True)
    t0 = time.perf_counter()
    bf.run_pair(sq, cfg, t1, t2)
    return (time.perf_counter() - t0) / steps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=20000, help="kernel repetitions")
    ap.add_argument("--steps", type=int, default=20000, help="solver iterations")
    args = ap.parse_args()

    backends = ["numpy"]
    if K.numba_available():
        backends.insert(0, "numba")
    else:
        print("numba unavailable; timing the numpy backend only")

    kernel_rows = {}
    solver_rows = {}
    for backend in backends:
        K.use_backend(backend)
        K.warmup()
        kernel_rows[backend] = kernel_timings(args.reps)
        solver_rows[backend] = solver_timing(args.steps)
    K.use_backend("auto")

    print(f"\nkernel timings, {args.reps} reps each (microseconds per call)")
    header = f"{'geometry':<12} {'dim':>4} {'kernel':<14}"
    for b in backends:
        header += f" {b:>10}"
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)
    for i, (gname, d, kname, _) in enumerate(kernel_rows[backends[0]]):
        line = f"{gname:<12} {d:>4} {kname:<14}"
        times = [kernel_rows[b][i][3] for b in backends]
        for t in times:
            line += f" {t * 1e6:>9.2f}u"
        if len(times) == 2 and times[0] > 0:
            line += f" {times[1] / times[0]:>7.1f}x"
        print(line)

    print(f"\nsolver end-to-end, {args.steps} audited iterations (microseconds per step)")
    for b in backends:
        print(f"  {b:<8} {solver_rows[b] * 1e6:9.1f}u")
    if len(backends) == 2:
        print(f"  speedup  {solver_rows['numpy'] / solver_rows['numba']:.1f}x")


if __name__ == "__main__":
    main()
