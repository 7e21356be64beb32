#!/usr/bin/env python3
"""Benchmark: compiled transport kernel vs the pure-Python fallback.

Times the dominant workload of the certification pipeline, adaptive
Runge-Kutta transport of 2x2 fundamental matrices along monodromy loops of
the exact limit equation, on both backends and checks they agree.

Usage:
    python benchmarks/bench_kernels.py [--tol 1e-12] [--repeat 3]
"""

import argparse
import math
import time

from galcert import _kernels_py as pure
from galcert import monodromy
from galcert.variational import limit_equation

try:
    from galcert import _kernels as compiled
except ImportError:
    compiled = None


def workload():
    """(kinds, params) for all seven generator loops plus the boundary circle."""
    e = limit_equation()
    sings = [s.embed() for s in e.singularities()]
    jobs = []
    for c in sings:
        loop = monodromy.loop_around(c, sings)
        kinds, params = [], []
        for seg in loop.segments:
            k, p = seg.kernel_params()
            kinds.append(k)
            params.append(p)
        jobs.append((kinds, params))
    jobs.append(([1], [(0j, 5.0 + 0j, 2 * math.pi)]))
    coeffs = (
        [x.embed() for x in e.a2.coeffs],
        [x.embed() for x in e.a1.coeffs],
        [x.embed() for x in e.a0.coeffs],
    )
    return coeffs, jobs


def run(backend, coeffs, jobs, tol):
    results = []
    steps = 0
    t0 = time.perf_counter()
    for kinds, params in jobs:
        m, n = backend.transport_poly_segments(*coeffs, kinds, params, tol)
        results.append(m)
        steps += n
    return time.perf_counter() - t0, steps, results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tol", type=float, default=1e-12)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    coeffs, jobs = workload()
    print(f"workload: {len(jobs)} loop transports of the limit equation, tol {args.tol:g}")

    t_pure = min(run(pure, coeffs, jobs, args.tol)[0] for _ in range(args.repeat))
    _, steps, res_pure = run(pure, coeffs, jobs, args.tol)
    print(f"pure python : {t_pure * 1e3:9.1f} ms   ({steps} RK steps)")

    if compiled is None:
        print("compiled    :  not built (pure backend selected at import)")
        return

    t_comp = min(run(compiled, coeffs, jobs, args.tol)[0] for _ in range(args.repeat))
    _, steps_c, res_comp = run(compiled, coeffs, jobs, args.tol)
    agree = max(
        abs(a[i] - b[i]) for a, b in zip(res_comp, res_pure) for i in range(4)
    )
    print(f"compiled    : {t_comp * 1e3:9.1f} ms   ({steps_c} RK steps)")
    print(f"speedup     : {t_pure / t_comp:9.1f} x")
    print(f"max backend disagreement: {agree:.3e}")


if __name__ == "__main__":
    main()
