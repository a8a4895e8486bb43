"""Numba versus numpy timings for the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is called once untimed (JIT warm-up), then the best of N runs is
reported.  The last section times a whole softened-state build in fresh
interpreters with and without ``FPSTATES_DISABLE_NUMBA``.
"""

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from fpstates import _accel
from fpstates.spectrum import ModelParams, build_eigenspinor_basis, torus_spectrum

PIPELINE = """
import time
from fpstates import _accel
from fpstates.experiments import softened_state
t = time.perf_counter()
softened_state(cutoff=50.0)
print(_accel.backend_name(), time.perf_counter() - t)
"""


def best(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases(rng):
    nodes, weights = np.polynomial.legendre.leggauss(20)
    omegas = rng.uniform(0, 400, 4000)
    panels = np.full(4000, 24)
    yield "bump_cos_integrals (4000 freqs)", _accel.bump_cos_integrals_numba, \
        _accel.bump_cos_integrals_numpy, (omegas, panels, nodes, weights)

    t = np.linspace(-1.0, 1.0, 400)
    y = 1 + np.sin(3 * t) ** 2
    om = rng.uniform(-100, 100, 20000)
    yield "pwl_fourier (400 knots, 20000 freqs)", _accel.pwl_fourier_numba, _accel.pwl_fourier_numpy, (om, t, y)

    params = ModelParams(1.0)
    spec = torus_spectrum(params, 10.0)
    basis = build_eigenspinor_basis(params, spec)
    n, pairs = len(basis), 16
    theta = rng.uniform(0, 0.1, n)
    tp, tq = rng.uniform(-1, 1, (2, pairs))
    xp, xq = rng.uniform(0, 2 * math.pi, (2, pairs, 3))
    args = (np.asarray(spec.positive[:n]), basis.kphys, basis.u_pos, basis.u_neg, np.cos(theta),
            np.sin(theta), rng.uniform(0, 2 * math.pi, n), tp, xp, tq, xq, 1 / math.sqrt(params.volume))
    args = tuple(np.ascontiguousarray(a) if isinstance(a, np.ndarray) else a for a in args)
    yield f"sigma_sum ({n} modes, {pairs} pairs)", _accel.sigma_sum_numba, _accel.sigma_sum_numpy, args


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        sys.exit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':42s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fast, slow, a in cases(rng):
        tf, ts = best(lambda: fast(*a), args.repeat), best(lambda: slow(*a), args.repeat)
        diff = float(np.max(np.abs(fast(*a) - slow(*a))))
        print(f"{name:42s} {tf:10.4f} {ts:10.4f} {ts / tf:8.1f} {diff:11.1e}")
    print("\nsoftened state build, cutoff 50 (fresh interpreter, includes JIT load):")
    for flag in ("", "1"):
        env = dict(os.environ, FPSTATES_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        print(f"  {out[0]:6s} {float(out[1]):8.3f} s")


if __name__ == "__main__":
    main()
