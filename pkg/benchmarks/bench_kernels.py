"""Time the numba kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

The first jit call (compilation) is excluded.  Both paths must agree:
scale values to 1e-13 relative, uniforms bit for bit, inverted panel
coordinates to 1e-12.
"""

import argparse
import time

import numpy as np
from numpy.polynomial import chebyshev as C

from invscales import _kernels as K
from invscales.scales import BaseScale, ScaleKind, compose_scales


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return

    scale = compose_scales(BaseScale(ScaleKind.LINEAR_LOG, 2.0, 1.0), BaseScale(ScaleKind.SQUARE))
    codes, alphas, betas = scale._program
    z = np.linspace(-50.0, 50.0, args.n)

    n_panels, deg = 512, 25
    coeffs = np.array([C.Chebyshev.interpolate(lambda s, j=j: np.exp(-((s - 0.1 * (j % 7)) ** 2)), deg - 1)
                       .integ(lbnd=-1).coef for j in range(n_panels)])
    masses = np.array([C.chebval(1.0, c) for c in coeffs])
    offsets = np.concatenate([[0.0], np.cumsum(masses)[:-1]])
    rng = np.random.default_rng(0)
    panel = rng.integers(0, n_panels, size=args.n // 10)
    targets = offsets[panel] + rng.random(panel.size) * masses[panel]

    cases = [
        ("scale_chain", lambda: K.scale_chain_np(codes, alphas, betas, z),
         lambda: K.scale_chain_jit(codes, alphas, betas, z)),
        ("splitmix64_uniforms", lambda: K.splitmix64_uniforms_np(12345, args.n),
         lambda: K.splitmix64_uniforms_jit(12345, args.n)),
        ("invert_panels", lambda: K.invert_panels_np(coeffs, offsets, panel, targets, 60),
         lambda: K.invert_panels_jit(coeffs, offsets, panel, targets, 60)),
    ]
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'jit [ms]':>12}{'speedup':>10}  agreement")
    for name, f_np, f_jit in cases:
        a, b = f_np(), f_jit()  # also compiles the jit path
        if name == "scale_chain":
            err = max(float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(x)))) for x, y in zip(a, b))
        elif name == "splitmix64_uniforms":
            err = float(np.count_nonzero(a != b))
        else:
            err = float(np.max(np.abs(a - b)))
        t_np = best_of(f_np, args.repeat)
        t_jit = best_of(f_jit, args.repeat)
        print(f"{name:<22}{1e3 * t_np:>12.2f}{1e3 * t_jit:>12.2f}{t_np / t_jit:>10.1f}  {err:.2e}")


if __name__ == "__main__":
    main()
