"""Deterministic inverse-CDF sampling.

The density is integrated once with the adaptive quadrature.  Each final
panel (in the quadrature's unit coordinate u) gets a Chebyshev interpolant of
the integrand; its antiderivative is the within-panel CDF.  Draws come from a
splitmix64 stream, so a seed reproduces the same numbers on every platform,
and each draw is inverted by bisection on the owning panel.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C

from . import _kernels
from .engine import Distribution
from .quadrature import _rule, integrate_panels

_DEGREE = 24
_BISECT_ITERS = 60
_MAX_SPLITS = 30


class InverseCDF:
    """Piecewise Chebyshev representation of the CDF of ``d``."""

    def __init__(self, d: Distribution, degree: int = _DEGREE):
        self.dist = d
        res = integrate_panels(d.density_x, d.x_domain, d.quad, d.cut_points)
        self.sub = res.transform
        g = self.sub.integrand(d.density_x)
        tol = 1e-13 * max(abs(res.value), 1e-300)
        starts, ends, coefs, masses = [], [], [], []
        stack = [(p.a, p.b, p.value, 0) for p in reversed(res.panels)]
        while stack:
            a, b, val, depth = stack.pop()
            F = C.Chebyshev.interpolate(g, degree, domain=[a, b]).integ(lbnd=a)
            mass = float(F(b))
            if abs(mass - val) > tol and depth < _MAX_SPLITS:
                m = 0.5 * (a + b)
                v2, _ = _rule(g, m, b)
                v1, _ = _rule(g, a, m)
                stack.append((m, b, v2, depth + 1))
                stack.append((a, m, v1, depth + 1))
                continue
            starts.append(a)
            ends.append(b)
            coefs.append(F.coef)
            masses.append(mass)
        self.starts = np.array(starts)
        self.ends = np.array(ends)
        self.coeffs = np.ascontiguousarray(np.array(coefs))
        masses = np.array(masses)
        self.offsets = np.concatenate([[0.0], np.cumsum(masses)[:-1]])
        self.total = math.fsum(masses)
        self.upper = self.offsets + masses

    def _x_from_targets(self, targets):
        idx = np.searchsorted(self.upper, targets, side="right")
        idx = np.clip(idx, 0, len(self.starts) - 1).astype(np.int64)
        s = _kernels.invert_panels(self.coeffs, self.offsets, idx,
                                   np.ascontiguousarray(targets, dtype=np.float64), _BISECT_ITERS)
        a, b = self.starts[idx], self.ends[idx]
        u = a + 0.5 * (s + 1.0) * (b - a)
        return self.sub.to_x(u)

    def quantile(self, p):
        """z with CDF(z) = p, vectorised."""
        p = np.asarray(p, dtype=np.float64)
        if np.any((p < 0) | (p > 1)):
            raise ValueError("probabilities must lie in [0, 1]")
        x = self._x_from_targets(np.atleast_1d(p) * self.total)
        z = self.dist.z_of_x(x)
        return z.reshape(p.shape) if p.ndim else float(z[0])

    def cdf(self, z):
        """CDF from the panel tables, vectorised."""
        z = np.asarray(z, dtype=np.float64)
        x = np.atleast_1d(self.dist.x_of_z(z))
        u = np.atleast_1d(self.sub.to_u(x))
        idx = np.clip(np.searchsorted(self.starts, u, side="right") - 1, 0, len(self.starts) - 1)
        a, b = self.starts[idx], self.ends[idx]
        s = np.clip(2.0 * (u - a) / (b - a) - 1.0, -1.0, 1.0)
        c = self.coeffs[idx]
        b1 = np.zeros_like(s)
        b2 = np.zeros_like(s)
        for j in range(c.shape[1] - 1, 0, -1):
            b1, b2 = 2.0 * s * b1 - b2 + c[:, j], b1
        val = s * b1 - b2 + c[:, 0]
        out = np.clip((self.offsets[idx] + val) / self.total, 0.0, 1.0)
        return out.reshape(z.shape) if z.ndim else float(out[0])


@lru_cache(maxsize=64)
def inverse_cdf(d: Distribution) -> InverseCDF:
    return InverseCDF(d)


def uniforms(seed: int, n: int) -> np.ndarray:
    """n open-interval uniforms from the splitmix64 stream of ``seed``."""
    return _kernels.splitmix64_uniforms(int(seed), int(n))


def sample(d: Distribution, n: int, seed: int = 0) -> np.ndarray:
    """n draws of z from ``d``; identical for identical (d, n, seed)."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n!r}")
    inv = inverse_cdf(d)
    targets = uniforms(seed, n) * inv.total
    return d.z_of_x(inv._x_from_targets(targets))


def quantile(d: Distribution, p):
    return inverse_cdf(d).quantile(p)
