"""Scale minimum and the signed radial coordinate R = +-sqrt(T - T*).

Kept separate from :mod:`invscales.radial` so the distribution engine can
use charts without importing the higher-level radial tools.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, MultiModalError, NegativeRadicandError
from .scales import CanonicalScale, endpoint_value, probe_grid

_N_PROBE = 256
_RADICAND_SLACK = 1e-12


def find_scale_minimum(scale: CanonicalScale, domain=None) -> tuple[float, float]:
    """Locate the minimum of T on ``domain``.

    Returns ``(z_star, T_star)``.  An interior minimum is the root of the
    signed slope, bracketed on a probe grid and refined with Brent's method
    to ``|z - z*| <= 1e-10 * (1 + |z*|)``.  If T is monotone the minimum sits
    on a boundary, which may be infinite, and ``T_star`` is the limit of T
    there (possibly ``-inf``).

    Raises
    ------
    MultiModalError
        If the slope changes sign more than once, or T has an interior
        maximum instead of a minimum.
    """
    lo, hi = domain if domain is not None else scale.domain
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise DomainError(f"empty domain ({lo}, {hi})")
    grid = probe_grid((lo, hi), _N_PROBE)
    _, slope = scale.evaluate(grid)
    sgn = np.sign(slope)
    keep = np.isfinite(slope) & (sgn != 0)
    g, s = grid[keep], sgn[keep]
    flips = np.nonzero(s[1:] != s[:-1])[0]
    if len(flips) > 1:
        raise MultiModalError(f"slope of T changes sign {len(flips)} times on the probe grid")
    if len(flips) == 0:
        if s.size == 0:
            raise MultiModalError("T is flat on the probe grid")
        z_end = lo if s[0] > 0 else hi
        return z_end, endpoint_value(scale, z_end)
    i = flips[0]
    if s[i] > 0:
        raise MultiModalError("T has an interior maximum, not a minimum")
    a, b = float(g[i]), float(g[i + 1])

    def f(z):
        return float(scale.evaluate(z)[1][0])

    z_star = brentq(f, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    return z_star, float(scale.values(z_star)[0])


@dataclass(frozen=True)
class RadialChart:
    """Signed radial chart of a canonical scale.

    ``v`` is the radial stretch; the Gaussian coordinate used by radial
    distributions is ``rho = R * sqrt(lam / pi) / v`` so that
    ``lam * (T - T*) = pi * v**2 * rho**2``.
    """

    scale: CanonicalScale
    z_star: float
    T_star: float
    v: float = 1.0
    domain: tuple = None

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("radial stretch v must be > 0")
        if not math.isfinite(self.T_star):
            raise DomainError(f"T has no finite minimum (T* = {self.T_star}); no radial chart exists")
        if self.domain is None:
            object.__setattr__(self, "domain", tuple(self.scale.domain))

    @classmethod
    def build(cls, scale: CanonicalScale, domain=None, v: float = 1.0) -> "RadialChart":
        dom = tuple(domain) if domain is not None else tuple(scale.domain)
        z_star, T_star = find_scale_minimum(scale, dom)
        return cls(scale, z_star, T_star, v, dom)

    @property
    def one_sided(self) -> bool:
        return self.z_star in self.domain

    def radius(self, z):
        """R(z) = sign(z - z*) * sqrt(T(z) - T*), vectorised."""
        z = np.asarray(z, dtype=np.float64)
        T = self.scale.values(np.atleast_1d(z))
        d = T - self.T_star
        if np.any(d < -_RADICAND_SLACK * (1.0 + abs(self.T_star))):
            raise NegativeRadicandError("T(z) fell below T*; the chart minimum is wrong")
        # sign(z - z*) also covers a minimum on an infinite boundary
        r = np.sign(np.atleast_1d(z) - self.z_star) * np.sqrt(np.maximum(d, 0.0))
        return r.reshape(z.shape) if z.ndim else float(r[0])

    def rho_factor(self, lam: float) -> float:
        return math.sqrt(lam / math.pi) / self.v

    def rho(self, z, lam: float):
        return self.radius(z) * self.rho_factor(lam)

    def radius_limits(self) -> tuple[float, float]:
        """R at the two domain ends (limits, possibly infinite)."""
        lo, hi = self.domain
        out = []
        for end, sign in ((lo, -1.0), (hi, 1.0)):
            if end == self.z_star:
                out.append(0.0)
                continue
            if not math.isfinite(end):
                # T is unbounded at an infinite end of a normalizable chart
                out.append(sign * math.inf)
                continue
            t = endpoint_value(self.scale, end)
            out.append(sign * math.sqrt(max(t - self.T_star, 0.0)))
        return out[0], out[1]

    def z_of_radius(self, r):
        """Inverse chart: z with R(z) = r, to the nearest double."""
        r = np.atleast_1d(np.asarray(r, dtype=np.float64))
        out = np.full(r.shape, self.z_star, dtype=np.float64)
        lo, hi = self.domain
        target = self.T_star + r * r
        for sign, (a, b) in ((1.0, (self.z_star, hi)), (-1.0, (lo, self.z_star))):
            m = sign * r > 0
            if not np.any(m) or not a < b:
                continue
            out[m] = self._invert_branch(target[m], a, b, rising=sign > 0)
        return out

    def _invert_branch(self, target, a, b, rising):
        # bisection over the ordered bit patterns of doubles in [a, b]:
        # 64 halvings reach adjacent floats anywhere, including near 0 and inf
        klo = np.full(target.shape, _key(a), dtype=np.int64)
        khi = np.full(target.shape, _key(b), dtype=np.int64)
        with np.errstate(all="ignore"):
            for _ in range(66):
                km = (klo >> 1) + (khi >> 1) + (klo & khi & 1)
                T = self.scale.values(_unkey(km))
                right = (T < target) if rising else (T > target)
                # nan marks an endpoint limit: step away from it
                right = np.where(np.isnan(T), km < (klo >> 1) + (khi >> 1), right)
                klo = np.where(right, km, klo)
                khi = np.where(right, khi, km)
        zlo, zhi = _unkey(klo), _unkey(khi)
        Tlo = self.scale.values(zlo)
        Thi = self.scale.values(zhi)
        closer_hi = np.abs(Thi - target) < np.abs(Tlo - target)
        return np.where(closer_hi, zhi, zlo)


_SIGN = np.int64(-0x8000000000000000)
_MAG = np.int64(0x7FFFFFFFFFFFFFFF)


def _key(x) -> np.int64:
    """Order-preserving map from doubles to int64."""
    bits = np.asarray(x, dtype=np.float64).view(np.int64)
    return np.where(bits < 0, -(bits & _MAG), bits)


def _unkey(k):
    k = np.asarray(k, dtype=np.int64)
    bits = np.where(k < 0, (-k) | _SIGN, k)
    return bits.view(np.float64)
