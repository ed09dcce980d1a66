"""Normalized distributions q = k * exp(-lam * T) under a chosen measure.

Three measures are supported.  ``z``: density per dz.  ``T``: density per
dT, integrated in z with weight |T'(z)| so non-monotone T contributes both
branches.  ``R``: density per d(rho), where rho is the Gaussian coordinate of
a :class:`~invscales.chart.RadialChart`; see :func:`to_radial`.

Every user-facing function takes and returns the underlying variable z.
Integrals run over the measure's own variable ("x": z for ``z`` and ``T``,
rho for ``R``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .chart import RadialChart, find_scale_minimum
from .errors import (BracketError, DivergentError, DomainError, IntegrationError,
                     InvScalesError, NonConvergedError, NonFiniteError)
from .quadrature import QuadratureConfig, divergent_ends, integrate_panels
from .scales import CanonicalScale, scale_from_dict, scale_to_dict

LAMBDA_RANGE = (1e-8, 1e8)


class MeasureKind(str, Enum):
    Z = "z"
    T = "T"
    R = "R"


@dataclass(frozen=True)
class Distribution:
    """Normalized density k * exp(-lam * T) over ``measure``.

    For the radial measure ``chart`` is required and ``scale`` is already
    shifted so that its minimum is zero.
    """

    scale: CanonicalScale
    lam: float
    k: float
    measure: MeasureKind
    domain: tuple
    quad: QuadratureConfig = field(default_factory=QuadratureConfig.from_env)
    chart: Optional[RadialChart] = None
    log_k: float = None

    def __post_init__(self):
        object.__setattr__(self, "measure", MeasureKind(self.measure))
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be finite and > 0, got {self.lam!r}")
        if self.log_k is None:
            object.__setattr__(self, "log_k", math.log(self.k))
        if not (math.isfinite(self.log_k) and self.k > 0 and math.isfinite(self.k)):
            raise NonFiniteError(f"normalization constant is not a finite positive number (log k = {self.log_k!r})")
        if self.measure is MeasureKind.R and self.chart is None:
            raise ValueError("the radial measure needs a chart")

    @property
    def x_domain(self) -> tuple:
        """Domain of the integration variable."""
        if self.measure is MeasureKind.R:
            lo, hi = self.chart.radius_limits()
            c = self.chart.rho_factor(self.lam)
            return (lo * c, hi * c)
        return tuple(self.domain)

    @property
    def cut_points(self) -> tuple:
        if self.measure is MeasureKind.R:
            lo, hi = self.x_domain
            return (0.0,) if lo < 0.0 < hi else ()
        return _interior_minimum(self.scale, tuple(self.domain))

    def z_of_x(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.measure is MeasureKind.R:
            return self.chart.z_of_radius(x / self.chart.rho_factor(self.lam))
        return x

    def x_of_z(self, z):
        if self.measure is MeasureKind.R:
            return self.chart.rho(z, self.lam)
        return z

    def log_density_x(self, x):
        """log of the density per dx, vectorised over x."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        if self.measure is MeasureKind.R:
            r = x / self.chart.rho_factor(self.lam)
            lo, hi = self.chart.radius_limits()
            out = self.log_k - self.lam * (self.chart.T_star + r * r)
            return np.where((r >= lo) & (r <= hi) & np.isfinite(r), out, -np.inf)
        z = self.z_of_x(x)
        out = self.log_k + _log_weight(self.scale, self.lam, self.measure, z)
        return np.where(np.isfinite(z), out, -np.inf)

    def density_x(self, x):
        with np.errstate(under="ignore", over="ignore"):
            return np.exp(self.log_density_x(x))


@lru_cache(maxsize=1024)
def _interior_minimum(scale: CanonicalScale, domain: tuple) -> tuple:
    try:
        z_star, _ = find_scale_minimum(scale, domain)
    except InvScalesError:
        return ()
    return (z_star,) if domain[0] < z_star < domain[1] else ()


def _log_weight(scale, lam, measure, z):
    """-lam*T(z), plus log|T'(z)| for the T measure."""
    T, dT = scale.evaluate(z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = -lam * T
        if measure is MeasureKind.T:
            out = out + scale.log_abs_slope(z)
    return out


def _reference_level(scale, lam, measure, domain, points):
    """Log-integrand value near its peak, used to keep exp() in range."""
    lo, hi = domain
    probes = list(points)
    if math.isfinite(lo) and math.isfinite(hi):
        probes += list(np.linspace(lo, hi, 33)[1:-1])
    elif math.isfinite(lo):
        probes += list(lo + np.logspace(-3, 3, 25))
    elif math.isfinite(hi):
        probes += list(hi - np.logspace(-3, 3, 25))
    else:
        probes += list(np.concatenate([-np.logspace(-3, 3, 13), [0.0], np.logspace(-3, 3, 13)]))
    vals = _log_weight(scale, lam, measure, np.asarray(probes, dtype=np.float64))
    vals = vals[np.isfinite(vals)]
    return float(np.max(vals)) if vals.size else 0.0


def _log_total(scale, lam, measure, domain, cfg, chart=None):
    """log of the integral of exp(-lam*T) over the measure."""
    cfg = cfg or QuadratureConfig.from_env()
    domain = (float(domain[0]), float(domain[1]))
    if measure is MeasureKind.R:
        c = chart.rho_factor(lam)
        rlo, rhi = chart.radius_limits()
        xdom = (rlo * c, rhi * c)
        points = (0.0,) if xdom[0] < 0.0 < xdom[1] else ()

        def g(x):
            # lam (T - T*) = lam R^2 by construction of the chart; going
            # through z would lose the tails where z saturates at an end
            r = np.asarray(x, dtype=np.float64) / c
            with np.errstate(under="ignore", over="ignore", invalid="ignore"):
                return np.where(np.isfinite(r), np.exp(-lam * r * r), 0.0)

        ref = -lam * chart.T_star
    else:
        xdom = domain
        points = _interior_minimum(scale, domain)
        ref = _reference_level(scale, lam, measure, domain, points)

        def g(x):
            with np.errstate(under="ignore", over="ignore", invalid="ignore"):
                return np.exp(_log_weight(scale, lam, measure, x) - ref)

    bad = divergent_ends(g, xdom)
    if bad:
        raise DivergentError(f"normalization integrand does not decay at the {' and '.join(bad)} end")
    try:
        res = integrate_panels(g, xdom, cfg, points)
    except NonConvergedError as err:
        raise DivergentError(f"normalization integral does not settle: {err}") from err
    except NonFiniteError as err:
        raise DivergentError(f"normalization integrand is not finite: {err}") from err
    if not (math.isfinite(res.value) and res.value > 0):
        raise DivergentError(f"normalization integral is {res.value!r}")
    return math.log(res.value) + ref


def normalize(scale: CanonicalScale, lam: float, measure, domain=None,
              cfg: QuadratureConfig | None = None) -> float:
    """k such that k * exp(-lam*T) integrates to one over the measure.

    Raises
    ------
    DivergentError
        If the integral is infinite or the quadrature cannot settle.
    """
    measure = MeasureKind(measure)
    if measure is MeasureKind.R:
        raise ValueError("use to_radial() for the radial measure")
    domain = domain if domain is not None else scale.domain
    return math.exp(-_log_total(scale, lam, measure, domain, cfg))


def make_distribution(scale: CanonicalScale, lam: float | None = None, measure="z", domain=None,
                      cfg: QuadratureConfig | None = None, target_avg: float | None = None) -> Distribution:
    """Build and normalize a distribution from a rate or a target average of T."""
    measure = MeasureKind(measure)
    cfg = cfg or QuadratureConfig.from_env()
    domain = tuple(float(v) for v in (domain if domain is not None else scale.domain))
    if (lam is None) == (target_avg is None):
        raise ValueError("give exactly one of lambda or target_avg")
    if lam is None:
        lam = solve_lambda(scale, target_avg, measure if measure is not MeasureKind.R else MeasureKind.Z,
                           domain, cfg)
    if measure is MeasureKind.R:
        base = make_distribution(scale, lam, MeasureKind.Z, domain, cfg)
        return to_radial(base)
    log_k = -_log_total(scale, lam, measure, domain, cfg)
    return Distribution(scale, float(lam), math.exp(log_k), measure, domain, cfg, None, log_k)


def to_radial(d: Distribution, v: float | None = None) -> Distribution:
    """Radial (Gaussian) form of ``d``.

    The scale is shifted by -T* and the density is taken per d(rho) with
    rho = R * sqrt(lam/pi) / v.  The default ``v = sqrt(lam/pi)`` makes rho
    equal to R, so the density is k * exp(-lam * R**2) with k = sqrt(lam/pi)
    for a two-sided chart.  The constant is recomputed by quadrature in rho
    through the inverse chart rather than assumed.
    """
    v = math.sqrt(d.lam / math.pi) if v is None else float(v)
    chart0 = d.chart if d.measure is MeasureKind.R else RadialChart.build(d.scale, d.domain)
    shifted = d.scale.with_shift(-chart0.T_star)
    chart = RadialChart(shifted, chart0.z_star, 0.0, v, tuple(d.domain))
    log_k = -_log_total(shifted, d.lam, MeasureKind.R, d.domain, d.quad, chart)
    return Distribution(shifted, d.lam, math.exp(log_k), MeasureKind.R, tuple(d.domain), d.quad, chart, log_k)


def with_lambda(d: Distribution, lam: float) -> Distribution:
    return make_distribution(d.scale, lam, d.measure, d.domain, d.quad)


def renormalized(d: Distribution, scale: CanonicalScale, lam: float | None = None) -> Distribution:
    """Same measure and domain, new scale (and optionally rate), renormalized."""
    lam = d.lam if lam is None else lam
    if d.measure is MeasureKind.R:
        base = make_distribution(scale, lam, MeasureKind.Z, d.domain, d.quad)
        return to_radial(base, d.chart.v)
    return make_distribution(scale, lam, d.measure, d.domain, d.quad)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def _check_closed(d: Distribution, z):
    lo, hi = d.domain
    z = np.asarray(z, dtype=np.float64)
    if np.any(~((z >= lo) & (z <= hi))):
        raise DomainError(f"point outside the distribution domain [{lo}, {hi}]")
    return z


def log_pdf(d: Distribution, z, wrt: str = "native"):
    """log density at z without exponentiating.

    ``wrt="native"`` is per d(psi) of the distribution's measure;
    ``wrt="z"`` multiplies by the Jacobian of the measure with respect to z.
    """
    z = _check_closed(d, z)
    zz = np.atleast_1d(z)
    out = d.log_k + _log_weight(d.scale, d.lam, MeasureKind.Z, zz)
    if wrt == "z":
        if d.measure is MeasureKind.T:
            out = out + d.scale.log_abs_slope(zz)
        elif d.measure is MeasureKind.R:
            with np.errstate(divide="ignore"):
                out = out + np.log(np.abs(_drho_dz(d, zz)))
    elif wrt != "native":
        raise ValueError(f"wrt must be 'native' or 'z', got {wrt!r}")
    if np.any(np.isnan(out)):
        raise NonFiniteError("log density is nan")
    return out.reshape(z.shape) if z.ndim else float(out[0])


def pdf(d: Distribution, z, wrt: str = "native"):
    with np.errstate(under="ignore", over="ignore"):
        return np.exp(log_pdf(d, z, wrt))


def _drho_dz(d, z):
    """d(rho)/dz; the removable 0/0 at z* is resolved by a difference quotient."""
    chart = d.chart
    c = chart.rho_factor(d.lam)
    T, dT = d.scale.evaluate(z)
    r = np.sqrt(np.maximum(T - chart.T_star, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = c * np.abs(dT) / (2.0 * r)
    bad = ~np.isfinite(out) | (r < 1e-6)
    if np.any(bad):
        h = 1e-5 * (1.0 + np.abs(z[bad]))
        lo, hi = d.domain
        a = np.maximum(z[bad] - h, lo + 0.5 * h)
        b = np.minimum(z[bad] + h, hi - 0.5 * h)
        out[bad] = (chart.rho(b, d.lam) - chart.rho(a, d.lam)) / (b - a)
    return out


def _integrate_x(d: Distribution, fx: Callable, xdom=None) -> float:
    xdom = d.x_domain if xdom is None else xdom
    pts = [p for p in d.cut_points if xdom[0] < p < xdom[1]]
    return integrate_panels(fx, xdom, d.quad, pts).value


def mean_of(d: Distribution, f: Callable) -> float:
    """Average of f(z) against the density over the distribution's measure."""
    def fx(x):
        z = d.z_of_x(x)
        q = d.density_x(x)
        with np.errstate(invalid="ignore", over="ignore"):
            fz = np.asarray(f(z), dtype=np.float64)
            return np.where(q == 0.0, 0.0, fz * q)
    return _integrate_x(d, fx)


def average_T(d: Distribution) -> float:
    return mean_of(d, d.scale.values)


def total_mass(d: Distribution) -> float:
    return _integrate_x(d, d.density_x)


def cdf(d: Distribution, z: float) -> float:
    """Probability below z, clamped to [0, 1]."""
    z = float(_check_closed(d, z))
    lo, hi = d.domain
    if z == lo:
        return 0.0
    if z == hi:
        return 1.0
    xz = float(d.x_of_z(z))
    xlo = d.x_domain[0]
    val = _integrate_x(d, d.density_x, (xlo, xz))
    return min(1.0, max(0.0, val))


# --------------------------------------------------------------------------
# rate solving
# --------------------------------------------------------------------------

def _avg_at(scale, lam, measure, domain, cfg):
    try:
        d = make_distribution(scale, lam, measure, domain, cfg)
    except DivergentError:
        return math.inf
    return average_T(d)


def solve_lambda(scale: CanonicalScale, target_avg: float, measure="z", domain=None,
                 cfg: QuadratureConfig | None = None) -> float:
    """Rate lam with <T>(lam) = target_avg, by bracketing then bisection in log(lam).

    <T> decreases with lam (its derivative is minus the variance of T), so a
    bracket is expanded geometrically from lam = 1 inside [1e-8, 1e8].  A
    rate at which the density is not normalizable counts as <T> = +inf.
    """
    measure = MeasureKind(measure)
    domain = tuple(domain) if domain is not None else tuple(scale.domain)
    cfg = cfg or QuadratureConfig.from_env()
    tol = 1e-8 * (1.0 + abs(target_avg))
    lo_lim, hi_lim = LAMBDA_RANGE

    def excess(lam):
        return _avg_at(scale, lam, measure, domain, cfg) - target_avg

    a = b = 1.0
    fa = fb = excess(1.0)
    if abs(fa) <= tol:
        return 1.0
    if fa > 0:
        # mean too large: raise lambda
        while fb > 0:
            a, fa = b, fb
            b *= 4.0
            if b > hi_lim:
                raise BracketError(f"no rate in [{lo_lim}, {hi_lim}] reaches <T> = {target_avg}")
            fb = excess(b)
    else:
        while fa < 0:
            b, fb = a, fa
            a /= 4.0
            if a < lo_lim:
                raise BracketError(f"no rate in [{lo_lim}, {hi_lim}] reaches <T> = {target_avg}")
            fa = excess(a)
    la, lb = math.log(a), math.log(b)
    for _ in range(200):
        lm = 0.5 * (la + lb)
        fm = excess(math.exp(lm))
        if abs(fm) <= tol:
            return math.exp(lm)
        if fm > 0:
            la = lm
        else:
            lb = lm
        if lb - la < 1e-15:
            break
    raise NonConvergedError(f"bisection for lambda stalled at {math.exp(0.5 * (la + lb))!r}")


# --------------------------------------------------------------------------
# identities
# --------------------------------------------------------------------------

def _branch_chart(d: Distribution) -> RadialChart:
    z_star, T_star = find_scale_minimum(d.scale, tuple(d.domain))
    if not math.isfinite(T_star):
        raise DivergentError("T is unbounded below, so the dT-weighted form does not normalize")
    return RadialChart(d.scale, z_star, T_star, 1.0, tuple(d.domain))


def _radial_moments(chart: RadialChart, lam: float, cfg: QuadratureConfig) -> tuple[float, float]:
    """Integrals of 2|R| exp(-lam R^2) and R^2 times that over the chart."""
    r_lo, r_hi = chart.radius_limits()
    pts = (0.0,) if r_lo < 0.0 < r_hi else ()

    def total(r):
        with np.errstate(under="ignore"):
            return 2.0 * np.abs(r) * np.exp(-lam * r * r)

    def first(r):
        return r * r * total(r)

    return (integrate_panels(total, (r_lo, r_hi), cfg, pts).value,
            integrate_panels(first, (r_lo, r_hi), cfg, pts).value)


def log_k_per_dT(d: Distribution) -> float:
    """log of the constant normalizing exp(-lam T) against dT = |T'| dz.

    The integral is taken in R, where |T'| dz = 2 |R| dR; this avoids the
    integrable endpoint singularities |T'| can have in z.
    """
    chart = _branch_chart(d)
    norm, _ = _radial_moments(chart, d.lam, d.quad)
    return d.lam * chart.T_star - math.log(norm)


def conserved_check(d: Distribution) -> float:
    """lam * <(T - T*) T'> with T measured from its minimum.

    Written in z this is lam * integral of (T - T*) |T'| k_T exp(-lam (T - T*)) dz
    where k_T normalizes exp(-lam (T - T*)) against dT.  Each monotone branch
    of T maps onto an exponential in T - T*, so the value is one for every
    scale whose branches run from T* to infinity.  Integrals are taken in R
    as in :func:`log_k_per_dT`.
    """
    norm, first = _radial_moments(_branch_chart(d), d.lam, d.quad)
    return d.lam * first / norm


def entropy(d: Distribution) -> float:
    """lam * <T> - log k over the distribution's measure."""
    return d.lam * average_T(d) - d.log_k


def entropy_direct(d: Distribution) -> float:
    """-integral of q log q over the measure.

    q is the density per unit of the measure (dz, dT or drho), evaluated
    from the quadrature integrand rather than from k and lam * T.
    """
    def fx(x):
        q = d.density_x(x)
        if d.measure is MeasureKind.T:
            # per-dT density is the per-dz integrand divided by |T'|
            z = d.z_of_x(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                lq = d.log_density_x(x) - d.scale.log_abs_slope(z)
        else:
            with np.errstate(divide="ignore"):
                lq = np.log(q)
        with np.errstate(invalid="ignore"):
            return np.where(q > 0.0, -q * lq, 0.0)
    return _integrate_x(d, fx)


def cumulative_relation_check(d: Distribution, grid) -> float:
    """Max discrepancy of dq = -lam q dT on a grid, normalized by max q.

    q here is the exponential form k exp(-lam T).  Adjacent pairs compare
    the increment of q with -lam times the midpoint value of q times the
    increment of T.
    """
    z = np.asarray(grid, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise DomainError("grid needs at least two points")
    if not np.all(np.diff(z) > 0):
        raise DomainError("grid must be strictly increasing")
    _check_closed(d, z)
    T = d.scale.values(z)
    with np.errstate(under="ignore"):
        q = np.exp(d.log_k - d.lam * T)
    scale = np.max(q)
    if not scale > 0:
        raise DomainError("density vanishes on the whole grid")
    dq = np.diff(q)
    rhs = -d.lam * 0.5 * (q[1:] + q[:-1]) * np.diff(T)
    return float(np.max(np.abs(dq - rhs)) / scale)


# --------------------------------------------------------------------------
# JSON spec
# --------------------------------------------------------------------------

def quad_from_dict(obj: dict | None) -> QuadratureConfig:
    obj = dict(obj or {})
    unknown = set(obj) - {"rel_tol", "abs_tol", "max_depth", "infinite_map"}
    if unknown:
        raise ValueError(f"unknown quadrature keys {sorted(unknown)}")
    return QuadratureConfig.from_env(**obj)


def distribution_from_spec(spec: dict) -> Distribution:
    """Parse {scale, lambda | target_avg, measure, domain, quad} and build."""
    if not isinstance(spec, dict):
        raise ValueError("distribution spec must be a JSON object")
    unknown = set(spec) - {"scale", "lambda", "target_avg", "measure", "domain", "quad", "v"}
    if unknown:
        raise ValueError(f"unknown keys in distribution spec: {sorted(unknown)}")
    if "scale" not in spec:
        raise ValueError("distribution spec needs a 'scale'")
    has_lam, has_avg = "lambda" in spec, "target_avg" in spec
    if has_lam == has_avg:
        raise ValueError("exactly one of 'lambda' and 'target_avg' must be present")
    scale = scale_from_dict(spec["scale"])
    measure = MeasureKind(spec.get("measure", "z"))
    dom = spec.get("domain")
    dom = (float(dom[0]), float(dom[1])) if dom is not None else None
    cfg = quad_from_dict(spec.get("quad"))
    if has_lam:
        lam = float(spec["lambda"])
        if not lam > 0:
            raise ValueError("lambda must be > 0")
        target = None
    else:
        lam, target = None, float(spec["target_avg"])
    if measure is MeasureKind.R:
        base = make_distribution(scale, lam, MeasureKind.Z, dom, cfg, target)
        return to_radial(base, spec.get("v"))
    return make_distribution(scale, lam, measure, dom, cfg, target)


def distribution_to_spec(d: Distribution) -> dict:
    from .scales import _enc
    out = {
        "scale": scale_to_dict(d.scale),
        "lambda": d.lam,
        "measure": d.measure.value,
        "domain": [_enc(d.domain[0]), _enc(d.domain[1])],
        "quad": {"rel_tol": d.quad.rel_tol, "abs_tol": d.quad.abs_tol, "max_depth": d.quad.max_depth},
    }
    if d.chart is not None:
        out["v"] = d.chart.v
    return out
