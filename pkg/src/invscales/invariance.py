"""Numerical checks of affine similarity and of shift/stretch invariance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import (Distribution, MeasureKind, average_T, log_pdf, make_distribution, pdf)
from .errors import DegenerateInputError, DomainError
from .scales import (CanonicalScale, Generator, GeneratorKind, ScaleKind, apply_generator,
                     probe_grid)


@dataclass(frozen=True)
class InvarianceReport:
    """Outcome of an affine fit y ~ a + b*x over a grid.

    ``max_residual`` is in units of the range of y.  ``previous`` holds the
    report one generator step earlier for asymptotic checks.
    """

    fitted_a: float
    fitted_b: float
    max_residual: float
    passed: bool
    grid_size: int
    tolerance: float
    previous: Optional["InvarianceReport"] = None

    def to_dict(self) -> dict:
        out = {"a": self.fitted_a, "b": self.fitted_b, "max_residual": self.max_residual,
               "passed": self.passed, "grid_size": self.grid_size, "tolerance": self.tolerance}
        if self.previous is not None:
            out["previous"] = self.previous.to_dict()
        return out


def fit_affine(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line ys ~ a + b*xs.

    Returns ``(a, b, max_residual)`` where the residual is divided by
    ``max(ys) - min(ys)`` unless that range is below 1e-12.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInputError("xs and ys must be 1-d sequences of equal length")
    if x.size < 3:
        raise DegenerateInputError("need at least three points")
    # centering keeps the normal equations well conditioned
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0 or np.ptp(x) <= 1e-15 * max(1.0, np.max(np.abs(x))):
        raise DegenerateInputError("xs are constant")
    b = float(np.dot(dx, y - ym)) / sxx
    a = float(ym - b * xm)
    resid = float(np.max(np.abs(y - a - b * x)))
    span = float(np.ptp(y))
    return a, b, (resid / span if span >= 1e-12 else resid)


# grid points with larger |T| (or |log q|) are dropped: squaring them in the
# least-squares fit would overflow
_VALUE_CAP = 1e100


def _report(xs, ys, tol, previous=None) -> InvarianceReport:
    a, b, r = fit_affine(xs, ys)
    passed = bool(r <= tol and b != 0.0)
    return InvarianceReport(a, b, r, passed, len(xs), tol, previous)


def _default_grid(T: CanonicalScale, g: Generator, n: int = 64):
    lo = max(T.domain[0], g.domain[0])
    hi = min(T.domain[1], g.domain[1])
    grid = probe_grid((lo, hi), n)
    with np.errstate(all="ignore"):
        grid = grid[np.abs(T.values(grid)) <= _VALUE_CAP]
    if g.kind is GeneratorKind.ROTATION:
        return grid
    with np.errstate(all="ignore"):
        img = g.map_z(grid)
    # images get the same 1e-6 clearance from finite ends as the grid itself
    tlo, thi = T.domain
    with np.errstate(all="ignore"):
        keep = np.isfinite(img) & (np.abs(T.values(np.where(np.isfinite(img), img, grid))) <= _VALUE_CAP)
    keep &= img > (tlo + 1e-6 * max(1.0, abs(tlo)) if math.isfinite(tlo) else tlo)
    keep &= img < (thi - 1e-6 * max(1.0, abs(thi)) if math.isfinite(thi) else thi)
    return grid[keep]


def _values_checked(T: CanonicalScale, z):
    z = np.asarray(z, dtype=np.float64)
    lo, hi = T.domain
    if np.any(~((z > lo) & (z < hi))):
        raise DomainError(f"point outside the scale domain ({lo}, {hi})")
    return T.values(z)


def check_affine_similarity(T: CanonicalScale, g: Generator, grid=None, tol: float = 1e-9) -> InvarianceReport:
    """Fit T(G(z)) ~ a + b*T(z) over the grid."""
    z = _default_grid(T, g) if grid is None else np.asarray(grid, dtype=np.float64)
    x = _values_checked(T, z)
    y = _values_checked(T, g.map_z(z))
    return _report(x, y, tol)


def iterate_generator(g: Generator, n: int, z):
    """G applied n times (G^0 is the identity).

    Raises
    ------
    DomainError
        With ``iteration`` set to the failing step (1-based).
    OverflowError
        If an iterate leaves the double range.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    scalar = np.ndim(z) == 0 and not isinstance(z, (tuple, list))
    if g.kind is GeneratorKind.ROTATION:
        out = z
        for _ in range(n):
            out = apply_generator(g, out)
        return out
    cur = np.asarray(z, dtype=np.float64)
    for i in range(1, n + 1):
        try:
            cur = g.map_z(cur)
        except DomainError as err:
            raise DomainError(f"iteration {i}: {err}", iteration=i) from err
        if not np.all(np.isfinite(cur)):
            raise OverflowError(f"iterate {i} left the double range")
    return float(cur) if scalar else cur


def check_asymptotic_invariance(T: CanonicalScale, g: Generator, n: int, grid=None,
                                tol: float = 1e-9) -> InvarianceReport:
    """Fit T(G^(n+1)(z)) ~ a + b*T(G^n(z)); for n >= 2 also attach the n-1 report.

    How large n must be is left to the caller.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    z = _default_grid(T, g) if grid is None else np.asarray(grid, dtype=np.float64)
    gn = iterate_generator(g, n - 1, z)
    prev_x = _values_checked(T, gn)
    gn = iterate_generator(g, 1, gn)
    x = _values_checked(T, gn)
    gn1 = iterate_generator(g, 1, gn)
    y = _values_checked(T, gn1)
    previous = _report(prev_x, x, tol) if n >= 2 else None
    return _report(x, y, tol, previous)


def _finite_grid(d: Distribution, grid):
    z = probe_grid(d.domain) if grid is None else np.asarray(grid, dtype=np.float64)
    with np.errstate(all="ignore"):
        lq = log_pdf(d, z, wrt="z")
    keep = np.abs(lq) <= _VALUE_CAP
    return z[keep], lq[keep]


def _same_measure(d: Distribution, scale: CanonicalScale, lam: float) -> Distribution:
    if d.measure is MeasureKind.R:
        raise ValueError("shift and stretch checks act on the z or T form; the radial form pins T* in its chart")
    return make_distribution(scale, lam, d.measure, d.domain, d.quad)


def check_shift_invariance(d: Distribution, a: float, tol: float = 1e-8, grid=None) -> InvarianceReport:
    """Renormalize with T -> T + a and compare constants and density ratios.

    Writing q = k exp(-lam (a + T)) = k_a exp(-lam T), ``k`` belongs to the
    shifted scale and ``k_a`` (the constant of ``d``) must equal
    k * exp(-lam a).  The density-ratio part fits log q_shifted against
    log q, which must be a pure offset (slope 1).
    """
    shifted = _same_measure(d, d.scale.with_shift(a), d.lam)
    z, lq = _finite_grid(d, grid)
    lq_a = log_pdf(shifted, z, wrt="z")
    fa, fb, r = fit_affine(lq, lq_a)
    # k_a / k = exp(-lam a), compared in log space
    k_err = abs((d.log_k - shifted.log_k) + d.lam * a)
    worst = max(r, abs(fb - 1.0), k_err)
    return InvarianceReport(fa, fb, worst, bool(worst <= tol and fb != 0.0), len(z), tol)


def shift_constant_ratio(d: Distribution, a: float) -> float:
    """k_a / k for a shift by a; the identity predicts exp(-lam a)."""
    shifted = _same_measure(d, d.scale.with_shift(a), d.lam)
    return math.exp(d.log_k - shifted.log_k)


def check_stretch_invariance(d: Distribution, b: float, tol: float = 1e-8, grid=None) -> InvarianceReport:
    """T -> b*T with lam -> lam/b must leave the z-density unchanged.

    Pointwise differences are divided by the largest density on the grid.
    The conserved product lam*<T> must also be unchanged.
    """
    if not b > 0:
        raise ValueError("stretch factor must be > 0")
    stretched = _same_measure(d, d.scale.with_stretch(b), d.lam / b)
    z, lq = _finite_grid(d, grid)
    q = np.exp(lq)
    qb = pdf(stretched, z, wrt="z")
    fa, fb, _ = fit_affine(q, qb) if np.ptp(q) > 0 else (0.0, 1.0, 0.0)
    dens_err = float(np.max(np.abs(qb - q)) / np.max(q))
    before = d.lam * average_T(d)
    after = stretched.lam * average_T(stretched)
    cons_err = abs(after - before) / max(1.0, abs(before))
    worst = max(dens_err, cons_err)
    return InvarianceReport(fa, fb, worst, bool(worst <= tol and fb != 0.0), len(z), tol)


def natural_generator(T: CanonicalScale) -> Generator:
    """A generator under which T is affinely similar to itself.

    Linear base: unit shift.  Log base: doubling.  LinearLog with no
    exponential layer: PowerLinear(2, beta).  Square with no exponential
    layer: doubling.  Other scales have no nontrivial generator acting on z
    alone, so the rotation (which leaves z fixed) is returned.
    """
    base = T.base
    if base.inner is None:
        if base.kind is ScaleKind.LINEAR:
            return Generator.shift(1.0)
        if base.kind is ScaleKind.LOG:
            return Generator.stretch(2.0)
        if T.exp_rate == 0.0 and base.kind is ScaleKind.LINEAR_LOG:
            return Generator.power_linear(2.0, base.beta)
        if T.exp_rate == 0.0 and base.kind is ScaleKind.SQUARE:
            return Generator.stretch(2.0)
    return Generator.rotation(math.pi / 3)


# --------------------------------------------------------------------------
# full verification suite
# --------------------------------------------------------------------------

SHIFTS = (-1.0, 0.5, 3.0)
STRETCHES = (0.5, 2.0, 10.0)
DEFAULT_TOLS = {
    "normalization": 1e-8,
    "shift": 1e-8,
    "stretch": 1e-8,
    "affine": 1e-9,
    "conserved": 1e-6,
    "entropy": 1e-6,
    "cumulative": 1e-6,
    "radial_identity": 1e-10,
    "radial_area": 1e-6,
    "radial_mean": 1e-8,
}
CUMULATIVE_STEP = 1e-4
CUMULATIVE_MAX_POINTS = 200_001


def _scalar_report(err: float, tol: float, grid_size: int = 0) -> InvarianceReport:
    return InvarianceReport(0.0, 1.0, float(err), bool(err <= tol), grid_size, tol)


def cumulative_grid(d: Distribution, step: float = CUMULATIVE_STEP) -> np.ndarray:
    """Grid from the 1% to the 99% quantile at the given step (capped in size)."""
    from .sampling import quantile

    lo, hi = (float(v) for v in quantile(d, np.array([0.01, 0.99])))
    n = min(int(math.ceil((hi - lo) / step)) + 1, CUMULATIVE_MAX_POINTS)
    return np.linspace(lo, hi, max(n, 2))


def verify_distribution(d: Distribution, tol: float | None = None) -> list[tuple[str, InvarianceReport]]:
    """Run every applicable identity check on ``d``.

    Returns ``(name, report)`` pairs sorted by name.  ``tol``, when given,
    replaces every per-check tolerance.  Radial checks run when T has a
    finite minimum; shift and stretch checks run for the z and T measures.
    """
    from .engine import (conserved_check, cumulative_relation_check, entropy, entropy_direct, to_radial,
                         total_mass)
    from .radial import gaussian_identity_residual, radial_mean, radial_variance
    from .chart import find_scale_minimum

    tols = {k: (tol if tol is not None else v) for k, v in DEFAULT_TOLS.items()}
    out = {}
    out["normalization"] = _scalar_report(abs(total_mass(d) - 1.0), tols["normalization"])
    if d.measure is not MeasureKind.R:
        for a in SHIFTS:
            out[f"shift[a={a:g}]"] = check_shift_invariance(d, a, tols["shift"])
        for b in STRETCHES:
            out[f"stretch[b={b:g}]"] = check_stretch_invariance(d, b, tols["stretch"])
    g = natural_generator(d.scale)
    out[f"affine[{g.kind.value}]"] = check_affine_similarity(d.scale, g, tol=tols["affine"])
    H = entropy(d)
    out["entropy"] = _scalar_report(abs(H - entropy_direct(d)) / max(1.0, abs(H)), tols["entropy"])
    grid = cumulative_grid(d)
    out["cumulative"] = _scalar_report(cumulative_relation_check(d, grid), tols["cumulative"], len(grid))
    T_star = find_scale_minimum(d.scale, tuple(d.domain))[1]
    if math.isfinite(T_star):
        out["conserved"] = _scalar_report(abs(conserved_check(d) - 1.0), tols["conserved"])
        out["radial_identity"] = _scalar_report(gaussian_identity_residual(d), tols["radial_identity"], 64)
        d_R = d if d.measure is MeasureKind.R else to_radial(d)
        _, area = radial_variance_unchecked(d_R)
        out["radial_area"] = _scalar_report(abs(area - 0.5), tols["radial_area"])
        if not d_R.chart.one_sided:
            out["radial_mean"] = _scalar_report(abs(radial_mean(d_R)), tols["radial_mean"])
    return sorted(out.items())


def radial_variance_unchecked(d_R: Distribution) -> tuple[float, float]:
    """radial_variance without the mean-radius guard (the suite reports it separately)."""
    from .engine import _integrate_x

    sigma2 = _integrate_x(d_R, lambda x: x * x * d_R.density_x(x))
    return sigma2, math.pi * d_R.chart.v ** 2 * sigma2
