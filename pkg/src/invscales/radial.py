"""Gaussian radial form, radial moments and rotational partitions.

With R = +-sqrt(T - T*) every unimodal scale turns exp(-lam T) into the
Gaussian exp(-lam R^2) up to a constant.  The radial density is written in
rho = R sqrt(lam/pi) / v so that lam (T - T*) = pi v^2 rho^2, and its second
moment satisfies pi v^2 sigma^2 = 1/2 for every v.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chart import RadialChart, find_scale_minimum
from .engine import (Distribution, MeasureKind, _check_closed, _integrate_x, log_k_per_dT, pdf,
                     to_radial)
from .errors import DomainError, IntegrationError, NegativeProbabilityError, NegativeTotalError
from .scales import probe_grid

__all__ = [
    "RadialChart", "find_scale_minimum", "radial_coordinate", "to_gaussian_form", "radial_variance",
    "radial_mean", "Partition2D", "circular_partition", "factor_location_rate",
    "sqrt_probability_partition", "CurveTable", "parametric_curves", "gaussian_identity_residual",
]

MEAN_TOL = 1e-8


def radial_coordinate(chart: RadialChart, z):
    """sign(z - z*) sqrt(T(z) - T*); zero at z*."""
    lo, hi = chart.domain
    zz = np.asarray(z, dtype=np.float64)
    if np.any(~((zz >= lo) & (zz <= hi))):
        raise DomainError(f"point outside the chart domain [{lo}, {hi}]")
    return chart.radius(z)


def to_gaussian_form(d: Distribution, v: float | None = None) -> Distribution:
    """The radial form of ``d``; density proportional to exp(-lam (T - T*)) per d rho.

    With the default ``v = sqrt(lam/pi)`` rho equals R and k = sqrt(lam/pi).
    With ``v = 1`` and lam = pi the density is exp(-pi R^2) with k = 1.
    """
    return to_radial(d, v)


def radial_mean(d_R: Distribution) -> float:
    """<rho> under the radial form."""
    _require_radial(d_R)
    return _integrate_x(d_R, lambda x: x * d_R.density_x(x))


def radial_variance(d_R: Distribution) -> tuple[float, float]:
    """Second radial moment and pi v^2 sigma^2.

    For a two-sided chart the mean radius must vanish; a larger value means
    the quadrature did not resolve the density and IntegrationError is raised.
    """
    _require_radial(d_R)
    sigma2 = _integrate_x(d_R, lambda x: x * x * d_R.density_x(x))
    if not d_R.chart.one_sided:
        m = radial_mean(d_R)
        if abs(m) > MEAN_TOL:
            raise IntegrationError(f"mean radius {m:.3g} is not zero")
    return sigma2, math.pi * d_R.chart.v ** 2 * sigma2


def _require_radial(d_R: Distribution):
    if d_R.measure is not MeasureKind.R:
        raise ValueError("expected a distribution over the radial measure; use to_gaussian_form first")


@dataclass(frozen=True)
class Partition2D:
    """T = w^2 + wdot^2 split by the angle ``theta``."""

    total: float
    theta: float

    def __post_init__(self):
        if not self.total >= 0:
            raise NegativeTotalError(f"total must be >= 0, got {self.total}")

    @property
    def components(self) -> tuple[float, float]:
        r = math.sqrt(self.total)
        return r * math.cos(self.theta), r * math.sin(self.theta)


def circular_partition(total: float, theta: float) -> tuple[float, float]:
    """(sqrt(total) cos theta, sqrt(total) sin theta)."""
    return Partition2D(float(total), float(theta)).components


def factor_location_rate(d: Distribution, total: float, theta: float) -> tuple[float, float]:
    """(exp(-lam w^2), exp(-lam wdot^2)); their product is exp(-lam total)."""
    w, wdot = circular_partition(total, theta)
    return math.exp(-d.lam * w * w), math.exp(-d.lam * wdot * wdot)


def sqrt_probability_partition(probs: Sequence[float]) -> float:
    """Sum of squared square roots, i.e. the squared length of sqrt(p)."""
    p = np.asarray(probs, dtype=np.float64).ravel()
    if np.any(p < 0) or np.any(np.isnan(p)):
        raise NegativeProbabilityError("probabilities must be nonnegative")
    return math.fsum(np.sqrt(p) ** 2)


def gaussian_identity_residual(d: Distribution, grid=None) -> float:
    """max |log q(z) - log q(z*) + lam R(z)^2| over a grid.

    q is the exponential form k exp(-lam T), whatever the measure of ``d``.
    Each difference is divided by max(1, lam (T - T*)) so that far tails,
    where T itself is large, are judged at the same relative precision.
    Points where T overflows are skipped.
    """
    chart = RadialChart.build(d.scale, d.domain)
    z = _curve_grid(d, grid)
    T = d.scale.values(z)
    keep = np.isfinite(T)
    z, T = z[keep], T[keep]
    lhs = -d.lam * (T - chart.T_star)
    R = chart.radius(z)
    return float(np.max(np.abs(lhs + d.lam * R * R) / np.maximum(1.0, np.abs(lhs))))


def _curve_grid(d, grid):
    if grid is None:
        return probe_grid(d.domain)
    z = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    _check_closed(d, z)
    return z


@dataclass(frozen=True)
class CurveTable:
    """Columns z, T, R, q_z, q_T, q_R as a 2-d array (one row per z)."""

    rows: np.ndarray
    columns: tuple = ("z", "T", "R", "q_z", "q_T", "q_R")

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(x) for x in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        items = ("{" + ", ".join(f'"{c}": {_fmt(x, json=True)}' for c, x in zip(self.columns, row)) + "}"
                 for row in self.rows)
        return "[" + ",\n ".join(items) + "]\n"


def _fmt(x: float, json: bool = False) -> str:
    if not math.isfinite(x):
        return "null" if json else repr(float(x))
    return "%.17g" % x


def parametric_curves(d: Distribution, grid=None) -> CurveTable:
    """The three standard forms of ``d`` evaluated along a z grid.

    ``q_z`` is the density of ``d`` per dz.  ``q_T`` is exp(-lam T)
    normalized against dT and ``q_R`` is the radial form per d rho (rho = R
    unless ``d`` is already radial with another stretch).
    """
    z = _curve_grid(d, grid)
    chart = RadialChart.build(d.scale, d.domain)
    T = d.scale.values(z)
    R = chart.radius(z)
    with np.errstate(under="ignore", over="ignore"):
        q_z = pdf(d, z, wrt="z")
        q_T = np.exp(log_k_per_dT(d) - d.lam * T)
        d_R = d if d.measure is MeasureKind.R else to_radial(d)
        q_R = np.exp(d_R.log_k - d.lam * (T - chart.T_star))
    return CurveTable(np.column_stack([z, T, R, q_z, q_T, q_R]))
