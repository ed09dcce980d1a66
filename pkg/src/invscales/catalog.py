"""Named families as (base scale, exp_rate, measure, domain) configurations.

Each family also carries a textbook closed-form density used as an
independent oracle.  Parameter mappings to textbook conventions:

==========================  ==========================================
Exponential(lambda)         rate lambda
Gaussian(lambda)            mean 0, variance 1 / (2 lambda)
Gamma(alpha, lambda)        shape alpha*lambda + 1, rate lambda
Beta(alpha, beta)           Beta(alpha, beta); lambda is carried but cancels
Lomax(alpha, beta, lambda)  gamma = lambda*alpha, density beta(gamma-1)(1+beta z)^-gamma
Student(alpha, beta, lam)   gamma = lambda*alpha, sqrt(beta)/B(1/2, gamma-1/2) (1+beta z^2)^-gamma
Gumbel(beta, lambda)        minimum-type, location -log(lambda)/beta, scale 1/beta
Frechet(beta<0, lambda)     shape -beta, scale lambda^(-1/beta)
Weibull(beta>0, lambda)     shape beta, scale lambda^(-1/beta)
StretchedExp(beta, lambda)  lambda^(1/beta) / Gamma(1 + 1/beta) exp(-lambda z^beta)
==========================  ==========================================

``gamma_exp`` may be given for Lomax and StudentGeneralized instead of
``alpha``; then alpha = gamma_exp / lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .engine import Distribution, MeasureKind, make_distribution
from .errors import DomainError, ParamError
from .quadrature import QuadratureConfig
from .scales import BaseScale, CanonicalScale, ScaleKind, compose_scales, probe_grid

INF = math.inf
REFERENCE_VERSION = 1


class FamilyTag(str, Enum):
    EXPONENTIAL = "Exponential"
    GAUSSIAN = "Gaussian"
    GAMMA = "Gamma"
    BETA = "Beta"
    LOMAX = "Lomax"
    STUDENT = "StudentGeneralized"
    GUMBEL = "Gumbel"
    FRECHET = "Frechet"
    WEIBULL = "Weibull"
    STRETCHED_EXP = "StretchedExponential"


# required parameter names and defaults for optional ones
_SCHEMA = {
    FamilyTag.EXPONENTIAL: {"lambda": None},
    FamilyTag.GAUSSIAN: {"lambda": None},
    FamilyTag.GAMMA: {"alpha": None, "lambda": None},
    FamilyTag.BETA: {"alpha": None, "beta": None, "lambda": 1.0},
    FamilyTag.LOMAX: {"alpha": None, "beta": None, "lambda": 1.0},
    FamilyTag.STUDENT: {"alpha": None, "beta": None, "lambda": 1.0},
    FamilyTag.GUMBEL: {"beta": None, "lambda": None},
    FamilyTag.FRECHET: {"beta": None, "lambda": None},
    FamilyTag.WEIBULL: {"beta": None, "lambda": None},
    FamilyTag.STRETCHED_EXP: {"beta": None, "lambda": None},
}

REFERENCE_PARAMS = {
    FamilyTag.EXPONENTIAL: [{"lambda": 0.5}, {"lambda": 1.0}, {"lambda": 3.0}],
    FamilyTag.GAUSSIAN: [{"lambda": 0.5}, {"lambda": 1.0}, {"lambda": math.pi}],
    FamilyTag.GAMMA: [{"alpha": 1.0, "lambda": 1.0}, {"alpha": 2.0, "lambda": 1.0},
                      {"alpha": 0.5, "lambda": 2.0}],
    FamilyTag.BETA: [{"alpha": 2.0, "beta": 2.0, "lambda": 1.0}, {"alpha": 3.0, "beta": 2.0, "lambda": 3.0},
                     {"alpha": 5.0, "beta": 1.5, "lambda": 1.0}],
    FamilyTag.LOMAX: [{"alpha": 2.0, "beta": 1.0, "lambda": 1.0}, {"alpha": 3.0, "beta": 0.5, "lambda": 1.0},
                      {"alpha": 1.5, "beta": 2.0, "lambda": 2.0}],
    FamilyTag.STUDENT: [{"alpha": 2.0, "beta": 1.0, "lambda": 1.0}, {"alpha": 1.0, "beta": 0.5, "lambda": 1.5},
                        {"alpha": 3.0, "beta": 2.0, "lambda": 0.5}],
    FamilyTag.GUMBEL: [{"beta": 1.0, "lambda": 1.0}, {"beta": 0.5, "lambda": 2.0}, {"beta": 2.0, "lambda": 0.5}],
    FamilyTag.FRECHET: [{"beta": -2.0, "lambda": 1.0}, {"beta": -1.5, "lambda": 2.0},
                        {"beta": -3.0, "lambda": 0.5}],
    FamilyTag.WEIBULL: [{"beta": 2.0, "lambda": 1.0}, {"beta": 1.5, "lambda": 2.0}, {"beta": 0.7, "lambda": 1.0}],
    FamilyTag.STRETCHED_EXP: [{"beta": 0.5, "lambda": 1.0}, {"beta": 2.0, "lambda": 1.0},
                              {"beta": 1.5, "lambda": 0.5}],
}


@dataclass(frozen=True)
class NamedFamily:
    tag: FamilyTag
    params: tuple  # sorted (name, value) pairs, hashable

    def __init__(self, tag, params: Mapping[str, float] | None = None, **kw):
        tag = FamilyTag(tag)
        raw = dict(params or {}, **kw)
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "params", tuple(sorted(_complete(tag, raw).items())))
        _validate(self)

    @property
    def p(self) -> dict:
        return dict(self.params)

    def to_dict(self) -> dict:
        return {"family": self.tag.value, "params": self.p}


def _complete(tag, raw):
    schema = _SCHEMA[tag]
    raw = {k: float(v) for k, v in raw.items()}
    if "gamma_exp" in raw:
        if tag not in (FamilyTag.LOMAX, FamilyTag.STUDENT):
            raise ParamError(f"gamma_exp is not a parameter of {tag.value}")
        if "alpha" in raw:
            raise ParamError("give alpha or gamma_exp, not both")
        lam = raw.get("lambda", schema["lambda"])
        raw["alpha"] = raw.pop("gamma_exp") / lam
    unknown = set(raw) - set(schema)
    if unknown:
        raise ParamError(f"unknown parameters for {tag.value}: {sorted(unknown)}")
    out = {}
    for name, default in schema.items():
        if name in raw:
            out[name] = raw[name]
        elif default is not None:
            out[name] = default
        else:
            raise ParamError(f"{tag.value} needs parameter {name!r}")
        if not math.isfinite(out[name]):
            raise ParamError(f"{name} must be finite")
    return out


def _validate(fam: NamedFamily):
    p, t = fam.p, fam.tag
    if not p["lambda"] > 0:
        raise ParamError("lambda must be > 0")
    if t is FamilyTag.GAMMA and not p["alpha"] >= 0:
        raise ParamError("Gamma needs alpha >= 0")
    if t is FamilyTag.BETA and not (p["alpha"] > 0 and p["beta"] > 1):
        raise ParamError("Beta needs alpha > 0 and beta > 1")
    if t in (FamilyTag.LOMAX, FamilyTag.STUDENT):
        if not (p["alpha"] > 0 and p["beta"] > 0):
            raise ParamError(f"{t.value} needs alpha > 0 and beta > 0")
        g = p["lambda"] * p["alpha"]
        need = 1.0 if t is FamilyTag.LOMAX else 0.5
        if not g > need:
            raise ParamError(f"{t.value} needs gamma = lambda*alpha > {need} to be integrable (got {g})")
    if t in (FamilyTag.GUMBEL, FamilyTag.WEIBULL, FamilyTag.STRETCHED_EXP) and not p["beta"] > 0:
        raise ParamError(f"{t.value} needs beta > 0")
    if t is FamilyTag.FRECHET and not p["beta"] < 0:
        raise ParamError("Frechet needs beta < 0 (beta > 0 is Weibull)")


def family_config(fam: NamedFamily):
    """(CanonicalScale, lambda, measure, domain) for a family."""
    p, t = fam.p, fam.tag
    lam = p["lambda"]
    if t is FamilyTag.EXPONENTIAL:
        return CanonicalScale(BaseScale(ScaleKind.LINEAR, domain=(0.0, INF))), lam, MeasureKind.T, (0.0, INF)
    if t is FamilyTag.GAUSSIAN:
        return CanonicalScale(BaseScale(ScaleKind.SQUARE)), lam, MeasureKind.Z, (-INF, INF)
    if t is FamilyTag.GAMMA:
        return CanonicalScale(BaseScale(ScaleKind.LOG_LINEAR, p["alpha"])), lam, MeasureKind.Z, (0.0, INF)
    if t is FamilyTag.BETA:
        # T = -s(z)/lambda so that exp(-lambda T) = z^(alpha-1) (1-z)^(beta-1)
        base = BaseScale(ScaleKind.LOG_LINEAR_LOG, p["alpha"], p["beta"])
        return CanonicalScale(base, stretch=-1.0 / lam), lam, MeasureKind.Z, (0.0, 1.0)
    if t is FamilyTag.LOMAX:
        base = BaseScale(ScaleKind.LINEAR_LOG, p["alpha"], p["beta"], domain=(0.0, INF))
        return CanonicalScale(base), lam, MeasureKind.Z, (0.0, INF)
    if t is FamilyTag.STUDENT:
        base = compose_scales(BaseScale(ScaleKind.LINEAR_LOG, p["alpha"], p["beta"]), BaseScale(ScaleKind.SQUARE))
        return CanonicalScale(base), lam, MeasureKind.Z, (-INF, INF)
    if t is FamilyTag.GUMBEL:
        return CanonicalScale(BaseScale(ScaleKind.LINEAR), exp_rate=p["beta"]), lam, MeasureKind.T, (-INF, INF)
    if t is FamilyTag.FRECHET:
        # exp_rate stays positive; the sign of beta sits in the Log stage
        base = BaseScale(ScaleKind.LOG, alpha=-1.0)
        return CanonicalScale(base, exp_rate=-p["beta"]), lam, MeasureKind.T, (0.0, INF)
    if t is FamilyTag.WEIBULL:
        return CanonicalScale(BaseScale(ScaleKind.LOG), exp_rate=p["beta"]), lam, MeasureKind.T, (0.0, INF)
    if t is FamilyTag.STRETCHED_EXP:
        return CanonicalScale(BaseScale(ScaleKind.LOG), exp_rate=p["beta"]), lam, MeasureKind.Z, (0.0, INF)
    raise ParamError(f"unknown family {t!r}")  # pragma: no cover


def build(fam: NamedFamily, cfg: QuadratureConfig | None = None) -> Distribution:
    """Normalized distribution for the family; k comes from quadrature."""
    scale, lam, measure, domain = family_config(fam)
    return make_distribution(scale, lam, measure, domain, cfg)


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def closed_form_log_pdf(fam: NamedFamily, z):
    """Textbook log density per dz (vectorised)."""
    z = np.asarray(z, dtype=np.float64)
    p, t = fam.p, fam.tag
    lam = p["lambda"]
    lo, hi = family_config(fam)[3]
    if np.any((z < lo) | (z > hi)):
        raise DomainError(f"point outside the family domain [{lo}, {hi}]")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if t is FamilyTag.EXPONENTIAL:
            out = math.log(lam) - lam * z
        elif t is FamilyTag.GAUSSIAN:
            var = 0.5 / lam
            out = -0.5 * math.log(2 * math.pi * var) - z * z / (2 * var)
        elif t is FamilyTag.GAMMA:
            s = p["alpha"] * lam + 1.0
            out = s * math.log(lam) - math.lgamma(s) + (s - 1.0) * np.log(z) - lam * z
        elif t is FamilyTag.BETA:
            a, b = p["alpha"], p["beta"]
            out = (a - 1) * np.log(z) + (b - 1) * np.log1p(-z) - _log_beta(a, b)
        elif t is FamilyTag.LOMAX:
            g, b = lam * p["alpha"], p["beta"]
            out = math.log(b * (g - 1.0)) - g * np.log1p(b * z)
        elif t is FamilyTag.STUDENT:
            g, b = lam * p["alpha"], p["beta"]
            out = 0.5 * math.log(b) - _log_beta(0.5, g - 0.5) - g * np.log1p(b * z * z)
        elif t is FamilyTag.GUMBEL:
            b = p["beta"]
            loc, sc = -math.log(lam) / b, 1.0 / b
            y = (z - loc) / sc
            out = -math.log(sc) + y - np.exp(y)
        elif t is FamilyTag.FRECHET:
            a = -p["beta"]
            sc = lam ** (1.0 / a)
            y = z / sc
            out = math.log(a / sc) - (1.0 + a) * np.log(y) - y ** (-a)
        elif t is FamilyTag.WEIBULL:
            b = p["beta"]
            sc = lam ** (-1.0 / b)
            y = z / sc
            out = math.log(b / sc) + (b - 1.0) * np.log(y) - y**b
        else:
            b = p["beta"]
            out = math.log(lam) / b - math.lgamma(1.0 + 1.0 / b) - lam * z**b
    return out if out.ndim else float(out)


def closed_form_pdf(fam: NamedFamily, z):
    with np.errstate(under="ignore", over="ignore"):
        return np.exp(closed_form_log_pdf(fam, z))


def reference_grid(fam: NamedFamily, n: int = 64) -> np.ndarray:
    lo, hi = family_config(fam)[3]
    if math.isfinite(lo) and math.isfinite(hi):
        return probe_grid((lo, hi), n)
    if math.isfinite(lo):
        return lo + np.logspace(-3, math.log10(30.0), n)
    return np.linspace(-10.0, 10.0, n)


def cross_check(fam: NamedFamily, grid=None, tol: float = 1e-8, dist: Distribution | None = None) -> float:
    """Max |engine pdf - closed form| over the grid (densities per dz)."""
    from .engine import pdf

    z = reference_grid(fam) if grid is None else np.asarray(grid, dtype=np.float64)
    d = dist if dist is not None else build(fam)
    err = float(np.max(np.abs(pdf(d, z, wrt="z") - closed_form_pdf(fam, z))))
    return err


def beta_mode(alpha: float, beta: float) -> float:
    """(alpha-1)/(alpha+beta-2) clamped to [0, 1].

    For 0 < alpha < 1 the density has its extremum at 0.  alpha == beta
    gives 0.5, including the uniform case alpha = beta = 1.
    """
    if 0 < alpha < 1:
        return 0.0
    if alpha == beta:
        return 0.5
    if alpha + beta == 2:
        raise ParamError("mode is undefined when alpha + beta = 2 and alpha != 1")
    return min(1.0, max(0.0, (alpha - 1.0) / (alpha + beta - 2.0)))


def families() -> list:
    """Listing of every family: schema, scale kind, measure and domain."""
    out = []
    for tag in FamilyTag:
        fam = NamedFamily(tag, REFERENCE_PARAMS[tag][0])
        scale, _, measure, domain = family_config(fam)
        kinds = [k.value for k, _, _ in scale.base.stages()]
        out.append({
            "family": tag.value,
            "params_schema": {k: ("required" if v is None else {"default": v}) for k, v in _SCHEMA[tag].items()},
            "scale_kind": "Composite(" + ", ".join(reversed(kinds)) + ")" if len(kinds) > 1 else kinds[0],
            "exp_rate": "beta" if scale.exp_rate != 0 else 0.0,
            "measure": measure.value,
            "domain": ["inf" if v == INF else "-inf" if v == -INF else v for v in domain],
        })
    return out
