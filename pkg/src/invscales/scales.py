"""Base scales w(z), canonical scales T(z) and generators acting on z.

A base scale is a chain of elementary stages (linear, log, log-linear,
linear-log, log-linear-log, square) applied innermost first.  A canonical
scale wraps a base scale as ``T = shift + stretch * (w or exp(exp_rate * w))``.

All objects are frozen; every evaluation is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, DomainMismatchError, NonFiniteError

INF = math.inf
# largest argument for which exp() stays finite in double precision
_EXP_MAX = math.log(np.finfo(np.float64).max)


class ScaleKind(str, Enum):
    LINEAR = "Linear"
    LOG = "Log"
    LOG_LINEAR = "LogLinear"
    LINEAR_LOG = "LinearLog"
    LOG_LINEAR_LOG = "LogLinearLog"
    SQUARE = "Square"
    COMPOSITE = "Composite"


_CODES = {
    ScaleKind.LINEAR: _kernels.LINEAR,
    ScaleKind.LOG: _kernels.LOG,
    ScaleKind.LOG_LINEAR: _kernels.LOG_LINEAR,
    ScaleKind.LINEAR_LOG: _kernels.LINEAR_LOG,
    ScaleKind.LOG_LINEAR_LOG: _kernels.LOG_LINEAR_LOG,
    ScaleKind.SQUARE: _kernels.SQUARE,
}


def _natural_domain(kind, alpha, beta):
    if kind in (ScaleKind.LOG, ScaleKind.LOG_LINEAR):
        return (0.0, INF)
    if kind is ScaleKind.LINEAR_LOG:
        return (-1.0 / beta, INF)
    if kind is ScaleKind.LOG_LINEAR_LOG:
        return (0.0, 1.0)
    return (-INF, INF)


def _as_domain(domain):
    lo, hi = (float(v) for v in domain)
    if not lo < hi:
        raise DomainError(f"empty domain ({lo}, {hi})")
    return (lo, hi)


@dataclass(frozen=True)
class BaseScale:
    """Base scale w(z).

    Stage formulas: Linear z; Log alpha*log z (alpha defaults to 1, and a
    negative alpha gives the reciprocal power scales); LogLinear
    z - alpha*log z; LinearLog alpha*log(1 + beta*z); LogLinearLog
    (alpha-1)*log z + (beta-1)*log(1-z); Square z**2.

    ``kind`` names the outermost stage.  A scale with ``inner`` set is a
    composite: it evaluates ``outer(inner(z))`` where the outer stage is
    described by ``kind``/``alpha``/``beta``.
    """

    kind: ScaleKind
    alpha: float = 1.0
    beta: float = 1.0
    inner: Optional["BaseScale"] = None
    domain: Optional[tuple] = None

    def __post_init__(self):
        kind = ScaleKind(self.kind)
        if kind is ScaleKind.COMPOSITE:
            raise ValueError("build composites with compose_scales(outer, inner)")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if kind is ScaleKind.LINEAR_LOG and not self.beta > 0:
            raise ValueError("LinearLog requires beta > 0")
        if self.domain is None:
            dom = self.inner.domain if self.inner is not None else _natural_domain(kind, self.alpha, self.beta)
        else:
            dom = _as_domain(self.domain)
            if self.inner is None:
                nlo, nhi = _natural_domain(kind, self.alpha, self.beta)
                if dom[0] < nlo or dom[1] > nhi:
                    raise DomainError(f"domain {dom} exceeds the natural domain ({nlo}, {nhi}) of {kind.value}")
        object.__setattr__(self, "domain", dom)

    @property
    def is_composite(self) -> bool:
        return self.inner is not None

    def stages(self):
        """Stages innermost first, as ``(kind, alpha, beta)`` triples."""
        own = ((self.kind, self.alpha, self.beta),)
        return (self.inner.stages() + own) if self.inner is not None else own

    @cached_property
    def _program(self):
        st = self.stages()
        codes = np.array([_CODES[k] for k, _, _ in st], dtype=np.int64)
        alphas = np.array([a for _, a, _ in st], dtype=np.float64)
        betas = np.array([b for _, _, b in st], dtype=np.float64)
        return codes, alphas, betas

    def evaluate(self, z):
        """Vectorised ``(w, dw/dz)`` with no domain checks (signed slope)."""
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        codes, alphas, betas = self._program
        return _kernels.scale_chain(codes, alphas, betas, np.ascontiguousarray(z))

    def contains(self, z):
        lo, hi = self.domain
        z = np.asarray(z, dtype=np.float64)
        return (z > lo) & (z < hi)


def _check_interior(scale_domain, z):
    lo, hi = scale_domain
    z = np.asarray(z, dtype=np.float64)
    bad = ~((z > lo) & (z < hi))
    if np.any(bad):
        first = np.atleast_1d(z)[np.atleast_1d(bad)][0]
        raise DomainError(f"z={first!r} outside the open domain ({lo}, {hi})")


def eval_base(scale: BaseScale, z: float) -> float:
    _check_interior(scale.domain, z)
    w, _ = scale.evaluate(z)
    if not np.isfinite(w[0]):
        raise NonFiniteError(f"w({z!r}) is not finite")
    return float(w[0])


def base_slope(scale: BaseScale, z: float) -> float:
    """Signed dw/dz."""
    _check_interior(scale.domain, z)
    _, d = scale.evaluate(z)
    if not np.isfinite(d[0]):
        raise NonFiniteError(f"dw/dz at {z!r} is not finite")
    return float(d[0])


def eval_base_deriv(scale: BaseScale, z: float) -> float:
    """|dw/dz|, analytic."""
    return abs(base_slope(scale, z))


@dataclass(frozen=True)
class CanonicalScale:
    """T(z) = shift + stretch * core(z), core = w or exp(exp_rate * w).

    ``exp_rate == 0`` is the identity limit T = w.  ``shift`` and ``stretch``
    carry the affine freedom of T; they default to the identity.
    """

    base: BaseScale
    exp_rate: float = 0.0
    shift: float = 0.0
    stretch: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "exp_rate", float(self.exp_rate))
        object.__setattr__(self, "shift", float(self.shift))
        object.__setattr__(self, "stretch", float(self.stretch))
        if self.exp_rate < 0:
            raise ValueError("exp_rate must be >= 0; put the sign of beta in the base scale or the stretch")
        if self.stretch == 0:
            raise ValueError("stretch must be nonzero")

    @property
    def domain(self):
        return self.base.domain

    def evaluate(self, z):
        """Vectorised ``(T, dT/dz)``; overflow yields inf instead of raising."""
        w, dw = self.base.evaluate(z)
        with np.errstate(all="ignore"):
            if self.exp_rate == 0.0:
                core, dcore = w, dw
            else:
                core = np.exp(self.exp_rate * w)
                dcore = self.exp_rate * core * dw
            return self.shift + self.stretch * core, self.stretch * dcore

    def values(self, z):
        return self.evaluate(z)[0]

    def log_abs_slope(self, z):
        """log|dT/dz| computed without forming exp(exp_rate * w)."""
        w, dw = self.base.evaluate(z)
        with np.errstate(all="ignore"):
            out = math.log(abs(self.stretch)) + np.log(np.abs(dw))
            if self.exp_rate != 0.0:
                out = out + math.log(self.exp_rate) + self.exp_rate * w
        return out

    def with_shift(self, a: float) -> "CanonicalScale":
        return replace(self, shift=self.shift + a)

    def with_stretch(self, b: float) -> "CanonicalScale":
        return replace(self, shift=self.shift * b, stretch=self.stretch * b)


def eval_canonical(cs: CanonicalScale, z: float) -> float:
    _check_interior(cs.domain, z)
    w, _ = cs.base.evaluate(z)
    if not np.isfinite(w[0]):
        raise NonFiniteError(f"w({z!r}) is not finite")
    if cs.exp_rate != 0.0 and cs.exp_rate * w[0] > _EXP_MAX:
        raise NonFiniteError(f"T({z!r}) = exp({cs.exp_rate * w[0]:.6g}) exceeds double range")
    return float(cs.evaluate(z)[0][0])


def eval_canonical_log(cs: CanonicalScale, z: float) -> float:
    """log T(z) for exponential canonical scales with zero shift and positive stretch."""
    if cs.exp_rate == 0.0 or cs.shift != 0.0 or cs.stretch <= 0:
        raise ValueError("log-space evaluation needs exp_rate > 0, shift = 0, stretch > 0")
    return math.log(cs.stretch) + cs.exp_rate * eval_base(cs.base, z)


def canonical_slope(cs: CanonicalScale, z: float) -> float:
    """Signed dT/dz, used for minimum finding."""
    _check_interior(cs.domain, z)
    _, d = cs.evaluate(z)
    if not np.isfinite(d[0]):
        raise NonFiniteError(f"dT/dz at {z!r} is not finite")
    return float(d[0])


def eval_canonical_deriv(cs: CanonicalScale, z: float) -> float:
    """|dT/dz|."""
    return abs(canonical_slope(cs, z))


def endpoint_value(cs: CanonicalScale, z_end: float) -> float:
    """Limit of T at a domain endpoint (may be +-inf)."""
    with np.errstate(all="ignore"):
        t = cs.values(z_end)[0]
        if np.isnan(t):
            lo, hi = cs.domain
            for step in (1e-300, 1e-200, 1e-100):
                if z_end == lo:
                    probe = lo + step if math.isfinite(lo) else -1.0 / step
                else:
                    probe = hi - step if math.isfinite(hi) else 1.0 / step
                t = cs.values(probe)[0]
                if not np.isnan(t):
                    break
    return float(t)


def compose_scales(outer: BaseScale, inner: BaseScale) -> BaseScale:
    """outer o inner, with the chain rule handled by the stage program."""
    if outer.kind is ScaleKind.LINEAR and outer.inner is None:
        return inner
    grid = probe_grid(inner.domain)
    w, _ = inner.evaluate(grid)
    olo, ohi = outer.domain
    if not np.all(np.isfinite(w)) or np.any(w <= olo) or np.any(w >= ohi):
        raise DomainMismatchError(
            f"image of inner scale leaves the domain ({olo}, {ohi}) of the outer scale")
    if outer.inner is not None:
        inner = compose_scales(outer.inner, inner)
    return BaseScale(outer.kind, outer.alpha, outer.beta, inner=inner, domain=inner.domain)


def probe_grid(domain, n: int = 64) -> np.ndarray:
    """Default probe grid: n log-spaced interior points.

    Finite endpoints are approached to within 1e-6; infinite directions are
    covered out to 1e3 from the finite end (or from zero).
    """
    lo, hi = domain
    if math.isfinite(lo) and math.isfinite(hi):
        width = hi - lo
        half = n // 2
        left = lo + width * np.logspace(-6, math.log10(0.5), half, endpoint=False)
        right = hi - width * np.logspace(-6, math.log10(0.5), n - half)[::-1]
        return np.concatenate([left, right])
    if math.isfinite(lo):
        return lo + np.logspace(-6, 3, n)
    if math.isfinite(hi):
        return (hi - np.logspace(-6, 3, n))[::-1]
    half = n // 2
    pos = np.logspace(-3, 3, n - half)
    return np.concatenate([-np.logspace(-3, 3, half)[::-1], pos])


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

class GeneratorKind(str, Enum):
    SHIFT = "Shift"
    STRETCH = "Stretch"
    POWER_LINEAR = "PowerLinear"
    ROTATION = "Rotation"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Generator:
    """Bijective transformation G of the underlying variable."""

    kind: GeneratorKind
    params: tuple = ()
    domain: tuple = (-INF, INF)
    fn: Optional[Callable] = field(default=None, compare=False, repr=False)

    @classmethod
    def shift(cls, a: float) -> "Generator":
        return cls(GeneratorKind.SHIFT, (float(a),))

    @classmethod
    def stretch(cls, b: float) -> "Generator":
        if not b > 0:
            raise ValueError("stretch factor must be > 0")
        return cls(GeneratorKind.STRETCH, (float(b),))

    @classmethod
    def power_linear(cls, alpha: float, beta: float) -> "Generator":
        if not beta > 0:
            raise ValueError("PowerLinear requires beta > 0")
        if not alpha > 0:
            raise ValueError("PowerLinear requires alpha > 0")
        return cls(GeneratorKind.POWER_LINEAR, (float(alpha), float(beta)), (-1.0 / beta, INF))

    @classmethod
    def rotation(cls, eps: float) -> "Generator":
        return cls(GeneratorKind.ROTATION, (float(eps),))

    @classmethod
    def tabulated(cls, xs: Sequence[float], ys: Sequence[float]) -> "Generator":
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.shape != ys.shape or xs.size < 2:
            raise ValueError("tabulated generator needs matching x and y tables of length >= 2")
        dx, dy = np.diff(xs), np.diff(ys)
        if not np.all(dx > 0) or not (np.all(dy > 0) or np.all(dy < 0)):
            raise ValueError("tabulated generator must be strictly monotone (a bijection)")
        return cls(GeneratorKind.CUSTOM, tuple(xs) + tuple(ys), (float(xs[0]), float(xs[-1])))

    @classmethod
    def custom(cls, fn: Callable, domain=(-INF, INF)) -> "Generator":
        return cls(GeneratorKind.CUSTOM, (), _as_domain(domain), fn)

    def map_z(self, z):
        """Image of z (vectorised).  Rotation leaves z itself unchanged."""
        z = np.asarray(z, dtype=np.float64)
        lo, hi = self.domain
        if self.kind is GeneratorKind.CUSTOM and self.fn is None:
            inside = (z >= lo) & (z <= hi)  # tables include their end nodes
        else:
            inside = (z > lo) & (z < hi)
        if not np.all(inside):
            raise DomainError(f"point outside generator domain ({lo}, {hi})")
        kind = self.kind
        if kind is GeneratorKind.SHIFT:
            return z + self.params[0]
        if kind is GeneratorKind.STRETCH:
            return z * self.params[0]
        if kind is GeneratorKind.POWER_LINEAR:
            a, b = self.params
            return np.expm1(a * np.log1p(b * z)) / b
        if kind is GeneratorKind.ROTATION:
            return z
        if self.fn is not None:
            return np.asarray(self.fn(z), dtype=np.float64)
        m = len(self.params) // 2
        return np.interp(z, self.params[:m], self.params[m:])

    def then(self, other: "Generator") -> "Generator":
        """``other o self``: apply self first."""
        return Generator.custom(lambda z: other.map_z(self.map_z(z)), self.domain)


def apply_generator(g: Generator, z):
    """G(z).  For a Rotation, ``z`` may be a pair ``(z, theta)``."""
    if g.kind is GeneratorKind.ROTATION:
        if isinstance(z, (tuple, list)):
            zz, theta = z
        else:
            zz, theta = z, 0.0
        return (float(zz), float(theta) + g.params[0])
    out = g.map_z(np.asarray(z, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# JSON round trip
# --------------------------------------------------------------------------

def _enc(v: float):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return v


def _dec(v) -> float:
    return float(v)  # float("inf") and float("-inf") parse the sentinels


def base_to_dict(scale: BaseScale) -> dict:
    return {
        "kind": scale.kind.value,
        "alpha": scale.alpha,
        "beta": scale.beta,
        "inner": base_to_dict(scale.inner) if scale.inner is not None else None,
        "domain": [_enc(scale.domain[0]), _enc(scale.domain[1])],
    }


def base_from_dict(obj: dict) -> BaseScale:
    inner = base_from_dict(obj["inner"]) if obj.get("inner") else None
    dom = obj.get("domain")
    dom = (_dec(dom[0]), _dec(dom[1])) if dom is not None else None
    outer = BaseScale(obj["kind"], obj.get("alpha", 1.0), obj.get("beta", 1.0))
    if inner is not None:
        out = compose_scales(outer, inner)
        return replace(out, domain=dom) if dom is not None else out
    return BaseScale(obj["kind"], obj.get("alpha", 1.0), obj.get("beta", 1.0), domain=dom)


def scale_to_dict(cs: CanonicalScale) -> dict:
    out = base_to_dict(cs.base)
    out["exp_rate"] = cs.exp_rate
    if cs.shift != 0.0:
        out["shift"] = cs.shift
    if cs.stretch != 1.0:
        out["stretch"] = cs.stretch
    return out


def scale_from_dict(obj: dict) -> CanonicalScale:
    return CanonicalScale(base_from_dict(obj), obj.get("exp_rate", 0.0),
                          obj.get("shift", 0.0), obj.get("stretch", 1.0))
