"""Maximum-likelihood fits of catalog families.

The likelihood of each candidate uses a freshly normalized density (the
constant comes from quadrature), so the search is derivative free:
scipy's Nelder-Mead simplex on log|theta| of the free parameters.  A simplex
diameter below 1e-6 in log space is a relative tolerance of 1e-6 on the
parameters.  Infeasible candidates score -inf.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .catalog import FamilyTag, NamedFamily, build, family_config
from .engine import log_pdf
from .errors import (DomainError, FitNonConvergedError, InfeasibleInitError, InvScalesError, NonFiniteError,
                     ParamError)

# parameters searched over; the rest are held at their init (or default) values
FREE_PARAMS = {
    FamilyTag.EXPONENTIAL: ("lambda",),
    FamilyTag.GAUSSIAN: ("lambda",),
    FamilyTag.GAMMA: ("alpha", "lambda"),
    FamilyTag.BETA: ("alpha", "beta"),
    FamilyTag.LOMAX: ("alpha", "beta"),
    FamilyTag.STUDENT: ("alpha", "beta"),
    FamilyTag.GUMBEL: ("beta", "lambda"),
    FamilyTag.FRECHET: ("beta", "lambda"),
    FamilyTag.WEIBULL: ("beta", "lambda"),
    FamilyTag.STRETCHED_EXP: ("beta", "lambda"),
}

XATOL = 1e-6
_LOG_BOX = 50.0  # |log theta| beyond this is clipped


@dataclass(frozen=True)
class FitResult:
    family: str
    params: dict
    log_likelihood: float
    iterations: int
    converged: bool
    n: int = 0
    init_log_likelihood: float = field(default=float("nan"), compare=False)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@lru_cache(maxsize=4096)
def _built(fam: NamedFamily):
    return build(fam)


def log_likelihood(fam: NamedFamily, data: np.ndarray) -> float:
    """Sum of log densities (per dz); -inf when a point has zero density."""
    lp = log_pdf(_built(fam), data, wrt="z")
    if not np.all(np.isfinite(lp)):
        return -math.inf
    # fsum is correctly rounded, so the total does not depend on data order
    return math.fsum(lp)


def _prepare(data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64).ravel()
    if x.size == 0:
        raise DomainError("data is empty")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contains non-finite values")
    return np.sort(x)


def mle_fit(family_tag, data: Sequence[float], init: Mapping[str, float], max_iter: int = 2000) -> FitResult:
    """Maximize the log likelihood of ``data`` over the family's free parameters.

    Parameters
    ----------
    family_tag : FamilyTag or str
    data : sequence of float
        Observations in z; all must lie inside the family domain.
    init : mapping
        Starting values.  Free parameters (see ``FREE_PARAMS``) must be
        nonzero; other entries fix the remaining parameters.
    max_iter : int
        Simplex iteration budget.

    Raises
    ------
    InfeasibleInitError
        If ``init`` violates the family constraints, a datum lies outside the
        domain, or the likelihood at ``init`` is not finite.
    FitNonConvergedError
        If the budget runs out; ``.result`` holds the best point found.
    """
    tag = FamilyTag(family_tag)
    x = _prepare(data)
    lo, hi = family_config(NamedFamily(tag, _reference_init(tag)))[3]
    if np.any((x <= lo) | (x >= hi)):
        raise InfeasibleInitError(f"data outside the {tag.value} domain ({lo}, {hi})")
    try:
        fam0 = NamedFamily(tag, dict(init))
    except ParamError as err:
        raise InfeasibleInitError(f"init is not feasible: {err}") from err
    free = FREE_PARAMS[tag]
    base = fam0.p
    signs = np.array([math.copysign(1.0, base[k]) for k in free])
    if any(base[k] == 0.0 for k in free):
        raise InfeasibleInitError("free parameters must start away from zero")
    try:
        ll0 = log_likelihood(fam0, x)
    except InvScalesError as err:
        raise InfeasibleInitError(f"likelihood at init failed: {err}") from err
    if not math.isfinite(ll0):
        raise InfeasibleInitError("likelihood at init is not finite")

    def family_at(u) -> NamedFamily:
        p = dict(base)
        for k, s, ui in zip(free, signs, u):
            p[k] = float(s * math.exp(ui))
        return NamedFamily(tag, p)

    def objective(u):
        if not np.all(np.isfinite(u)):
            return math.inf
        try:
            ll = log_likelihood(family_at(u), x)
        except (InvScalesError, OverflowError, FloatingPointError):
            return math.inf
        return -ll if math.isfinite(ll) else math.inf

    u0 = np.log(np.abs([base[k] for k in free]))
    simplex = np.vstack([u0] + [u0 + 0.2 * np.eye(len(free))[i] for i in range(len(free))])
    res = minimize(objective, u0, method="Nelder-Mead",
                   bounds=[(-_LOG_BOX, _LOG_BOX)] * len(free),
                   options={"xatol": XATOL, "fatol": math.inf, "maxiter": int(max_iter),
                            "maxfev": 20 * int(max_iter), "initial_simplex": simplex})
    best = family_at(res.x)
    ll = -float(res.fun)
    if not math.isfinite(ll):
        raise NonFiniteError("log likelihood at the optimum is not finite")
    out = FitResult(tag.value, best.p, ll, int(res.nit), bool(res.success), int(x.size), ll0)
    if not res.success:
        raise FitNonConvergedError(f"simplex search stopped: {res.message}", out)
    return out


def _reference_init(tag: FamilyTag) -> dict:
    from .catalog import REFERENCE_PARAMS
    return REFERENCE_PARAMS[tag][0]


def sufficient_stats_gamma(data: Sequence[float]) -> tuple[float, float]:
    """(<z>, <log z>) with correctly rounded sums.

    These two averages carry all the information the gamma likelihood
    lam*<z> - lam*alpha*<log z> needs.
    """
    x = np.asarray(data, dtype=np.float64).ravel()
    if x.size == 0:
        raise DomainError("data is empty")
    if np.any(~(x > 0)):
        raise DomainError("gamma statistics need strictly positive data")
    n = x.size
    return math.fsum(x) / n, math.fsum(np.log(x)) / n


def read_data(text: str) -> np.ndarray:
    """Parse one float per line, or a single-column CSV with a header row."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DomainError("no data rows")
    if any(len(r) != 1 for r in rows):
        raise DomainError("expected a single column")
    vals = [r[0].strip() for r in rows]
    try:
        float(vals[0])
    except ValueError:
        vals = vals[1:]  # header
    try:
        out = np.array([float(v) for v in vals], dtype=np.float64)
    except ValueError as err:
        raise DomainError(f"bad data value: {err}") from err
    if out.size == 0:
        raise DomainError("no data rows")
    return out


def read_data_file(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return read_data(fh.read())
