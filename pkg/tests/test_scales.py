import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invscales.errors import DomainError, DomainMismatchError, NonFiniteError
from invscales.scales import (BaseScale, CanonicalScale, Generator, ScaleKind, apply_generator, base_slope,
                              compose_scales, eval_base, eval_base_deriv, eval_canonical, eval_canonical_deriv,
                              probe_grid, scale_from_dict, scale_to_dict)


def LL(alpha, beta):
    return BaseScale(ScaleKind.LINEAR_LOG, alpha, beta)


# --- eval_base ---------------------------------------------------------------

def test_loglinear_at_one():
    assert eval_base(BaseScale(ScaleKind.LOG_LINEAR, 1.0), 1.0) == 1.0


def test_square_of_minus_three():
    assert eval_base(BaseScale(ScaleKind.SQUARE), -3.0) == 9.0


def test_linearlog_at_e_minus_one():
    assert eval_base(LL(2.0, 1.0), math.e - 1) == pytest.approx(2.0, rel=1e-15)


def test_loglinearlog_is_raw_sum():
    s = BaseScale(ScaleKind.LOG_LINEAR_LOG, 3.0, 2.0)
    z = 0.3
    assert eval_base(s, z) == pytest.approx(2 * math.log(z) + math.log(1 - z), rel=1e-14)


def test_outside_domain_raises():
    with pytest.raises(DomainError):
        eval_base(BaseScale(ScaleKind.LOG), -1.0)
    with pytest.raises(DomainError):
        eval_base(LL(1.0, 2.0), -0.5)  # domain is (-1/2, inf)


def test_linearlog_domain():
    assert LL(1.0, 4.0).domain == (-0.25, math.inf)
    with pytest.raises(ValueError):
        LL(1.0, 0.0)


# --- derivatives ---------------------------------------------------------------

def test_loglinear_stationary_point():
    assert eval_base_deriv(BaseScale(ScaleKind.LOG_LINEAR, 2.0), 2.0) == 0.0


def test_square_derivative():
    assert eval_base_deriv(BaseScale(ScaleKind.SQUARE), 1.5) == 3.0


def test_linearlog_derivative_at_zero():
    assert eval_base_deriv(LL(1.0, 2.0), 0.0) == pytest.approx(2.0, rel=1e-15)


def test_absolute_value_convention():
    s = BaseScale(ScaleKind.LOG_LINEAR, 2.0)
    assert base_slope(s, 1.0) == pytest.approx(-1.0)
    assert eval_base_deriv(s, 1.0) == pytest.approx(1.0)


ALL_KINDS = [
    BaseScale(ScaleKind.LINEAR),
    BaseScale(ScaleKind.LOG),
    BaseScale(ScaleKind.LOG, -1.0),
    BaseScale(ScaleKind.LOG_LINEAR, 1.5),
    LL(2.0, 0.7),
    BaseScale(ScaleKind.LOG_LINEAR_LOG, 2.5, 1.5),
    BaseScale(ScaleKind.SQUARE),
    compose_scales(LL(2.0, 1.0), BaseScale(ScaleKind.SQUARE)),
]


@pytest.mark.parametrize("scale", ALL_KINDS, ids=lambda s: s.kind.value + ("+inner" if s.inner else ""))
def test_derivative_matches_central_difference(scale):
    z = probe_grid(scale.domain)
    w, dw = scale.evaluate(z)
    lo, hi = scale.domain
    # keep the step small against the distance to a finite end, where w varies fastest
    h = np.minimum(1e-6 * np.maximum(1.0, np.abs(z)), 1e-4 * np.minimum(z - lo, hi - z))
    fd = (scale.evaluate(z + h)[0] - scale.evaluate(z - h)[0]) / (2 * h)
    # where the derivative is tiny relative to w the difference quotient has no digits left
    ok = np.abs(dw) * np.abs(z) > 1e-3 * np.maximum(1.0, np.abs(w))
    assert ok.sum() > 40
    np.testing.assert_allclose(fd[ok], dw[ok], rtol=1e-6)


def test_composite_chain_rule():
    outer, inner = LL(2.0, 1.5), BaseScale(ScaleKind.SQUARE)
    comp = compose_scales(outer, inner)
    z = probe_grid(comp.domain)
    _, d = comp.evaluate(z)
    wi, di = inner.evaluate(z)
    _, do = outer.evaluate(wi)
    np.testing.assert_allclose(np.abs(d), np.abs(do) * np.abs(di), rtol=1e-12)


# --- canonical -----------------------------------------------------------------

def test_exp_rate_zero_is_identity():
    base = BaseScale(ScaleKind.LOG_LINEAR, 2.0)
    cs = CanonicalScale(base)
    for z in (0.1, 1.0, 7.0):
        assert eval_canonical(cs, z) == eval_base(base, z)


def test_exp_rate_one_on_log():
    assert eval_canonical(CanonicalScale(BaseScale(ScaleKind.LOG), 1.0), 4.0) == pytest.approx(4.0, rel=1e-15)


def test_exp_rate_two_on_log():
    assert eval_canonical(CanonicalScale(BaseScale(ScaleKind.LOG), 2.0), 3.0) == pytest.approx(9.0, rel=1e-15)


def test_canonical_derivatives():
    assert eval_canonical_deriv(CanonicalScale(BaseScale(ScaleKind.LOG_LINEAR, 1.0)), 1.0) == 0.0
    assert eval_canonical_deriv(CanonicalScale(BaseScale(ScaleKind.LINEAR), 1.0), 2.0) == pytest.approx(
        math.exp(2.0), rel=1e-15)
    assert eval_canonical_deriv(CanonicalScale(BaseScale(ScaleKind.SQUARE)), 2.0) == 4.0


def test_negative_exp_rate_rejected():
    with pytest.raises(ValueError):
        CanonicalScale(BaseScale(ScaleKind.LOG), -1.0)


def test_overflow_raises_nonfinite():
    cs = CanonicalScale(BaseScale(ScaleKind.LINEAR), 1.0)
    with pytest.raises(NonFiniteError):
        eval_canonical(cs, 800.0)


def test_log_space_values_past_700():
    cs = CanonicalScale(BaseScale(ScaleKind.LINEAR), 1.0)
    assert cs.log_abs_slope(np.array([750.0]))[0] == pytest.approx(750.0)


def test_exp_rate_continuity():
    base = BaseScale(ScaleKind.LOG_LINEAR, 1.5)
    z = probe_grid(base.domain)
    w = base.evaluate(z)[0]
    T = CanonicalScale(base, 1e-8).values(z)
    assert np.all(np.abs(T - (1 + 1e-8 * w)) <= 1e-12 * (1 + np.abs(w)) ** 2)


# --- composition ---------------------------------------------------------------

def test_linearlog_of_square():
    a, b = 2.0, 3.0
    comp = compose_scales(LL(a, b), BaseScale(ScaleKind.SQUARE))
    assert eval_base(comp, 1.0) == pytest.approx(a * math.log(1 + b), rel=1e-15)


def test_linear_outer_is_identity():
    inner = BaseScale(ScaleKind.LOG_LINEAR, 2.0)
    comp = compose_scales(BaseScale(ScaleKind.LINEAR), inner)
    for z in (0.5, 3.0):
        assert eval_base(comp, z) == eval_base(inner, z)


def test_square_of_linear():
    assert eval_base(compose_scales(BaseScale(ScaleKind.SQUARE), BaseScale(ScaleKind.LINEAR)), -2.0) == 4.0


def test_composition_image_mismatch():
    # Linear on the reals produces negatives, which Log rejects
    with pytest.raises(DomainMismatchError):
        compose_scales(BaseScale(ScaleKind.LOG), BaseScale(ScaleKind.LINEAR))


# --- generators ----------------------------------------------------------------

def test_generator_examples():
    assert apply_generator(Generator.shift(0.0), 5.0) == 5.0
    assert apply_generator(Generator.power_linear(1.0, 3.0), 7.0) == pytest.approx(7.0, rel=1e-15)
    assert apply_generator(Generator.power_linear(2.0, 1.0), 1.0) == pytest.approx(3.0, rel=1e-15)
    assert apply_generator(Generator.rotation(0.5), (2.0, 1.0)) == (2.0, 1.5)


def test_generator_domain():
    with pytest.raises(DomainError):
        apply_generator(Generator.power_linear(2.0, 1.0), -2.0)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.2, 4.0), beta=st.floats(0.1, 5.0))
def test_power_linear_scales_linearlog(alpha, beta):
    base = LL(alpha, beta)
    g = Generator.power_linear(alpha, beta)
    z = probe_grid(base.domain)
    img = g.map_z(z)
    # images within 1e-6 of -1/beta lose their digits to 1 + ((1+bz)^a - 1) cancellation
    ok = np.isfinite(img) & (1.0 + beta * img > 1e-6)
    lhs = base.evaluate(img[ok])[0]
    rhs = alpha * base.evaluate(z[ok])[0]
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


# --- serialization ---------------------------------------------------------------

@pytest.mark.parametrize("cs", [
    CanonicalScale(BaseScale(ScaleKind.LINEAR, domain=(0.0, math.inf))),
    CanonicalScale(BaseScale(ScaleKind.LOG, -1.0), 2.0),
    CanonicalScale(compose_scales(LL(2.0, 1.0), BaseScale(ScaleKind.SQUARE)), 0.0, 1.5, 2.0),
    CanonicalScale(BaseScale(ScaleKind.LOG_LINEAR_LOG, 3.0, 2.0), stretch=-1.0),
])
def test_json_round_trip(cs):
    text = json.dumps(scale_to_dict(cs))
    back = scale_from_dict(json.loads(text))
    z = probe_grid(cs.domain)
    np.testing.assert_array_equal(back.values(z), cs.values(z))
    assert back.domain == cs.domain


def test_json_infinite_sentinels():
    d = scale_to_dict(CanonicalScale(BaseScale(ScaleKind.SQUARE)))
    assert d["domain"] == ["-inf", "inf"]
