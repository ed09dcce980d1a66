import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invscales.catalog import NamedFamily, REFERENCE_PARAMS, build
from invscales.chart import RadialChart, find_scale_minimum
from invscales.engine import MeasureKind, make_distribution, total_mass
from invscales.errors import DomainError, MultiModalError, NegativeProbabilityError, NegativeTotalError
from invscales.radial import (circular_partition, factor_location_rate, gaussian_identity_residual,
                              parametric_curves, radial_coordinate, radial_mean, radial_variance,
                              sqrt_probability_partition, to_gaussian_form)
from invscales.scales import BaseScale, CanonicalScale, ScaleKind, compose_scales

INF = math.inf
SQUARE = CanonicalScale(BaseScale(ScaleKind.SQUARE))
EXP_T = CanonicalScale(BaseScale(ScaleKind.LINEAR, domain=(0.0, INF)))


def gamma_scale(alpha):
    return CanonicalScale(BaseScale(ScaleKind.LOG_LINEAR, alpha))


def beta_raw(a, b):
    return CanonicalScale(BaseScale(ScaleKind.LOG_LINEAR_LOG, a, b), stretch=-1.0)


# --- scale minimum -----------------------------------------------------------------

def test_minimum_examples():
    z, T = find_scale_minimum(gamma_scale(1.0))
    assert z == pytest.approx(1.0, abs=1e-10)
    assert T == pytest.approx(1.0, abs=1e-14)
    assert find_scale_minimum(SQUARE) == pytest.approx((0.0, 0.0), abs=1e-12)
    z, _ = find_scale_minimum(beta_raw(2.0, 2.0))
    assert z == pytest.approx(0.5, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.05, 20.0))
def test_gamma_minimum_is_analytic(alpha):
    # T = z - alpha log z has its minimum at z = alpha with value alpha - alpha log alpha
    z, T = find_scale_minimum(gamma_scale(alpha))
    assert abs(z - alpha) <= 1e-10 * (1 + alpha)
    assert T == pytest.approx(alpha - alpha * math.log(alpha), abs=1e-12 * (1 + abs(T)))


@settings(max_examples=40, deadline=None)
@given(a=st.floats(1.1, 10.0), b=st.floats(1.1, 10.0))
def test_beta_minimum_is_mode(a, b):
    # -(a-1) log z - (b-1) log(1-z) is smallest at (a-1)/(a+b-2)
    z, _ = find_scale_minimum(beta_raw(a, b))
    assert z == pytest.approx((a - 1) / (a + b - 2), abs=1e-10)


def test_boundary_minimum():
    # increasing T: the minimum sits on the lower end
    z, T = find_scale_minimum(EXP_T)
    assert (z, T) == (0.0, 0.0)


def test_multimodal_rejected():
    # z - 3 log z dips below zero, so its square has two zeros: a double well
    well = CanonicalScale(compose_scales(BaseScale(ScaleKind.SQUARE), BaseScale(ScaleKind.LOG_LINEAR, 3.0)))
    with pytest.raises(MultiModalError):
        find_scale_minimum(well)


# --- radial coordinate --------------------------------------------------------------

def test_radial_coordinate_examples():
    ch = RadialChart.build(gamma_scale(1.0))
    assert radial_coordinate(ch, ch.z_star) == 0.0
    assert radial_coordinate(RadialChart.build(SQUARE), -2.0) == pytest.approx(-2.0, abs=1e-15)
    assert radial_coordinate(ch, math.e) == pytest.approx(math.sqrt(math.e - 2), rel=1e-14)
    assert radial_coordinate(ch, math.e) == pytest.approx(0.8476, abs=1e-4)


def test_radial_coordinate_domain():
    with pytest.raises(DomainError):
        radial_coordinate(RadialChart.build(gamma_scale(1.0)), -1.0)


@pytest.mark.parametrize("tag,params", [(t, p) for t, ps in REFERENCE_PARAMS.items() for p in ps],
                         ids=lambda v: v.value if hasattr(v, "value") else None)
def test_radius_strictly_increasing(tag, params):
    d = build(NamedFamily(tag, params))
    ch = RadialChart.build(d.scale, d.domain)
    z = np.unique(np.concatenate([np.linspace(*_inner(d.domain), 200)]))
    R = ch.radius(z)
    assert np.all(np.diff(R) > 0)


def _inner(dom):
    lo, hi = dom
    lo = lo if math.isfinite(lo) else -20.0
    hi = hi if math.isfinite(hi) else 20.0
    w = hi - lo
    return lo + 1e-3 * w, hi - 1e-3 * w


# --- Gaussian form ------------------------------------------------------------------

def test_gaussian_form_from_square():
    lam = 0.7
    r = to_gaussian_form(make_distribution(SQUARE, lam, "z"))
    assert r.measure is MeasureKind.R
    assert r.k == pytest.approx(math.sqrt(lam / math.pi), rel=1e-10)


def test_gaussian_form_area_of_circle():
    r = to_gaussian_form(make_distribution(SQUARE, math.pi, "z"), v=1.0)
    assert r.k == pytest.approx(1.0, rel=1e-10)


def test_gaussian_form_gamma_pointwise():
    d = make_distribution(gamma_scale(1.0), 1.0, "z")
    t = parametric_curves(d, np.linspace(0.05, 8.0, 64))
    qz, R = t.column("q_z"), t.column("R")
    q_star = d.k * math.exp(-1.0)  # q at z* = 1, T* = 1
    np.testing.assert_allclose(qz / q_star, np.exp(-R * R), rtol=1e-8)


@pytest.mark.parametrize("tag,params", [(t, p) for t, ps in REFERENCE_PARAMS.items() for p in ps],
                         ids=lambda v: v.value if hasattr(v, "value") else None)
def test_catalog_radial_identities(tag, params):
    d = build(NamedFamily(tag, params))
    assert gaussian_identity_residual(d) <= 1e-10
    r = to_gaussian_form(d)
    assert total_mass(r) == pytest.approx(1.0, abs=1e-8)
    sigma2, circ = radial_variance(r)
    if not r.chart.one_sided:
        assert circ == pytest.approx(0.5, abs=1e-6)
        assert abs(radial_mean(r)) <= 1e-8
    # one-sided charts keep the half Gaussian; its second moment is the same
    assert circ == pytest.approx(0.5, abs=1e-6)


def test_radial_variance_examples():
    r = to_gaussian_form(make_distribution(SQUARE, 1.0, "z"), v=1.0)
    sigma2, circ = radial_variance(r)
    assert sigma2 == pytest.approx(1 / (2 * math.pi), rel=1e-8)
    assert circ == pytest.approx(0.5, abs=1e-8)
    # standard normal: lam = 1/2, v^2 = 1/(2 pi) makes rho = z with unit variance
    std = to_gaussian_form(make_distribution(SQUARE, 0.5, "z"), v=math.sqrt(1 / (2 * math.pi)))
    sigma2, circ = radial_variance(std)
    assert sigma2 == pytest.approx(1.0, rel=1e-8)
    assert circ == pytest.approx(0.5, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(v=st.floats(0.1, 10.0), lam=st.floats(0.1, 10.0))
def test_circular_area_any_stretch(v, lam):
    r = to_gaussian_form(make_distribution(gamma_scale(2.0), lam, "z"), v=v)
    _, circ = radial_variance(r)
    assert circ == pytest.approx(0.5, abs=1e-6)


def test_radial_variance_needs_radial():
    with pytest.raises(ValueError):
        radial_variance(make_distribution(SQUARE, 1.0, "z"))


# --- partitions -----------------------------------------------------------------------

def test_circular_partition_examples():
    assert circular_partition(4.0, 0.0) == (2.0, 0.0)
    w, wd = circular_partition(4.0, math.pi / 4)
    assert w == pytest.approx(math.sqrt(2), rel=1e-15)
    assert wd == pytest.approx(math.sqrt(2), rel=1e-15)
    rng = np.random.default_rng(0)
    err = max(abs(sum(c * c for c in circular_partition(1.0, th)) - 1.0) for th in rng.uniform(0, 2 * math.pi, 128))
    assert err < 1e-14


def test_negative_total():
    with pytest.raises(NegativeTotalError):
        circular_partition(-1.0, 0.0)


@settings(max_examples=1000, deadline=None)
@given(total=st.floats(0.0, 1e6), theta=st.floats(-10.0, 10.0))
def test_partition_round_trip(total, theta):
    w, wd = circular_partition(total, theta)
    assert abs(w * w + wd * wd - total) <= 1e-14 * total + 1e-300 * (total == 0)


def test_factor_location_rate_examples():
    d = make_distribution(SQUARE, 1.0, "z")
    assert factor_location_rate(d, 3.0, 0.0) == pytest.approx((math.exp(-3.0), 1.0), rel=1e-15)
    fl, fr = factor_location_rate(d, 3.0, math.pi / 2)
    assert fl == pytest.approx(1.0, rel=1e-15)
    assert fr == pytest.approx(math.exp(-3.0), rel=1e-15)
    fl, fr = factor_location_rate(d, 2.0, math.pi / 4)
    assert (fl, fr) == pytest.approx((math.exp(-1.0), math.exp(-1.0)), rel=1e-15)
    assert fl * fr == pytest.approx(math.exp(-2.0), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(total=st.floats(0.0, 50.0), theta=st.floats(-7.0, 7.0))
def test_factor_product_property(total, theta):
    d = make_distribution(SQUARE, 0.8, "z")
    fl, fr = factor_location_rate(d, total, theta)
    assert fl * fr == pytest.approx(math.exp(-0.8 * total), rel=1e-12)


def test_sqrt_probability_partition():
    assert sqrt_probability_partition([1.0]) == 1.0
    assert sqrt_probability_partition([0.25, 0.25, 0.5]) == pytest.approx(1.0, abs=1e-15)
    assert sqrt_probability_partition(np.full(10_000, 1e-4)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NegativeProbabilityError):
        sqrt_probability_partition([0.5, -0.1, 0.6])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=200))
def test_sqrt_partition_equals_sum(p):
    assert sqrt_probability_partition(p) == pytest.approx(math.fsum(p), rel=1e-14, abs=1e-300)


# --- parametric curves ----------------------------------------------------------------

def test_curves_exponential_boltzmann():
    d = make_distribution(EXP_T, 1.5, "T")
    t = parametric_curves(d, np.linspace(0.0, 10.0, 21))
    np.testing.assert_allclose(np.log(t.column("q_T")), math.log(d.k) - 1.5 * t.column("T"), atol=1e-12)


def test_curves_beta_symmetry():
    d = build(NamedFamily("Beta", {"alpha": 2.0, "beta": 2.0}))
    z = np.linspace(0.05, 0.95, 19)
    t = parametric_curves(d, z)
    qz = t.column("q_z")
    np.testing.assert_allclose(qz, qz[::-1], rtol=1e-12)
    np.testing.assert_allclose(t.column("R"), -t.column("R")[::-1], atol=1e-12)
    assert t.column("R")[9] == pytest.approx(0.0, abs=1e-12)


def test_curves_csv_and_json():
    d = make_distribution(gamma_scale(1.0), 1.0, "z")
    t = parametric_curves(d, [0.5, 1.0, 2.0])
    csv = t.to_csv()
    lines = csv.splitlines()
    assert lines[0] == "z,T,R,q_z,q_T,q_R"
    assert len(lines) == 4
    back = np.loadtxt(io.StringIO(csv), delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back, t.rows)  # 17 digits round-trip exactly
    rows = json.loads(t.to_json())
    assert [list(r) for r in rows] == [list(t.columns)] * 3
    assert rows[1]["R"] == 0.0


def test_curves_domain_error():
    with pytest.raises(DomainError):
        parametric_curves(make_distribution(gamma_scale(1.0), 1.0, "z"), [-1.0, 1.0])
