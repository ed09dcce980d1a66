import math

import numpy as np
import pytest
from scipy import stats

from invscales.catalog import NamedFamily, REFERENCE_PARAMS, build
from invscales.engine import cdf
from invscales.sampling import inverse_cdf, quantile, sample, uniforms


def exponential(lam=1.0):
    return build(NamedFamily("Exponential", {"lambda": lam}))


@pytest.mark.parametrize("n", [0, -3, 2.5, True])
def test_bad_sample_size(n):
    with pytest.raises(ValueError):
        sample(exponential(), n, seed=1)


def test_same_seed_same_draws():
    d = exponential()
    a = sample(d, 1000, seed=9)
    b = sample(d, 1000, seed=9)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample(d, 1000, seed=10))


def test_prefix_stable():
    # the stream does not depend on n
    d = exponential()
    np.testing.assert_array_equal(sample(d, 50, seed=3), sample(d, 500, seed=3)[:50])


def test_uniforms_open_interval():
    u = uniforms(123, 100_000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 3 * math.sqrt(1 / 12 / u.size)


def test_exponential_mean():
    n = 100_000
    z = sample(exponential(1.0), n, seed=42)
    assert abs(z.mean() - 1.0) < 3 / math.sqrt(n)


@pytest.mark.parametrize("tag,params", [(t, ps[0]) for t, ps in REFERENCE_PARAMS.items()],
                         ids=lambda v: v.value if hasattr(v, "value") else None)
def test_ks_distance(tag, params):
    d = build(NamedFamily(tag, params))
    z = np.sort(sample(d, 100_000, seed=2024))
    F = np.array([cdf(d, v) for v in z[::997]])
    emp_hi = (np.arange(0, z.size, 997) + 1) / z.size
    emp_lo = np.arange(0, z.size, 997) / z.size
    assert max(np.max(np.abs(emp_hi - F)), np.max(np.abs(emp_lo - F))) <= 0.01


def test_ks_against_scipy_gamma():
    d = build(NamedFamily("Gamma", {"alpha": 2.0, "lambda": 1.0}))
    z = sample(d, 100_000, seed=5)
    assert stats.kstest(z, stats.gamma(3.0).cdf).statistic <= 0.01


def test_quantile_inverts_cdf():
    d = build(NamedFamily("Beta", {"alpha": 3.0, "beta": 2.0}))
    p = np.array([1e-6, 0.01, 0.25, 0.5, 0.9, 0.999999])
    z = quantile(d, p)
    np.testing.assert_allclose([cdf(d, v) for v in z], p, atol=1e-10)
    np.testing.assert_allclose(z, stats.beta(3.0, 2.0).ppf(p), rtol=1e-8)


def test_table_cdf_matches_engine():
    d = build(NamedFamily("Weibull", {"beta": 1.5, "lambda": 2.0}))
    inv = inverse_cdf(d)
    z = np.linspace(0.01, 3.0, 25)
    np.testing.assert_allclose(inv.cdf(z), [cdf(d, v) for v in z], atol=1e-11)


def test_quantile_rejects_bad_probability():
    with pytest.raises(ValueError):
        quantile(exponential(), 1.5)


def test_samples_inside_domain():
    d = build(NamedFamily("Beta", {"alpha": 5.0, "beta": 1.5}))
    z = sample(d, 20_000, seed=0)
    assert np.all((z > 0) & (z < 1))
