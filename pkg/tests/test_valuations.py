import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scipy.integrate import trapezoid

from postprice import valuations as V
from postprice.numerics import integrate


def test_uniform_cdf_pdf():
    d = V.uniform(10)
    assert d.cdf(1.0) == 0.0 and d.cdf(10.0) == 1.0 and d.cdf(5.5) == 0.5
    assert d.pdf(3.0) == pytest.approx(1 / 9)


def test_truncated_normal_defaults():
    d = V.truncated_normal(10)
    assert d.mu == 4.5 and d.sigma2 == 2.0
    assert integrate(d.pdf, 1.0, 10.0) == pytest.approx(1.0, abs=1e-10)
    assert d.cdf(1.0) == 0.0 and d.cdf(10.0) == 1.0


def test_point_mass():
    d = V.point(3.0, 10)
    assert d.cdf(2.99) == 0.0 and d.cdf(3.0) == 1.0
    with pytest.raises(V.DistributionError):
        d.pdf(3.0)
    with pytest.raises(V.DistributionError):
        V.point(11, 10)


def test_sampling_inverse_cdf():
    rng = np.random.default_rng(1)
    for d in (V.uniform(10), V.truncated_normal(10)):
        x = d.sample(rng, 20000)
        assert x.min() >= 1.0 and x.max() <= 10.0
        u = np.sort(d.cdf(x))
        ks = np.max(np.abs(u - np.arange(1, len(u) + 1) / len(u)))
        assert ks < 4 / math.sqrt(len(u))


def test_hazard_uniform_mhr_and_max_order():
    d = V.uniform(10)
    assert V.hazard_check(d).is_monotone_nondecreasing
    for lt in (0.5, 2.0, 8.0):
        assert V.max_order_hazard_check(d, lt).is_monotone_nondecreasing
    assert V.hazard_check(V.truncated_normal(10)).is_monotone_nondecreasing


def test_max_order_cdf_examples():
    d = V.uniform(10)
    assert V.max_order_cdf(d, 2.0, 10.0) == 1.0
    assert V.max_order_cdf(d, 2.0, 1.0) == pytest.approx(math.exp(-2))
    assert V.max_order_cdf(d, 2.0, 0.0) == pytest.approx(math.exp(-2))


def test_expected_max_point_and_uniform():
    assert V.expected_max(V.point(3, 10), 20) == pytest.approx(3 * (1 - math.exp(-20)))
    # uniform: compare with a Riemann sum of 1 - cdf
    d = V.uniform(10)
    x = np.linspace(0, 10, 200001)
    riemann = trapezoid(1 - V.max_order_cdf(d, 5.0, x), x)
    assert V.expected_max(d, 5.0) == pytest.approx(riemann, rel=1e-8)


def test_ln_ratio_examples():
    d = V.uniform(10)
    c = V.ln_ratio_inequality_check(d, 5, 5)
    assert c.lhs == pytest.approx(1.0) and c.rhs == pytest.approx(1.0) and c.holds
    with pytest.raises(ValueError):
        V.ln_ratio_inequality_check(d, 0.5, 2)


@given(st.floats(1.05, 30), st.floats(1.0, 5.0))
def test_ln_ratio_holds_for_uniform(a, factor):
    assert V.ln_ratio_inequality_check(V.uniform(10), a, a * factor).holds


def test_product_cdf_by_simulation():
    rng = np.random.default_rng(3)
    d = V.uniform(10)
    z = d.sample(rng, 50000) * rng.random(50000)
    for x in (0.5, 1.0, 3.0, 7.5):
        assert V.product_cdf(d, x) == pytest.approx(np.mean(z <= x), abs=0.01)
    assert V.product_cdf(V.point(4, 10), 2.0) == 0.5


@given(st.sampled_from(["uniform", "truncated_normal"]), st.floats(1.5, 20))
def test_cdfs_monotone_bounded(kind, h):
    d = V.uniform(h) if kind == "uniform" else V.truncated_normal(h)
    x = np.linspace(0, h, 64)
    for fn in (d.cdf, lambda y: np.array([V.product_cdf(d, t) for t in y]),
               lambda y: np.array([V.max_discounted_cdf(d, 3.0, t) for t in y])):
        f = fn(x)
        assert np.all(np.diff(f) >= -1e-12)
        assert 0.0 <= f.min() and f.max() <= 1.0 + 1e-12


def test_config_roundtrip():
    for d in (V.point(2, 5), V.uniform(5), V.truncated_normal(5)):
        assert V.distribution_from_config(d.to_config()) == d


def test_uniform_product_closed_form_matches_quadrature():
    d = V.uniform(7.0)
    for x in (0.3, 1.0, 2.5, 6.9):
        quad = x * V._inv_tail(d, 1.0) if x < 1 else d.cdf(x) + x * V._inv_tail(d, x)
        assert V.product_cdf(d, x) == pytest.approx(quad, abs=1e-12)
    xs = np.array([0.0, 0.5, 3.0, 7.0])
    np.testing.assert_allclose(V.max_discounted_cdf(d, 2.0, xs),
                               [V.max_discounted_cdf(d, 2.0, x) for x in xs])
