import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from postprice.analytics import (RevenueCurve, UnsupportedStrategy, esoes_iv_revenue_exact,
                                 expected_revenue_iv_analytic, half_step_grid, k_star,
                                 k_star_linear_closed, loss_indices, ratio_iv, revenue_curve)
from postprice.discounting import make_constant_one, make_custom, make_linear
from postprice.mechanisms import (MarketParams, build_benchmark_iv, build_esoes_ss,
                                  build_mc_lin, competitive_ratio_mc, custom_strategy,
                                  mpc_from_nsub)


def test_k_star_examples():
    assert k_star(MarketParams(3, 2, 2), make_constant_one(2)) == pytest.approx(1 - math.exp(-6))
    assert k_star(MarketParams(1, 1, 2), make_linear(1)) == pytest.approx(math.exp(-1), abs=1e-12)
    for lam, T in ((1, 1), (10, 12), (50, 100)):
        p = MarketParams(lam, T, 2)
        assert k_star(p, make_linear(T)) == pytest.approx(k_star_linear_closed(p), abs=1e-10)


def test_k_star_monotone_in_discount():
    T = 10.0
    p = MarketParams(0.7, T, 2)
    ks = [k_star(p, d) for d in (make_constant_one(T), make_linear(T),
                                 make_custom(T, lambda t: (1 - t / T) ** 2))]
    assert ks[0] > ks[1] > ks[2] > 0


def test_benchmark_and_never_sell(ref_params):
    d = make_linear(12)
    for v in (1.0, 1.9, 2.8):
        b = build_benchmark_iv(ref_params, d, v)
        assert expected_revenue_iv_analytic(b, ref_params, d, v) == pytest.approx(
            v * k_star(ref_params, d), rel=1e-10)
        assert ratio_iv(b, ref_params, d, v) == pytest.approx(1.0, rel=1e-10)
    high = custom_strategy(ref_params, d, lambda t: 2.8 * d(t))
    assert expected_revenue_iv_analytic(high, ref_params, d, 1.7) == pytest.approx(0, abs=1e-12)
    assert ratio_iv(high, ref_params, d, 1.7) == pytest.approx(0.0, abs=1e-12)


def test_constant_ratio_reference(ref_params, ref_mc_lin):
    k = ref_mc_lin.meta.k
    r = expected_revenue_iv_analytic(ref_mc_lin, ref_params, ref_mc_lin.discount, 1.7)
    assert abs(r / 1.7 - k) < 1e-6 * k
    rho = competitive_ratio_mc(ref_mc_lin.meta, ref_params)
    for v in np.linspace(1, 2.8, 7):
        assert ratio_iv(ref_mc_lin, ref_params, ref_mc_lin.discount, v) == pytest.approx(
            rho, rel=1e-6)


@given(st.floats(1, 30), st.floats(2, 60), st.floats(1.2, 40), st.floats(0, 1))
def test_constant_ratio_property(lam, T, h, frac):
    p = MarketParams(lam, T, h)
    s = build_mc_lin(p)
    v = 1 + frac * (h - 1)
    r = expected_revenue_iv_analytic(s, p, s.discount, v) / v
    assert abs(r - s.meta.k) <= 1e-6 * s.meta.k


def test_unsupported_increasing_price(ref_params):
    d = make_linear(12)
    rising = custom_strategy(ref_params, d, lambda t: (1 + np.asarray(t) / 12) * d(t))
    with pytest.raises(UnsupportedStrategy):
        expected_revenue_iv_analytic(rising, ref_params, d, 2.0)


def test_mpc_piecewise_matches_quadrature_oracle(ref_params, ref_mc_lin):
    # oracle: integrate p(t) 1[buy] lam exp(-lam * |buy set before t|) on a fine grid
    d = ref_mc_lin.discount
    s = mpc_from_nsub(ref_params, d, 3, ref_mc_lin.t0)
    lam = ref_params.lam
    t = np.linspace(0, 12, 2_000_001)
    for v in (1.0, 2.0, 2.8):
        p = s.price_at(t)
        buy = (v * d(t) >= p).astype(float)
        dt = t[1] - t[0]
        covered = np.concatenate([[0.0], np.cumsum(0.5 * (buy[1:] + buy[:-1]) * dt)])
        integrand = p * buy * lam * np.exp(-lam * covered)
        oracle = np.sum(0.5 * (integrand[1:] + integrand[:-1]) * dt)
        assert expected_revenue_iv_analytic(s, ref_params, d, v) == pytest.approx(oracle, rel=1e-4)


def test_esoes_exact_by_direct_sum():
    p = MarketParams(2, 5, 10)
    s = build_esoes_ss(p, 2.0, make_constant_one(5))
    # v = 3 first buys at the price 2.5 block
    i = np.arange(1, 200)
    prices = s.price_for_arrival(i, 0.0)
    i_star = int(i[np.argmax(prices <= 3)])
    pmf_tail = 1 - sum(math.exp(-10) * 10 ** j / math.factorial(j) for j in range(i_star))
    assert esoes_iv_revenue_exact(s, p, 3.0) == pytest.approx(prices[i_star - 1] * pmf_tail)
    with pytest.raises(UnsupportedStrategy):
        esoes_iv_revenue_exact(build_esoes_ss(p, 2.0, make_linear(5)), p, 3.0)


def test_revenue_curve_monotone_in_v(ref_params, ref_mc_lin):
    grid = list(np.linspace(1, 2.8, 10))
    c = revenue_curve(ref_mc_lin, ref_params, ref_mc_lin.discount, grid)
    assert all(r >= 0 for r in c.revenue)
    assert np.all(np.diff(c.revenue) >= 0)


def test_half_step_grid():
    assert half_step_grid(10) == [1.0 + 0.5 * i for i in range(19)]
    assert half_step_grid(2.8) == [1.0, 1.5, 2.0, 2.5]


def test_loss_indices_examples():
    g = [1.0, 2.0, 3.0]
    a = RevenueCurve(g, [1.0, 2.0, 3.0], [1, 1, 1])
    assert loss_indices(a, a, 10).max_loss_b_vs_a == 0.0
    shifted = RevenueCurve(g, [1.5, 2.5, 3.5], [1, 1, 1])
    li = loss_indices(shifted, a, 10)
    assert li.max_loss_b_vs_a == pytest.approx(0.05) and li.max_loss_a_vs_b == 0.0
    with pytest.raises(ValueError):
        loss_indices(a, RevenueCurve([1.0, 2.0], [0, 0], [0, 0]), 10)


@given(st.lists(st.floats(0, 10), min_size=3, max_size=3),
       st.lists(st.floats(0, 10), min_size=3, max_size=3))
def test_loss_indices_nonnegative(ra, rb):
    g = [1.0, 2.0, 3.0]
    li = loss_indices(RevenueCurve(g, ra, ra), RevenueCurve(g, rb, rb), 10)
    assert li.max_loss_a_vs_b >= 0 and li.max_loss_b_vs_a >= 0
    assert min(li.max_loss_a_vs_b, li.max_loss_b_vs_a) == 0 or ra != rb


def test_curve_csv(tmp_path):
    c = RevenueCurve([1.0], [0.5], [0.25])
    c.to_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines() == ["v,revenue,ratio", "1.0,0.5,0.25"]
