"""Exact expected revenues when every agent shares one valuation ``v``.

Time-indexed strategies whose undiscounted price is non-increasing sell on a
single window ``[t*, T]``: the first arrival after ``t*`` buys. For piecewise
constant prices under a decreasing discount that window structure breaks
inside each step, so those strategies use an interval-by-interval buy-set
formula instead. The arrival-indexed ESoES-SS ladder is handled by summing
over the Poisson arrival count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .discounting import DiscountFunction
from .mechanisms import EsoesSsMeta, MarketParams, MpcMeta, PricingStrategy
from .numerics import QUAD_TOL, integrate

POISSON_TAIL = 1e-12
MONOTONE_SLACK = 1e-9
_BISECT_ITERS = 200


class UnsupportedStrategy(ValueError):
    pass


def k_star(params: MarketParams, discount: DiscountFunction) -> float:
    """Benchmark revenue per unit valuation, the integral of xi * lam * e^{-lam t}."""
    lam = params.lam
    if discount.kind == "constant_one":
        return -math.expm1(-lam * params.T)
    return integrate(lambda t: discount.eval(t) * lam * math.exp(-lam * t), 0.0, params.T,
                     QUAD_TOL)


def k_star_linear_closed(params: MarketParams) -> float:
    lamT = params.lam_T
    return 1.0 - (-math.expm1(-lamT)) / lamT


# --- helpers -----------------------------------------------------------------

def is_undiscounted_nonincreasing(strategy: PricingStrategy, n_grid: int = 2048,
                                  slack: float = MONOTONE_SLACK) -> bool:
    T = strategy.params.T
    # stop short of T where a linear discount vanishes
    t = np.linspace(0.0, T * (1.0 - 1e-6), n_grid)
    xi = np.asarray(strategy.discount.eval(t), dtype=float)
    ok = xi > 1e-9
    u = np.asarray(strategy.price_at(t[ok]), dtype=float) / xi[ok]
    return bool(np.all(np.diff(u) <= slack * np.maximum(1.0, np.abs(u[:-1]))))


def _crossing_time(strategy: PricingStrategy, v: float, t_end: float) -> float:
    """sup{t <= t_end : p(t) > v xi(t)}, or 0 when the set is empty."""
    xi = strategy.discount.eval

    def above(t):
        return strategy.price_at(t) > v * xi(t)

    if not above(0.0):
        return 0.0
    if above(t_end):
        return t_end
    lo, hi = 0.0, t_end
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if above(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, t_end):
            break
    return hi


def _revenue_window(strategy, params, t_star):
    lam, T = params.lam, params.T
    if t_star >= T:
        return 0.0
    # integrate piece by piece; a breakpoint a hair above t* upsets QUADPACK
    edges = [t_star] + [b for b in strategy.breakpoints() if t_star < b < T] + [T]
    f = lambda t: strategy.price_at(t) * lam * math.exp(-lam * (t - t_star))
    return math.fsum(integrate(f, a, b, QUAD_TOL) for a, b in zip(edges, edges[1:]))


def _revenue_piecewise(strategy: PricingStrategy, params: MarketParams, v: float) -> float:
    """Exact revenue of a step price under a non-increasing discount.

    Within step i posting c_i on [a_i, b_i) the agent buys while
    v xi(t) >= c_i, i.e. on [a_i, min(b_i, s_i)]. The first arrival inside the
    union of those buy windows takes the item.
    """
    meta: MpcMeta = strategy.meta
    lam, T, tau = params.lam, params.T, meta.tau
    total, covered = 0.0, 0.0
    for i, c in meta.schedule:
        a, b = (i - 1) * tau, min(i * tau, T)
        if a >= T:
            break
        s = strategy.discount.last_time_at_least(c / v)
        e = min(b, s)
        if e <= a:
            continue
        length = e - a
        total += c * math.exp(-lam * covered) * -math.expm1(-lam * length)
        covered += length
    return total


def esoes_iv_revenue_exact(strategy: PricingStrategy, params: MarketParams, v: float) -> float:
    """Exact IV revenue of the arrival-indexed ladder under a constant discount.

    The first index i whose price is at most v buys, so revenue is
    price(i*) * P(N_T >= i*). Indices beyond the Poisson tail (1e-12) are dropped.
    """
    if strategy.discount.kind != "constant_one":
        raise UnsupportedStrategy("exact ESoES-SS revenue needs a constant discount")
    mean = params.lam_T
    n_max = int(stats.poisson.isf(POISSON_TAIL, mean)) + 1
    i = np.arange(1, n_max + 1)
    prices = np.asarray(strategy.price_for_arrival(i, 0.0), dtype=float)
    buys = np.nonzero(prices <= v * (1 + 1e-12))[0]
    if buys.size == 0:
        return 0.0
    i_star = int(i[buys[0]])
    return float(prices[buys[0]]) * float(stats.poisson.sf(i_star - 1, mean))


def expected_revenue_iv_analytic(strategy: PricingStrategy, params: MarketParams,
                                 discount: DiscountFunction, v: float) -> float:
    """Expected revenue when all agents hold valuation ``v``."""
    if not 1.0 <= v <= params.h * (1 + 1e-12):
        raise ValueError(f"v must lie in [1, h], got {v}")
    if discount is not strategy.discount and discount.kind != strategy.discount.kind:
        raise ValueError("discount does not match the strategy's discount")
    if isinstance(strategy.meta, EsoesSsMeta):
        return esoes_iv_revenue_exact(strategy, params, v)
    if isinstance(strategy.meta, MpcMeta):
        return _revenue_piecewise(strategy, params, v)
    if not strategy.time_indexed:
        raise UnsupportedStrategy(f"{strategy.kind} has no analytic revenue")
    if strategy.kind not in ("benchmark", "mc", "mc_lin") and \
            not is_undiscounted_nonincreasing(strategy):
        raise UnsupportedStrategy(
            "undiscounted price increases somewhere; use Monte Carlo instead")
    t0 = strategy.t0
    t_end = t0 if t0 else params.T
    t_star = _crossing_time(strategy, v, t_end)
    return _revenue_window(strategy, params, t_star)


def ratio_iv(strategy, params, discount, v: float) -> float:
    return expected_revenue_iv_analytic(strategy, params, discount, v) / (
        v * k_star(params, discount))


# --- revenue curves and losses -------------------------------------------------

@dataclass
class RevenueCurve:
    v_grid: list
    revenue: list
    ratio: list

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["v", "revenue", "ratio"])
            for row in zip(self.v_grid, self.revenue, self.ratio):
                w.writerow([repr(float(x)) for x in row])


def revenue_curve(strategy, params, discount, v_grid: Sequence[float]) -> RevenueCurve:
    ks = k_star(params, discount)
    rev = [expected_revenue_iv_analytic(strategy, params, discount, v) for v in v_grid]
    return RevenueCurve(list(map(float, v_grid)), rev, [r / (v * ks) for r, v in zip(rev, v_grid)])


def half_step_grid(h: float) -> list:
    """Valuations 1.0, 1.5, 2.0, ... up to h."""
    n = int(math.floor((h - 1.0) / 0.5 + 1e-9))
    return [1.0 + 0.5 * i for i in range(n + 1)]


@dataclass(frozen=True)
class LossIndices:
    max_loss_b_vs_a: float
    max_loss_a_vs_b: float
    argmax_v_b_vs_a: float
    argmax_v_a_vs_b: float


def loss_indices(curve_a: RevenueCurve, curve_b: RevenueCurve, h: float) -> LossIndices:
    """Largest per-valuation revenue gaps, normalised by h, in both directions.

    ``max_loss_b_vs_a`` is how much B loses against A at its worst v.
    """
    if len(curve_a.v_grid) != len(curve_b.v_grid) or not np.allclose(
            curve_a.v_grid, curve_b.v_grid, rtol=0, atol=1e-12):
        raise ValueError("revenue curves use different valuation grids")
    ra, rb = np.asarray(curve_a.revenue), np.asarray(curve_b.revenue)
    v = np.asarray(curve_a.v_grid)
    loss_b = np.maximum(ra - rb, 0.0) / h
    loss_a = np.maximum(rb - ra, 0.0) / h
    ib, ia = int(np.argmax(loss_b)), int(np.argmax(loss_a))
    return LossIndices(float(loss_b[ib]), float(loss_a[ia]), float(v[ib]), float(v[ia]))
