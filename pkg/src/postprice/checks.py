"""Invariant suite run by ``postprice check``.

Each check sweeps a handful of parameter settings and reports how many cases
it examined and how many failed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import valuations
from .analytics import expected_revenue_iv_analytic, k_star
from .discounting import make_constant_one, make_custom, make_linear
from .mechanisms import (MarketParams, PricingStrategy, build_esoes_ss, build_mc_general,
                         build_mc_lin, competitive_ratio_mc, custom_strategy, eq_t0_residual,
                         mpc_from_nsub, t0_upper_bound)
from .simulator import monte_carlo

PARAM_SETS = [MarketParams(10, 12, 2.8), MarketParams(2, 10, 10.0), MarketParams(1, 100, 2.8)]


@dataclass
class CheckResult:
    name: str
    cases: int = 0
    failures: int = 0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and self.failures == 0

    def record(self, ok: bool, note: str = ""):
        self.cases += 1
        if not ok:
            self.failures += 1
            if note and len(self.notes) < 3:
                self.notes.append(note)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f" ({'; '.join(self.notes)})" if self.notes else ""
        return f"{status} {self.name}: {self.cases - self.failures}/{self.cases} cases{tail}"


def _undiscounted_monotone(strategy: PricingStrategy, n_grid=2048, slack=1e-9) -> bool:
    t0 = strategy.t0 or strategy.params.T
    t = np.linspace(0.0, t0, n_grid)
    t = t[np.asarray(strategy.discount.eval(t)) > 1e-9]
    u = np.asarray(strategy.price_at(t)) / np.asarray(strategy.discount.eval(t))
    return bool(np.all(np.diff(u) <= slack))


def perturbed_strategy(params: Optional[MarketParams] = None) -> PricingStrategy:
    """A price that falls then rises again; it must fail the monotonicity check."""
    params = params or MarketParams(10, 12, 2.8)
    d = make_linear(params.T)
    mid = params.T / 2

    def price(t):
        t = np.asarray(t, dtype=float)
        u = 1.0 + (params.h - 1.0) * np.abs(t - mid) / mid
        return u * d.eval(t)

    return custom_strategy(params, d, price, kind="perturbed")


def check_discounts(res: CheckResult):
    T = 12.0
    grid = np.linspace(0.0, T, 1001)
    for d in (make_linear(T), make_constant_one(T), make_custom(T, lambda t: (1 - t / T) ** 2)):
        x = np.asarray(d.eval(grid))
        res.record(bool(np.all(np.diff(x) <= 1e-9)), f"{d.kind} increases")
    lin = make_linear(T)
    fd = make_custom(T, lambda t: 1 - t / T)
    for t in np.linspace(0.0, 0.99 * T, 50):
        a, b = lin.zeta_prime(t), fd.zeta_prime(t)
        res.record(abs(a - b) <= 1e-5 * abs(a), f"zeta' mismatch at t={t:.3g}")


def check_monotone_prices(res: CheckResult, strategies: Sequence[PricingStrategy]):
    for s in strategies:
        res.record(_undiscounted_monotone(s), f"{s.kind} undiscounted price rises")


def check_floor(res: CheckResult, strategies):
    for s in strategies:
        t = np.linspace(s.t0, s.params.T, 257)
        res.record(bool(np.all(np.asarray(s.price_at(t)) == np.asarray(s.discount.eval(t)))),
                   f"{s.kind} leaves the floor after t0")


def check_constant_ratio(res: CheckResult, lin_strategies):
    for s in lin_strategies:
        p = s.params
        for v in np.linspace(1.0, p.h, 9):
            r = expected_revenue_iv_analytic(s, p, s.discount, v) / v
            res.record(abs(r - s.meta.k) <= 1e-6 * s.meta.k, f"E/v={r} vs k={s.meta.k}")


def check_general_matches_closed(res: CheckResult, pairs):
    for lin, gen in pairs:
        t = np.linspace(0.0, lin.params.T, 2048)
        err = float(np.max(np.abs(lin.price_at(t) - gen.price_at(t))))
        res.record(err < 1e-6, f"sup-norm {err:.2e}")


def check_ratio(res: CheckResult, strategies):
    for s in strategies:
        rho = competitive_ratio_mc(s.meta, s.params)
        ks = k_star(s.params, s.discount)
        res.record(0.0 < rho <= 1.0 and abs(rho - s.meta.k / ks) < 1e-9, f"rho={rho}")


def check_roots(res: CheckResult, lin_strategies):
    for s in lin_strategies:
        p = s.params
        res.record(abs(eq_t0_residual(s.t0, p)) < 1e-10, "t0 residual")
        res.record(s.t0 <= t0_upper_bound(p) * (1 + 1e-12), "t0 above its upper bound")
        res.record(abs(s.price_at(0.0) - p.h) < 1e-9, "p(0) != h")


def check_mpc(res: CheckResult, lin_strategies):
    for s in lin_strategies:
        for n in (1, 2, 4, 13):
            m = mpc_from_nsub(s.params, s.discount, n, s.t0)
            prices = np.array([c for _, c in m.meta.schedule])
            ok = np.all(prices <= s.params.h + 1e-12) and np.all(prices >= -1e-15)
            res.record(bool(ok and np.all(np.diff(prices) <= 1e-12)),
                       f"schedule for nsub={n}")


def check_esoes(res: CheckResult):
    for p in PARAM_SETS:
        s = build_esoes_ss(p)
        i = np.arange(1, int(3 * p.lam_T) + 2)
        pr = np.asarray(s.price_for_arrival(i, 0.0))
        res.record(bool(np.all(np.diff(pr) <= 0) and np.all(pr[i > p.lam_T] == 1.0)),
                   "ESoES ladder")


def check_hazard(res: CheckResult):
    for h in (2.8, 10.0):
        dist = valuations.uniform(h)
        res.record(valuations.hazard_check(dist).is_monotone_nondecreasing, "uniform MHR")
        for lt in (0.5, 2.0, 8.0):
            rep = valuations.max_order_hazard_check(dist, lt)
            res.record(rep.is_monotone_nondecreasing, f"max-order hazard lam*tau={lt}")


def check_simulator(res: CheckResult, s: PricingStrategy):
    p = s.params
    dist = valuations.uniform(p.h)
    a = monte_carlo(s, p, dist, s.discount, 3000, 11, threads=1, chunk=1000)
    b = monte_carlo(s, p, dist, s.discount, 3000, 11, threads=3, chunk=700)
    res.record(a.to_dict() == b.to_dict(), "thread count changed the result")
    res.record(0.0 <= a.mean_revenue <= p.h, "revenue out of range")


def run_checks(extra_strategies: Sequence[PricingStrategy] = ()) -> list:
    """Run every invariant; ``extra_strategies`` join the monotonicity check."""
    lin = [build_mc_lin(p) for p in PARAM_SETS]
    gen = [build_mc_general(PARAM_SETS[0], make_linear(PARAM_SETS[0].T))]
    const = [build_mc_general(MarketParams(1, 10, 4), make_constant_one(10))]
    plan: list[tuple[str, Callable]] = [
        ("discount monotone / zeta'", check_discounts),
        ("undiscounted price non-increasing",
         lambda r: check_monotone_prices(r, lin + gen + const + list(extra_strategies))),
        ("floor price after t0", lambda r: check_floor(r, lin + gen + const)),
        ("constant ratio E[R]/v = k", lambda r: check_constant_ratio(r, lin)),
        ("general shooting = linear closed form",
         lambda r: check_general_matches_closed(r, [(lin[0], gen[0])])),
        ("rho = k/k* in (0,1]", lambda r: check_ratio(r, lin + gen)),
        ("t0 root, bound and p(0)=h", lambda r: check_roots(r, lin)),
        ("piecewise schedule", lambda r: check_mpc(r, lin)),
        ("ESoES-SS ladder", lambda r: check_esoes(r)),
        ("MHR hazard", check_hazard),
        ("simulator determinism", lambda r: check_simulator(r, lin[0])),
    ]
    results = []
    for name, fn in plan:
        res = CheckResult(name)
        try:
            fn(res)
        except Exception as exc:  # a crash counts as a failed case
            res.record(False, f"{type(exc).__name__}: {exc}")
        results.append(res)
    return results
