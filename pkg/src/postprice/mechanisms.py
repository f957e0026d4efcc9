"""Posted-price strategies for one item sold over a finite horizon.

Constructions provided:

* ``build_benchmark_iv``: the clairvoyant benchmark that knows the common
  valuation and posts ``v * xi(t)``.
* ``build_mc_lin``: constant-ratio mechanism in closed form for the linear
  discount.
* ``build_mc_general``: the same mechanism for any discount, obtained by
  shooting on the switch time ``t0``.
* ``build_mpc`` / ``mpc_from_nsub``: piecewise-constant geometric ladder on
  ``[0, t0]`` followed by the discount floor.
* ``build_esoes_ss``: arrival-indexed ladder sized for the expected number of
  arrivals.

Plus the competitive-ratio formula, the max price-ratio ``kappa_tau``, both
lower bounds for monotone-hazard-rate valuations, and the closed-form upper
bound on ``t0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .discounting import DiscountFunction, make_linear
from .numerics import (ODE_STEPS, QUAD_TOL, NumericsError, RootFindingError,
                       find_root, integrate, integrate_ode)

# Below this lam*tau the arrival probability 1 - e^{-lam*tau} drops under 1/e.
MIN_LAM_TAU = 1.0 - math.log(math.e - 1.0)
BRACKET_EPS = 1e-9
_INT_TOL = 1e-9


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class MarketParams:
    lam: float
    T: float
    h: float

    def __post_init__(self):
        for name in ("lam", "T", "h"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float, np.floating, np.integer))
                    and math.isfinite(val) and val > 0):
                raise ConstructionError(f"{name} must be a positive finite number, got {val!r}")
        if self.h < 1:
            raise ConstructionError(f"h must be >= 1, got {self.h}")
        for name in ("lam", "T", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def lam_T(self) -> float:
        return self.lam * self.T


def _ceil_log(h: float, delta: float) -> int:
    x = math.log(h) / math.log(delta)
    r = round(x)
    return int(r) if abs(x - r) < _INT_TOL else math.ceil(x)


def _floor_log(h: float, delta: float) -> int:
    x = math.log(h) / math.log(delta)
    r = round(x)
    return int(r) if abs(x - r) < _INT_TOL else math.floor(x)


def _ceil_div(a: float, b: float) -> int:
    x = a / b
    r = round(x)
    return int(r) if abs(x - r) < _INT_TOL * max(1.0, abs(x)) else math.ceil(x)


# --- strategy objects ---------------------------------------------------------

@dataclass(frozen=True)
class McMeta:
    t0: float
    k: float
    a: float
    discount: DiscountFunction


@dataclass(frozen=True)
class MpcMeta:
    delta: float
    tau: float
    n_sub: int
    t0: float
    schedule: tuple  # ((interval index, price), ...)

    @property
    def n_intervals(self) -> int:
        return len(self.schedule)


@dataclass(frozen=True)
class EsoesSsMeta:
    n_expected: float
    delta: float
    n_blocks: int
    block_size: float


@dataclass(frozen=True)
class PricingStrategy:
    """A deterministic pricing rule.

    Time-indexed strategies answer ``price_at(t)`` (scalar or array). The
    arrival-indexed ESoES-SS ladder answers ``price_for_arrival(i, t)``.
    """

    kind: str
    params: MarketParams
    discount: DiscountFunction
    meta: object = None
    _price: Optional[Callable] = field(default=None, repr=False, compare=False)
    _arrival_price: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def time_indexed(self) -> bool:
        return self._price is not None

    @property
    def t0(self) -> Optional[float]:
        return getattr(self.meta, "t0", None)

    def price_at(self, t):
        if self._price is None:
            raise TypeError(f"{self.kind} prices by arrival index, not by time")
        return self._price(t)

    def price_for_arrival(self, i, t):
        if self._arrival_price is not None:
            return self._arrival_price(i)
        return self.price_at(t)

    def undiscounted_price(self, t):
        return np.asarray(self.price_at(t)) / np.asarray(self.discount.eval(t))

    def breakpoints(self) -> list:
        if isinstance(self.meta, MpcMeta):
            return [i * self.meta.tau for i in range(1, self.meta.n_intervals)]
        if self.t0:
            return [self.t0]
        return []

    def describe(self) -> dict:
        out = {"kind": self.kind, "lambda": self.params.lam, "T": self.params.T,
               "h": self.params.h, "discount": self.discount.kind}
        m = self.meta
        if isinstance(m, McMeta):
            out.update(t0=m.t0, k=m.k, a=m.a)
        elif isinstance(m, MpcMeta):
            out.update(t0=m.t0, delta=m.delta, tau=m.tau, nsub=m.n_sub)
        elif isinstance(m, EsoesSsMeta):
            out.update(delta=m.delta, n_expected=m.n_expected, block_size=m.block_size)
        elif m is not None and isinstance(m, dict):
            out.update(m)
        return out


def custom_strategy(params, discount, price_fn, kind="custom", meta=None) -> PricingStrategy:
    """Wrap an arbitrary vectorised price function (used for tests and checks)."""
    return PricingStrategy(kind, params, discount, meta, _price=price_fn)


def _piecewise(t0: float, head: Callable, discount: DiscountFunction) -> Callable:
    def price(t):
        if np.ndim(t) == 0:
            return float(head(t)) if t < t0 else float(discount.eval(t))
        t = np.asarray(t, dtype=float)
        out = np.asarray(discount.eval(t), dtype=float).copy()
        m = t < t0
        if np.any(m):
            out[m] = head(t[m])
        return out
    return price


# --- benchmark ---------------------------------------------------------------

def build_benchmark_iv(params: MarketParams, discount: DiscountFunction, v: float):
    if not 1.0 <= v <= params.h:
        raise ConstructionError(f"benchmark valuation must lie in [1, h], got {v}")
    v = float(v)

    def price(t):
        return v * discount.eval(t)

    return PricingStrategy("benchmark", params, discount, {"v": v}, _price=price)


# --- constant-ratio mechanism: linear closed form -------------------------------

def _k_lin_formula(t0, p: MarketParams) -> float:
    return p.lam * t0 * (2 * p.T - t0) / (2 * p.T * (p.lam * t0 + math.log(p.h)))


def _k_lin_integral(t0, p: MarketParams) -> float:
    # revenue per unit valuation when only the floor price sells, linear discount
    lam, T = p.lam, p.T
    return 1.0 - (1.0 + lam * t0 - math.exp(-lam * (T - t0))) / (lam * T)


def eq_t0_residual(t0: float, params: MarketParams) -> float:
    """Residual of the switch-time equation for the linear discount."""
    return _k_lin_formula(t0, params) - _k_lin_integral(t0, params)


def _degenerate(params, discount, kind):
    from .analytics import k_star
    ks = k_star(params, discount)
    meta = McMeta(0.0, ks, 1.0, discount)
    return PricingStrategy(kind, params, discount, meta,
                           _price=lambda t: discount.eval(t))


def build_mc_lin(params: MarketParams) -> PricingStrategy:
    discount = make_linear(params.T)
    if params.h == 1.0:
        return _degenerate(params, discount, "mc_lin")
    T, lam, h = params.T, params.lam, params.h
    lo, hi = BRACKET_EPS * T, T - BRACKET_EPS * T
    try:
        t0 = find_root(lambda x: eq_t0_residual(x, params), lo, hi)
    except RootFindingError as exc:
        raise ConstructionError(
            f"switch time not bracketed: q({lo})={exc.f_lo}, q({hi})={exc.f_hi}") from exc
    k = _k_lin_formula(t0, params)
    c1 = lam * (1.0 - 1.0 / k)
    c2 = lam / (2.0 * k * T)

    def head(t):
        return h * (1.0 - t / T) * np.exp(c1 * t + c2 * t * t)

    meta = McMeta(t0, k, h, discount)
    return PricingStrategy("mc_lin", params, discount, meta,
                           _price=_piecewise(t0, head, discount))


# --- constant-ratio mechanism: general discount by shooting ---------------------

def floor_revenue_rate(t0: float, params: MarketParams, discount: DiscountFunction) -> float:
    """Expected revenue per unit valuation of selling at the floor from ``t0`` on.

    Integral over ``[0, T - t0]`` of ``xi(t0 + s) * lam * exp(-lam * s)``.
    """
    lam = params.lam
    L = params.T - t0
    if L <= 0:
        return 0.0
    return integrate(lambda s: discount.eval(t0 + s) * lam * math.exp(-lam * s), 0.0, L,
                     QUAD_TOL)


def _log_slope(params, discount, k):
    lam = params.lam
    xi, zp = discount.eval, discount.zeta_prime

    # d/dt log p = lam - lam/(k*zeta) - zeta'/zeta
    def b(t, _y=None):
        x = xi(t)
        return lam - lam * x / k - zp(t) * x
    return b


def _shoot_log_price(t0, params, discount, steps=ODE_STEPS):
    k = floor_revenue_rate(t0, params, discount)
    if not k > 0:
        raise NumericsError(f"non-positive floor revenue k={k} at t0={t0}")
    b = _log_slope(params, discount, k)
    ts, ys = integrate_ode(b, t0, 0.0, math.log(discount.eval(t0)), steps)
    return k, b, ts, ys


def build_mc_general(params: MarketParams, discount: DiscountFunction,
                     steps: int = ODE_STEPS) -> PricingStrategy:
    """Constant-ratio mechanism for an arbitrary discount.

    For a trial switch time the floor-revenue constant ``k`` is fixed, the
    log-price ODE is integrated backward from ``log xi(t0)`` to time 0, and
    ``t0`` is adjusted until the path starts at ``log h``.
    """
    if abs(discount.T - params.T) > 1e-12 * params.T:
        raise ConstructionError("discount horizon does not match params.T")
    if params.h == 1.0:
        return _degenerate(params, discount, "mc")
    T, h = params.T, params.h
    log_h = math.log(h)

    def shoot(t0):
        _, _, _, ys = _shoot_log_price(t0, params, discount, steps)
        return ys[0] - log_h

    lo, hi = BRACKET_EPS * T, T - BRACKET_EPS * T
    # keep the trial switch time where zeta is still defined
    hi = min(hi, discount.last_time_at_least(BRACKET_EPS))
    try:
        t0 = find_root(shoot, lo, hi)
    except RootFindingError as exc:
        raise ConstructionError(
            f"shooting failed: shoot({lo})={exc.f_lo}, shoot({hi})={exc.f_hi}") from exc
    k, b, ts, ys = _shoot_log_price(t0, params, discount, steps)
    slopes = np.array([b(t) for t in ts])
    spline = CubicHermiteSpline(ts, ys, slopes)
    # rescale so the head starts exactly at h; the shooting residual is ~1e-12
    shift = log_h - ys[0]

    def head(t):
        return np.exp(spline(t) + shift * (1.0 - np.asarray(t) / t0))

    meta = McMeta(t0, k, h, discount)
    return PricingStrategy("mc", params, discount, meta, _price=_piecewise(t0, head, discount))


def competitive_ratio_mc(meta: McMeta, params: MarketParams) -> float:
    """Ratio k / k* of the constant-ratio mechanism.

    Under the linear discount the closed form is evaluated as well and must
    agree to 1e-9.
    """
    from .analytics import k_star
    ks = k_star(params, meta.discount)
    k = floor_revenue_rate(meta.t0, params, meta.discount)
    rho = k / ks
    if meta.discount.kind == "linear":
        closed = competitive_ratio_lin_closed(meta.t0, params)
        if abs(closed - rho) > 1e-9:
            raise NumericsError(f"ratio mismatch: quadrature {rho} vs closed form {closed}")
    return rho


def competitive_ratio_lin_closed(t0: float, params: MarketParams) -> float:
    lam, T = params.lam, params.T
    num = 1.0 - (1.0 + lam * t0 - math.exp(-lam * (T - t0))) / (lam * T)
    den = 1.0 - (1.0 - math.exp(-lam * T)) / (lam * T)
    return num / den


def t0_upper_bound(params: MarketParams) -> float:
    if not params.h > 1:
        raise ConstructionError("t0 upper bound needs h > 1")
    lh = math.log(params.h)
    lamT = params.lam_T
    # rationalised form of (-ln h + sqrt(2 lam T ln h + ln^2 h)) / lam
    return 2.0 * params.T * lh / (math.sqrt(2.0 * lamT * lh + lh * lh) + lh)


# --- piecewise-constant ladder -------------------------------------------------

def build_mpc(params: MarketParams, discount: DiscountFunction, delta: float,
              t0: float) -> PricingStrategy:
    h, T = params.h, params.T
    if not 1.0 < delta <= h * (1 + 1e-12):
        raise ConstructionError(f"delta must lie in (1, h], got {delta}")
    if not 0.0 < t0 < T:
        raise ConstructionError(f"t0 must lie in (0, T), got {t0}")
    n_sub = _ceil_log(h, delta)
    n_floor = _floor_log(h, delta)
    tau = t0 / n_sub
    n_int = _ceil_div(T, tau)
    xi = discount.eval
    prices = []
    for i in range(1, n_int + 1):
        if i == n_int:
            p = xi((i - 1) * tau)
        elif i <= n_floor:
            p = h / delta ** i * xi(i * tau)
        else:
            p = xi(i * tau)
        prices.append(float(p))
    price_arr = np.array(prices)
    meta = MpcMeta(float(delta), tau, n_sub, float(t0),
                   tuple((i + 1, p) for i, p in enumerate(prices)))

    def price(t):
        idx = np.clip(np.floor(np.asarray(t, dtype=float) / tau).astype(int), 0, n_int - 1)
        out = price_arr[idx]
        return float(out) if np.ndim(out) == 0 else out

    return PricingStrategy("mpc", params, discount, meta, _price=price)


def mpc_from_nsub(params: MarketParams, discount: DiscountFunction, n_sub: int,
                  t0: float) -> PricingStrategy:
    if n_sub < 1:
        raise ConstructionError("n_sub must be >= 1")
    if params.h <= 1:
        raise ConstructionError("a price ladder needs h > 1")
    return build_mpc(params, discount, params.h ** (1.0 / n_sub), t0)


def default_t0(params: MarketParams, discount: DiscountFunction) -> float:
    """Switch time of the constant-ratio mechanism for the same market."""
    if discount.kind == "linear":
        return build_mc_lin(params).t0
    return build_mc_general(params, discount).t0


# --- ESoES-SS ---------------------------------------------------------------

def build_esoes_ss(params: MarketParams, delta: float = 2.0,
                   discount: Optional[DiscountFunction] = None) -> PricingStrategy:
    h = params.h
    if not 1.0 < delta <= h * (1 + 1e-12):
        raise ConstructionError(f"delta must lie in (1, h], got {delta}")
    if discount is None:
        from .discounting import make_constant_one
        discount = make_constant_one(params.T)
    n_exp = params.lam_T
    m = _ceil_log(h, delta)
    block = n_exp / m

    def arrival_price(i):
        i = np.asarray(i, dtype=float)
        ratio = i / block
        j = np.ceil(ratio - _INT_TOL * np.maximum(1.0, ratio))
        j = np.clip(j, 1, m)
        p = np.maximum(h / delta ** j, 1.0)
        out = np.where(i > n_exp, 1.0, p)
        return float(out) if out.ndim == 0 else out

    meta = EsoesSsMeta(n_exp, float(delta), m, block)
    return PricingStrategy("esoes_ss", params, discount, meta,
                           _arrival_price=arrival_price)


# --- price ratios and lower bounds ---------------------------------------------

def kappa_tau(strategy: PricingStrategy, tau: float, n_grid: int = 4096,
              s_max: Optional[float] = None) -> float:
    """Largest ratio ``p(s) / p(s + tau)`` over a grid of start times.

    The scan covers ``[0, T - tau]`` clipped at ``s_max``; by default ``s_max``
    is the strategy's switch time, since only intervals starting before the
    switch enter the lower-bound argument and a linear floor makes the ratio
    blow up near ``T``. Points with ``p(s + tau) < 1e-12`` are skipped.
    """
    T = strategy.params.T
    if not 0 < tau <= T:
        raise ValueError("tau must lie in (0, T]")
    hi = T - tau
    if s_max is None and strategy.t0 is not None and strategy.t0 > 0:
        s_max = strategy.t0
    if s_max is not None:
        hi = min(hi, s_max)
    s = np.linspace(0.0, hi, n_grid)
    num = np.asarray(strategy.price_at(s), dtype=float)
    den = np.asarray(strategy.price_at(s + tau), dtype=float)
    ok = den >= 1e-12
    if not np.any(ok):
        return 1.0
    return max(1.0, float(np.max(num[ok] / den[ok])))


@dataclass(frozen=True)
class LowerBound:
    value: float
    epsilon: float
    tau: float
    lam_tau: float


def _bound_tau(params: MarketParams, eps: float):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    lam_tau = params.lam_T ** (1.0 - eps)
    if lam_tau < MIN_LAM_TAU:
        raise ValueError(
            f"lam*tau = {lam_tau:.6g} is below the threshold {MIN_LAM_TAU:.6g}")
    return params.T ** (1.0 - eps) * params.lam ** (-eps), lam_tau


def _xi_clamped(discount, t):
    return float(discount.eval(min(t, discount.T)))


def lower_bound_mc(meta: McMeta, params: MarketParams, eps: float, kappa: float) -> LowerBound:
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    tau, lam_tau = _bound_tau(params, eps)
    val = _xi_clamped(meta.discount, meta.t0 + tau) * (1.0 - eps) / (kappa * math.e)
    return LowerBound(val, eps, tau, lam_tau)


def lower_bound_mpc(mpc: MpcMeta, params: MarketParams, eps: float,
                    discount: DiscountFunction) -> LowerBound:
    tau, lam_tau = _bound_tau(params, eps)
    val = _xi_clamped(discount, (mpc.n_sub + 1) * tau) * (1.0 - eps) / (mpc.delta * math.e)
    return LowerBound(val, eps, tau, lam_tau)


def admissible_epsilons(params: MarketParams, n: int = 99) -> list:
    """Grid of epsilon in (0, 1) satisfying the lam*tau threshold."""
    out = []
    for e in np.linspace(0.0, 1.0, n + 2)[1:-1]:
        if params.lam_T ** (1.0 - e) >= MIN_LAM_TAU:
            out.append(float(e))
    return out


def tightest_bound(bound_fn: Callable[[float], LowerBound], params: MarketParams,
                   epsilons: Optional[Sequence[float]] = None) -> LowerBound:
    """Maximise a lower bound over admissible epsilon."""
    eps_grid = admissible_epsilons(params) if epsilons is None else epsilons
    if not eps_grid:
        raise ValueError("no admissible epsilon for these parameters")
    return max((bound_fn(e) for e in eps_grid), key=lambda b: b.value)
