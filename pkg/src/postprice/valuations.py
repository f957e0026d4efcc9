"""Valuation distributions on [1, h] and the derived order-statistic laws.

Three families are supported: a point mass (identical valuations), the
uniform law and a normal law truncated to ``[1, h]``. On top of them this
module evaluates

* the law of the maximum valuation among Poisson(lam*tau) arrivals,
* the law of ``Z = V * U`` with ``U ~ Uniform(0, 1)``,
* the law of the maximum linearly discounted valuation over the horizon.

The maximum over an empty set of arrivals is taken to be 0, which makes
``exp(-m * (1 - F(x)))`` the exact CDF for every ``x >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .numerics import QUAD_TOL, Tolerance, integrate

MHR_SLACK = 1e-9


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class ValuationDistribution:
    kind: str
    h: float
    v: Optional[float] = None
    mu: Optional[float] = None
    sigma2: Optional[float] = None
    _phi_lo: float = field(default=0.0, repr=False, compare=False)
    _phi_mass: float = field(default=1.0, repr=False, compare=False)

    @property
    def has_density(self) -> bool:
        return self.kind != "point"

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "point":
            out = (x >= self.v).astype(float)
        elif self.kind == "uniform":
            out = np.clip((x - 1.0) / (self.h - 1.0), 0.0, 1.0)
        else:
            sigma = math.sqrt(self.sigma2)
            z = (np.clip(x, 1.0, self.h) - self.mu) / sigma
            out = np.clip((ndtr(z) - self._phi_lo) / self._phi_mass, 0.0, 1.0)
            out = np.where(x < 1.0, 0.0, np.where(x >= self.h, 1.0, out))
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        if self.kind == "point":
            raise DistributionError("point mass has no density")
        x = np.asarray(x, dtype=float)
        inside = (x >= 1.0) & (x <= self.h)
        if self.kind == "uniform":
            out = np.where(inside, 1.0 / (self.h - 1.0), 0.0)
        else:
            sigma = math.sqrt(self.sigma2)
            z = (x - self.mu) / sigma
            dens = np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi) * self._phi_mass)
            out = np.where(inside, dens, 0.0)
        return float(out) if out.ndim == 0 else out

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "point":
            out = np.full_like(u, self.v)
        elif self.kind == "uniform":
            out = 1.0 + (self.h - 1.0) * u
        else:
            sigma = math.sqrt(self.sigma2)
            out = self.mu + sigma * ndtri(self._phi_lo + u * self._phi_mass)
            out = np.clip(out, 1.0, self.h)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        """Inverse-CDF draws. A point mass consumes no randomness."""
        if self.kind == "point":
            return self.v if size is None else np.full(size, self.v)
        return self.ppf(rng.random(size))

    def to_config(self) -> dict:
        d = {"kind": self.kind, "h": self.h}
        if self.kind == "point":
            d["v"] = self.v
        if self.kind == "truncated_normal":
            d.update(mu=self.mu, sigma2=self.sigma2)
        return {"valuation": d}


def point(v: float, h: float) -> ValuationDistribution:
    if h < 1 or not 1.0 <= v <= h:
        raise DistributionError(f"point mass needs 1 <= v <= h, got v={v}, h={h}")
    return ValuationDistribution("point", float(h), v=float(v))


def uniform(h: float) -> ValuationDistribution:
    if not h > 1:
        raise DistributionError("uniform valuations need h > 1")
    return ValuationDistribution("uniform", float(h))


def truncated_normal(h: float, mu: Optional[float] = None, sigma2: float = 2.0):
    """Normal(mu, sigma2) restricted to [1, h]; ``mu`` defaults to (h-1)/2."""
    if not h > 1:
        raise DistributionError("truncated normal needs h > 1")
    if mu is None:
        mu = (h - 1.0) / 2.0
    if not sigma2 > 0:
        raise DistributionError("sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    lo = float(ndtr((1.0 - mu) / sigma))
    mass = float(ndtr((h - mu) / sigma)) - lo
    if mass <= 0:
        raise DistributionError("truncation interval carries no mass")
    return ValuationDistribution("truncated_normal", float(h), mu=float(mu),
                                 sigma2=float(sigma2), _phi_lo=lo, _phi_mass=mass)


def distribution_from_config(cfg: dict) -> ValuationDistribution:
    d = cfg.get("valuation", cfg)
    kind = d["kind"]
    if kind == "point":
        return point(d["v"], d["h"])
    if kind == "uniform":
        return uniform(d["h"])
    if kind == "truncated_normal":
        return truncated_normal(d["h"], d.get("mu"), d.get("sigma2", 2.0))
    raise DistributionError(f"unknown valuation kind {kind!r}")


# --- hazard rates -----------------------------------------------------------

@dataclass
class HazardReport:
    grid: np.ndarray
    hazard: np.ndarray
    is_monotone_nondecreasing: bool
    first_violation: Optional[float]


def _monotone_report(grid, hazard, slack=MHR_SLACK) -> HazardReport:
    drops = np.diff(hazard) < -slack
    first = float(grid[int(np.argmax(drops)) + 1]) if np.any(drops) else None
    return HazardReport(grid, hazard, not np.any(drops), first)


def _hazard_grid(h: float, n_grid: int) -> np.ndarray:
    eps = (h - 1.0) / (10.0 * n_grid)
    return np.linspace(1.0 + eps, h - eps, n_grid)


def hazard_check(dist: ValuationDistribution, n_grid: int = 256) -> HazardReport:
    """Evaluate ``f / (1 - F)`` on an interior grid and test monotonicity."""
    if not dist.has_density:
        raise DistributionError("hazard rate is undefined for a point mass")
    if n_grid < 16:
        raise ValueError("n_grid must be >= 16")
    grid = _hazard_grid(dist.h, n_grid)
    hazard = dist.pdf(grid) / (1.0 - dist.cdf(grid))
    return _monotone_report(grid, hazard)


def max_order_hazard_check(dist: ValuationDistribution, lam_tau: float,
                           n_grid: int = 256) -> HazardReport:
    """Hazard rate of the Poisson-maximum law, lam*tau*H(x)*S(x)/(e^{lam*tau*S(x)} - 1)."""
    base = hazard_check(dist, n_grid)
    surv = 1.0 - dist.cdf(base.grid)
    hazard = lam_tau * base.hazard * surv / np.expm1(lam_tau * surv)
    return _monotone_report(base.grid, hazard)


# --- order statistics under Poisson arrivals -------------------------------

def max_order_cdf(dist: ValuationDistribution, lam_tau: float, x):
    """CDF of the largest initial valuation among Poisson(lam_tau) arrivals."""
    if not lam_tau > 0:
        raise ValueError("lam_tau must be positive")
    return np.exp(-lam_tau * (1.0 - dist.cdf(x)))


def expected_max(dist: ValuationDistribution, lam_tau: float,
                 tol: Tolerance = QUAD_TOL) -> float:
    if dist.kind == "point":
        return dist.v * -math.expm1(-lam_tau)
    return integrate(lambda x: 1.0 - max_order_cdf(dist, lam_tau, x), 0.0, dist.h, tol,
                     points=[1.0])


@dataclass(frozen=True)
class LnRatioCheck:
    lhs: float
    rhs: float
    holds: bool


def ln_ratio_inequality_check(dist: ValuationDistribution, lam_tau: float,
                              lam_tau_prime: float) -> LnRatioCheck:
    """Compare E[X_a]/E[X_b] with ln(a)/ln(b) for 1 < a <= b."""
    if not 1.0 < lam_tau <= lam_tau_prime:
        raise ValueError(
            f"need 1 < lam_tau <= lam_tau_prime, got {lam_tau}, {lam_tau_prime}")
    if dist.has_density and not hazard_check(dist).is_monotone_nondecreasing:
        raise DistributionError("the log-ratio bound requires an MHR distribution")
    lhs = expected_max(dist, lam_tau) / expected_max(dist, lam_tau_prime)
    rhs = math.log(lam_tau) / math.log(lam_tau_prime)
    return LnRatioCheck(lhs, rhs, lhs >= rhs - 1e-9)


def _inv_tail(dist: ValuationDistribution, x: float) -> float:
    """Integral of f(v)/v over [x, h]."""
    lo = max(x, 1.0)
    if lo >= dist.h:
        return 0.0
    return integrate(lambda v: dist.pdf(v) / v, lo, dist.h)


def _product_cdf_scalar(dist: ValuationDistribution, x: float) -> float:
    if x <= 0:
        return 0.0
    if x >= dist.h:
        return 1.0
    if dist.kind == "point":
        return min(x / dist.v, 1.0)
    if dist.kind == "uniform":
        # closed form of the inverse-valuation tail for a flat density
        tail = math.log(dist.h / max(x, 1.0)) / (dist.h - 1.0)
        return min(float(dist.cdf(x)) + x * tail, 1.0)
    if x < 1.0:
        return x * _inv_tail(dist, 1.0)
    return min(dist.cdf(x) + x * _inv_tail(dist, x), 1.0)


def product_cdf(dist: ValuationDistribution, x):
    """CDF of ``Z = V * U`` where ``U ~ Uniform(0, 1)`` independent of ``V``."""
    if np.ndim(x) == 0:
        return _product_cdf_scalar(dist, float(x))
    x = np.asarray(x, dtype=float)
    return np.array([_product_cdf_scalar(dist, float(t)) for t in x.ravel()]).reshape(x.shape)


def max_discounted_cdf(dist: ValuationDistribution, lam_T: float, x):
    """CDF of the largest linearly discounted valuation over the whole horizon."""
    if not lam_T > 0:
        raise ValueError("lam_T must be positive")
    out = np.exp(-lam_T * (1.0 - np.asarray(product_cdf(dist, x))))
    return float(out) if np.ndim(out) == 0 else out


def expected_max_discounted(dist: ValuationDistribution, lam_T: float,
                            tol: Tolerance = QUAD_TOL) -> float:
    brk = [1.0] if dist.kind != "point" else [dist.v]
    return integrate(lambda x: 1.0 - max_discounted_cdf(dist, lam_T, x), 0.0, dist.h,
                     tol, points=brk)
