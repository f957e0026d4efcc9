"""Discount functions xi(t) on [0, T] and the reciprocal zeta = 1/xi."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

XI_FLOOR = 1e-12
_GRID = 1024


class DiscountError(ValueError):
    pass


@dataclass(frozen=True)
class DiscountFunction:
    """Non-increasing discount with ``xi(0) = 1``.

    ``eval`` accepts scalars or numpy arrays. ``zeta`` and ``zeta_prime`` are
    scalar-only and refuse to run where the discount has collapsed to zero.
    """

    kind: str
    T: float
    _xi: Callable
    _zeta: Callable
    _zeta_prime: Callable

    def eval(self, t):
        return self._xi(t)

    __call__ = eval

    def zeta(self, t: float) -> float:
        self._guard(t)
        return self._zeta(t)

    def zeta_prime(self, t: float) -> float:
        self._guard(t)
        return self._zeta_prime(t)

    def _guard(self, t):
        if self._xi(t) <= XI_FLOOR:
            raise DiscountError(f"zeta undefined at t={t}: xi(t) <= {XI_FLOOR}")

    def last_time_at_least(self, level: float) -> float:
        """Largest t in [0, T] with xi(t) >= level, or -inf if there is none."""
        T = self.T
        if level <= 0:
            return T
        if self._xi(0.0) < level:
            return -math.inf
        if self.kind == "linear":
            return min(T, T * (1.0 - level))
        if self._xi(T) >= level:
            return T
        lo, hi = 0.0, T
        while hi - lo > 1e-15 * T:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self._xi(mid) >= level:
                lo = mid
            else:
                hi = mid
        return lo

    def to_config(self) -> dict:
        return {"discount": {"kind": self.kind, "T": self.T}}


def make_linear(T: float) -> DiscountFunction:
    if not T > 0:
        raise DiscountError("T must be positive")
    T = float(T)
    return DiscountFunction(
        "linear", T,
        lambda t: 1.0 - np.asarray(t, dtype=float) / T if np.ndim(t) else 1.0 - t / T,
        lambda t: T / (T - t),
        lambda t: T / (T - t) ** 2,
    )


def make_constant_one(T: float) -> DiscountFunction:
    if not T > 0:
        raise DiscountError("T must be positive")
    return DiscountFunction(
        "constant_one", float(T),
        lambda t: np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0,
        lambda t: 1.0,
        lambda t: 0.0,
    )


def make_custom(T: float, xi: Callable[[float], float]) -> DiscountFunction:
    """Wrap an arbitrary discount; zeta' comes from a central difference.

    ``xi`` is checked on a 1024-point grid for ``xi(0) = 1`` and
    monotonicity before it is accepted.
    """
    if not T > 0:
        raise DiscountError("T must be positive")
    T = float(T)
    x0 = float(xi(0.0))
    if abs(x0 - 1.0) > 1e-9:
        raise DiscountError(f"xi(0) must be 1, got {x0} at t=0")
    grid = np.linspace(0.0, T, _GRID)
    vals = np.array([float(xi(t)) for t in grid])
    if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-9):
        i = int(np.argmax((vals < -1e-12) | (vals > 1.0 + 1e-9)))
        raise DiscountError(f"xi leaves [0, 1] at t={grid[i]} (xi={vals[i]})")
    rises = np.diff(vals) > 1e-9
    if np.any(rises):
        i = int(np.argmax(rises)) + 1
        raise DiscountError(f"xi increases at t={grid[i]} (xi={vals[i]} > {vals[i - 1]})")

    step = max(1e-6 * T, 1e-9)

    def xi_eval(t):
        if np.ndim(t):
            return np.array([float(xi(s)) for s in np.ravel(t)]).reshape(np.shape(t))
        return float(xi(t))

    def zeta(t):
        return 1.0 / float(xi(t))

    def zeta_prime(t):
        lo, hi = max(t - step, 0.0), min(t + step, T)
        if float(xi(hi)) <= XI_FLOOR:
            hi = t
        return (1.0 / float(xi(hi)) - 1.0 / float(xi(lo))) / (hi - lo)

    return DiscountFunction("custom", T, xi_eval, zeta, zeta_prime)


def make_discount(kind: str, T: float) -> DiscountFunction:
    if kind == "linear":
        return make_linear(T)
    if kind == "constant_one":
        return make_constant_one(T)
    raise DiscountError(f"unknown discount kind {kind!r}")


def discount_from_config(cfg: dict) -> DiscountFunction:
    d = cfg.get("discount", cfg)
    return make_discount(d["kind"], d["T"])
