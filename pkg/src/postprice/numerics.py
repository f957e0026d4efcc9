"""Scalar quadrature, bracketed root finding and fixed-step RK4.

Everything here is deterministic: the same closure and arguments always
produce the same floating point result.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _spi
from scipy import optimize as _spo


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be strictly positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


ROOT_TOL = Tolerance()
QUAD_TOL = Tolerance(abs_tol=1e-10, rel_tol=1e-10, max_iter=200)
ODE_STEPS = 4096


class NumericsError(RuntimeError):
    pass


class IntegrationError(NumericsError):
    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class RootFindingError(NumericsError):
    def __init__(self, message, lo=None, hi=None, f_lo=None, f_hi=None):
        super().__init__(message)
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi


class OdeError(NumericsError):
    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


def integrate(f: Callable[[float], float], a: float, b: float,
              tol: Tolerance = QUAD_TOL, points=None) -> float:
    """Integrate ``f`` over ``[a, b]`` with adaptive Gauss-Kronrod.

    ``points`` lists interior breakpoints (kinks, jumps) that the
    subdivision should respect. Raises :class:`IntegrationError` carrying
    the best estimate when the requested accuracy is not reached.
    """
    if a > b:
        raise ValueError(f"integrate needs a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    kwargs = dict(epsabs=tol.abs_tol, epsrel=tol.rel_tol, limit=tol.max_iter,
                  full_output=1)
    if points is not None:
        inner = sorted(p for p in points if a < p < b)
        if inner:
            kwargs["points"] = inner
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = _spi.quad(f, a, b, **kwargs)
    value, err = out[0], out[1]
    if not math.isfinite(value):
        raise IntegrationError(f"non-finite integral on [{a}, {b}]", value, err)
    target = max(tol.abs_tol, tol.rel_tol * abs(value))
    # a message slot (len 4) means QUADPACK flagged trouble; trust only the error bound
    if len(out) > 3 and err > 10 * target:
        raise IntegrationError(
            f"quadrature did not converge on [{a}, {b}]: {out[3]}", value, err)
    return value


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: Tolerance = ROOT_TOL) -> float:
    """Bracketed root of ``f`` on ``[lo, hi]`` (Brent's method).

    The returned ``x`` lies in the bracket and the final bracket width is at
    most ``max(abs_tol, rel_tol * |x|)``.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise RootFindingError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}",
            lo, hi, f_lo, f_hi)
    rtol = max(tol.rel_tol, 4 * np.finfo(float).eps)
    try:
        x, info = _spo.brentq(f, lo, hi, xtol=tol.abs_tol, rtol=rtol,
                              maxiter=tol.max_iter, full_output=True, disp=False)
    except (ValueError, RuntimeError) as exc:  # pragma: no cover - defensive
        raise RootFindingError(str(exc), lo, hi, f_lo, f_hi) from exc
    if not info.converged:
        raise RootFindingError(
            f"root finding stalled after {info.iterations} iterations (best {x})",
            lo, hi, f_lo, f_hi)
    return x


def integrate_ode(rhs: Callable[[float, float], float], t_from: float, t_to: float,
                  y0: float, steps: int = ODE_STEPS):
    """Classic RK4 with ``steps`` equal steps from ``t_from`` to ``t_to``.

    Backward integration (``t_to < t_from``) is allowed. Returns ``(t, y)``
    arrays sorted by increasing time, both endpoints included.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt = (t_to - t_from) / steps
    ts = [t_from]
    ys = [float(y0)]
    t, y = float(t_from), float(y0)
    for j in range(1, steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        t_next = t_to if j == steps else t_from + j * dt
        k4 = rhs(t_next, y + dt * k3)
        y = y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not math.isfinite(y):
            raise OdeError(f"non-finite state at t={t_next}", t_next)
        t = t_next
        ts.append(t)
        ys.append(y)
    ts_arr = np.asarray(ts)
    ys_arr = np.asarray(ys)
    if dt < 0:
        ts_arr = ts_arr[::-1]
        ys_arr = ys_arr[::-1]
    return ts_arr, ys_arr
