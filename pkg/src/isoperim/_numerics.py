"""Small numerical kernels shared by the modules.

Quadrature goes through QUADPACK (``scipy.integrate.quad``); unbounded ends
are folded onto a finite interval with ``x = tan(u)`` first so every
integral is handled the same way.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import NumericalError

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-12
INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def integrate_line(f, lo: float, hi: float, epsabs: float = QUAD_EPSABS,
                   epsrel: float = QUAD_EPSREL, limit: int = 200) -> float:
    """Integrate a scalar function over ``[lo, hi]``; either end may be infinite."""
    if hi <= lo:
        return 0.0
    if math.isfinite(lo) and math.isfinite(hi):
        g, a, b = f, lo, hi
    else:
        def g(u):
            c = math.cos(u)
            if c == 0.0:
                return 0.0
            x = math.tan(u)
            return f(x) / (c * c)
        a = math.atan(lo) if math.isfinite(lo) else -math.pi / 2
        b = math.atan(hi) if math.isfinite(hi) else math.pi / 2
    value, abserr, info = integrate.quad(g, a, b, epsabs=epsabs, epsrel=epsrel,
                                         limit=limit, full_output=1)[:3]
    if abserr > max(100 * epsabs, 1e-6 * abs(value)) or not math.isfinite(value):
        raise NumericalError(f"quadrature on [{lo}, {hi}] did not converge",
                             achieved_tol=abserr)
    return float(value)


def golden_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    """Maximize a unimodal function on ``[lo, hi]``; returns ``(x, f(x))``.

    The endpoints are compared against the interior optimum so a monotone
    function still returns its best end.
    """
    a, b = lo, hi
    x1 = b - INV_GOLDEN * (b - a)
    x2 = a + INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol * (1.0 + abs(a) + abs(b)):
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_GOLDEN * (b - a)
            f2 = f(x2)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for x in (lo, hi):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def richardson(values, hs):
    """Richardson table for a quotient with expansion ``q(h) = L + c1 h + c2 h^2``.

    ``hs`` must halve at each step.  Returns the order-1 and order-2 columns.
    """
    q = np.asarray(values, dtype=float)
    r1 = 2.0 * q[1:] - q[:-1]
    r2 = (4.0 * r1[1:] - r1[:-1]) / 3.0
    return r1, r2


def log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.geomspace(lo, hi, n)
