"""Dimension-free lower bounds for product profiles and their numeric checks.

The chain is: ``Phi(alpha) = J(e^{-1/alpha}) e^{1/alpha}``, the coefficient
map ``c(a) = Phi(1/a - 1) / max(D0, D1)``, the sup-representation
``sup_a c(a) (t - t^{1/a})`` sandwiching J, and finally the certified bound
``J / c_D``.  The Beckner-type and variance-subadditivity checks test the
functional inequalities behind it on concrete functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import conditions
from ._numerics import golden_max, integrate_line
from .conditions import EquivalenceConstants, LOG2
from .errors import DomainError, PreconditionError
from .measure1d import Measure1D
from .profiles import (J1, MinExp, Profile, ScaledSym, SupProfile, Tabulated, default_a_nodes,
                       default_grid, half_grid, open_grid, power_gap, xlog1x)

TOL = 1e-9
CONCAVITY_GAP = 1e-6
ALPHA_MAX = 1.0 / LOG2


# ------------------------------------------------------------------ Phi
def phi_from_J(J: Profile, alpha):
    """``Phi(alpha) = J(t)/t`` at ``t = exp(-1/alpha)``, for alpha in (0, 1/log 2]."""
    def one(al):
        if not 0.0 < al <= ALPHA_MAX * (1.0 + 1e-12):
            raise DomainError(f"alpha must lie in (0, 1/log 2], got {al}")
        return J.over_t_log(-1.0 / al)
    arr = np.asarray(alpha, dtype=float)
    if arr.ndim == 0:
        return one(float(arr))
    return np.array([one(float(x)) for x in arr.ravel()]).reshape(arr.shape)


def alpha_grid(n: int = 128, lo: float = 1e-4, hi: float = 1.0) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def phi_constants(phi, grid=None) -> tuple[float, float]:
    """``C0``: Phi non-increasing; ``C1``: ``alpha Phi(alpha)`` non-decreasing."""
    g = alpha_grid(512, 1e-4, ALPHA_MAX) if grid is None else np.asarray(grid, dtype=float)
    v = np.array([float(phi(x)) for x in g])
    C0 = conditions.essential_monotone_constant(v, g, "nonincreasing")
    C1 = conditions.essential_monotone_constant(g * v, g, "nondecreasing")
    return C0, C1


def bcr_check(phi, C0: float, C1: float, y_grid=None, n_alpha: int = 128) -> dict:
    """Bracket ``S(y) = sup_{alpha in (0,1]} Phi(alpha)(1 - y^alpha)`` by
    ``Phi(alpha*)/(2 C0)`` and ``max(C0, C1) Phi(alpha*)``, ``alpha* = 1/log(1/y)``.

    Margins are divided by ``Phi(alpha*)`` so they do not change when Phi is
    scaled.  The hypotheses on Phi are checked first with the given constants.
    """
    g = alpha_grid(512, 1e-4, ALPHA_MAX)
    c0, c1 = phi_constants(phi, g)
    if c0 > C0 * (1.0 + 1e-9):
        raise PreconditionError(f"Phi is not non-increasing with constant {C0} (grid gives {c0})", "C0")
    if c1 > C1 * (1.0 + 1e-9):
        raise PreconditionError(f"alpha*Phi is not non-decreasing with constant {C1} (grid gives {c1})", "C1")
    ys = np.linspace(0.0, 0.5, 65)[1:] if y_grid is None else np.asarray(y_grid, dtype=float)
    if np.any(ys <= 0.0) or np.any(ys > 0.5):
        raise DomainError("y-grid must lie in (0, 1/2]")
    alphas = alpha_grid(n_alpha)
    rows = []
    for y in ys:
        a_star = 1.0 / math.log(1.0 / y)
        obj = lambda al, y=y: float(phi(al)) * -math.expm1(al * math.log(y))
        cand = np.append(alphas, [min(a_star, 1.0), 1.0])
        vals = np.array([obj(al) for al in cand])
        k = int(np.argmax(vals))
        best = float(vals[k])
        srt = np.sort(cand)
        j = int(np.searchsorted(srt, cand[k]))
        lo, hi = srt[max(j - 1, 0)], srt[min(j + 1, srt.size - 1)]
        best = max(best, golden_max(obj, lo, hi, tol=1e-12)[1])
        p_star = float(phi(a_star))
        lower = (best - p_star / (2.0 * C0)) / p_star
        upper = (max(C0, C1) * p_star - best) / p_star
        rows.append((float(y), best, p_star, lower, upper))
    arr = np.array(rows)
    lo_m, up_m = float(arr[:, 3].min()), float(arr[:, 4].min())
    return {"lower_margin": lo_m, "upper_margin": up_m, "C0": C0, "C1": C1,
            "rows": arr, "verdict": "pass" if min(lo_m, up_m) >= -TOL else "fail"}


# ----------------------------------------------------------- coefficient map
@dataclass(frozen=True)
class CoefficientMap:
    """``c(a) = Phi(1/a - 1) / max(D0, D1)`` for ``a`` in [1/2, 1)."""

    J: Profile
    D0: float
    D1: float

    def __call__(self, a: float) -> float:
        if not 0.5 <= a < 1.0:
            if a == 1.0:
                # Phi(0) is a limit the map does not extrapolate
                raise DomainError("a = 1 is excluded from the coefficient map")
            raise DomainError(f"a must lie in [1/2, 1), got {a}")
        return float(phi_from_J(self.J, 1.0 / a - 1.0)) / max(self.D0, self.D1)

    def table(self, a_grid=None) -> tuple[np.ndarray, np.ndarray]:
        a = default_a_nodes() if a_grid is None else np.asarray(a_grid, dtype=float)
        return a, np.array([self(x) for x in a])


def coefficient_map(J: Profile, D0: float, D1: float, a_grid=None) -> CoefficientMap:
    c = CoefficientMap(J, D0, D1)
    if a_grid is not None:
        c.table(a_grid)          # validates the grid
    return c


def sandwich_check(J: Profile, c_map: CoefficientMap, grid=None, a_nodes=None) -> dict:
    """``J >= L`` on (0,1) and ``J <= 2 D0 max(D0, D1) L`` on (0,1/2] for
    ``L(t) = sup_a c(a)(t - t^{1/a})``; margins are normalized by ``max J``."""
    nodes = default_a_nodes() if a_nodes is None else a_nodes
    L = SupProfile(c_map, nodes, one_sided=True, name="L")
    g = open_grid(128) if grid is None else np.asarray(grid, dtype=float)
    g = g[(g > 0.0) & (g < 1.0)]
    jg = np.asarray(J(g), dtype=float)
    lg = np.asarray(L(g), dtype=float)
    scale = max(float(jg.max()), 1e-300)
    lower = (jg - lg) / scale
    half = g <= 0.5
    factor = 2.0 * c_map.D0 * max(c_map.D0, c_map.D1)
    upper = (factor * lg[half] - jg[half]) / scale
    return {"lower_margin": float(lower.min()), "upper_margin": float(upper.min()),
            "factor": factor, "grid_size": int(g.size),
            "verdict": "pass" if min(lower.min(), upper.min()) >= -TOL else "fail"}


# ---------------------------------------------------------------- certificate
@dataclass(frozen=True)
class BoundCertificate:
    J: Profile
    constants: EquivalenceConstants
    cD: float
    concave: bool
    concavity_gap: float
    c_map: CoefficientMap
    evidence: dict
    bound: Profile = field(repr=False)

    def __call__(self, t):
        return self.bound(t)

    def tightness(self, t, upper) -> float:
        """Empirical ``J(t) / upper`` against a numeric upper bound of the product profile."""
        return float(self.J(t)) / float(upper)

    def as_dict(self) -> dict:
        c = self.constants
        return {"profile": self.J.name, "D": c.D, "D0": c.D0, "D1": c.D1, "C2": c.C2,
                "cD": self.cD, "concave": self.concave, "concavity_gap": self.concavity_gap,
                "sandwich_min_margin": min(self.evidence["lower_margin"],
                                           self.evidence["upper_margin"]),
                "stamps": c.stamps}


def certified_lower_bound(J: Profile, assume_concave: bool = False, n: int = 512) -> BoundCertificate:
    """``J / c_D`` with ``c_D = 2 (D/log 2)^2``, or ``2D`` / 1 for concave J.

    D is the essential non-decreasing constant of ``J/J1`` on (0, 1).
    """
    sym = conditions.check_symmetry(J)
    if sym["verdict"] != "pass":
        raise PreconditionError(f"{J.name} is not symmetric about 1/2 (defect {sym['violation']:g})",
                                "symmetry")
    if float(J(0.0)) != 0.0:
        raise PreconditionError(f"{J.name}(0) != 0", "J(0)=0")
    consts = conditions.equivalence_constants(J, n)
    if not math.isfinite(consts.D):
        raise PreconditionError(f"{J.name}/J1 is not essentially non-decreasing", "monotone-ratio")
    gap = conditions.concavity_gap(J)
    concave = assume_concave or gap < CONCAVITY_GAP
    cD = conditions.tensorization_constant(consts.D, concave)
    consts = EquivalenceConstants(consts.D, consts.D0, consts.D1, consts.C2, cD, consts.stamps)
    c_map = coefficient_map(J, consts.D0, consts.D1)
    evidence = sandwich_check(J, c_map)
    bound = ScaledSym(J, 1.0 / cD, symmetrize=False)
    return BoundCertificate(J, consts, cD, concave, gap, c_map, evidence, bound)


# ------------------------------------------------------------ functional checks
def beckner_constant(J: Profile, a: float, grid=None) -> float:
    """Smallest c with ``c J(p) >= p - p^{1/a}`` on a grid of (0, 1)."""
    g = open_grid(256) if grid is None else np.asarray(grid, dtype=float)
    return float(np.max(np.asarray(power_gap(g, a)) / np.asarray(J(g), dtype=float)))


@dataclass(frozen=True)
class PiecewiseLinear:
    """``f`` through knots ``(x_k, y_k)``, constant beyond the end knots."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise DomainError("knots must be matching 1-D arrays")
        if np.any(np.diff(x) <= 0.0):
            raise DomainError("knot abscissae must increase")
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise DomainError("f must take values in [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __call__(self, t):
        return np.interp(t, self.x, self.y)


def _integrals(mu: Measure1D, f: PiecewiseLinear, a: float) -> tuple[float, float, float]:
    """``int |f'| dmu``, ``int f dmu`` and ``int f^a dmu``."""
    x, y = f.x, f.y
    left, right = mu.cdf(x[0]), mu.sf(x[-1])
    grad = 0.0
    mean = y[0] * left + y[-1] * right
    mean_a = y[0] ** a * left + y[-1] ** a * right
    for k in range(x.size - 1):
        x0, x1, y0, y1 = x[k], x[k + 1], y[k], y[k + 1]
        slope = (y1 - y0) / (x1 - x0)
        m = mu.mass(x0, x1)
        grad += abs(slope) * m
        if y0 == y1:
            mean += y0 * m
            mean_a += y0 ** a * m
            continue
        lin = lambda s: y0 + slope * (s - x0)
        mean += integrate_line(lambda s: lin(s) * mu._pdf1(s), x0, x1, epsabs=1e-13)
        mean_a += integrate_line(lambda s: max(lin(s), 0.0) ** a * mu._pdf1(s), x0, x1,
                                 epsabs=1e-13)
    return grad, mean, mean_a


def beckner_check(mu: Measure1D, a: float, c: float, f: PiecewiseLinear,
                  J: Profile | None = None) -> float:
    """``c int |f'| dmu - (int f dmu - (int f^a dmu)^{1/a})`` for piecewise-linear f.

    With ``J`` (the profile of mu) the hypothesis ``c J(p) >= p - p^{1/a}`` is
    checked on a grid first.
    """
    if not 0.5 <= a <= 1.0:
        raise DomainError("a must lie in [1/2, 1]")
    if J is not None and c < beckner_constant(J, a) * (1.0 - 1e-9):
        raise PreconditionError(f"c = {c} is below the grid constant for a = {a}", "c*I>=p-p^(1/a)")
    grad, mean, mean_a = _integrals(mu, f, a)
    return c * grad - (mean - mean_a ** (1.0 / a))


def beckner_product_check(mu: Measure1D, a: float, c: float, f1: PiecewiseLinear,
                          f2: PiecewiseLinear) -> float:
    """The same functional on ``mu x mu`` for ``f(x, y) = f1(x) f2(y)``.

    The gradient norm is the sum of the coordinate slopes, so every term
    factors into one-dimensional integrals.
    """
    g1, m1, ma1 = _integrals(mu, f1, a)
    g2, m2, ma2 = _integrals(mu, f2, a)
    grad = g1 * m2 + m1 * g2
    return c * grad - (m1 * m2 - (ma1 * ma2) ** (1.0 / a))


def phi_entropy(values, weights, a: float, axis=-1):
    """``E phi(Z) - phi(E Z)`` with ``phi(t) = t^{1/a}``."""
    p = 1.0 / a
    return (np.sum(weights * values ** p, axis=axis)
            - np.sum(weights * values, axis=axis) ** p)


def lo_check(a: float, Z, mu1, mu2) -> np.ndarray:
    """Deficit of phi-entropy subadditivity on a two-factor finite space.

    ``Z`` has shape ``(m, n)`` or ``(trials, m, n)``; the result is
    ``E_2 Ent^1 + E_1 Ent^2 - Ent^{12}``, one value per trial.
    """
    if not 0.5 <= a <= 1.0:
        raise DomainError("a must lie in [1/2, 1] (1/phi'' is concave only there)")
    Z = np.asarray(Z, dtype=float)
    single = Z.ndim == 2
    Z = Z[None] if single else Z
    w1 = np.asarray(mu1, dtype=float)
    w2 = np.asarray(mu2, dtype=float)
    if np.any(Z < 0.0):
        raise DomainError("Z must be non-negative")
    if abs(w1.sum() - 1.0) > 1e-12 or abs(w2.sum() - 1.0) > 1e-12:
        raise DomainError("weights must sum to 1")
    W = w1[:, None] * w2[None, :]
    total = phi_entropy(Z.reshape(Z.shape[0], -1), W.ravel()[None, :], a)
    ent1 = phi_entropy(Z, w1[None, :, None], a, axis=1)        # per column y
    ent2 = phi_entropy(Z, w2[None, None, :], a, axis=2)        # per row x
    slack = ent1 @ w2 + ent2 @ w1 - total
    return float(slack[0]) if single else slack


def lo_check_exact(Z, mu1, mu2) -> Fraction:
    """Exact rational deficit for ``a = 1/2`` (variance subadditivity)."""
    Z = [[Fraction(v) for v in row] for row in Z]
    w1 = [Fraction(v) for v in mu1]
    w2 = [Fraction(v) for v in mu2]

    def var(vals, ws):
        m = sum(w * v for v, w in zip(vals, ws))
        return sum(w * v * v for v, w in zip(vals, ws)) - m * m

    flat = [Z[i][j] for i in range(len(w1)) for j in range(len(w2))]
    wflat = [w1[i] * w2[j] for i in range(len(w1)) for j in range(len(w2))]
    total = var(flat, wflat)
    cols = sum(w2[j] * var([Z[i][j] for i in range(len(w1))], w1) for j in range(len(w2)))
    rows = sum(w1[i] * var(Z[i], w2) for i in range(len(w1)))
    return cols + rows - total


# -------------------------------------------------------- infinite products
def envelope_cap(I: Tabulated, C: float = 1.0):
    """``beta * J1(min(t, 1 - t))`` with ``beta = C (2/log 2) I(1/2)``."""
    beta = C * (2.0 / LOG2) * float(I(0.5))
    return beta, lambda t: beta * xlog1x(np.minimum(t, 1.0 - np.asarray(t, dtype=float)))


def infdim_upper_envelope(I: Tabulated, iterations: int = 20, tol: float = 1e-12,
                          C: float = 1.0, report: dict | None = None) -> Tabulated:
    """Iterate ``I(t) <- min_{ab = t} a I(b) + b I(a)``, fold symmetric and cap.

    For each node t the product ``ab = t`` ranges over nodes ``a >= t`` with
    ``b = t/a`` read off by linear interpolation.
    """
    t = I.t
    v = I.values.copy()
    scale = max(float(v.max()), 1e-300)
    if np.max(np.abs(v - np.interp(1.0 - t, t, v))) > 1e-9 * scale:
        raise DomainError("envelope input must be symmetric about 1/2")
    beta, cap = envelope_cap(I, C)
    capv = cap(t)
    a = t[t > 0.0]
    passes = 0
    for passes in range(1, iterations + 1):
        cur = Tabulated(t, v)
        Ia = cur(a)
        new = v.copy()
        for i, ti in enumerate(t):
            if ti <= 0.0 or ti >= 1.0:
                continue
            sel = a >= ti
            aa = a[sel]
            b = ti / aa
            cand = aa * cur(np.minimum(b, 1.0)) + b * Ia[sel]
            new[i] = min(new[i], float(cand.min()))
        new = np.minimum(new, np.interp(1.0 - t, t, new))
        new = np.minimum(new, capv)
        change = float(np.max(np.abs(new - v))) / scale
        v = new
        if change <= tol:
            break
    if report is not None:
        report.update({"passes": passes, "beta": beta})
    return Tabulated(t, v, name=f"env({I.name})")


def envelope_bounds(cert: BoundCertificate, I: Tabulated, env: Tabulated, grid=None) -> dict:
    """Check ``alpha MinExp <= env <= beta J1(min(t, 1-t))``.

    ``alpha`` is the largest constant with ``alpha MinExp <= J/c_D`` on the
    grid; ``beta`` comes from ``envelope_cap``.
    """
    g = open_grid(256) if grid is None else np.asarray(grid, dtype=float)
    lb = np.asarray(cert(g), dtype=float)
    m = np.asarray(MinExp()(g), dtype=float)
    alpha = float(np.min(lb / m))
    beta, cap = envelope_cap(I, 1.0)
    e = np.asarray(env(g), dtype=float)
    scale = max(float(e.max()), 1e-300)
    lower = float(np.min(e - alpha * m)) / scale
    upper = float(np.min(cap(g) - e)) / scale
    return {"alpha": alpha, "beta": beta, "lower_margin": lower, "upper_margin": upper,
            "verdict": "pass" if min(lower, upper) >= -TOL else "fail"}
