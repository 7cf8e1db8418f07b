"""Monotonicity and concavity constants of profiles, and the inequality checks
that decide whether a profile qualifies for the product bounds.

Every constant here is a supremum over a finite grid, hence a lower bound of
the true constant.  ``refined_constant`` recomputes on a grid with twice the
nodes and stamps the value as converged when it moved by less than 1%.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from ._numerics import richardson
from .errors import DomainError
from .profiles import J0, J1, Profile, default_grid, half_grid, open_grid, symmetry_defect

CAP = 1e6
VIOLATION_TOL = 1e-9
EQUIV_SLACK = 0.05
REFINE_TOL = 0.01
LOG2 = math.log(2.0)


def _values(f, grid) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(grid, dtype=float)
    v = np.asarray(f(g), dtype=float) if callable(f) else np.asarray(f, dtype=float)
    if v.shape != g.shape:
        raise DomainError("function values and grid differ in shape")
    order = np.argsort(g, kind="stable")
    return g[order], v[order]


def _capped(c: float) -> float:
    return INF if not math.isfinite(c) or c > CAP else float(c)


INF = math.inf


def essential_monotone_constant(f, grid, direction: str = "nondecreasing") -> float:
    """Smallest D with ``f(s) <= D f(t)`` (non-decreasing) or ``f(t) <= D f(s)``
    (non-increasing) for all grid nodes ``s <= t``.

    ``f`` is a callable or an array of values on ``grid``.  A linear scan with
    a running max (or min) gives the same sup as the pair scan.  Values above
    the cap come back as ``inf``.
    """
    _, v = _values(f, grid)
    if v.size == 0:
        raise DomainError("empty grid")
    if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
        raise DomainError("f must be positive and finite on the grid")
    if direction == "nondecreasing":
        c = float(np.max(np.maximum.accumulate(v) / v))
    elif direction == "nonincreasing":
        c = float(np.max(v / np.minimum.accumulate(v)))
    else:
        raise DomainError(f"unknown direction {direction!r}")
    return _capped(c)


def essential_monotone_constant_pairs(f, grid, direction: str = "nondecreasing") -> float:
    """Quadratic pair scan; the oracle for ``essential_monotone_constant``."""
    _, v = _values(f, grid)
    if np.any(v <= 0.0):
        raise DomainError("f must be positive on the grid")
    ratio = v[:, None] / v[None, :]            # f(s)/f(t), s = row, t = col
    upper = np.triu(np.ones_like(ratio, dtype=bool))
    r = ratio if direction == "nondecreasing" else 1.0 / ratio
    return _capped(float(np.max(r[upper])))


def peetre_constant(f, grid) -> float:
    """Smallest C2 with ``f(s) <= C2 max(1, s/t) f(t)`` over grid pairs.

    For ``s <= t`` this is the non-decreasing constant of f, for ``s > t`` the
    non-increasing constant of ``f(t)/t``; the grid must be positive.
    """
    g, v = _values(f, grid)
    if np.any(g <= 0.0):
        raise DomainError("peetre constant needs a positive grid")
    up = essential_monotone_constant(v, g, "nondecreasing")
    down = essential_monotone_constant(v / g, g, "nonincreasing")
    return max(up, down)


@dataclass(frozen=True)
class ConcaveMajorant:
    """Piecewise-linear upper hull through ``vertices``."""

    t: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.t, self.values)


def least_concave_majorant(points) -> ConcaveMajorant:
    """Upper hull of a planar point set (monotone chain)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise DomainError("need at least two (t, f) points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    if np.any(np.diff(pts[:, 0]) == 0.0):
        raise DomainError("abscissae must be distinct")
    hull: list[tuple[float, float]] = []
    for x, y in pts:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly above the chord
            if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) >= 0.0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    h = np.array(hull)
    return ConcaveMajorant(h[:, 0], h[:, 1])


def concavity_gap(J: Profile, grid=None) -> float:
    """``max (hull - J) / max J`` on the grid; 0 for a concave J."""
    g = default_grid(256) if grid is None else np.asarray(grid, dtype=float)
    v = np.asarray(J(g), dtype=float)
    hull = least_concave_majorant(np.column_stack([g, v]))
    scale = max(float(v.max()), 1e-300)
    return float(np.max(hull(g) - v)) / scale


# ---------------------------------------------------------------- inequalities
def _scale(J, grid) -> float:
    return max(float(np.max(np.asarray(J(grid), dtype=float))), 1e-300)


def check_subadditive(J: Profile, grid=None, tol: float = VIOLATION_TOL) -> dict:
    """Max of ``J(p+q) - J(p) - J(q)`` over grid pairs with ``p + q <= 1``."""
    g = default_grid(96) if grid is None else np.asarray(grid, dtype=float)
    g = g[(g > 0.0) & (g < 1.0)]
    jp = np.asarray(J(g), dtype=float)
    p, q = np.meshgrid(g, g, indexing="ij")
    ok = p + q <= 1.0
    s = np.minimum(p[ok] + q[ok], 1.0)
    viol = (np.asarray(J(s), dtype=float) - np.broadcast_to(jp[:, None], p.shape)[ok]
            - np.broadcast_to(jp[None, :], p.shape)[ok]) / _scale(J, g)
    k = int(np.argmax(viol))
    worst = float(viol[k])
    return {"test": "subadd", "violation": worst, "at": [float(p[ok][k]), float(q[ok][k])],
            "verdict": "pass" if worst <= tol else "fail"}


def check_two_point(J: Profile, grid=None, tol: float = VIOLATION_TOL) -> dict:
    """Max of ``J(ab) - a J(b) - b J(a)`` over grid pairs in [0, 1]^2."""
    g = default_grid(96) if grid is None else np.asarray(grid, dtype=float)
    jg = np.asarray(J(g), dtype=float)
    a, b = np.meshgrid(g, g, indexing="ij")
    jab = np.asarray(J((a * b).ravel()), dtype=float).reshape(a.shape)
    viol = (jab - a * jg[None, :] - b * jg[:, None]) / _scale(J, g)
    k = np.unravel_index(int(np.argmax(viol)), viol.shape)
    worst = float(viol[k])
    return {"test": "twopoint", "violation": worst, "at": [float(a[k]), float(b[k])],
            "verdict": "pass" if worst <= tol else "fail"}


def check_symmetry(J: Profile, grid=None, tol: float = VIOLATION_TOL) -> dict:
    g = default_grid() if grid is None else np.asarray(grid, dtype=float)
    d = symmetry_defect(J, g) / _scale(J, g)
    return {"test": "symmetry", "violation": d, "verdict": "pass" if d <= tol else "fail"}


INTERVALS = {"(0,1)": open_grid, "(0,1/2]": half_grid}


def ratio_values(J: Profile, ref: Profile, grid) -> tuple[np.ndarray, np.ndarray]:
    """``J/ref`` on the grid nodes where ``ref > 0`` (other nodes are dropped)."""
    g = np.asarray(grid, dtype=float)
    r = np.asarray(ref(g), dtype=float)
    keep = r > 0.0
    return g[keep], np.asarray(J(g[keep]), dtype=float) / r[keep]


def check_ratio_monotone(J: Profile, ref: Profile | str = "J1", interval: str = "(0,1)",
                         direction: str = "nondecreasing", grid=None, n: int = 512) -> float:
    """Essential monotonicity constant of ``J/ref`` on ``interval``."""
    if isinstance(ref, str):
        ref = {"J0": J0(), "J1": J1()}[ref]
    if grid is None:
        if interval not in INTERVALS:
            raise DomainError(f"unknown interval {interval!r}")
        grid = INTERVALS[interval](n)
    g, r = ratio_values(J, ref, grid)
    if np.any(r <= 0.0):
        return INF
    return essential_monotone_constant(r, g, direction)


def refined_constant(compute: Callable[[int], float], n: int = 512) -> dict:
    """Run ``compute`` at ``n`` and ``2n`` nodes; converged when they agree to 1%."""
    c1, c2 = compute(n), compute(2 * n)
    if math.isinf(c1) or math.isinf(c2):
        rel = 0.0 if c1 == c2 else INF
    else:
        rel = abs(c2 - c1) / max(abs(c2), 1e-300)
    return {"constant": c2, "coarse": c1, "relative_change": rel,
            "stamp": "PASS" if rel < REFINE_TOL else "UNCONVERGED"}


@dataclass(frozen=True)
class EquivalenceConstants:
    """``D``: J/J1 non-decreasing on (0,1); ``D0``: J/J0 non-increasing on
    (0,1/2]; ``D1``: J/J1 non-decreasing on (0,1/2]; ``C2``: Peetre constant
    of J on (0,1/2]; ``cD``: tensorization constant (set by ``tensorize``)."""

    D: float
    D0: float
    D1: float
    C2: float
    cD: float | None = None
    stamps: dict | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def equivalence_constants(J: Profile, n: int = 512) -> EquivalenceConstants:
    runs = {
        "D": refined_constant(lambda m: check_ratio_monotone(J, "J1", "(0,1)", "nondecreasing", n=m), n),
        "D0": refined_constant(lambda m: check_ratio_monotone(J, "J0", "(0,1/2]", "nonincreasing", n=m), n),
        "D1": refined_constant(lambda m: check_ratio_monotone(J, "J1", "(0,1/2]", "nondecreasing", n=m), n),
        "C2": refined_constant(lambda m: peetre_constant(J, half_grid(m)), n),
    }
    return EquivalenceConstants(*(runs[k]["constant"] for k in ("D", "D0", "D1", "C2")),
                                stamps={k: v["stamp"] for k, v in runs.items()})


def tensorization_constant(D: float, concave: bool) -> float:
    """``2 (D/log 2)^2`` in general; ``2D`` for concave J with ``D > 1``; 1 if also ``D = 1``."""
    if not math.isfinite(D):
        return INF
    if concave:
        return 1.0 if D <= 1.0 + 1e-9 else 2.0 * D
    return 2.0 * (D / LOG2) ** 2


def lem_equiv_crosscheck(consts: EquivalenceConstants, slack: float = EQUIV_SLACK) -> dict:
    """``D <= D0 D1 / log 2``, ``D0 <= D / log 2`` and ``D1 <= D``, each with 5% slack."""
    D, D0, D1 = consts.D, consts.D0, consts.D1
    rows = {
        "D<=D0*D1/log2": (D, D0 * D1 / LOG2),
        "D0<=D/log2": (D0, D / LOG2),
        "D1<=D": (D1, D),
    }
    out = {}
    for key, (lhs, rhs) in rows.items():
        ok = lhs <= rhs * (1.0 + slack)
        margin = (rhs - lhs) / rhs if math.isfinite(rhs) and rhs > 0 else INF
        out[key] = {"lhs": lhs, "rhs": rhs, "relative_margin": margin, "pass": bool(ok)}
    out["verdict"] = "pass" if all(v["pass"] for v in out.values()) else "fail"
    return out


def check_bobkov_optimal(J: Profile, atoms, weights) -> float:
    """``int J dN + int_0^1 J(N[0,t]) dt - J(int t dN)`` for a discrete N on [0, 1].

    The second integral has a piecewise-constant integrand and is summed
    exactly between sorted atoms.
    """
    x = np.asarray(atoms, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.shape != w.shape or x.size == 0:
        raise DomainError("atoms and weights must be non-empty and aligned")
    if np.any(w < 0.0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise DomainError("weights must be non-negative and sum to 1")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("atoms must lie in [0, 1]")
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    mean = float(np.dot(w, x))
    cum = np.minimum(np.cumsum(w), 1.0)
    widths = np.diff(np.append(x, 1.0))
    step = float(np.dot(np.asarray(J(cum), dtype=float), widths))
    return float(np.dot(w, np.asarray(J(x), dtype=float))) + step - float(J(mean))


def bobkov_two_atom_search(J: Profile, n: int = 41) -> dict:
    """Smallest Bobkov slack over two-atom measures on a lattice."""
    g = np.linspace(0.0, 1.0, n)
    best = (INF, None)
    for x0 in g:
        for x1 in g[g > x0]:
            for p in g[1:-1]:
                s = check_bobkov_optimal(J, [x0, x1], [p, 1.0 - p])
                if s < best[0]:
                    best = (s, (float(x0), float(x1), float(p)))
    return {"min_slack": best[0], "atoms": best[1][:2], "weight": best[1][2]}


def subadditive_limit_check(J: Profile, n_steps: int = 12) -> dict:
    """Compare ``lim_{h->0+} K(h)/h`` with ``sup_t K(t)/t`` for ``K(x) = e^x J(e^-x)``.

    The two agree when K is subadditive, which the two-point inequality for J
    guarantees.  A ratio still growing at the bottom of the ladder is
    reported as an infinite limit.
    """
    def k_over_x(x):
        if x >= LOG2:                              # e^-x <= 1/2
            return J.over_t_log(-x) / x
        w = -math.expm1(-x)                        # 1 - e^-x without cancellation
        return math.exp(x) * J.reflected_over_w_log(math.log(w)) * w / x

    # the ladder runs down to h = 2^-990 because the approach can be slow
    # (a power h^(1/a - 1) for M_a); the last three rungs feed Richardson
    hs = 2.0 ** -np.arange(4.0, 991.0)
    q = np.array([k_over_x(h) for h in hs])
    _, r2 = richardson(q[-3:], hs[-3:])
    window = q[-50:]
    spread = float(window.max() - window.min())
    converged = spread <= 1e-9 * max(1.0, abs(float(q[-1])))
    growing = bool(np.all(np.diff(q[-50:]) > 0.0))
    limit = float(r2[-1]) if converged else (INF if growing else math.nan)
    xs = np.geomspace(1e-290, 60.0, 6000)
    vals = np.array([k_over_x(x) for x in xs])
    k = int(np.argmax(vals))
    # a sup reached at the smallest node of a still-growing ratio is the limit itself
    sup = INF if (k == 0 and math.isinf(limit)) else float(max(vals[k], limit if converged else -INF))
    if math.isinf(sup) and math.isinf(limit):
        gap = 0.0
    else:
        gap = sup - limit
    holds = check_two_point(J)["verdict"] == "pass"
    agree = abs(gap) <= 1e-6 * max(1.0, abs(sup)) if math.isfinite(gap) else False
    if not holds:
        verdict = "precondition-failed"
    else:
        verdict = "pass" if agree else "fail"
    return {"limit": limit, "sup": sup, "gap": gap, "argsup": float(xs[k]),
            "two_point_holds": holds, "verdict": verdict}
