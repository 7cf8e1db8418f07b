"""Geometric and h-influences of box unions, and the KKL-type lower bound on
the largest geometric influence of a monotone set.

For a set A and coordinate i the section ``A_i^z`` is constant on each cell
of the box arrangement in the other coordinates, so both influences are
finite sums over cells.  Beyond ``EXACT_DIM_CAP`` coordinates the cell sum is
replaced by Monte Carlo over z.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import optimize

from . import conditions
from .errors import DomainError, PreconditionError
from .measure1d import INF, IntervalUnion, boundary_measure_1d
from .product_space import (EXACT_DIM_CAP, ProductMeasure, RectilinearSet, arrangement_cells,
                            measure, minkowski_content_fd, section)
from .profiles import Ent, J1, Profile, half_grid, open_grid

LOG2 = math.log(2.0)
MC_SAMPLES = 10**6
# Keller's universal constant gamma is necessarily below 8 (Ent <= log 2, take
# n = 2 and t = 1/2); recorded only, never checked


def _cell_integral(pm: ProductMeasure, A: RectilinearSet, i: int,
                   integrand: Callable[[IntervalUnion], float], samples: int | None = None,
                   seed: int = 0) -> dict:
    A = A.canon()
    if pm.n != A.n:
        raise DomainError("set and measure dimensions differ")
    if not 0 <= i < A.n:
        raise DomainError(f"coordinate {i} out of range")
    if pm.n <= EXACT_DIM_CAP and samples is None:
        total = 0.0
        for point, w in arrangement_cells(pm, A, skip=i):
            total += w * integrand(section(A, i, np.delete(point, i)))
        return {"value": total, "method": "exact", "ci": 0.0}
    m = samples or MC_SAMPLES
    z = pm.sample(m, seed)
    vals = np.array([integrand(section(A, i, np.delete(row, i))) for row in z])
    return {"value": float(vals.mean()), "method": "monte-carlo",
            "ci": 1.96 * float(vals.std(ddof=1)) / math.sqrt(m)}


def geometric_influence(pm: ProductMeasure, A: RectilinearSet, i: int, **mc) -> float:
    """``int (mu_i)^+(A_i^z) dmu^(i)(z)``."""
    mu = pm.factors[i]
    return _cell_integral(pm, A, i, lambda S: boundary_measure_1d(mu, S), **mc)["value"]


def h_influence(pm: ProductMeasure, A: RectilinearSet, i: int, h: Profile | Callable,
                **mc) -> float:
    """``int h(mu_i(A_i^z)) dmu^(i)(z)``."""
    mu = pm.factors[i]
    return _cell_integral(pm, A, i, lambda S: float(h(min(1.0, S.measure(mu)))), **mc)["value"]


def influences(pm: ProductMeasure, A: RectilinearSet, h: Profile | None = None) -> list[float]:
    if h is None:
        return [geometric_influence(pm, A, i) for i in range(pm.n)]
    return [h_influence(pm, A, i, h) for i in range(pm.n)]


# ---------------------------------------------------------------- monotone sets
def upper_closure(A: RectilinearSet) -> RectilinearSet:
    """Union of the upper orthants generated by the lower corners of the boxes."""
    A = A.canon()
    return RectilinearSet(A.n, tuple(tuple((lo, INF) for lo, _ in b) for b in A.boxes)).canon()


def is_monotone(A: RectilinearSet) -> bool:
    """True when A is increasing up to a null set.

    The generated upper orthants may meet the complement of A only in boxes
    of zero volume.
    """
    A = A.canon()
    if not A.boxes:
        return True
    extra = upper_closure(A).intersection(A.complement())
    return not any(all(hi > lo for lo, hi in b) for b in extra.boxes)


def is_monotone_grid(A: RectilinearSet, lo: float = -4.0, hi: float = 4.0, m: int = 9) -> bool:
    """Brute-force oracle: on a lattice, membership never drops along a coordinate step.

    Lattice points avoid box endpoints by a small offset so closedness does
    not matter.
    """
    axis = np.linspace(lo, hi, m) + 1e-7
    for idx in np.ndindex(*([m] * A.n)):
        x = axis[list(idx)]
        if not A.contains(x):
            continue
        for j in range(A.n):
            if idx[j] + 1 < m:
                y = x.copy()
                y[j] = axis[idx[j] + 1]
                if not A.contains(y):
                    return False
    return True


def monotone_perimeter_identity(pm: ProductMeasure, A: RectilinearSet) -> dict:
    """Sum of geometric influences against the finite-difference boundary measure."""
    A = A.canon()
    if not is_monotone(A):
        raise PreconditionError("set is not monotone increasing", "monotone")
    infl = influences(pm, A)
    fd = minkowski_content_fd(pm, A)
    total = float(sum(infl))
    gap = abs(total - fd["value"]) / max(abs(fd["value"]), 1e-300)
    return {"influences": infl, "sum": total, "perimeter": fd["value"],
            "fd_error": fd["error"], "relative_gap": gap}


# ------------------------------------------------------------------- entropy
def ent_inverse(y: float) -> float:
    """The s in [0, 1/2] with ``Ent(s) = y``."""
    if not 0.0 <= y <= LOG2 * (1.0 + 1e-15):
        raise DomainError("Ent^{-1} needs y in [0, log 2]")
    if y == 0.0:
        return 0.0
    if y >= LOG2:
        return 0.5
    E = Ent()
    return optimize.brentq(lambda s: float(E(s)) - y, 0.0, 0.5, xtol=1e-300, rtol=1e-15,
                           maxiter=500)


def theta(y: float) -> float:
    """``y / (2 log(1/y))``.

    Below ``Ent^{-1}(y)`` only for ``y`` up to about 0.0694; above that it
    exceeds it (``theta(0.3) = 0.1246 > Ent^{-1}(0.3) = 0.0889``).
    """
    return y / (2.0 * math.log(1.0 / y))


def first_case_constant(D: float) -> float:
    return LOG2 ** 3 / (2.0 * D ** 3)


def _profile_dominates(pm: ProductMeasure, J: Profile, tol: float = 1e-9) -> float:
    """Max of ``J - J_mu`` over a grid, normalized; <= tol means I_mu >= J
    (half-lines are optimal for the even log-concave factors accepted here)."""
    g = open_grid(64)
    worst = 0.0
    for mu in {id(m): m for m in pm.factors}.values():
        jm = np.asarray(mu.profile_J(g), dtype=float)
        worst = max(worst, float(np.max(np.asarray(J(g)) - jm)) / max(float(jm.max()), 1e-300))
    return worst


def kkl_bound_check(pm: ProductMeasure, A: RectilinearSet, J: Profile, D: float | None = None,
                    tol: float = 1e-6) -> dict:
    """Largest geometric influence against ``t(1-t) J(1/n)``.

    When ``min(t, 1-t) <= 1/n`` the ratio must reach ``(log 2)^3 / (2 D^3)``;
    otherwise the ratio is only reported.
    """
    A = A.canon()
    first = pm.factors[0]
    if any(m is not first for m in pm.factors):
        raise PreconditionError("factors must be identical", "identical-factors")
    if not (first.even and first.log_concave):
        raise PreconditionError("factors must be even and log-concave", "even-log-concave")
    if _profile_dominates(pm, J) > 1e-9:
        raise PreconditionError("the factor profile does not dominate J", "I>=J")
    if is_monotone(A):
        oriented = "increasing"
    elif is_monotone(A.complement()):
        oriented = "decreasing (complement used)"
    else:
        raise PreconditionError("set is not monotone", "monotone")
    if D is None:
        D = conditions.check_ratio_monotone(J, J1(), "(0,1)", "nondecreasing")
    n = pm.n
    t = measure(pm, A)
    infl = influences(pm, A)
    biggest = max(infl)
    target = t * (1.0 - t) * float(J(1.0 / n))
    ratio = biggest / target if target > 0 else INF
    first_case = min(t, 1.0 - t) <= 1.0 / n
    const = first_case_constant(D)
    report = {"measure": t, "influences": infl, "max_influence": biggest,
              "t(1-t)J(1/n)": target, "ratio": ratio, "D": D, "orientation": oriented,
              "case": "first" if first_case else "second (ratio reported only)"}
    if first_case:
        report["constant"] = const
        report["verdict"] = "pass" if ratio >= const - tol else "fail"
    else:
        report["verdict"] = "reported"
    return report


def ingredient2_check(pm: ProductMeasure, A: RectilinearSet, i: int, J: Profile, D: float) -> dict:
    """``I_i^J(A) >= J(s) / (2D)`` with ``s = Ent^{-1}(I_i^Ent(A) / 2)``.

    The hypothesis is that ``J/Ent`` is essentially non-decreasing on (0, 1/2]
    with constant at most 2D.
    """
    c = conditions.check_ratio_monotone(J, Ent(), "(0,1/2]", "nondecreasing")
    if c > 2.0 * D * (1.0 + 1e-9):
        raise PreconditionError(f"J/Ent constant {c} exceeds 2D = {2 * D}", "J/Ent<=2D")
    ent_i = h_influence(pm, A, i, Ent())
    s = ent_inverse(min(ent_i / 2.0, LOG2))
    lhs = h_influence(pm, A, i, J)
    rhs = float(J(s)) / (2.0 * D)
    return {"I_J": lhs, "I_Ent": ent_i, "s": s, "bound": rhs, "slack": lhs - rhs,
            "J/Ent_constant": c}
