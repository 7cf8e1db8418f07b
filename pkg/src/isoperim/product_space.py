"""Finite unions of boxes in a product of lines, under a product measure and
the max-coordinate (uniform) enlargement.

Sets are kept canonical (interiors pairwise disjoint) by a recursive slab
sweep, so measures are plain sums of products of one-dimensional masses.
Boundary measures come two ways: exactly, by summing facet contributions
over the cells of the box arrangement, and numerically, by extrapolating the
difference quotient of enlargements.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from ._numerics import richardson
from .errors import DomainError, NumericalError
from .measure1d import INF, IntervalUnion, Measure1D, boundary_measure_1d

Box = tuple  # tuple of n (lo, hi) pairs

EXACT_DIM_CAP = 4
FD_H0 = 1e-2
FD_HALVINGS = 8
FD_RTOL = 1e-5


# ------------------------------------------------------------- canonical form
def _sweep(boxes: list, dim: int, complement: bool) -> list:
    """Disjoint boxes covering the union of ``boxes`` (or its complement).

    Slabs between consecutive breakpoints of the first coordinate carry the
    recursively decomposed union of the active boxes' remaining coordinates;
    neighbouring slabs with identical contents are merged.  Zero-width slabs
    are dropped, so null pieces of the union disappear.
    """
    if dim == 0:
        return [()] if bool(boxes) != complement else []
    cuts = {b[0][0] for b in boxes} | {b[0][1] for b in boxes}
    if complement:
        cuts |= {-INF, INF}
    cuts = sorted(cuts)
    runs: list[list] = []          # [lo, hi, sub]
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        if not x0 < x1:
            continue
        active = [b[1:] for b in boxes if b[0][0] <= x0 and b[0][1] >= x1]
        sub = tuple(_sweep(active, dim - 1, complement))
        if runs and runs[-1][1] == x0 and runs[-1][2] == sub:
            runs[-1][1] = x1
        else:
            runs.append([x0, x1, sub])
    return [((lo, hi),) + s for lo, hi, sub in runs if sub for s in sub]


def _as_box(b, n) -> Box:
    box = tuple((float(lo), float(hi)) for lo, hi in b)
    if len(box) != n:
        raise DomainError(f"box has {len(box)} coordinates, expected {n}")
    for lo, hi in box:
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise DomainError(f"bad interval [{lo}, {hi}]")
    return box


@dataclass(frozen=True)
class RectilinearSet:
    """Union of closed boxes in ``n`` coordinates; ``canonical`` marks disjoint interiors."""

    n: int
    boxes: tuple = ()
    canonical: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("dimension must be at least 1")
        object.__setattr__(self, "boxes", tuple(_as_box(b, self.n) for b in self.boxes))

    @classmethod
    def box(cls, *intervals) -> "RectilinearSet":
        return cls(len(intervals), (tuple(intervals),)).canon()

    @classmethod
    def whole(cls, n: int) -> "RectilinearSet":
        return cls(n, (((-INF, INF),) * n,), canonical=True)

    @classmethod
    def empty(cls, n: int) -> "RectilinearSet":
        return cls(n, (), canonical=True)

    def canon(self) -> "RectilinearSet":
        if self.canonical:
            return self
        return RectilinearSet(self.n, tuple(_sweep(list(self.boxes), self.n, False)), True)

    def complement(self) -> "RectilinearSet":
        return RectilinearSet(self.n, tuple(_sweep(list(self.boxes), self.n, True)), True)

    def union(self, other: "RectilinearSet") -> "RectilinearSet":
        _same_dim(self, other)
        return RectilinearSet(self.n, self.boxes + other.boxes).canon()

    def intersection(self, other: "RectilinearSet") -> "RectilinearSet":
        _same_dim(self, other)
        return self.complement().union(other.complement()).complement()

    def product(self, other: "RectilinearSet") -> "RectilinearSet":
        boxes = tuple(a + b for a in self.boxes for b in other.boxes)
        return RectilinearSet(self.n + other.n, boxes, self.canonical and other.canonical)

    def lift(self, extra: int = 1) -> "RectilinearSet":
        """``A x R^extra``."""
        return self.product(RectilinearSet.whole(extra)) if extra else self

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return any(all(lo <= xi <= hi for (lo, hi), xi in zip(b, x)) for b in self.boxes)

    def to_json(self) -> dict:
        enc = lambda v: "inf" if v == INF else "-inf" if v == -INF else v
        return {"n": self.n, "boxes": [[[enc(lo), enc(hi)] for lo, hi in b] for b in self.boxes]}

    @classmethod
    def from_json(cls, obj) -> "RectilinearSet":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            n = int(obj["n"])
            boxes = [[(float(lo), float(hi)) for lo, hi in b] for b in obj["boxes"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad set literal: {exc}") from None
        return cls(n, tuple(tuple(b) for b in boxes)).canon()


def _same_dim(a, b):
    if a.n != b.n:
        raise DomainError("sets live in different dimensions")


# ------------------------------------------------------------ product measure
@dataclass(frozen=True)
class ProductMeasure:
    factors: tuple

    def __post_init__(self):
        f = tuple(self.factors)
        if not f:
            raise DomainError("product measure needs at least one factor")
        object.__setattr__(self, "factors", f)

    @classmethod
    def power(cls, mu: Measure1D, n: int) -> "ProductMeasure":
        return cls((mu,) * n)

    @property
    def n(self) -> int:
        return len(self.factors)

    def supports(self):
        return [(m.support_lo, m.support_hi) for m in self.factors]

    def box_measure(self, box: Box) -> float:
        out = 1.0
        for m, (lo, hi) in zip(self.factors, box):
            out *= m.mass(lo, hi)
            if out == 0.0:
                break
        return out

    def sample(self, size: int, seed) -> np.ndarray:
        """Inverse-CDF samples; ``seed`` is a SeedSequence or an int."""
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        streams = ss.spawn(self.n)
        cols = []
        for m, s in zip(self.factors, streams):
            u = np.random.default_rng(s).random(size)
            u = np.clip(u, 1e-300, 1.0 - 1e-16)
            cols.append(m.quantile(u))
        return np.column_stack(cols)


def _check_dims(pm: ProductMeasure, A: RectilinearSet):
    if pm.n != A.n:
        raise DomainError(f"set has dimension {A.n}, measure has {pm.n} factors")


def measure(pm: ProductMeasure, A: RectilinearSet) -> float:
    """Product measure of a box union (canonicalized first if needed)."""
    _check_dims(pm, A)
    A = A.canon()
    return min(1.0, sum(pm.box_measure(b) for b in A.boxes))


def measure_mc(pm: ProductMeasure, A: RectilinearSet, samples: int = 10**6,
               seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate and 95% half-width."""
    _check_dims(pm, A)
    x = pm.sample(samples, seed)
    inside = np.zeros(samples, dtype=bool)
    for b in A.boxes:
        lo = np.array([iv[0] for iv in b])
        hi = np.array([iv[1] for iv in b])
        inside |= np.all((x >= lo) & (x <= hi), axis=1)
    p = float(inside.mean())
    return p, 1.96 * math.sqrt(max(p * (1.0 - p), 1e-300) / samples)


def enlarge(A: RectilinearSet, h: float, pm: ProductMeasure | None = None) -> RectilinearSet:
    """Dilate every box by ``h`` in every coordinate, clipped to the supports."""
    if h <= 0.0:
        raise DomainError("enlargement radius must be positive")
    sup = pm.supports() if pm is not None else [(-INF, INF)] * A.n
    boxes = tuple(tuple((max(lo - h, s0), min(hi + h, s1)) for (lo, hi), (s0, s1) in zip(b, sup))
                  for b in A.boxes)
    return RectilinearSet(A.n, boxes).canon()


# ---------------------------------------------------------------- boundaries
def box_boundary_exact(pm: ProductMeasure, box) -> dict:
    """``sum_i (f_i(a_i) + f_i(b_i)) prod_{j != i} mu_j(I_j)``, support ends omitted."""
    box = _as_box(box, pm.n)
    masses = [m.mass(lo, hi) for m, (lo, hi) in zip(pm.factors, box)]
    total = 0.0
    for i, (m, (lo, hi)) in enumerate(zip(pm.factors, box)):
        others = math.prod(masses[:i] + masses[i + 1:])
        dens = sum(m._pdf1(x) for x in (lo, hi) if m.support_lo < x < m.support_hi)
        total += dens * others
    return {"value": total, "degenerate": any(lo == hi for lo, hi in box)}


def arrangement_cells(pm: ProductMeasure, A: RectilinearSet, skip: int | None = None):
    """Yield ``(point, weight)`` for the cells of the box arrangement.

    Coordinates other than ``skip`` are cut at every box endpoint; ``point``
    is an interior point of the cell (the skipped coordinate is NaN) and
    ``weight`` the product mass of the cell over those coordinates.
    """
    axes = []
    for j, m in enumerate(pm.factors):
        if j == skip:
            axes.append([(math.nan, math.nan, 1.0)])
            continue
        cuts = sorted({m.support_lo, m.support_hi}
                      | {x for b in A.boxes for x in b[j] if m.support_lo < x < m.support_hi})
        cells = []
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            w = m.mass(x0, x1)
            if w > 0.0:
                cells.append((_interior_point(x0, x1), w, None))
        axes.append([(p, w, None) for p, w, _ in cells])
    for combo in itertools.product(*axes):
        point = np.array([c[0] for c in combo])
        weight = math.prod(c[1] if not math.isnan(c[0]) else 1.0 for c in combo)
        yield point, weight


def _interior_point(x0: float, x1: float) -> float:
    if math.isinf(x0) and math.isinf(x1):
        return 0.0
    if math.isinf(x0):
        return x1 - 1.0
    if math.isinf(x1):
        return x0 + 1.0
    return 0.5 * (x0 + x1)


def section(A: RectilinearSet, i: int, z) -> IntervalUnion:
    """Intervals ``{y : (z_1..z_{i-1}, y, z_i..) in A}``; ``z`` has ``n - 1`` entries."""
    z = list(np.asarray(z, dtype=float).ravel())
    if not 0 <= i < A.n or len(z) != A.n - 1:
        raise DomainError("bad coordinate or point for a section")
    full = z[:i] + [math.nan] + z[i:]
    ivs = [b[i] for b in A.boxes
           if all(lo <= full[j] <= hi for j, (lo, hi) in enumerate(b) if j != i)]
    return IntervalUnion.merged(ivs)


def _section_at(A, i, point):
    return section(A, i, np.delete(point, i))


def boundary_exact(pm: ProductMeasure, A: RectilinearSet) -> float:
    """Sum over coordinates of the averaged boundary measure of the sections.

    For a union of boxes this is the integral of the density over the facets,
    each weighted by the l1 norm of its (axis-aligned) normal, i.e. 1.
    """
    _check_dims(pm, A)
    A = A.canon()
    total = 0.0
    for i, m in enumerate(pm.factors):
        for point, w in arrangement_cells(pm, A, skip=i):
            total += w * boundary_measure_1d(m, _section_at(A, i, point))
    return total


def minkowski_content_fd(pm: ProductMeasure, A: RectilinearSet, h0: float = FD_H0,
                         halvings: int = FD_HALVINGS, rtol: float = FD_RTOL) -> dict:
    """Richardson-extrapolated ``(mu(A_h) - mu(A))/h`` on ``h = h0 2^-k``."""
    _check_dims(pm, A)
    if halvings < 3:
        raise DomainError("comparing two second-order extrapolants needs three halvings")
    A = A.canon()
    base = measure(pm, A)
    hs = h0 * 2.0 ** -np.arange(halvings + 1)
    q = np.array([(measure(pm, enlarge(A, h, pm)) - base) / h for h in hs])
    r1, r2 = richardson(q, hs)
    value = float(r2[-1])
    diff = abs(float(r2[-1] - r2[-2]))
    floor = 64.0 * np.finfo(float).eps * (1.0 + abs(base)) / hs[-1]
    err = diff + floor
    if diff > rtol * abs(value) + floor:
        raise NumericalError("difference quotient did not settle", achieved_tol=diff,
                             diagnostics={"quotients": q.tolist(), "order2": r2.tolist()})
    return {"value": value, "error": err, "quotients": q, "h": hs}


def product_boundary_identity(pmA: ProductMeasure, A: RectilinearSet,
                              pmB: ProductMeasure, B: RectilinearSet) -> dict:
    """``(mu^{m+n})+(A x B)`` (finite differences) against
    ``(mu^m)+(A) mu^n(B) + mu^m(A) (mu^n)+(B)`` (exact factor boundaries)."""
    A, B = A.canon(), B.canon()
    pm = ProductMeasure(pmA.factors + pmB.factors)
    prod = minkowski_content_fd(pm, A.product(B))
    mA, mB = measure(pmA, A), measure(pmB, B)
    bA, bB = boundary_exact(pmA, A), boundary_exact(pmB, B)
    rhs = bA * mB + mA * bB
    slack = rhs - prod["value"]
    return {"product_boundary": prod["value"], "fd_error": prod["error"], "rhs": rhs,
            "slack": slack, "relative_slack": slack / rhs if rhs > 0 else slack,
            "factor_boundaries": [bA, bB], "factor_measures": [mA, mB]}


# ------------------------------------------------------------- upper search
FAMILIES = ("halfspaces", "quadrants", "boxes", "staircase")


def _softmax(v):
    e = np.exp(v - np.max(v))
    return e / e.sum()


def _sigmoid(v):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(v, dtype=float)))


def _halfspaces(pm: ProductMeasure, t: float):
    for i, m in enumerate(pm.factors):
        lower = [(-INF, INF)] * pm.n
        lower[i] = (-INF, float(m.quantile(t)))
        upper = [(-INF, INF)] * pm.n
        upper[i] = (float(m.quantile(1.0 - t)), INF)
        yield RectilinearSet(pm.n, (tuple(lower),), True)
        yield RectilinearSet(pm.n, (tuple(upper),), True)


def _orthant(pm, coords, masses, upper: bool) -> RectilinearSet:
    box = [(-INF, INF)] * pm.n
    for j, p in zip(coords, masses):
        m = pm.factors[j]
        if p >= 1.0:
            continue
        box[j] = (float(m.quantile(1.0 - p)), INF) if upper else (-INF, float(m.quantile(p)))
    return RectilinearSet(pm.n, (tuple(box),), True)


def _nm(fun, starts, maxiter=400):
    best = None
    for x0 in starts:
        res = optimize.minimize(fun, x0, method="Nelder-Mead",
                                options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": maxiter})
        if best is None or res.fun < best.fun - 1e-15:
            best = res
    return best


def _search_quadrants(pm, t):
    """Orthants over ``k >= 2`` coordinates with masses ``t^{w_j}``, w on the simplex,
    in both orientations, and complements of orthants of measure ``1 - t``."""
    results = []
    for k in range(2, pm.n + 1):
        for coords in itertools.combinations(range(pm.n), k):
            for upper in (False, True):
                for comp in (False, True):
                    target = 1.0 - t if comp else t

                    def build(v, coords=coords, upper=upper, comp=comp, target=target):
                        w = _softmax(np.append(v, 0.0))
                        A = _orthant(pm, coords, target ** w, upper)
                        return A.complement() if comp else A

                    fun = lambda v, build=build: boundary_exact(pm, build(v))
                    starts = [np.zeros(k - 1)]
                    res = _nm(fun, starts)
                    results.append((float(res.fun), build(res.x)))
    return results


def _search_boxes(pm, t):
    n = pm.n

    def build(v):
        w = _softmax(np.append(v[: n - 1], 0.0))
        split = _sigmoid(v[n - 1:])
        box = []
        for m, wj, s in zip(pm.factors, w, split):
            p = t ** wj
            left = s * (1.0 - p)
            lo = -INF if left <= 0.0 else float(m.quantile(left))
            right = left + p
            hi = INF if right >= 1.0 else float(m.quantile(right))
            box.append((lo, hi))
        return RectilinearSet(n, (tuple(box),), True)

    fun = lambda v: boundary_exact(pm, build(v))
    starts = [np.zeros(2 * n - 1), np.concatenate([np.zeros(n - 1), np.full(n, 3.0)])]
    res = _nm(fun, starts)
    return [(float(res.fun), build(res.x))]


def _staircase_set(pm, corners) -> RectilinearSet:
    corners = sorted(tuple(c) for c in corners)      # lexicographic order
    boxes = tuple(tuple((float(x), INF) for x in c) for c in corners)
    return RectilinearSet(pm.n, boxes).canon()


def _search_staircase(pm, t, k: int):
    """Unions of ``k`` upper orthants; the corners are free up to a common
    diagonal shift chosen by root-finding so the measure equals ``t``."""
    n = pm.n

    def shifted(v, target):
        base = np.asarray(v, dtype=float).reshape(k, n)
        g = lambda s: measure(pm, _staircase_set(pm, base + s)) - target
        lo, hi = -1.0, 1.0
        while g(lo) < 0.0:
            lo *= 2.0
            if lo < -1e6:
                raise DomainError("staircase cannot reach the target measure")
        while g(hi) > 0.0:
            hi *= 2.0
            if hi > 1e6:
                raise DomainError("staircase cannot reach the target measure")
        s = optimize.brentq(g, lo, hi, xtol=1e-13, rtol=1e-14)
        return _staircase_set(pm, base + s)

    results = []
    for comp in (False, True):
        target = 1.0 - t if comp else t

        def build(v, comp=comp, target=target):
            A = shifted(v, target)
            return A.complement() if comp else A

        fun = lambda v, build=build: boundary_exact(pm, build(v))
        # antichain start: corners spread along an anti-diagonal of the first two axes
        spread = np.linspace(-1.0, 1.0, k)
        start = np.zeros((k, n))
        start[:, 0] = spread
        start[:, 1 % n] = -spread
        res = _nm(fun, [start.ravel()], maxiter=60 * k * n)
        results.append((float(res.fun), build(res.x)))
    return results


def profile_upper_search(pm: ProductMeasure, t: float, family: str = "halfspaces",
                         k: int = 2) -> tuple[float, RectilinearSet]:
    """Smallest exact boundary measure found in a family of sets of measure ``t``.

    This is an upper bound on the product profile at ``t``.
    """
    if not 0.0 < t < 1.0:
        raise DomainError("t must lie in (0, 1)")
    if family == "halfspaces":
        cands = [(boundary_exact(pm, A), A) for A in _halfspaces(pm, t)]
    elif family == "quadrants":
        if pm.n < 2:
            raise DomainError("quadrants need at least two coordinates")
        cands = _search_quadrants(pm, t)
    elif family == "boxes":
        cands = _search_boxes(pm, t)
    elif family == "staircase":
        if pm.n < 2 or k < 1:
            raise DomainError("staircase needs n >= 2 and k >= 1")
        cands = _search_staircase(pm, t, k)
    else:
        raise DomainError(f"unknown family {family!r}")
    for value, A in cands:
        if abs(measure(pm, A) - t) > 1e-8:
            raise DomainError(f"{family}: witness misses the target measure")
    value, A = min(cands, key=lambda c: c[0])
    return float(value), A


def parse_family(name: str) -> tuple[str, int]:
    """``halfspaces``, ``quadrants``, ``boxes`` or ``staircase(k)``."""
    if name.startswith("staircase"):
        inner = name[len("staircase"):].strip("()") or "2"
        return "staircase", int(inner)
    if name not in FAMILIES:
        raise DomainError(f"unknown family {name!r}")
    return name, 0
