"""Named profile functions on [0, 1] and their combinations.

Every profile is a vectorized callable ``t -> value`` with ``value(0) == 0``.
Besides plain evaluation each profile can report ``J(t)/t`` from ``log t``,
which lets the Phi-transform reach arguments whose ``t`` underflows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._numerics import golden_max
from .errors import DomainError

TINY = 1e-300
LOG3 = math.log(3.0)

KINDS = ("J0", "J1", "Kbeta", "Ma", "Ent", "MinExp")


def _as_unit(t):
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("profile argument must lie in [0, 1]")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def xlog1x(t):
    """``t log(1/t)`` with the limit 0 hard-coded below 1e-300."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t < TINY, 1.0, t)
    return np.where(t < TINY, 0.0, -safe * np.log(safe))


def _power_gap(p, a):
    """``p - p**(1/a)`` computed without cancellation for small exponents."""
    p = np.asarray(p, dtype=float)
    alpha = 1.0 / a - 1.0
    safe = np.where(p > 0.0, p, 1.0)
    return np.where(p > 0.0, -safe * np.expm1(alpha * np.log(safe)), 0.0)


def power_gap(p, a):
    return _out(_power_gap(p, a), p)


def ma_value(p, a):
    """``M_a(p) = max(p - p^(1/a), 1 - p - (1 - p)^(1/a))``."""
    p = np.asarray(p, dtype=float)
    return np.maximum(_power_gap(p, a), _power_gap(1.0 - p, a))


class Profile:
    """Base class; subclasses implement ``_eval`` on arrays in [0, 1]."""

    name = "profile"

    def __call__(self, t):
        arr = _as_unit(t)
        return _out(self._eval(arr), t)

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def over_t_log(self, logt: float) -> float:
        """``J(t)/t`` for ``t = exp(logt) <= 1/2``."""
        t = math.exp(logt)
        if t <= 0.0:
            raise DomainError(f"{self.name}: J(t)/t unavailable for log t = {logt}")
        return float(self._eval(np.array(t))) / t

    #: whether ``reflected_over_w_log`` keeps precision for tiny ``w``
    precise_reflection = False

    def reflected_over_w_log(self, logw: float) -> float:
        """``J(1 - w)/w`` for ``w = exp(logw) <= 1/2``."""
        w = math.exp(logw)
        return float(self._eval(np.array(1.0 - w))) / w

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


@dataclass(frozen=True, repr=False)
class CatalogProfile(Profile):
    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.kind == "Kbeta" and not (self.param is not None and 0.0 <= self.param <= 1.0):
            raise DomainError("Kbeta needs beta in [0, 1]")
        if self.kind == "Ma" and not (self.param is not None and 0.5 <= self.param <= 1.0):
            raise DomainError("Ma needs a in [1/2, 1]")

    @property
    def name(self):
        return self.kind if self.param is None else f"{self.kind}:{self.param:g}"

    def _eval(self, t):
        k = self.kind
        if k == "J0":
            return t.copy()
        if k == "J1":
            return xlog1x(t)
        if k == "MinExp":
            return np.minimum(t, 1.0 - t)
        if k == "Ent":
            return xlog1x(t) + xlog1x(1.0 - t)
        if k == "Ma":
            return ma_value(t, self.param)
        # Kbeta; the constant 3 keeps the logarithm >= log 12 > 0
        q = t * (1.0 - t)
        safe = np.where(q < TINY, 1.0, q)
        return np.where(q < TINY, 0.0, safe * np.log(3.0 / safe) ** self.param)

    def over_t_log(self, logt):
        k = self.kind
        t = math.exp(logt)
        if k in ("J0", "MinExp"):
            return 1.0
        if k == "J1":
            return -logt
        if k == "Kbeta":
            return (1.0 - t) * (LOG3 - logt - math.log1p(-t)) ** self.param
        if k == "Ent":
            tail = 1.0 if t == 0.0 else (1.0 - t) * (-math.log1p(-t)) / t
            return -logt + tail
        alpha = 1.0 / self.param - 1.0
        left = -math.expm1(alpha * logt)
        right = alpha if t == 0.0 else (1.0 - t) * (-math.expm1(alpha * math.log1p(-t))) / t
        return max(left, right)

    precise_reflection = True

    def reflected_over_w_log(self, logw):
        w = math.exp(logw)
        if self.kind == "J0":
            return (1.0 - w) / w
        if self.kind == "J1":
            return (1.0 - w) * (1.0 if w == 0.0 else -math.log1p(-w) / w)
        return self.over_t_log(logw)


def J0():
    return CatalogProfile("J0")


def J1():
    return CatalogProfile("J1")


def Ent():
    return CatalogProfile("Ent")


def MinExp():
    return CatalogProfile("MinExp")


def Kbeta(beta: float):
    return CatalogProfile("Kbeta", float(beta))


def Ma(a: float):
    return CatalogProfile("Ma", float(a))


@dataclass(frozen=True, repr=False)
class Tabulated(Profile):
    """Piecewise-linear profile through ``(t[i], values[i])``.

    Linear interpolation has error ``h^2 max|J''| / 8`` on a mesh of width h.
    """

    t: np.ndarray
    values: np.ndarray
    name: str = "tabulated"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise DomainError("tabulated profile needs matching 1-D arrays")
        if np.any(np.diff(t) <= 0.0):
            raise DomainError("tabulated grid must be strictly increasing")
        if t[0] < 0.0 or t[-1] > 1.0:
            raise DomainError("tabulated grid must lie in [0, 1]")
        if np.any(v < 0.0):
            raise DomainError("profile values must be non-negative")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    def _eval(self, t):
        return np.interp(t, self.t, self.values)

    def over_t_log(self, logt):
        t = math.exp(logt)
        first = 1 if self.t[0] == 0.0 else 0
        t1 = self.t[first]
        if t < t1 and self.t[0] == 0.0 and self.values[0] == 0.0:
            return float(self.values[1] / t1)
        return super().over_t_log(logt)


@dataclass(frozen=True, repr=False)
class ScaledSym(Profile):
    """``scale * base(min(t, 1 - t))`` (or without the fold if ``symmetrize`` is off)."""

    base: Profile
    scale: float = 1.0
    symmetrize: bool = True

    @property
    def name(self):
        return f"{self.scale:g}*sym({self.base.name})" if self.symmetrize else f"{self.scale:g}*{self.base.name}"

    def _eval(self, t):
        s = np.minimum(t, 1.0 - t) if self.symmetrize else t
        return self.scale * np.asarray(self.base(s), dtype=float)

    def over_t_log(self, logt):
        return self.scale * self.base.over_t_log(logt)


@dataclass(frozen=True, repr=False)
class Custom(Profile):
    """Wrap an arbitrary vectorized callable."""

    fn: Callable = field(compare=False)
    name: str = "custom"

    def _eval(self, t):
        return np.asarray(self.fn(t), dtype=float) * np.ones_like(t)


def default_a_nodes(n: int = 64, a_max: float = 1.0 - 1e-6) -> np.ndarray:
    """Nodes on [1/2, a_max], evenly spaced in log(1/a - 1) so a -> 1 is resolved."""
    alpha = np.geomspace(1.0, 1.0 / a_max - 1.0, n)
    a = 1.0 / (1.0 + alpha)
    a[0] = 0.5
    return a


@dataclass(frozen=True, repr=False)
class SupProfile(Profile):
    """``L(t) = sup_a c(a) B_a(t)`` over ``a`` in [1/2, 1).

    ``B_a`` is ``M_a`` (symmetric form) or, with ``one_sided``, ``t - t^(1/a)``.
    The sup is taken over ``a_nodes`` and refined by golden section on the
    bracket around the best node; ties go to the smaller ``a``.
    """

    coeff: Callable = field(compare=False)
    a_nodes: np.ndarray = field(default_factory=default_a_nodes)
    one_sided: bool = False
    name: str = "sup"

    def __post_init__(self):
        a = np.asarray(self.a_nodes, dtype=float)
        if a.size == 0:
            raise DomainError("sup profile needs a non-empty a-grid")
        if np.any(a < 0.5) or np.any(a > 1.0) or np.any(np.diff(a) <= 0.0):
            raise DomainError("a-grid must be increasing inside [1/2, 1]")
        object.__setattr__(self, "a_nodes", a)
        c = np.array([float(self.coeff(x)) for x in a])
        if np.any(c < 0.0):
            raise DomainError("coefficients must be non-negative")
        object.__setattr__(self, "_c_nodes", c)

    def _basis(self, t, a):
        if self.one_sided:
            return _power_gap(t, a)
        return ma_value(t, a)

    def _eval(self, t):
        flat = np.atleast_1d(t).ravel()
        a = self.a_nodes
        table = self._c_nodes[None, :] * np.stack([self._basis(flat, x) for x in a], axis=1)
        k = np.argmax(table, axis=1)
        best = table[np.arange(flat.size), k]
        if a.size > 1:
            for j, tj in enumerate(flat):
                if best[j] <= 0.0:
                    continue
                lo = a[max(k[j] - 1, 0)]
                hi = a[min(k[j] + 1, a.size - 1)]
                g = lambda x, tj=tj: float(self.coeff(x)) * float(self._basis(tj, x))
                _, val = golden_max(g, lo, hi, tol=1e-12)
                best[j] = max(best[j], val)
        return best.reshape(np.shape(t))

    def over_t_log(self, logt):
        # for t <= 1/2 the branch t - t^(1/a) dominates in M_a
        def g(x):
            return float(self.coeff(x)) * -math.expm1((1.0 / x - 1.0) * logt)

        vals = self._c_nodes * -np.expm1((1.0 / self.a_nodes - 1.0) * logt)
        k = int(np.argmax(vals))
        best = float(vals[k])
        if best > 0.0 and self.a_nodes.size > 1:
            lo = self.a_nodes[max(k - 1, 0)]
            hi = self.a_nodes[min(k + 1, self.a_nodes.size - 1)]
            best = max(best, golden_max(g, lo, hi, tol=1e-12)[1])
        return best


def sup_profile(c_map, t, a_nodes=None, one_sided: bool = False):
    """Evaluate ``sup_a c(a) M_a(t)`` for a coefficient callable."""
    nodes = default_a_nodes() if a_nodes is None else a_nodes
    return SupProfile(c_map, nodes, one_sided=one_sided)(t)


def eval_profile(p: Profile, t):
    return p(t)


def symmetry_defect(p: Profile, grid=None) -> float:
    g = default_grid() if grid is None else np.asarray(grid, dtype=float)
    # pairs summing to exactly 1, so rounding of 1 - g is not reported as a defect
    u = 1.0 - g
    return float(np.max(np.abs(np.asarray(p(1.0 - u)) - np.asarray(p(u)))))


def default_grid(n: int = 512, t_min: float = 1e-12) -> np.ndarray:
    """Grid on [0, 1]: ``n`` log-spaced nodes per side of 1/2 plus a uniform mesh.

    The log-spaced part resolves the degeneracy at 0 and 1; the uniform part
    keeps the mesh width near 1/2 at ``1/n``.
    """
    left = np.geomspace(t_min, 0.5, n)
    mid = np.linspace(0.0, 1.0, n + 1)
    g = np.concatenate([[0.0, 1.0], left, 1.0 - left, mid])
    g = np.unique(np.round(g, 15))
    return g[(g >= 0.0) & (g <= 1.0)]


def half_grid(n: int = 512, t_min: float = 1e-12) -> np.ndarray:
    """Nodes of ``default_grid`` in (0, 1/2]."""
    g = default_grid(n, t_min)
    return g[(g > 0.0) & (g <= 0.5)]


def open_grid(n: int = 512, t_min: float = 1e-12) -> np.ndarray:
    """Nodes of ``default_grid`` in (0, 1)."""
    g = default_grid(n, t_min)
    return g[(g > 0.0) & (g < 1.0)]


def tabulate(p: Profile, grid=None, name: str | None = None) -> Tabulated:
    g = default_grid() if grid is None else np.asarray(grid, dtype=float)
    return Tabulated(g, np.asarray(p(g), dtype=float), name=name or f"tab({p.name})")


def read_table(path, columns=("t", "J")) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames[:2]) != list(columns):
            raise DomainError(f"{path}: expected header {','.join(columns)}")
        rows = [(float(r[columns[0]]), float(r[columns[1]])) for r in reader]
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def write_table(path, x, y, columns=("t", "J")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        cols = np.column_stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)])
        for row in cols:
            w.writerow([format(v, ".17g") for v in row])


def parse_profile(expr: str) -> Profile:
    """Parse ``J0``, ``J1``, ``Kbeta:0.5``, ``Ma:0.75``, ``Ent``, ``MinExp``,
    ``file:<path.csv>`` (columns ``t,J``) or ``sup:<coeff.csv>`` (columns ``a,c``)."""
    head, _, arg = expr.partition(":")
    head = {k.lower(): k for k in ("J0", "J1", "Ent", "MinExp", "Kbeta", "Ma")}.get(head.lower(), head)
    if head in ("J0", "J1", "Ent", "MinExp") and not arg:
        return CatalogProfile(head)
    if head in ("Kbeta", "Ma"):
        try:
            value = float(arg)
        except ValueError:
            raise DomainError(f"bad parameter in profile {expr!r}") from None
        return CatalogProfile(head, value)
    if head == "file":
        t, v = read_table(arg)
        return Tabulated(t, v, name=Path(arg).stem)
    if head == "sup":
        a, c = read_table(arg, columns=("a", "c"))
        coeff = lambda x: float(np.interp(x, a, c))
        return SupProfile(coeff, a, name=f"sup({Path(arg).stem})")
    raise DomainError(f"unknown profile expression {expr!r}")
