"""The twelve acceptance criteria as plain functions.

Each returns a ``Result``; ``run_all`` runs them in order.  ``quick`` shrinks
sample counts (never tolerances) for a fast smoke run.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import conditions, influences, product_space, tensorize
from .measure1d import INF, double_exponential, logistic, measure_from_profile
from .product_space import ProductMeasure, RectilinearSet
from .profiles import Custom, Kbeta, Ma, MinExp, open_grid, tabulate


@dataclass
class Result:
    number: int
    title: str
    passed: bool
    seconds: float = 0.0
    budget: float | None = None
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g} s)" if self.budget else ""
        return f"[{mark}] criterion {self.number:2d}: {self.title} [{self.seconds:.2f} s{budget}]"

    def as_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "seconds": self.seconds, "budget": self.budget, "details": self.details}


def _timed(number, title, budget=None):
    def wrap(fn):
        def run(quick: bool = False, seed: int = 0) -> Result:
            t0 = time.perf_counter()
            ok, details = fn(quick=quick, seed=seed)
            dt = time.perf_counter() - t0
            if budget is not None and dt >= budget:
                details["over_budget"] = True
                ok = False
            return Result(number, title, bool(ok), dt, budget, details)
        run.number = number
        run.title = title
        return run
    return wrap


@_timed(1, "profile oracles for the logistic and double exponential measures", 5.0)
def c01(quick=False, seed=0):
    t = np.linspace(0.0, 1.0, 512)
    e1 = float(np.max(np.abs(logistic().profile_J(t) - t * (1.0 - t))))
    e2 = float(np.max(np.abs(double_exponential().profile_J(t) - np.minimum(t, 1.0 - t))))
    return max(e1, e2) <= 1e-6, {"logistic_max_abs_err": e1, "dexp_max_abs_err": e2}


@_timed(2, "measure <-> profile round trip", 10.0)
def c02(quick=False, seed=0):
    g = open_grid(512)
    g = g[(g >= 1e-6) & (g <= 1.0 - 1e-6)]
    errs = {}
    for J in (Kbeta(0.0), MinExp(), tabulate(Kbeta(0.5))):
        mu = measure_from_profile(J)
        errs[J.name] = float(np.max(np.abs(mu.profile_J(g) / J(g) - 1.0)))
    return max(errs.values()) <= 1e-5, {"max_rel_err": errs}


@_timed(3, "two-point / subadditivity condition suite", 10.0)
def c03(quick=False, seed=0):
    tp = {b: conditions.check_two_point(Kbeta(b))["violation"] for b in (0.0, 0.25, 0.5, 1.0)}
    sa = {a: conditions.check_subadditive(Ma(a))["violation"] for a in (0.5, 0.6, 0.7, 0.8, 0.9)}
    sq = Custom(lambda t: t * t, "t^2")
    sq_tp = conditions.check_two_point(sq)["violation"]
    sq_sa = conditions.check_subadditive(sq)["violation"]
    ok_k = all(v <= conditions.VIOLATION_TOL for v in tp.values())
    ok_m = all(v <= conditions.VIOLATION_TOL for v in sa.values())
    ok_sq = sq_tp > 0.0 and sq_sa > 0.0
    return ok_k and ok_m and ok_sq, {
        "Kbeta_two_point": tp, "Ma_subadditive": sa, "t^2_two_point_violation": sq_tp,
        "t^2_subadditive_violation": sq_sa, "Kbeta_pass": ok_k, "Ma_pass": ok_m,
        "t^2_fails_both": ok_sq}


def _random_peetre_function(rng, m=60):
    """A positive grid function with finite Peetre constant: a random concave
    piecewise-linear function times a factor in [1, 3]."""
    t = np.sort(rng.uniform(0.01, 10.0, m))
    slopes = np.sort(rng.uniform(0.0, 2.0, 4))[::-1]
    knots = np.sort(rng.uniform(0.0, 10.0, 4))
    base = rng.uniform(0.05, 1.0) + np.array([np.sum(slopes * np.minimum(x, knots) / 4) for x in t])
    return t, base * rng.uniform(1.0, 3.0, m)


@_timed(4, "least concave majorant sandwich f <= hull <= 2 C2 f")
def c04(quick=False, seed=0):
    rng = np.random.default_rng(seed)
    worst_lo, worst_hi, used, consts = INF, INF, 0, []
    while used < 20:
        t, f = _random_peetre_function(rng)
        C2 = conditions.peetre_constant(f, t)
        if not C2 <= 10.0:
            continue
        hull = conditions.least_concave_majorant(np.column_stack([t, f]))
        h = hull(t)
        slack = 1e-12 * np.abs(f)
        worst_lo = min(worst_lo, float(np.min(h - f + slack)))
        worst_hi = min(worst_hi, float(np.min(2.0 * C2 * f - h + slack)))
        consts.append(C2)
        used += 1
    return worst_lo >= 0.0 and worst_hi >= 0.0, {
        "min_hull_minus_f": worst_lo, "min_2C2f_minus_hull": worst_hi,
        "C2_range": [min(consts), max(consts)]}


PROFILES_5_6 = (MinExp(), Kbeta(0.0), Kbeta(1.0))


@_timed(5, "equivalence constant relations (5% slack)")
def c05(quick=False, seed=0):
    out = {}
    for J in PROFILES_5_6:
        c = conditions.equivalence_constants(J)
        r = conditions.lem_equiv_crosscheck(c)
        out[J.name] = {"D": c.D, "D0": c.D0, "D1": c.D1, "verdict": r["verdict"]}
    return all(v["verdict"] == "pass" for v in out.values()), out


@_timed(6, "sup-representation sandwich")
def c06(quick=False, seed=0):
    out = {}
    for J in PROFILES_5_6:
        c = conditions.equivalence_constants(J)
        cm = tensorize.coefficient_map(J, c.D0, c.D1)
        r = tensorize.sandwich_check(J, cm)
        out[J.name] = {k: r[k] for k in ("lower_margin", "upper_margin", "factor")}
    ok = all(v["lower_margin"] >= -1e-9 and v["upper_margin"] >= -1e-9 for v in out.values())
    return ok, out


PHIS = {
    "1": lambda a: 1.0,
    "1/alpha": lambda a: 1.0 / a,
    "1-exp(-1/alpha)": lambda a: -math.expm1(-1.0 / a),
}


@_timed(7, "Phi-transform sup brackets")
def c07(quick=False, seed=0):
    ys = np.linspace(0.0, 0.5, 65)[1:]
    out = {}
    for name, phi in PHIS.items():
        C0, C1 = tensorize.phi_constants(phi)
        r = tensorize.bcr_check(phi, C0, C1, ys)
        out[name] = {"C0": C0, "C1": C1, "lower_margin": r["lower_margin"],
                     "upper_margin": r["upper_margin"]}
    ok = all(v["lower_margin"] >= -1e-9 and v["upper_margin"] >= -1e-9 for v in out.values())
    return ok, out


def _random_box(rng, n, mu):
    box = []
    for _ in range(n):
        a, b = np.sort(rng.normal(0.0, 1.5, 2))
        r = rng.random()
        if r < 0.15:
            a = -INF
        elif r < 0.3:
            b = INF
        box.append((float(a), float(b)))
    return RectilinearSet(n, (tuple(box),), True)


@_timed(8, "product-set boundary identity and exact box boundaries", 60.0)
def c08(quick=False, seed=0):
    rng = np.random.default_rng(seed)
    mu = logistic()
    pairs = 10 if quick else 50
    singles = 20 if quick else 100
    worst_rel = 0.0
    for _ in range(pairs):
        m, k = rng.integers(1, 3, 2)
        A, B = _random_box(rng, int(m), mu), _random_box(rng, int(k), mu)
        r = product_space.product_boundary_identity(ProductMeasure.power(mu, int(m)), A,
                                                    ProductMeasure.power(mu, int(k)), B)
        worst_rel = max(worst_rel, abs(r["relative_slack"]))
    worst_ratio = 0.0
    misses = 0
    for _ in range(singles):
        n = int(rng.integers(1, 4))
        A = _random_box(rng, n, mu)
        pm = ProductMeasure.power(mu, n)
        ex = product_space.box_boundary_exact(pm, A.boxes[0])["value"]
        fd = product_space.minkowski_content_fd(pm, A)
        dev = abs(ex - fd["value"])
        worst_ratio = max(worst_ratio, dev / fd["error"])
        misses += dev > fd["error"]
    return worst_rel <= 1e-4 and misses == 0, {
        "max_relative_slack": worst_rel, "max_exact_fd_deviation_over_error": worst_ratio,
        "boxes_outside_fd_error": misses}


@_timed(9, "numeric upper search never beats the certificate", 120.0)
def c09(quick=False, seed=0):
    mu = logistic()
    K0 = Kbeta(0.0)
    cert = tensorize.certified_lower_bound(K0)
    rows = []
    ok = True
    ns = (2,) if quick else (2, 3)
    for n in ns:
        pm = ProductMeasure.power(mu, n)
        for t in (0.1, 0.25, 0.5):
            bound = float(cert(t))
            for fam, k in (("halfspaces", 0), ("quadrants", 0), ("staircase", 2)):
                v, _ = product_space.profile_upper_search(pm, t, fam, k)
                good = v >= bound * (1.0 - 1e-9)
                if fam == "halfspaces":
                    good = good and abs(v - float(K0(t))) <= 1e-4
                ok &= good
                rows.append({"n": n, "t": t, "family": fam, "value": v, "bound": bound,
                             "pass": bool(good)})
    return ok, {"cD": cert.cD, "rows": rows}


def _staircase(mu, n, t):
    """Two upper orthants, shifted together to measure t."""
    base = np.zeros((2, n))
    base[:, 0] = [-0.6, 0.6]
    base[:, 1] = [0.6, -0.6]
    pm = ProductMeasure.power(mu, n)
    from scipy import optimize
    build = lambda s: RectilinearSet(n, tuple(tuple((float(x + s), INF) for x in c)
                                              for c in base)).canon()
    s = optimize.brentq(lambda s: product_space.measure(pm, build(s)) - t, -20.0, 20.0,
                        xtol=1e-13)
    return build(s)


def _orthant(mu, n, t):
    q = float(mu.quantile(1.0 - t ** (1.0 / n)))
    return RectilinearSet.box(*[(q, INF)] * n)


@_timed(10, "influences: perimeter identity and first-case KKL constant", 60.0)
def c10(quick=False, seed=0):
    mu = logistic()
    K0 = Kbeta(0.0)
    D = conditions.check_ratio_monotone(K0, "J1", "(0,1)", "nondecreasing")
    gaps, kkl = [], []
    ok = True
    for n in (2, 3):
        pm = ProductMeasure.power(mu, n)
        for t in (0.1, 0.2, 0.3, 0.6):
            for name, A in (("orthant", _orthant(mu, n, t)), ("staircase", _staircase(mu, n, t))):
                r = influences.monotone_perimeter_identity(pm, A)
                ok &= r["relative_gap"] <= 1e-3
                gaps.append({"n": n, "t": t, "set": name, "gap": r["relative_gap"]})
                if t <= 1.0 / n:
                    k = influences.kkl_bound_check(pm, A, K0, D)
                    ok &= k["verdict"] == "pass"
                    kkl.append({"n": n, "t": t, "set": name, "ratio": k["ratio"],
                                "constant": k["constant"]})
    return ok, {"D": D, "perimeter_gaps": gaps, "kkl": kkl}


def _random_f(rng):
    m = int(rng.integers(2, 6))
    x = np.sort(rng.uniform(-6.0, 6.0, m))
    while np.any(np.diff(x) <= 0.0):
        x = np.sort(rng.uniform(-6.0, 6.0, m))
    if rng.random() < 0.5:                    # monotone ramp between two levels
        lo, hi = np.sort(rng.uniform(0.0, 1.0, 2))
        return tensorize.PiecewiseLinear(x[[0, -1]], np.array([lo, hi]))
    return tensorize.PiecewiseLinear(x, rng.uniform(0.0, 1.0, m))


@_timed(11, "Beckner-type and phi-entropy subadditivity checks", 60.0)
def c11(quick=False, seed=0):
    rng = np.random.default_rng(seed)
    mu = logistic()
    K0 = Kbeta(0.0)
    ramps = 100 if quick else 1000
    beck = {}
    for a in (0.5, 0.75, 1.0):
        c = tensorize.beckner_constant(K0, a)
        beck[a] = min(tensorize.beckner_check(mu, a, c, _random_f(rng)) for _ in range(ramps))
    trials = 1000 if quick else 10_000
    lo = {}
    for a in (0.5, 0.75):
        Z = rng.uniform(0.0, 1.0, (trials, 8, 8)) ** rng.uniform(0.5, 3.0)
        w1, w2 = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
        lo[a] = float(np.min(tensorize.lo_check(a, Z, w1, w2)))
    ok = all(v >= -1e-9 for v in beck.values()) and all(v >= -1e-12 for v in lo.values())
    return ok, {"beckner_min_slack": beck, "lo_min_slack": lo}


@_timed(12, "infinite-product envelopes between alpha*MinExp and the beta cap")
def c12(quick=False, seed=0):
    out = {}
    for J in (MinExp(), Kbeta(0.0), Kbeta(0.5), Kbeta(1.0)):
        cert = tensorize.certified_lower_bound(J)
        I = tabulate(J)
        env = tensorize.infdim_upper_envelope(I, iterations=8 if quick else 20)
        out[J.name] = tensorize.envelope_bounds(cert, I, env)
    return all(v["verdict"] == "pass" for v in out.values()), out


CRITERIA = (c01, c02, c03, c04, c05, c06, c07, c08, c09, c10, c11, c12)


def run_all(quick: bool = False, seed: int = 0, only=None) -> list[Result]:
    picked = [c for c in CRITERIA if only is None or c.number in only]
    return [c(quick=quick, seed=seed) for c in picked]
