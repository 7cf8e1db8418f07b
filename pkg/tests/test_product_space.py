import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoperim import DomainError, NumericalError
from isoperim import product_space as P
from isoperim.measure1d import double_exponential, gaussian, logistic, uniform
from isoperim.product_space import ProductMeasure, RectilinearSet
from isoperim.profiles import Kbeta, MinExp, ScaledSym
from isoperim.tensorize import certified_lower_bound

INF = math.inf
L2 = ProductMeasure.power(logistic(), 2)
U2 = ProductMeasure.power(uniform(), 2)


def lcdf(x):
    return 1 / (1 + math.exp(-x))


def lpdf(x):
    return lcdf(x) * (1 - lcdf(x))


# ------------------------------------------------------------------ sets and measures
def test_negative_quadrant_quarter():
    A = RectilinearSet.box((-INF, 0.0), (-INF, 0.0))
    assert P.measure(L2, A) == pytest.approx(0.25, abs=1e-15)


def test_uniform_rectangle():
    assert P.measure(U2, RectilinearSet.box((0, 0.3), (0, 0.7))) == pytest.approx(0.21, abs=1e-15)


def test_complement_measure():
    A = RectilinearSet.box((-1.0, 2.0), (0.5, INF))
    assert P.measure(L2, A.complement()) == pytest.approx(1 - P.measure(L2, A), abs=1e-14)


def test_union_inclusion_exclusion():
    A = RectilinearSet.box((0, 2), (0, 2))
    B = RectilinearSet.box((1, 3), (1, 3))
    m = lambda lo, hi: lcdf(hi) - lcdf(lo)
    want = m(0, 2) ** 2 + m(1, 3) ** 2 - m(1, 2) ** 2
    assert P.measure(L2, A.union(B)) == pytest.approx(want, abs=1e-14)
    assert P.measure(L2, A.intersection(B)) == pytest.approx(m(1, 2) ** 2, abs=1e-15)


def test_canonical_boxes_disjoint():
    A = RectilinearSet(2, (((0, 2), (0, 2)), ((1, 3), (1, 3)), ((0.5, 2.5), (-1, 0.5)))).canon()
    vol = lambda b: math.prod(hi - lo for lo, hi in b)
    for i, b in enumerate(A.boxes):
        for c in A.boxes[i + 1:]:
            inter = [(max(x[0], y[0]), min(x[1], y[1])) for x, y in zip(b, c)]
            assert any(hi <= lo for lo, hi in inter)
    # by hand: |A u B| = 4 + 4 - 1, |C| = 3, C meets only A, in [0.5,2] x [0,0.5]
    assert sum(vol(b) for b in A.boxes) == pytest.approx(7 + 3 - 0.75, rel=1e-14)


def test_json_round_trip():
    A = RectilinearSet(2, (((-INF, 0.0), (1.0, INF)), ((2.0, 3.0), (-1.0, 0.0)))).canon()
    assert RectilinearSet.from_json(A.to_json()) == A
    assert A.to_json()["boxes"][0][0][0] == "-inf"


def test_bad_json():
    with pytest.raises(DomainError):
        RectilinearSet.from_json({"n": 2})


def test_monte_carlo_measure():
    A = RectilinearSet.box((-1.0, 1.0), (0.0, INF))
    est, ci = P.measure_mc(L2, A, samples=200_000, seed=7)
    assert abs(est - P.measure(L2, A)) <= ci
    assert P.measure_mc(L2, A, samples=1000, seed=7) == P.measure_mc(L2, A, samples=1000, seed=7)


# ------------------------------------------------------------------ enlargement
def test_enlarge_box():
    E = P.enlarge(RectilinearSet.box((0, 1), (0, 1)), 0.1, L2)
    assert E.boxes == (((-0.1, 1.1), (-0.1, 1.1)),)


def test_enlarge_clips_to_support():
    E = P.enlarge(RectilinearSet.box((0, 1), (0, 1)), 0.1, U2)
    assert E.boxes == (((0.0, 1.0), (0.0, 1.0)),)


def test_enlarge_merges():
    A = RectilinearSet(1, (((0.0, 1.0),), ((1.1, 2.0),))).canon()
    assert len(A.boxes) == 2
    assert P.enlarge(A, 0.1, ProductMeasure.power(logistic(), 1)).boxes == (((-0.1, 2.1),),)


def _box_strategy(n):
    iv = st.tuples(st.floats(-3, 3), st.floats(0.01, 3)).map(lambda p: (p[0], p[0] + p[1]))
    return st.lists(st.tuples(*[iv] * n), min_size=1, max_size=3)


@given(_box_strategy(2), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_enlarge_monotone_and_semigroup(boxes, h, g):
    A = RectilinearSet(2, tuple(boxes)).canon()
    B = A.union(RectilinearSet.box((-0.5, 0.5), (-0.5, 0.5)))
    Ah, Bh = P.enlarge(A, h, L2), P.enlarge(B, h, L2)
    assert P.measure(L2, Ah.union(Bh)) == pytest.approx(P.measure(L2, Bh), abs=1e-12)
    Ahg = P.enlarge(Ah, g, L2)
    Asum = P.enlarge(A, h + g, L2)
    assert P.measure(L2, Ahg.union(Asum)) == pytest.approx(P.measure(L2, Asum), abs=1e-12)


# ------------------------------------------------------------------ boundaries
def test_fd_uniform_rectangle():
    r = P.minkowski_content_fd(U2, RectilinearSet.box((0, 0.3), (0, 0.6)))
    assert r["value"] == pytest.approx(0.9, abs=1e-9)


@pytest.mark.parametrize("t", [0.1, 0.3, 0.5])
def test_fd_halfspace_is_k0(t):
    q = math.log(t / (1 - t))
    r = P.minkowski_content_fd(L2, RectilinearSet.box((-INF, q), (-INF, INF)))
    assert r["value"] == pytest.approx(t * (1 - t), rel=1e-6)


def test_fd_whole_space():
    assert P.minkowski_content_fd(L2, RectilinearSet.whole(2))["value"] == 0.0


def test_exact_uniform_rectangle():
    assert P.box_boundary_exact(U2, ((0, 0.3), (0, 0.6)))["value"] == pytest.approx(0.9)


def test_exact_logistic_quadrant():
    x0, y0 = 0.4, -1.2
    want = lpdf(x0) * (1 - lcdf(y0)) + lpdf(y0) * (1 - lcdf(x0))
    assert P.box_boundary_exact(L2, ((x0, INF), (y0, INF)))["value"] == pytest.approx(want, rel=1e-13)


def test_degenerate_box():
    r = P.box_boundary_exact(L2, ((0.5, 0.5), (-1.0, 1.0)))
    assert r["degenerate"]
    # only the two faces x = 0.5 carry mass: 2 f(0.5) mu([-1, 1])
    assert r["value"] == pytest.approx(2 * lpdf(0.5) * (lcdf(1) - lcdf(-1)), rel=1e-13)
    assert P.measure(L2, RectilinearSet(2, (((0.5, 0.5), (-1.0, 1.0)),))) == 0.0


def test_fd_nonconvergence_raises():
    with pytest.raises(NumericalError):
        P.minkowski_content_fd(L2, RectilinearSet.box((0, 1), (0, 1)), h0=0.5, halvings=3,
                               rtol=1e-15)
    with pytest.raises(DomainError):
        P.minkowski_content_fd(L2, RectilinearSet.box((0, 1), (0, 1)), halvings=2)


@pytest.mark.parametrize("mu", [logistic(), double_exponential(), gaussian(), uniform(-1, 1)],
                         ids=lambda m: m.name)
def test_exact_vs_fd_random_boxes(mu):
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        box = []
        for _ in range(n):
            a, b = np.sort(rng.uniform(-0.9, 0.9, 2))
            box.append((float(a), float(b) + 1e-3))
        pm = ProductMeasure.power(mu, n)
        ex = P.box_boundary_exact(pm, tuple(box))["value"]
        fd = P.minkowski_content_fd(pm, RectilinearSet.box(*box))
        assert abs(ex - fd["value"]) <= fd["error"]


def test_exact_union_vs_fd():
    A = RectilinearSet(2, (((0, 2), (0, 2)), ((1, 3), (1, 3)), ((-2, -1), (-INF, 0)))).canon()
    fd = P.minkowski_content_fd(L2, A)
    assert P.boundary_exact(L2, A) == pytest.approx(fd["value"], abs=fd["error"])


def test_product_identity_boxes():
    A = RectilinearSet.box((-1.0, 0.5))
    B = RectilinearSet.box((0.0, INF), (-2.0, 1.0))
    r = P.product_boundary_identity(ProductMeasure.power(logistic(), 1), A, L2, B)
    assert abs(r["relative_slack"]) <= 1e-4


def test_product_identity_whole_line():
    A = RectilinearSet.whole(1)
    B = RectilinearSet.box((0.0, INF), (-2.0, 1.0))
    r = P.product_boundary_identity(ProductMeasure.power(logistic(), 1), A, L2, B)
    assert r["factor_boundaries"][0] == 0.0
    assert r["rhs"] == pytest.approx(P.boundary_exact(L2, B))
    assert abs(r["relative_slack"]) <= 1e-4


def test_product_identity_multibox():
    A = RectilinearSet(1, (((-2.0, -1.0),), ((0.0, 1.0),)))
    B = RectilinearSet(2, (((0, 2), (0, 2)), ((1, 3), (1, 3))))
    r = P.product_boundary_identity(ProductMeasure.power(logistic(), 1), A, L2, B)
    assert r["slack"] >= -r["fd_error"]


# ------------------------------------------------------------------ searches
@pytest.mark.parametrize("t", [0.1, 0.3, 0.5])
def test_search_one_dim(t):
    v, _ = P.profile_upper_search(ProductMeasure.power(logistic(), 1), t, "halfspaces")
    assert v == pytest.approx(t * (1 - t), rel=1e-9)


def test_quadrant_search_above_certificate():
    cert = certified_lower_bound(Kbeta(0.0))
    v, A = P.profile_upper_search(L2, 0.25, "quadrants")
    assert v >= float(cert(0.25))
    assert P.measure(L2, A) == pytest.approx(0.25, abs=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("t", [0.2, 0.5])
def test_dexp_halfspaces(n, t):
    v, _ = P.profile_upper_search(ProductMeasure.power(double_exponential(), n), t, "halfspaces")
    assert v == pytest.approx(min(t, 1 - t), rel=1e-9)


def test_lifted_witness_keeps_value():
    for fam, k in (("quadrants", 0), ("staircase", 2)):
        v, A = P.profile_upper_search(L2, 0.3, fam, k)
        L3 = ProductMeasure.power(logistic(), 3)
        lifted = A.lift()
        assert P.measure(L3, lifted) == pytest.approx(P.measure(L2, A), abs=1e-15)
        assert P.boundary_exact(L3, lifted) == pytest.approx(v, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("t", [0.1, 0.3])
def test_search_never_beats_minexp_certificate(n, t):
    # I_logistic = K0 >= MinExp / 2 on the grid, so J = MinExp/2 is admissible
    J = ScaledSym(MinExp(), 0.5)
    g = np.linspace(0.001, 0.999, 999)
    assert np.all(Kbeta(0.0)(g) >= J(g) - 1e-15)
    cert = certified_lower_bound(J)
    pm = ProductMeasure.power(logistic(), n)
    for fam in ("halfspaces", "quadrants", "staircase"):
        v, _ = P.profile_upper_search(pm, t, fam, 2)
        assert v >= float(cert(t))


def test_search_errors():
    with pytest.raises(DomainError):
        P.profile_upper_search(L2, 1.0, "halfspaces")
    with pytest.raises(DomainError):
        P.profile_upper_search(L2, 0.3, "spheres")


def test_parse_family():
    assert P.parse_family("staircase(3)") == ("staircase", 3)
    assert P.parse_family("quadrants") == ("quadrants", 0)
