import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoperim import DomainError, PreconditionError
from isoperim import influences as F
from isoperim.measure1d import logistic
from isoperim.product_space import ProductMeasure, RectilinearSet, measure, section
from isoperim.profiles import Ent, J1, Kbeta

INF = math.inf
MU = logistic()
L2 = ProductMeasure.power(MU, 2)
K0 = Kbeta(0.0)


def lcdf(x):
    return 1 / (1 + math.exp(-x))


def lpdf(x):
    return lcdf(x) * (1 - lcdf(x))


def staircase(n=2):
    boxes = [((-0.6, INF), (0.6, INF)) + ((0.0, INF),) * (n - 2),
             ((0.6, INF), (-0.6, INF)) + ((0.0, INF),) * (n - 2)]
    return RectilinearSet(n, tuple(boxes)).canon()


def test_section_of_quadrant():
    A = RectilinearSet.box((0.3, INF), (-1.0, INF))
    assert section(A, 0, [0.5]).intervals == ((0.3, INF),)
    assert section(A, 0, [-2.0]).intervals == ()


def test_whole_space_has_no_influence():
    assert F.influences(L2, RectilinearSet.whole(2)) == [0.0, 0.0]


def test_zero_h_influence():
    A = RectilinearSet.box((0.3, INF), (-1.0, INF))
    assert F.h_influence(L2, A, 0, lambda s: 0.0) == 0.0


def test_quadrant_influence_closed_form():
    x0, y0 = 0.3, -1.0
    A = RectilinearSet.box((x0, INF), (y0, INF))
    got = F.influences(L2, A)
    assert got[0] == pytest.approx(lpdf(x0) * (1 - lcdf(y0)), rel=1e-13)
    assert got[1] == pytest.approx(lpdf(y0) * (1 - lcdf(x0)), rel=1e-13)


def test_monte_carlo_beyond_exact_cap():
    n = 5
    q = float(MU.quantile(0.7))
    A = RectilinearSet.box(*[(q, INF)] * n)
    pm = ProductMeasure.power(MU, n)
    want = lpdf(q) * 0.3 ** (n - 1)
    r = F._cell_integral(pm, A, 0, lambda S: F.boundary_measure_1d(MU, S), samples=40_000, seed=1)
    assert r["method"] == "monte-carlo"
    assert abs(r["value"] - want) <= r["ci"] + 1e-12


# ------------------------------------------------------------------ perimeter identity
def test_quadrant_identity():
    A = RectilinearSet.box((0.3, INF), (-1.0, INF))
    assert F.monotone_perimeter_identity(L2, A)["relative_gap"] <= 1e-4


@pytest.mark.parametrize("n", [2, 3])
def test_staircase_identity(n):
    pm = ProductMeasure.power(MU, n)
    assert F.monotone_perimeter_identity(pm, staircase(n))["relative_gap"] <= 1e-3


def test_halfspace_identity():
    A = RectilinearSet.box((0.2, INF), (-INF, INF))
    r = F.monotone_perimeter_identity(L2, A)
    assert abs(r["sum"] - r["perimeter"]) <= r["fd_error"]


def test_non_monotone_rejected():
    with pytest.raises(PreconditionError):
        F.monotone_perimeter_identity(L2, RectilinearSet.box((0, 1), (0, 1)))


# corners on the oracle lattice (step 0.5) so every box edge is resolved
_LATTICE = st.integers(-6, 6).map(lambda k: k / 2.0)


@given(st.lists(st.tuples(_LATTICE, _LATTICE), min_size=1, max_size=3), st.booleans())
def test_structural_monotone_matches_grid_oracle(corners, bounded):
    hi = 2.0 if bounded else INF
    A = RectilinearSet(2, tuple(((x, max(hi, x + 1.0)), (y, INF)) for x, y in corners)).canon()
    assert F.is_monotone(A) == F.is_monotone_grid(A, -4.0, 4.0, 17)


# ------------------------------------------------------------------ entropy helpers
def test_ent_inverse_ends():
    assert F.ent_inverse(math.log(2.0)) == 0.5
    assert F.ent_inverse(0.0) == 0.0


def test_ent_inverse_solves():
    s = F.ent_inverse(0.3)
    assert float(Ent()(s)) == pytest.approx(0.3, abs=1e-14)
    assert 0 < s < 0.5


def test_theta_at_03():
    assert F.theta(0.3) <= F.ent_inverse(0.3)


def test_theta_below_ent_inverse_on_half_interval():
    ys = np.linspace(0.0, 0.5, 201)[1:]
    bad = [y for y in ys if F.theta(y) > F.ent_inverse(y)]
    assert not bad, f"theta exceeds Ent^-1 on [{min(bad):.4f}, {max(bad):.4f}]"


def test_theta_below_ent_inverse_small_y():
    # theta and Ent^-1 cross near y = 0.0694; below that the comparison holds
    ys = np.concatenate([np.geomspace(1e-12, 0.069, 200)])
    assert all(F.theta(y) <= F.ent_inverse(y) for y in ys)


@pytest.mark.parametrize("y", [-0.1, 0.7])
def test_ent_inverse_range(y):
    with pytest.raises(DomainError):
        F.ent_inverse(y)


def test_ent_between_j1_and_twice_j1():
    t = np.linspace(0.0, 0.5, 1001)[1:]
    j1, e = J1()(t), Ent()(t)
    assert np.all(j1 <= e) and np.all(e <= 2 * j1)


def test_first_case_constant():
    assert F.first_case_constant(1.0) == pytest.approx(math.log(2) ** 3 / 2)


# ------------------------------------------------------------------ properties
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.1, 3), st.floats(-3, 3), st.floats(0.1, 3)),
                min_size=1, max_size=3))
def test_influence_of_complement(raw):
    A = RectilinearSet(2, tuple(((x, x + w), (y, y + v)) for x, w, y, v in raw)).canon()
    assert F.influences(L2, A) == pytest.approx(F.influences(L2, A.complement()), rel=1e-12,
                                                abs=1e-15)


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.1, 3), st.floats(-3, 3), st.floats(0.1, 3)),
                min_size=1, max_size=3))
def test_j_influence_below_geometric(raw):
    A = RectilinearSet(2, tuple(((x, x + w), (y, y + v)) for x, w, y, v in raw)).canon()
    geo = F.influences(L2, A)
    hj = F.influences(L2, A, K0)
    assert all(a <= b + 1e-12 for a, b in zip(hj, geo))


# ------------------------------------------------------------------ KKL-type bound
@pytest.mark.parametrize("n", [2, 3])
def test_kkl_first_case(n):
    pm = ProductMeasure.power(MU, n)
    q = float(MU.quantile(1 - 0.2 ** (1 / n)))
    A = RectilinearSet.box(*[(q, INF)] * n)
    r = F.kkl_bound_check(pm, A, K0)
    assert r["case"] == "first" and r["verdict"] == "pass"
    assert r["ratio"] >= F.first_case_constant(1.0)


def test_kkl_decreasing_set_uses_complement():
    A = RectilinearSet.box((-INF, 1.0), (-INF, 1.5))
    r = F.kkl_bound_check(L2, A, K0)
    assert r["orientation"].startswith("decreasing")


def test_kkl_rejects_non_monotone():
    with pytest.raises(PreconditionError):
        F.kkl_bound_check(L2, RectilinearSet.box((0, 1), (0, 1)), K0)


def test_kkl_rejects_dominating_J():
    with pytest.raises(PreconditionError):
        F.kkl_bound_check(L2, RectilinearSet.box((0.0, INF), (0.0, INF)), Kbeta(1.0))


def test_ingredient2_halfspace_closed_form():
    t = 0.3
    q = float(MU.quantile(t))
    A = RectilinearSet.box((-INF, q), (-INF, INF))
    r = F.ingredient2_check(L2, A, 0, K0, 1.0)
    e = float(Ent()(t))
    s = F.ent_inverse(e / 2)
    assert r["I_J"] == pytest.approx(t * (1 - t), rel=1e-12)
    assert r["bound"] == pytest.approx(s * (1 - s) / 2, rel=1e-12)
    assert r["slack"] >= 0


def test_ingredient2_quadrant():
    A = RectilinearSet.box((0.3, INF), (-1.0, INF))
    assert F.ingredient2_check(L2, A, 1, K0, 1.0)["slack"] >= 0


def test_ingredient2_empty_sections():
    r = F.ingredient2_check(L2, RectilinearSet.empty(2), 0, K0, 1.0)
    assert r["I_J"] == 0.0 and r["bound"] == 0.0
