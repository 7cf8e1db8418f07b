import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, optimize, stats

from isoperim import (DomainError, IntervalUnion, Kbeta, MinExp, boundary_measure_1d,
                      check_halfline_optimal, measure_from_profile, tabulate)
from isoperim.measure1d import (boltzmann, double_exponential, exponential, gaussian, logistic,
                                parse_measure, uniform)
from isoperim.profiles import Custom, Ma, open_grid

CATALOG = [logistic(), double_exponential(), gaussian(), uniform(), exponential(), boltzmann(1.5)]


# ------------------------------------------------------------------ cdf
def test_logistic_cdf_at_zero():
    assert logistic().cdf(0.0) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("mu", CATALOG, ids=lambda m: m.name)
def test_cdf_at_support_lo_is_zero(mu):
    assert mu.cdf(mu.support_lo) == 0.0


def test_dexp_cdf_at_minus_log2():
    # oracle: quadrature of e^{-|x|}/2 up to -log 2
    q, _ = integrate.quad(lambda x: 0.5 * math.exp(-abs(x)), -np.inf, -math.log(2.0))
    assert q == pytest.approx(0.25, abs=1e-12)
    assert double_exponential().cdf(-math.log(2.0)) == pytest.approx(q, abs=1e-12)


def test_cdf_by_quadrature_matches_closed_form():
    mu = logistic()
    bare = type(mu)(density=mu.density, name="bare logistic")
    for x in (-30.0, -3.0, 0.0, 1.7, 25.0):
        assert bare.cdf(x) == pytest.approx(stats.logistic.cdf(x), rel=1e-9, abs=1e-12)


# ------------------------------------------------------------------ quantile
def test_logistic_quantile_median():
    assert logistic().quantile(0.5) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("t", [1e-9, 0.01, 0.3, 0.77, 1 - 1e-6])
def test_logistic_quantile_closed_form(t):
    # oracle: bisection on the closed-form cdf
    root = optimize.bisect(lambda x: 1.0 / (1.0 + math.exp(-x)) - t, -40.0, 40.0, xtol=1e-14)
    assert logistic().quantile(t) == pytest.approx(math.log(t / (1.0 - t)), abs=1e-9)
    assert logistic().quantile(t) == pytest.approx(root, abs=1e-9)


def test_dexp_quantile_quarter():
    assert double_exponential().quantile(0.25) == pytest.approx(-math.log(2.0), abs=1e-14)


@pytest.mark.parametrize("t", [0.0, 1.0, -0.1, 1.5])
def test_quantile_outside_open_interval(t):
    with pytest.raises(DomainError):
        logistic().quantile(t)


def test_bracketed_quantile_without_closed_form():
    mu = gaussian()
    bare = type(mu)(density=mu.density, name="bare gaussian")
    for t in (1e-6, 0.2, 0.5, 0.9):
        assert bare.quantile(t) == pytest.approx(stats.norm.ppf(t), abs=1e-8)


# ------------------------------------------------------------------ profile_J
def test_logistic_profile_at_03():
    assert logistic().profile_J(0.3) == pytest.approx(0.21, abs=1e-15)


@pytest.mark.parametrize("t", [0.01, 0.2, 0.5, 0.73, 0.999])
def test_dexp_profile_is_minexp(t):
    assert double_exponential().profile_J(t) == pytest.approx(min(t, 1 - t), abs=1e-15)


def test_gaussian_profile_at_median():
    # oracle: density at the median found by root-finding on a quadrature cdf
    cdf = lambda x: integrate.quad(stats.norm.pdf, -np.inf, x)[0] - 0.5
    m = optimize.brentq(cdf, -1.0, 1.0, xtol=1e-14)
    assert gaussian().profile_J(0.5) == pytest.approx(stats.norm.pdf(m), abs=1e-12)
    assert gaussian().profile_J(0.5) == pytest.approx(0.39894, abs=1e-5)


def test_exponential_profile_is_one_minus_t():
    t = np.linspace(0.01, 0.99, 50)
    assert np.allclose(exponential().profile_J(t), 1.0 - t, atol=1e-12)


def test_profile_ends_are_zero():
    assert list(logistic().profile_J([0.0, 1.0])) == [0.0, 0.0]


# ------------------------------------------------------------------ measure_from_profile
def test_k0_reconstructs_logistic():
    mu = measure_from_profile(Kbeta(0.0))
    for t in (1e-8, 0.1, 0.5, 0.8):
        assert mu.quantile(t) == pytest.approx(math.log(t / (1 - t)), abs=1e-7)
    assert mu.cdf(1.3) == pytest.approx(stats.logistic.cdf(1.3), abs=1e-9)


def test_minexp_reconstructs_double_exponential():
    mu = measure_from_profile(MinExp())
    for x in (-3.0, -0.2, 0.0, 2.0):
        assert mu.pdf(x) == pytest.approx(0.5 * math.exp(-abs(x)), rel=1e-8)


def test_concave_symmetric_profile_is_log_concave():
    assert measure_from_profile(MinExp()).log_concave
    assert measure_from_profile(Kbeta(0.0)).even


def test_finite_supports():
    # integral of 1/J from 1/2: log(2t) for J0, arcsin(2t - 1) for sqrt(t(1-t))
    mu0 = measure_from_profile(Custom(lambda t: t, "J0"))
    assert mu0.support_lo == -math.inf
    assert mu0.support_hi == pytest.approx(math.log(2.0), rel=1e-9)
    mus = measure_from_profile(Custom(lambda t: np.sqrt(t * (1 - t)), "arcsine"))
    assert mus.support_lo == pytest.approx(-math.pi / 2, rel=1e-6)
    assert mus.support_hi == pytest.approx(math.pi / 2, rel=1e-6)


def test_vanishing_profile_rejected():
    with pytest.raises(DomainError):
        measure_from_profile(Custom(lambda t: np.abs(t - 0.5), "zero at 1/2"))


@pytest.mark.parametrize("J", [Kbeta(0.0), MinExp(), Kbeta(0.25), Kbeta(1.0), tabulate(Kbeta(0.5)),
                               Ma(0.7)], ids=lambda p: p.name)
def test_round_trip(J):
    mu = measure_from_profile(J)
    g = open_grid(200)
    g = g[(g >= 1e-6) & (g <= 1 - 1e-6)]
    assert np.max(np.abs(mu.profile_J(g) / J(g) - 1.0)) <= 1e-6


# ------------------------------------------------------------------ boundary
def test_halfline_boundary_is_J():
    mu = logistic()
    A = IntervalUnion(((-math.inf, float(mu.quantile(0.3))),))
    assert boundary_measure_1d(mu, A) == pytest.approx(0.21, abs=1e-14)


def test_uniform_support_endpoint_does_not_count():
    assert boundary_measure_1d(uniform(), IntervalUnion(((0.0, 0.4),))) == pytest.approx(1.0)


@pytest.mark.parametrize("mu", CATALOG, ids=lambda m: m.name)
def test_full_support_has_no_boundary(mu):
    assert boundary_measure_1d(mu, IntervalUnion(((mu.support_lo, mu.support_hi),))) == 0.0


def test_interval_union_merges():
    U = IntervalUnion.merged([(0, 1), (0.5, 2), (3, 4), (2, 2.5)])
    assert U.intervals == ((0.0, 2.5), (3.0, 4.0))
    with pytest.raises(DomainError):
        IntervalUnion(((0, 2), (1, 3)))


@given(st.lists(st.tuples(st.floats(-4, 4), st.floats(0.05, 2)), min_size=1, max_size=4))
def test_boundary_matches_difference_quotient(raw):
    mu = logistic()
    A = IntervalUnion.merged([(a, a + w) for a, w in raw])
    hs = 1e-3 * 2.0 ** -np.arange(6)
    base = A.measure(mu)
    q = np.array([(A.enlarge(h).measure(mu) - base) / h for h in hs])
    # the quotient is smooth in h until intervals merge; Richardson on the last two
    extrap = 2 * q[-1] - q[-2]
    exact = boundary_measure_1d(mu, A)
    gaps = [l1 - r0 for (_, r0), (l1, _) in zip(A.intervals[:-1], A.intervals[1:])]
    if gaps and min(gaps) < 4e-3:
        return
    assert extrap == pytest.approx(exact, rel=1e-4)


# ------------------------------------------------------------------ half-line optimality
@pytest.mark.parametrize("mu", [logistic(), double_exponential()], ids=lambda m: m.name)
def test_halfline_optimal_pass(mu):
    r = check_halfline_optimal(mu, n=400)
    assert r["verdict"] == "half-lines optimal"


def test_halfline_optimal_fails_for_exponential():
    r = check_halfline_optimal(exponential(), n=200)
    assert r["symmetry_defect"] > 0.0 and r["verdict"] == "fail"


def test_halfline_optimal_fails_for_superadditive_profile():
    mu = measure_from_profile(Custom(lambda t: np.minimum(t, 1 - t) ** 2, "sq"))
    assert check_halfline_optimal(mu, n=200)["subadditivity_violation"] > 0.0


# ------------------------------------------------------------------ properties
@pytest.mark.parametrize("mu", CATALOG, ids=lambda m: m.name)
def test_cdf_quantile_inverse(mu):
    t = np.concatenate([np.geomspace(1e-10, 0.5, 30), 1 - np.geomspace(1e-10, 0.5, 30)])
    assert np.max(np.abs(mu.cdf(mu.quantile(t)) - t)) <= 1e-9


@given(st.floats(0.0, 1.0))
def test_kbeta_round_trip_property(beta):
    J = Kbeta(beta)
    mu = measure_from_profile(J)
    g = np.geomspace(1e-6, 0.5, 20)
    g = np.concatenate([g, 1 - g])
    assert np.max(np.abs(mu.profile_J(g) / J(g) - 1.0)) <= 1e-6


@pytest.mark.parametrize("mu", [logistic(), double_exponential(), gaussian(), boltzmann(1.5),
                                boltzmann(2.5)], ids=lambda m: m.name)
def test_even_log_concave_profiles_symmetric_and_concave(mu):
    assert mu.even and mu.log_concave
    t = np.linspace(0.001, 0.999, 401)
    J = mu.profile_J(t)
    assert np.max(np.abs(J - J[::-1])) <= 1e-9
    assert np.min(J[:-2] - 2 * J[1:-1] + J[2:]) <= 1e-12
    assert np.max(J[:-2] - 2 * J[1:-1] + J[2:]) <= 1e-9


def test_parse_measure():
    assert parse_measure("boltzmann:rho=2").name.startswith("boltzmann")
    with pytest.raises(DomainError):
        parse_measure("cauchy")


def test_validate_normalization():
    r = boltzmann(0.7).validate()
    assert r["mass"] == pytest.approx(1.0, abs=1e-8) and r["even_defect"] == 0.0
