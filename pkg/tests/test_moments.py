import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsense import (
    Gauss1,
    Gauss2,
    Quadrature,
    QuadratureNotConverged,
    bvn_upper,
    cens_cross_m11,
    cond_linear_cross,
    mc_oracle,
    std_pdf,
    trunc_m0,
    trunc_m1,
    trunc_m2,
)
from hetsense.moments import _bvn_cross_closed, _orthant_quad

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)

mus = st.floats(-3, 3)
sigmas = st.floats(0.05, 3)
thresholds = st.floats(-4, 4)
rhos = st.floats(-0.98, 0.98)


# independent numpy Monte Carlo (default_rng(20261016), 1e7 draws), frozen
M1_MC = (1.372012492189204, 0.0004766979032812353)  # mu=1, sigma=2, T=0.5
M11_MC = (0.6255520207729831, 0.0004633317765414197)  # rho=0.7, mu=(0.2,-0.1), sigma=(1,1.5), T=(0,0)


def test_univariate_examples():
    g = Gauss1(0.0, 1.0)
    assert trunc_m0(g, 0.0) == 0.5
    assert trunc_m1(g, 0.0) == pytest.approx(PHI0, rel=1e-15)
    assert trunc_m2(g, 0.0) == pytest.approx(0.5, rel=1e-15)
    assert trunc_m0(Gauss1(2.0, 0.0), 1.0) == 1.0
    assert trunc_m0(Gauss1(2.0, 0.0), 3.0) == 0.0
    assert trunc_m1(Gauss1(2.0, 0.0), 1.0) == 2.0
    assert trunc_m2(Gauss1(2.0, 0.0), 1.0) == 4.0


def test_m1_frozen_mc():
    est, se = M1_MC
    assert abs(trunc_m1(Gauss1(1.0, 2.0), 0.5) - est) <= 3 * se


def test_m11_frozen_mc():
    est, se = M11_MC
    g = Gauss2(0.2, -0.1, 1.0, 1.5, 0.7)
    assert abs(cens_cross_m11(g, 0.0, 0.0) - est) <= 3 * se


def test_infinite_thresholds():
    g = Gauss1(0.7, 1.3)
    assert trunc_m0(g, -math.inf) == 1.0
    assert trunc_m1(g, -math.inf) == pytest.approx(0.7)
    assert trunc_m2(g, -math.inf) == pytest.approx(0.7**2 + 1.3**2)
    for fn in (trunc_m0, trunc_m1, trunc_m2):
        assert fn(g, math.inf) == 0.0


@given(mus, sigmas)
def test_limit_identities(mu, sigma):
    g = Gauss1(mu, sigma)
    assert abs(trunc_m0(g, -1e10) - 1.0) <= 1e-10
    assert abs(trunc_m1(g, -1e10) - mu) <= 1e-10
    assert abs(trunc_m2(g, -1e10) - (mu * mu + sigma * sigma)) <= 1e-10
    for fn in (trunc_m0, trunc_m1, trunc_m2):
        assert abs(fn(g, 1e10)) <= 1e-10


@given(mus, sigmas, thresholds)
def test_univariate_basic_bounds(mu, sigma, T):
    g = Gauss1(mu, sigma)
    m0, m1, m2 = trunc_m0(g, T), trunc_m1(g, T), trunc_m2(g, T)
    assert 0.0 <= m0 <= 1.0
    assert m2 >= -1e-12
    # Jensen on the truncated part: m1^2 <= m0 m2
    assert m1 * m1 <= m0 * m2 + 1e-12


def test_vectorized_matches_scalar():
    mu = np.array([-1.0, 0.0, 2.0])
    sig = np.array([0.5, 1.0, 2.0])
    T = np.array([0.0, -0.3, 1.0])
    vec = trunc_m2(Gauss1(mu, sig), T)
    for i in range(3):
        assert vec[i] == trunc_m2(Gauss1(mu[i], sig[i]), T[i])


def test_bivariate_examples():
    assert bvn_upper(Gauss2(0, 0, 1, 1, 0.5), 0.0, 0.0) == pytest.approx(1 / 3, abs=1e-12)
    assert cens_cross_m11(Gauss2(0, 0, 1, 1, 0.0), 0.0, 0.0) == pytest.approx(PHI0**2, abs=1e-12)
    assert cens_cross_m11(Gauss2(0, 0, 1, 1, 1.0), 0.0, 0.0) == pytest.approx(0.5, abs=1e-10)
    assert bvn_upper(Gauss2(0, 0, 1, 1, 0.0), 0.0, 0.0) == pytest.approx(0.25, abs=1e-12)
    assert bvn_upper(Gauss2(0, 0, 1, 1, 1.0), 0.0, -5.0) == pytest.approx(0.5, abs=1e-10)
    assert bvn_upper(Gauss2(0, 0, 1, 1, -1.0), 0.0, 0.0) == pytest.approx(0.0, abs=1e-10)


def test_cond_linear_cross_examples():
    g2 = Gauss1(-0.1, 1.5)
    assert cond_linear_cross(Gauss2(0.4, -0.1, 1.0, 1.5, 0.0), 0.2) == pytest.approx(0.4 * trunc_m1(g2, 0.2), abs=1e-14)
    assert cond_linear_cross(Gauss2(-0.1, -0.1, 1.5, 1.5, 1.0), 0.2) == pytest.approx(trunc_m2(g2, 0.2), abs=1e-14)
    g = Gauss2(0, 0, 1, 1, 0.5)
    assert cond_linear_cross(g, 0.0) == pytest.approx(cens_cross_m11(g, -math.inf, 0.0), abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(mus, mus, sigmas, sigmas, rhos, thresholds)
def test_cond_linear_matches_m11_at_minus_inf(m1, m2, s1, s2, r, T):
    g = Gauss2(m1, m2, s1, s2, r)
    assert cond_linear_cross(g, T) == pytest.approx(cens_cross_m11(g, -math.inf, T), abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(mus, mus, sigmas, sigmas, thresholds, thresholds)
def test_factorization_at_rho_zero(m1, m2, s1, s2, T1, T2):
    g = Gauss2(m1, m2, s1, s2, 0.0)
    a, b = Gauss1(m1, s1), Gauss1(m2, s2)
    tol = Quadrature().abs_tol
    assert abs(bvn_upper(g, T1, T2) - trunc_m0(a, T1) * trunc_m0(b, T2)) <= tol
    assert abs(cens_cross_m11(g, T1, T2) - trunc_m1(a, T1) * trunc_m1(b, T2)) <= tol
    assert abs(cond_linear_cross(g, T2) - m1 * trunc_m1(b, T2)) <= tol


@settings(max_examples=200, deadline=None)
@given(mus, mus, sigmas, sigmas, st.floats(-1, 1), thresholds, thresholds)
def test_cauchy_schwarz(m1, m2, s1, s2, r, T1, T2):
    g = Gauss2(m1, m2, s1, s2, r)
    bound = math.sqrt(trunc_m2(Gauss1(m1, s1), T1) * trunc_m2(Gauss1(m2, s2), T2))
    assert abs(cens_cross_m11(g, T1, T2)) <= bound * (1 + 1e-9) + 1e-12


@settings(max_examples=100, deadline=None)
@given(mus, mus, sigmas, sigmas, st.floats(-1, 1), thresholds)
def test_bvn_coherence(m1, m2, s1, s2, r, T1):
    g = Gauss2(m1, m2, s1, s2, r)
    assert abs(bvn_upper(g, T1, -math.inf) - trunc_m0(Gauss1(m1, s1), T1)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-0.99, 0.99))
def test_quadrature_agrees_with_closed_form(h, k, r):
    quad = np.array(_orthant_quad(np.array([h]), np.array([k]), np.array([r]), 40, 6))[:, 0]
    closed = np.array(_bvn_cross_closed(np.array([h]), np.array([k]), np.array([r])))[:, 0]
    np.testing.assert_allclose(quad, closed, atol=1e-10)


def test_near_comonotone_fallback_continuous():
    # the closed-form branch above |rho| = 0.99 must join the quadrature branch smoothly
    vals = [cens_cross_m11(Gauss2(0.1, -0.2, 1.0, 1.2, r), 0.3, -0.1) for r in (0.9899, 0.99, 0.9901)]
    assert abs(vals[0] - vals[1]) < 1e-3 and abs(vals[1] - vals[2]) < 1e-3


def test_quadrature_not_converged_is_raised():
    # a single 8-node panel cannot resolve a sharp orthant
    with pytest.raises(QuadratureNotConverged):
        cens_cross_m11(Gauss2(0, 0, 1, 1, 0.9), 2.0, -3.0, Quadrature(nodes_per_axis=8, abs_tol=1e-15, panels=1))


def test_quadrature_validation():
    with pytest.raises(ValueError):
        Quadrature(nodes_per_axis=2)
    with pytest.raises(ValueError):
        Gauss2(0, 0, 1, 1, 1.5)
    with pytest.raises(ValueError):
        Gauss1(0, -1)


def test_mc_oracle_contract():
    g = Gauss1(0.3, 1.1)
    a = mc_oracle("m1", g, 0.2, 20_000, seed=5)
    assert a == mc_oracle("m1", g, 0.2, 20_000, seed=5)
    assert a != mc_oracle("m1", g, 0.2, 20_000, seed=6)
    with pytest.raises(ValueError):
        mc_oracle("m1", g, 0.2, 9_999, seed=5)
    with pytest.raises(ValueError):
        mc_oracle("m3", g, 0.2, 20_000, seed=5)


@pytest.mark.parametrize(
    "expr,g,T,exact",
    [
        ("m0", Gauss1(0.3, 1.1), 0.2, trunc_m0(Gauss1(0.3, 1.1), 0.2)),
        ("m2", Gauss1(-0.5, 0.7), -1.0, trunc_m2(Gauss1(-0.5, 0.7), -1.0)),
        ("bvn", Gauss2(0.1, 0.2, 1.0, 2.0, -0.4), (0.0, 0.5), bvn_upper(Gauss2(0.1, 0.2, 1.0, 2.0, -0.4), 0.0, 0.5)),
        ("cross", Gauss2(0.1, 0.2, 1.0, 2.0, 0.6), 0.3, cond_linear_cross(Gauss2(0.1, 0.2, 1.0, 2.0, 0.6), 0.3)),
    ],
)
def test_mc_oracle_agrees(expr, g, T, exact):
    est, se = mc_oracle(expr, g, T, 200_000, seed=17)
    assert abs(est - exact) <= 4 * se


def test_std_pdf_overflow_silent():
    with np.errstate(all="raise"):
        assert std_pdf(np.array([1e200]))[0] == 0.0
