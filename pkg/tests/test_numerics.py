from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from bsdist import numerics as nm


def test_normal_helpers_match_scipy():
    x = np.linspace(-30, 30, 121)
    assert np.allclose(nm.norm_cdf(x), stats.norm.cdf(x), rtol=1e-14, atol=0)
    assert np.allclose(nm.norm_sf(x), stats.norm.sf(x), rtol=1e-14, atol=0)
    assert np.allclose(nm.norm_pdf(x), stats.norm.pdf(x), rtol=1e-14, atol=0)
    assert np.allclose(nm.norm_logcdf(x), stats.norm.logcdf(x), rtol=1e-12)


@given(st.floats(1e-12, 1 - 1e-12))
def test_quantile_round_trip(q):
    assert nm.norm_cdf(nm.std_normal_quantile(q)) == pytest.approx(q, rel=1e-10)


@pytest.mark.parametrize("h,k,rho", [(0.3, -0.2, 0.5), (-1.0, 2.0, -0.7), (0.0, 0.0, 0.0), (1.5, 1.5, 0.95)])
def test_bvn_cdf_against_scipy(h, k, rho):
    want = stats.multivariate_normal([0, 0], [[1, rho], [rho, 1]]).cdf([h, k])
    assert nm.bvn_cdf(h, k, rho) == pytest.approx(want, abs=1e-6)


def test_bvn_cdf_frozen():
    assert nm.bvn_cdf(0.3, -0.2, 0.5) == pytest.approx(0.3361984370155187, abs=1e-12)


def test_mvn_cdf_against_scipy():
    g = np.array([[1, .5, .2], [.5, 1, .3], [.2, .3, 1]])
    u = np.array([0.3, -0.2, 0.1])
    val, err = nm.mvn_cdf(u, g, return_error=True)
    want = stats.multivariate_normal(np.zeros(3), g).cdf(u)
    assert abs(val - want) < max(5 * err, 1e-5)


def test_mvn_cdf_independent_product():
    u = np.array([0.2, -0.4, 1.1, 0.0])
    assert nm.mvn_cdf(u, np.eye(4)) == pytest.approx(float(np.prod(stats.norm.cdf(u))), abs=1e-6)


@pytest.mark.parametrize("lam", [0.5, 1.3, -2.7, 10.0])
@pytest.mark.parametrize("w", [0.01, 0.5, 4.0, 100.0, 1e4])
def test_log_bessel_k_matches_kve(lam, w):
    want = math.log(special.kve(lam, w)) - w
    assert nm.log_bessel_k(lam, w) == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(st.floats(-5, 5), st.floats(0.05, 50))
@settings(max_examples=40, deadline=None)
def test_bessel_k_symmetric_in_order(lam, w):
    assert nm.log_bessel_k(lam, w) == pytest.approx(nm.log_bessel_k(-lam, w), rel=1e-10, abs=1e-10)


def test_bessel_half_order_closed_form():
    w = 2.3
    assert nm.bessel_k(0.5, w) == pytest.approx(math.sqrt(math.pi / (2 * w)) * math.exp(-w), rel=1e-12)


def test_solve_root():
    r = nm.solve_root(lambda x: x**3 - 2, nm.RootBracket(0.0, 2.0))
    assert r == pytest.approx(2 ** (1 / 3), rel=1e-12)


def test_solve_root_requires_sign_change():
    with pytest.raises((nm.DomainError, nm.ConvergenceError)):
        nm.solve_root(lambda x: x * x + 1, nm.RootBracket(0.0, 2.0))


def test_cholesky_rejects_indefinite():
    with pytest.raises(nm.DomainError):
        nm.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_integrators():
    v = nm.integrate_positive(lambda t: np.exp(-t) * t**2)
    assert v == pytest.approx(2.0, rel=1e-10)
    assert nm.integrate_normal(lambda z: z**4) == pytest.approx(3.0, rel=1e-10)


def test_numerical_derivatives():
    f = lambda x: x[0] ** 2 * math.exp(x[1])
    x = np.array([1.3, 0.4])
    g = nm.numerical_gradient(f, x)
    H = nm.numerical_hessian(f, x)
    e = math.exp(0.4)
    assert np.allclose(g, [2 * 1.3 * e, 1.3**2 * e], rtol=1e-7)
    assert np.allclose(H, [[2 * e, 2 * 1.3 * e], [2 * 1.3 * e, 1.3**2 * e]], rtol=1e-5)
