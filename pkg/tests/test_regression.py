from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from bsdist import regression as rg
from bsdist.datasets import load
from bsdist.numerics import DomainError


def _simulate(n, theta, alpha, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.uniform(0, 2, n), rng.normal(size=n)])
    e = 2.0 * np.arcsinh(alpha * rng.standard_normal(n) / 2.0)
    return X, X @ theta + e


def _oracle_loglik(theta, alpha, X, y):
    # exp(y) is BS(alpha, exp(x theta)); add the log-Jacobian y
    return float(np.sum(stats.fatiguelife.logpdf(np.exp(y), alpha, scale=np.exp(X @ theta)) + y))


def test_loglik_matches_scipy_up_to_constant():
    X, y = _simulate(50, np.array([1.0, 0.5, -0.3]), 0.6, 1)
    diffs = [rg.reg_loglik(rg.RegressionModel(th, a, X), y) - _oracle_loglik(th, a, X, y)
             for th, a in ((np.array([1.0, 0.5, -0.3]), 0.6), (np.array([0.8, 0.7, 0.0]), 1.1))]
    assert diffs[0] == pytest.approx(diffs[1], abs=1e-9)


def test_score_matches_numerical_gradient():
    X, y = _simulate(40, np.array([1.0, 0.5, -0.3]), 0.6, 2)
    th, a = np.array([0.9, 0.6, -0.2]), 0.7
    g = rg.reg_score(rg.RegressionModel(th, a, X), y)
    f = lambda v: rg.reg_loglik(rg.RegressionModel(v[:3], v[3], X), y)
    x0 = np.append(th, a)
    h = 1e-6
    num = np.array([(f(x0 + h * e) - f(x0 - h * e)) / (2 * h) for e in np.eye(4)])
    assert np.allclose(g, num, rtol=1e-6, atol=1e-6)


def test_mle_matches_generic_optimiser():
    X, y = _simulate(80, np.array([1.0, 0.5, -0.3]), 0.8, 3)
    fit = rg.reg_mle(X, y)
    res = optimize.minimize(lambda v: -_oracle_loglik(v[:3], math.exp(v[3]), X, y),
                            np.append(rg.reg_lse(X, y), 0.0), method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000, "maxfev": 40000})
    assert np.allclose(fit.theta, res.x[:3], atol=1e-6)
    assert fit.alpha == pytest.approx(math.exp(res.x[3]), rel=1e-6)


def test_intercept_only_fit_equals_bs_mle():
    y = np.log(load("fatigue"))
    fit = rg.reg_mle(np.ones((y.size, 1)), y)
    assert fit.theta[0] == pytest.approx(4.88142819, abs=1e-7)
    assert math.exp(fit.theta[0]) == pytest.approx(131.818792, abs=5e-5)
    assert fit.alpha == pytest.approx(0.170385, abs=5e-7)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.5])
def test_c_alpha_is_fisher_information(alpha):
    # per-observation information for theta is E[cosh(r)/alpha^2 - sech^2(r/2)/4]
    def g(z):
        r = 2.0 * math.asinh(alpha * z / 2.0)
        return (math.cosh(r) / alpha**2 - 0.25 / math.cosh(r / 2.0) ** 2) * stats.norm.pdf(z)

    want = integrate.quad(g, -40, 40, limit=400, epsrel=1e-12)[0]
    assert rg.c_alpha(alpha) / 4.0 == pytest.approx(want, rel=1e-9)


def test_c_alpha_frozen_and_small_alpha():
    assert rg.c_alpha(1.0) == pytest.approx(5.157261541423891, rel=1e-13)
    assert math.isfinite(rg.c_alpha(0.01))
    assert rg.c_alpha(0.01) * 0.01**2 == pytest.approx(4.0, rel=1e-3)


def test_standard_errors_match_simulation():
    theta = np.array([1.0, 0.5, -0.3])
    X, _ = _simulate(200, theta, 0.8, 0)
    rng = np.random.default_rng(10)
    est = []
    for _ in range(150):
        y = X @ theta + 2.0 * np.arcsinh(0.8 * rng.standard_normal(200) / 2.0)
        est.append(rg.reg_mle(X, y).theta)
    sd = np.std(est, axis=0, ddof=1)
    se = rg.reg_mle(X, X @ theta + 2.0 * np.arcsinh(0.8 * rng.standard_normal(200) / 2.0)).se_theta
    # SD of a sample SD from 150 replicates is about 6%
    assert np.allclose(sd, se, rtol=0.25)


def test_residuals_standard_normal():
    X, y = _simulate(2000, np.array([1.0, 0.5, -0.3]), 0.6, 4)
    fit = rg.reg_mle(X, y)
    z = rg.reg_residuals(fit, X, y)
    assert stats.kstest(z, "norm").pvalue > 0.01


def test_perfect_fit_flagged():
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    fit = rg.reg_mle(X, X @ np.array([1.0, 2.0]))
    assert fit.alpha == 0.0 and any("perfect" in f for f in fit.flags)


def test_large_alpha_uses_multistart():
    X, y = _simulate(60, np.array([1.0, 0.5, -0.3]), 4.0, 5)
    fit = rg.reg_mle(X, y)
    assert fit.alpha > 2 and fit.starts > 1


@pytest.mark.parametrize("X,y", [
    (np.ones((3, 3)), np.ones(3)),
    (np.column_stack([np.ones(5), np.ones(5)]), np.arange(5.0)),
    (np.ones((5, 1)), np.arange(4.0)),
])
def test_design_validation(X, y):
    with pytest.raises(DomainError):
        rg.design_check(X, y)


@given(st.floats(-5, 5))
@settings(max_examples=15, deadline=None)
def test_location_shift_equivariance(c):
    X, y = _simulate(60, np.array([1.0, 0.5, -0.3]), 0.6, 6)
    a, b = rg.reg_mle(X, y), rg.reg_mle(X, y + c)
    assert b.theta[0] == pytest.approx(a.theta[0] + c, abs=1e-6)
    assert b.alpha == pytest.approx(a.alpha, rel=1e-7)
