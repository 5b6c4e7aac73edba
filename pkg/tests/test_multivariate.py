from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from bsdist import core
from bsdist import multivariate as mv
from bsdist.core import BsParams, eps, eps_prime
from bsdist.datasets import load
from bsdist.numerics import DomainError


@pytest.fixture
def mp3():
    g = np.array([[1.0, 0.5, -0.2], [0.5, 1.0, 0.3], [-0.2, 0.3, 1.0]])
    return mv.MvBsParams(np.array([0.3, 0.8, 1.5]), np.array([1.0, 2.0, 0.5]), g)


def _oracle_logpdf(mp, t):
    v = eps(t / mp.beta) / mp.alpha
    jac = np.sum(np.log(eps_prime(t / mp.beta) / (mp.alpha * mp.beta)), axis=-1)
    return stats.multivariate_normal(np.zeros(mp.p), mp.gamma).logpdf(v) + jac


def test_logpdf_matches_normal_transform(mp3):
    t = mv.mv_sample(mp3, 50, seed=1)
    assert np.allclose(mv.mv_logpdf(mp3, t), _oracle_logpdf(mp3, t), rtol=1e-12)


def test_cdf_matches_scipy(mp3):
    t = np.array([1.1, 1.5, 0.7])
    v = eps(t / mp3.beta) / mp3.alpha
    want = stats.multivariate_normal(np.zeros(3), mp3.gamma).cdf(v)
    assert mv.mv_cdf(mp3, t) == pytest.approx(want, abs=1e-5)


def test_marginals_are_bs(mp3):
    m = mv.marginal(mp3, 1)
    assert (m.alpha, m.beta) == (0.8, 2.0)
    t = mv.mv_sample(mp3, 10_000, seed=2)
    assert stats.kstest(t[:, 2], lambda x: core.cdf(BsParams(1.5, 0.5), x)).pvalue > 0.01
    sub = mv.marginal(mp3, [0, 2])
    assert sub.gamma[0, 1] == pytest.approx(-0.2)


def test_conditional_density_is_ratio(mp3):
    t = np.array([[1.2, 2.5, 0.4]])
    full = mv.mv_pdf(mp3, t)
    given = mv.marginal(mp3, [1, 2])
    cond = mv.conditional_pdf(mp3, [1, 2], [2.5, 0.4])
    assert float(np.atleast_1d(cond(np.array([[1.2]])))[0]) == pytest.approx(
        float(np.atleast_1d(full)[0]) / float(np.atleast_1d(mv.mv_pdf(given, t[:, 1:]))[0]), rel=1e-10)


def test_reciprocal_blocks_density(mp3):
    r = mv.reciprocal_blocks(mp3, [1])
    t = np.array([[1.2, 2.5, 0.4]])
    u = t.copy()
    u[0, 1] = 1 / t[0, 1]
    lhs = mv.mv_logpdf(r, u)
    rhs = mv.mv_logpdf(mp3, t) + 2 * math.log(t[0, 1])
    assert float(np.atleast_1d(lhs)[0]) == pytest.approx(float(np.atleast_1d(rhs)[0]), rel=1e-12)


def test_explicit_bivariate_sampler():
    mp = mv.MvBsParams.bivariate(0.5, 1.0, 1.2, 3.0, 0.6)
    t = mv.bv_sample_explicit(mp, 20_000, seed=5)
    v = eps(t / mp.beta) / mp.alpha
    assert stats.kstest(v[:, 0], "norm").pvalue > 0.01
    r = np.corrcoef(v.T)[0, 1]
    assert r == pytest.approx(0.6, abs=3 * (1 - 0.36) / math.sqrt(20_000))


@given(st.floats(-0.95, 0.95))
def test_copula_measures_formulas(rho):
    m = mv.copula_measures(rho)
    assert m.kendall == pytest.approx(2 / math.pi * math.asin(rho))
    assert m.blomqvist == m.kendall
    assert abs(m.spearman) <= 1 and np.sign(m.spearman) == np.sign(rho)


def test_bone_mineral_mle_matches_generic_optimiser():
    data = load("bone_mineral")
    fit = mv.mv_mle(data)

    def nll(x):
        a1, a2, b1, b2 = np.exp(x[:4])
        rho = math.tanh(x[4])
        mp = mv.MvBsParams.bivariate(a1, b1, a2, b2, rho)
        return -float(np.sum(_oracle_logpdf(mp, data)))

    x0 = np.log([0.15, 0.17, 0.83, 0.83]).tolist() + [math.atanh(0.9)]
    res = optimize.minimize(nll, x0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000, "maxfev": 40000})
    assert fit.loglik == pytest.approx(-res.fun, abs=1e-6)
    assert fit.params.gamma[0, 1] == pytest.approx(math.tanh(res.x[4]), abs=1e-5)
    assert fit.loglik == pytest.approx(54.243983386201705, rel=1e-9)


def test_profile_pieces_at_mle():
    data = load("bone_mineral")
    fit = mv.mv_mle(data)
    assert np.allclose(mv.alpha_given_beta(data, fit.params.beta), fit.params.alpha, rtol=1e-6)
    assert mv.profile_loglik(fit.params.beta, data) == pytest.approx(fit.loglik, rel=1e-9)


def test_intervals_contain_estimates():
    data = load("bone_mineral")
    fit = mv.mv_mle(data)
    for info in ("observed", "opg"):
        ci = mv.mv_ci(fit, data, 0.95, info=info)
        assert ci["rho"][0] < fit.params.gamma[0, 1] < ci["rho"][1]


def test_stress_strength_against_quadrature():
    mp = mv.MvBsParams.bivariate(0.5, 1.0, 0.5, 2.0, 0.3)
    pr, se = mv.stress_strength(mp, n=10_000, seed=1)
    # P(T1 < T2) with equal alpha: eps is increasing, so compare normal scores
    # v1 - v2 shifted by the scale ratio, evaluated by simulation-free quadrature
    z = np.linspace(-9, 9, 4001)
    w = stats.norm.pdf(z)
    w /= w.sum()
    t1 = core.transform_from_normal(0.5, 1.0, z)
    # conditional on v1 = z, v2 ~ N(rho z, 1 - rho^2)
    v2 = eps(t1 / 2.0) / 0.5
    want = float(np.sum(w * stats.norm.sf((v2 - 0.3 * z) / math.sqrt(1 - 0.09))))
    assert abs(pr - want) < 4 * se
    assert (pr, se) == pytest.approx((0.8811, 0.0032367080498555936), rel=1e-12)


def test_invalid_correlation():
    with pytest.raises(DomainError):
        mv.MvBsParams.bivariate(0.5, 1.0, 0.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        mv.MvBsParams(np.array([0.5, 0.5]), np.array([1.0, 1.0]), np.array([[1.0, 2.0], [2.0, 1.0]]))
