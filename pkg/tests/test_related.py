from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from bsdist import core
from bsdist import related as rl
from bsdist.core import BsParams
from bsdist.datasets import load
from bsdist.multivariate import MvBsParams, mv_pdf
from bsdist.numerics import DomainError, NonexistenceError


# --- sinh-normal -------------------------------------------------------------

@given(st.floats(0.05, 4.0), st.floats(-3, 3), st.floats(0.2, 5.0))
@settings(max_examples=40, deadline=None)
def test_sn_cdf_is_normal_of_transform(a, g, s):
    p = rl.SnParams(a, g, s)
    y = g + s * np.array([-2.0, -0.3, 0.0, 0.7, 2.5])
    want = stats.norm.cdf((2 / a) * np.sinh((y - g) / s))
    assert np.allclose(rl.sn_cdf(p, y), want, rtol=1e-12, atol=1e-300)


def test_sn_is_log_of_bs():
    p = BsParams(0.6, 3.0)
    sp = rl.SnParams.from_bs(p)
    t = np.array([0.5, 3.0, 9.0])
    assert np.allclose(rl.sn_pdf(sp, np.log(t)), core.pdf(p, t) * t, rtol=1e-12)


@pytest.mark.parametrize("p,s,want", [((1.0, 0.0, 2.0), 0.3, 1.0382534128918484),
                                      ((0.7, 1.2, 1.5), -1.1, 0.31026569939728)])
def test_sn_mgf_frozen_and_quadrature(p, s, want):
    sp = rl.SnParams(*p)
    assert rl.sn_mgf(sp, s) == pytest.approx(want, rel=1e-10)
    f = lambda y: math.exp(s * y) * float(rl.sn_pdf(sp, y))
    q = integrate.quad(f, sp.gamma - 40, sp.gamma + 40, limit=400, epsrel=1e-12)[0]
    assert rl.sn_mgf(sp, s) == pytest.approx(q, rel=1e-9)


def test_sn_bimodal_only_for_large_alpha():
    y = np.linspace(-6, 6, 4001)

    def modes(a):
        f = rl.sn_pdf(rl.SnParams(a, 0.0, 2.0), y)
        return int(np.sum((f[1:-1] > f[:-2]) & (f[1:-1] > f[2:])))

    assert modes(1.5) == 1
    assert modes(3.0) == 2


def test_sn_sampler():
    p = rl.SnParams(1.3, 0.5, 1.5)
    x = rl.sn_sample(p, 20_000, seed=4)
    assert stats.kstest(x, lambda y: rl.sn_cdf(p, y)).pvalue > 0.01


def test_sn_fixed_sigma_fit_equals_bs_fit():
    t = load("fatigue")
    fit = rl.sn_mle(np.log(t), sigma=2.0)
    assert fit.params.alpha == pytest.approx(0.170385, abs=5e-6)
    assert math.exp(fit.params.gamma) == pytest.approx(131.8188, abs=5e-4)


def test_sn_alpha_profile_closed_form():
    y = np.log(load("fatigue"))
    a = rl.sn_alpha_profile(y, 4.9, 2.0)
    assert a == pytest.approx(math.sqrt(4 * np.mean(np.sinh((y - 4.9) / 2) ** 2)), rel=1e-14)


def test_sn_free_sigma_normal_limit_raises():
    with pytest.raises(NonexistenceError):
        rl.sn_mle(np.log(load("fatigue")))


def test_sn_free_sigma_recovers_bimodal_law():
    truth = rl.SnParams(3.0, 1.0, 0.8)
    fit = rl.sn_mle(rl.sn_sample(truth, 3000, seed=9))
    assert fit.params.gamma == pytest.approx(1.0, abs=0.05)
    assert fit.params.sigma == pytest.approx(0.8, rel=0.15)
    assert fit.params.alpha == pytest.approx(3.0, rel=0.2)


def test_bivariate_sn_is_log_of_bivariate_bs():
    mp = MvBsParams.bivariate(0.4, 2.0, 0.7, 0.5, -0.4)
    bp = rl.BsnParams.from_bs(mp)
    t = np.array([1.7, 0.8])
    assert rl.bsn_pdf(bp, np.log(t)) == pytest.approx(float(np.atleast_1d(mv_pdf(mp, t))[0]) * t.prod(), rel=1e-12)
    x = rl.bsn_sample(bp, 20_000, seed=3)
    assert stats.kstest(x[:, 1], lambda y: rl.sn_cdf(bp.second, y)).pvalue > 0.01
    assert 0.0 < rl.bsn_cdf(bp, np.log(t)) < 1.0


# --- length-biased BS ---------------------------------------------------------

@pytest.mark.parametrize("a,b", [(0.3, 1.0), (1.0, 2.0), (2.5, 2.0)])
def test_lbs_normalises_and_cdf(a, b):
    p = rl.LbsParams(a, b)
    v = sum(integrate.quad(lambda t: float(rl.lbs_pdf(p, t)), lo, hi, limit=300)[0]
            for lo, hi in ((0, b), (b, 10 * b), (10 * b, np.inf)))
    assert v == pytest.approx(1.0, abs=1e-9)
    x = 1.3 * b
    assert float(rl.lbs_cdf(p, x)) == pytest.approx(integrate.quad(lambda t: float(rl.lbs_pdf(p, t)), 0, x, limit=300)[0], abs=1e-9)


def test_lbs_is_length_biased_bs():
    p = rl.LbsParams(0.8, 1.5)
    t = np.array([0.4, 1.5, 4.0])
    mean = core.moment(BsParams(0.8, 1.5), 1)
    assert np.allclose(rl.lbs_pdf(p, t), t * core.pdf(BsParams(0.8, 1.5), t) / mean, rtol=1e-12)


def test_lbs_mode():
    for a, b, want in ((0.5, 2.0, None), (2.5, 2.0, 8.0)):
        p = rl.LbsParams(a, b)
        res = optimize.minimize_scalar(lambda t: -float(rl.lbs_logpdf(p, t)), bounds=(1e-3, 50), method="bounded",
                                       options={"xatol": 1e-10})
        assert rl.lbs_mode(p) == pytest.approx(res.x, rel=1e-5)
        if want is not None:
            assert rl.lbs_mode(p) == pytest.approx(want, rel=1e-12)
    # for alpha below sqrt(2) the mode is beta
    assert rl.lbs_mode(rl.LbsParams(0.5, 2.0)) == pytest.approx(2.0, rel=1e-12)


def test_lbs_moments():
    p = rl.LbsParams(0.6, 2.0)
    m = integrate.quad(lambda t: t * float(rl.lbs_pdf(p, t)), 0, np.inf, limit=300)[0]
    assert rl.lbs_moment(p, 1) == pytest.approx(m, rel=1e-8)


def test_lbs_hessian_matches_finite_differences():
    p = rl.LbsParams(0.7, 1.8)
    x = rl.lbs_sample(p, 300, seed=1)
    H = rl.lbs_hessian(p, x)
    f = lambda v: rl.lbs_loglik(rl.LbsParams(*v), x)
    h = 1e-4
    v0 = np.array([0.7, 1.8])
    num = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            ei, ej = np.eye(2)[i] * h, np.eye(2)[j] * h
            num[i, j] = (f(v0 + ei + ej) - f(v0 + ei - ej) - f(v0 - ei + ej) + f(v0 - ei - ej)) / (4 * h * h)
    assert np.allclose(H, num, rtol=1e-5)


def test_lbs_sampler_and_mle():
    p = rl.LbsParams(0.7, 1.8)
    x = rl.lbs_sample(p, 3000, seed=2)
    assert stats.kstest(x, lambda t: rl.lbs_cdf(p, t)).pvalue > 0.01
    fit = rl.lbs_mle(x[:2000])
    assert abs(fit.params.alpha - 0.7) < 3 * fit.se_alpha
    assert abs(fit.params.beta - 1.8) < 3 * fit.se_beta


# --- generalized BS ------------------------------------------------------------

def test_normal_kernel_reduces_to_bs():
    t = np.array([0.3, 1.0, 2.2])
    assert np.allclose(rl.gbs_pdf(0.5, 1.2, rl.GbsKernel.normal(), t), core.pdf(BsParams(0.5, 1.2), t), rtol=1e-13)


def test_student_kernel_normalises_and_limits():
    k = rl.GbsKernel.student_t(5)
    v = sum(integrate.quad(lambda t: float(rl.gbs_pdf(0.5, 1.0, k, t)), lo, hi, limit=300)[0]
            for lo, hi in ((0, 1), (1, 50), (50, np.inf)))
    assert v == pytest.approx(1.0, abs=1e-8)
    t = np.array([0.5, 1.0, 2.0])
    big = rl.gbs_pdf(0.5, 1.0, rl.GbsKernel.student_t(1e4), t)
    assert np.allclose(big, core.pdf(BsParams(0.5, 1.0), t), rtol=2e-4)


def test_kernel_cdf_and_sampler():
    k = rl.GbsKernel.student_t(4)
    assert np.allclose(k.cdf(np.array([-1.0, 0.5])), stats.t(4).cdf([-1.0, 0.5]), rtol=1e-12)
    x = rl.gbs_sample(0.5, 1.0, k, 20_000, seed=6)
    z = core.eps(x) / 0.5
    assert stats.kstest(z, stats.t(4).cdf).pvalue > 0.01


def test_custom_kernel_normalisation_checked():
    logistic = lambda u: -math.sqrt(u) - 2 * math.log1p(math.exp(-math.sqrt(u)))
    rl.GbsKernel.custom(logistic, 1.0)
    with pytest.raises(DomainError, match="integrates"):
        rl.GbsKernel.custom(lambda u: -0.5 * u, 0.3)


def test_multivariate_gbs_normal_kernel_equals_mv_bs():
    mp = MvBsParams.bivariate(0.4, 2.0, 0.7, 0.5, 0.3)
    t = np.array([[1.7, 0.8], [2.2, 0.4]])
    assert np.allclose(rl.mgbs_pdf(mp, rl.GbsKernel.normal(), t), mv_pdf(mp, t), rtol=1e-12)


def test_multivariate_gbs_t_kernel_normalises():
    mp = MvBsParams.bivariate(0.4, 1.0, 0.7, 1.0, 0.3)
    k = rl.GbsKernel.student_t(6)
    f = lambda u2, u1: float(np.atleast_1d(rl.mgbs_pdf(mp, k, np.exp([[u1, u2]])))[0]) * math.exp(u1 + u2)
    v = integrate.dblquad(f, -12, 12, -12, 12, epsabs=1e-9)[0]
    assert v == pytest.approx(1.0, abs=1e-5)


def test_matrix_gbs_reduces():
    A, B, T = np.array([[0.5]]), np.array([[1.2]]), np.array([[0.9]])
    assert rl.matrix_gbs_pdf(A, B, rl.GbsKernel.normal(), T) == pytest.approx(
        float(core.pdf(BsParams(0.5, 1.2), 0.9)), rel=1e-12)
    A2, B2 = np.array([[0.5, 0.7], [0.3, 1.1]]), np.array([[1.0, 2.0], [0.5, 3.0]])
    T2 = np.array([[0.9, 1.5], [0.6, 2.0]])
    prod = np.prod([float(core.pdf(BsParams(a, b), t)) for a, b, t in zip(A2.ravel(), B2.ravel(), T2.ravel())])
    assert rl.matrix_gbs_pdf(A2, B2, rl.GbsKernel.normal(), T2) == pytest.approx(prod, rel=1e-12)


def test_mgbs_fit_normal_kernel_matches_mv_mle():
    from bsdist.multivariate import mv_mle
    data = load("bone_mineral")
    _, ll = rl.mgbs_mle(data, rl.GbsKernel.normal())
    assert ll == pytest.approx(mv_mle(data).loglik, abs=1e-6)
    prof = rl.mgbs_profile_nu(data, [3, 10, 100])
    assert prof["best_nu"] in (3.0, 10.0, 100.0) and len(prof["loglik"]) == 3


# --- extended GBS ----------------------------------------------------------------

def test_egbs_normalises_and_reduces():
    p = rl.EgbsParams(0.6, 1.5, 0.4)
    v = sum(integrate.quad(lambda w: float(rl.egbs_pdf(p, w)), lo, hi, limit=300)[0]
            for lo, hi in ((0, 1.5), (1.5, 30), (30, np.inf)))
    assert v == pytest.approx(1.0, abs=1e-8)
    t = np.array([0.5, 1.5, 4.0])
    assert np.allclose(rl.egbs_pdf(rl.EgbsParams(0.6, 1.5), t), core.pdf(BsParams(0.6, 1.5), t), rtol=1e-12)


def test_egbs_mean_and_scale():
    assert rl.egbs_moment(rl.EgbsParams(1.0, 2.0), 1) == pytest.approx(3.0, rel=1e-8)
    p = rl.EgbsParams(0.6, 1.5, 0.3)
    q = rl.egbs_scale(p, 2.0)
    assert q.beta == pytest.approx(3.0) and q.epsilon == p.epsilon
    assert float(rl.egbs_cdf(q, 2.0 * 1.1)) == pytest.approx(float(rl.egbs_cdf(p, 1.1)), rel=1e-12)


def test_egbs_reciprocal_flips_skewness():
    p = rl.EgbsParams(0.6, 1.5, 0.3)
    r = rl.egbs_reciprocal(p)
    assert (r.beta, r.epsilon) == pytest.approx((1 / 1.5, -0.3))
    x = rl.egbs_sample(p, 20_000, seed=7)
    assert stats.kstest(1 / x, lambda w: rl.egbs_cdf(r, w)).pvalue > 0.01
    assert stats.kstest(x, lambda w: rl.egbs_cdf(p, w)).pvalue > 0.01


def test_egbs_mle_recovers():
    p = rl.EgbsParams(0.5, 2.0, 0.3)
    fit, ll = rl.egbs_mle(rl.egbs_sample(p, 4000, seed=8))
    assert (fit.alpha, fit.beta, fit.epsilon) == pytest.approx((0.5, 2.0, 0.3), abs=0.08)
