from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from bsdist import complete as cp
from bsdist import core
from bsdist.core import BsParams
from bsdist.datasets import load
from bsdist.numerics import DomainError, NonexistenceError


@pytest.fixture(scope="module")
def fatigue():
    return load("fatigue")


def test_mle_matches_generic_optimiser(fatigue):
    c, _, scale = stats.fatiguelife.fit(fatigue, floc=0)
    fit = cp.mle(fatigue)
    assert fit.alpha == pytest.approx(c, rel=1e-5)
    assert fit.beta == pytest.approx(scale, rel=1e-6)
    assert fit.loglik == pytest.approx(float(np.sum(stats.fatiguelife.logpdf(fatigue, c, scale=scale))), rel=1e-8)


def test_mle_score_vanishes(fatigue):
    fit = cp.mle(fatigue)
    g = [(cp.loglik(BsParams(fit.alpha + h, fit.beta), fatigue) - cp.loglik(BsParams(fit.alpha - h, fit.beta), fatigue)) / (2 * h)
         for h in (1e-6,)]
    assert abs(g[0]) < 1e-3


def test_mm_closed_form(fatigue):
    s, r = fatigue.mean(), 1 / np.mean(1 / fatigue)
    fit = cp.mm_est(fatigue)
    assert fit.alpha == pytest.approx(math.sqrt(2 * (math.sqrt(s / r) - 1)), rel=1e-14)
    assert fit.beta == pytest.approx(math.sqrt(s * r), rel=1e-14)


def test_moment_estimates_reproduce_sample_moments(fatigue):
    fit = cp.moment_est(fatigue)
    d = core.describe(fit.params)
    assert d.mean == pytest.approx(fatigue.mean(), rel=1e-10)
    assert d.variance == pytest.approx(fatigue.var(ddof=1), rel=1e-8) or d.variance == pytest.approx(fatigue.var(), rel=1e-8)


def test_other_estimators_frozen(fatigue):
    a, b1, b2 = cp.bz_est(fatigue)
    assert (a, b1, b2) == pytest.approx((0.17122836945354938, 131.80053316936224, 131.83797883575562), rel=1e-10)
    f = cp.new_est(fatigue)
    assert (f.alpha, f.beta) == pytest.approx((0.1706212697928106, 133.0), rel=1e-10)
    frozen = {1: (0.17038487419267076, 131.85209708904256), 2: (0.16528937196694587, 133.0),
              3: (0.1536934594846529, 133.0), 4: (0.1431679919002914, 132.83439162136503)}
    for v, want in frozen.items():
        f = cp.from_li(fatigue, v)
        assert (f.alpha, f.beta) == pytest.approx(want, rel=1e-8)
    f = cp.jackknife_correct(fatigue)
    assert (f.alpha, f.beta) == pytest.approx((0.1720059311982176, 131.79822738677103), rel=1e-8)


def test_bias_correction_formula(fatigue):
    ml = cp.mle(fatigue)
    u = cp.bias_correct(ml)
    n = ml.n
    assert u.method == "UML"
    assert u.alpha == pytest.approx(n / (n - 1) * ml.alpha, rel=1e-15)
    assert u.beta == pytest.approx(ml.beta / (1 + u.alpha**2 / (4 * n)), rel=1e-15)
    with pytest.raises(DomainError):
        cp.bias_correct(u)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 1.0, 2.5])
def test_fisher_information_against_quadrature(alpha):
    p = BsParams(alpha, 1.7)
    h = 1e-4

    def d2(i, j, t):
        def ll(a, b):
            return float(core.logpdf(BsParams(a, b), t))
        th = [alpha, 1.7]
        def at(di, dj):
            v = list(th)
            v[i] += di
            v[j] += dj
            return ll(*v)
        return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h)

    info = cp.fisher_info(p).matrix
    for i, j in ((0, 0), (1, 1), (0, 1)):
        f = lambda z: -d2(i, j, float(core.transform_from_normal(alpha, 1.7, z))) * stats.norm.pdf(z)
        want = integrate.quad(f, -12, 12, limit=200, epsabs=1e-7, epsrel=1e-7)[0]
        assert info[i, j] == pytest.approx(want, rel=2e-4, abs=2e-4)


def test_h_alpha_frozen():
    assert cp.h_alpha(0.5) == pytest.approx(0.3300572915227833, rel=1e-12)
    assert cp.i_alpha(0.5) == pytest.approx(0.013347617086439327, rel=1e-10)
    # small-alpha evaluation stays finite
    assert math.isfinite(cp.h_alpha(0.01))


def test_interval_forms(fatigue):
    fit = cp.mle(fatigue)
    (alo, ahi), (blo, bhi) = cp.asymp_ci(fit, 0.95)
    assert alo < fit.alpha < ahi and blo < fit.beta < bhi
    (wlo, whi), _ = cp.asymp_ci(fit, 0.95, "wald")
    assert (wlo + whi) / 2 == pytest.approx(fit.alpha, rel=1e-12)
    with pytest.raises(DomainError):
        cp.asymp_ci(fit, 1.5)


def test_r_star_interval(fatigue):
    lo, hi = cp.r_star_ci(fatigue, 0.95)
    assert (lo, hi) == pytest.approx((127.48508400063747, 136.29978137409083), rel=1e-7)
    fit = cp.mle(fatigue)
    r, rs = cp.r_star(fit.beta, fatigue, fit)
    assert abs(r) < 1e-8


def test_ks_against_scipy(fatigue):
    p = cp.mle(fatigue).params
    d, pv = cp.ks_test(fatigue, p)
    ref = stats.kstest(fatigue, lambda t: core.cdf(p, t))
    assert d == pytest.approx(ref.statistic, rel=1e-12)
    assert cp.ks_pvalue(d, fatigue.size) == pytest.approx(stats.kstwobign.sf(math.sqrt(fatigue.size) * d), rel=1e-10)


@given(st.floats(0.05, 2.0), st.floats(0.01, 100.0), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_estimators_scale_equivariant(alpha, beta, seed):
    t = core.sample(BsParams(alpha, beta), 30, seed=seed)
    for est in (cp.mle, cp.mm_est):
        f0, f1 = est(t), est(3.7 * t)
        assert f1.alpha == pytest.approx(f0.alpha, rel=1e-8)
        assert f1.beta == pytest.approx(3.7 * f0.beta, rel=1e-8)


def test_mle_rejects_constant_sample():
    with pytest.raises(NonexistenceError):
        cp.mle(np.full(5, 2.0))


def test_moment_estimates_need_small_cv():
    with pytest.raises(NonexistenceError):
        cp.moment_est(np.array([1e-3] * 9 + [1e3]))
