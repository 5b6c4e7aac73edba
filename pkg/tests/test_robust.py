from __future__ import annotations

import numpy as np
import pytest

from bsdist import core
from bsdist.complete import fisher_info, mle
from bsdist.core import BsParams
from bsdist.datasets import load
from bsdist.numerics import DomainError
from bsdist.robust import ObreConfig, model_expectation, obre, score


def test_score_has_zero_mean_and_fisher_covariance():
    p = BsParams(0.6, 2.0)
    m = model_expectation(p, lambda t: score(p, t))
    assert np.allclose(m, 0.0, atol=1e-10)
    cov = model_expectation(p, lambda t: np.einsum("i...,j...->ij...", score(p, t), score(p, t)))
    assert np.allclose(cov, fisher_info(p).matrix, rtol=1e-8)


def test_score_matches_numerical_gradient():
    p = BsParams(0.6, 2.0)
    t = np.array([0.5, 2.0, 7.0])
    h = 1e-6
    ga = (core.logpdf(BsParams(0.6 + h, 2.0), t) - core.logpdf(BsParams(0.6 - h, 2.0), t)) / (2 * h)
    gb = (core.logpdf(BsParams(0.6, 2.0 + h), t) - core.logpdf(BsParams(0.6, 2.0 - h), t)) / (2 * h)
    assert np.allclose(score(p, t), [ga, gb], rtol=1e-6)


def test_large_bound_recovers_mle():
    t = load("fatigue")
    ob, ml = obre(t, ObreConfig(c=1e6)), mle(t)
    assert ob.alpha == pytest.approx(ml.alpha, rel=1e-6)
    assert ob.beta == pytest.approx(ml.beta, rel=1e-6)


def test_fatigue_frozen():
    ob = obre(load("fatigue"))
    assert (ob.alpha, ob.beta) == pytest.approx((0.16173196609269255, 132.12461197086685), rel=1e-5)


def test_outliers_are_downweighted():
    t = core.sample(BsParams(0.3, 1.0), 100, seed=4)
    t[:5] *= 20.0
    ob, ml = obre(t, ObreConfig(c=2.0)), mle(t)
    assert abs(ob.beta - 1.0) < abs(ml.beta - 1.0)
    assert abs(ob.alpha - 0.3) < abs(ml.alpha - 0.3)
    w = ob.extras["weights"]
    assert w[:5].max() < np.median(w[5:])


def test_bound_must_exceed_sqrt2():
    with pytest.raises(DomainError):
        ObreConfig(c=1.0)
