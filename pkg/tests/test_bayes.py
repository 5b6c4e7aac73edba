from __future__ import annotations

import numpy as np
import pytest

from bsdist import bayes as by
from bsdist.complete import mle
from bsdist.datasets import load
from bsdist.numerics import DomainError


@pytest.fixture(scope="module")
def fatigue():
    return load("fatigue")


@pytest.fixture(scope="module")
def grid_means(fatigue):
    # independent oracle: posterior means by brute-force quadrature on a grid
    A = np.linspace(0.12, 0.26, 241)
    B = np.linspace(124.0, 140.0, 241)
    L = np.array([[by.log_posterior(a, b, fatigue) for b in B] for a in A])
    W = np.exp(L - L.max())
    W /= W.sum()
    return float(W.sum(1) @ A), float(W.sum(0) @ B)


def test_lindley_close_to_quadrature(fatigue, grid_means):
    a, b = by.lindley_estimates(fatigue)
    assert a == pytest.approx(grid_means[0], rel=2e-4)
    assert b == pytest.approx(grid_means[1], rel=1e-5)


def test_lindley_frozen(fatigue):
    assert by.lindley_estimates(fatigue) == pytest.approx((0.1724994480746612, 131.83760589299024), rel=1e-9)


def test_mcmc_means_match_quadrature(fatigue, grid_means):
    ps = by.posterior_sample(fatigue, seed=1)
    sd_a = (ps.ci_alpha[1] - ps.ci_alpha[0]) / 3.92
    sd_b = (ps.ci_beta[1] - ps.ci_beta[0]) / 3.92
    # a few effective-sample standard errors
    assert abs(ps.mean_alpha - grid_means[0]) < 0.1 * sd_a
    assert abs(ps.mean_beta - grid_means[1]) < 0.1 * sd_b
    assert all(0.2 < r < 0.6 for r in ps.acceptance)
    assert abs(by.geweke_z(ps.chains[:, 0])) < 3


def test_mcmc_reproducible(fatigue):
    a = by.posterior_sample(fatigue, seed=7, chain=2000)
    b = by.posterior_sample(fatigue, seed=7, chain=2000)
    assert np.array_equal(a.chains, b.chains)


def test_reference_mode_is_near_mle(fatigue):
    fit = mle(fatigue)
    m = by.posterior_mode(fatigue)
    assert m.mode_alpha == pytest.approx(fit.alpha, rel=1e-3)
    assert m.mode_beta == pytest.approx(131.78118248785054, rel=1e-7)


def test_jeffreys_mode_frozen(fatigue):
    m = by.posterior_mode(fatigue, "jeffreys")
    assert (m.mode_alpha, m.mode_beta) == pytest.approx((0.16955334263596772, 131.78155570660647), rel=1e-6)


def test_marginal_alpha_peak(fatigue):
    f = by.marginal_posterior(fatigue, "reference", "alpha")
    a = np.linspace(0.1, 0.3, 20001)
    n = fatigue.size
    c = np.sqrt(fatigue.mean() * np.mean(1 / fatigue)) - 1
    # closed-form maximiser of -n log a - n c / a^2
    assert a[np.argmax(f(a))] == pytest.approx(np.sqrt(2 * c), abs=2e-5)


def test_input_validation(fatigue):
    with pytest.raises(DomainError):
        by.posterior_sample(fatigue, prior="flat")
    with pytest.raises(DomainError):
        by.posterior_sample(fatigue, chain=10)
    with pytest.raises(DomainError):
        by.marginal_posterior(fatigue, which="gamma")
