"""Bayesian estimation of (alpha, beta) under non-informative priors.

Two priors are supported:

``jeffreys``
    ``pi(alpha, beta) ~ (1/(alpha beta)) (1/alpha^2 + 1/4)^(1/2)``, the
    Jeffreys prior under a Laplace approximation of ``E(T + beta)^-2``.
``reference``
    ``pi(alpha, beta) ~ 1/(alpha beta)``.

With ``A(beta) = n s/(2 beta) + n beta/(2 r) - n`` the joint posterior is
proportional to
``prod(beta + t_i) exp(-A(beta)/alpha^2) / (alpha^(n+1) beta^(n/2+1) H(alpha^2))``
where ``H = (1/alpha^2 + 1/4)^(-1/2)`` for the Jeffreys prior and 1 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .complete import _data, fisher_info, mle, sample_stats
from .core import BsParams
from .numerics import ConvergenceError, DomainError

__all__ = [
    "PRIORS",
    "PosteriorSummary",
    "log_posterior",
    "marginal_posterior",
    "posterior_mode",
    "lindley_estimates",
    "posterior_sample",
    "geweke_z",
]

PRIORS = ("jeffreys", "reference")


@dataclass
class PosteriorSummary:
    mode_alpha: float
    mode_beta: float
    mean_alpha: float | None = None
    mean_beta: float | None = None
    level: float | None = None
    ci_alpha: tuple | None = None
    ci_beta: tuple | None = None
    chain_length: int = 0
    acceptance: tuple = ()
    chains: np.ndarray | None = field(default=None, repr=False)


def _check_prior(prior: str):
    if prior not in PRIORS:
        raise DomainError(f"prior must be one of {PRIORS}")


def log_posterior(alpha, beta, data, prior: str = "reference"):
    """Unnormalized joint log posterior (vectorised over alpha and beta)."""
    _check_prior(prior)
    t = _data(data)
    st = sample_stats(t)
    n = st.n
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    A = n * st.s / (2 * beta) + n * beta / (2 * st.r) - n
    lp_b = np.log(beta[..., None] + t).sum(axis=-1) if beta.ndim else float(np.sum(np.log(beta + t)))
    out = lp_b - A / alpha**2 - (n + 1) * np.log(alpha) - (n / 2 + 1) * np.log(beta)
    if prior == "jeffreys":
        out = out + 0.5 * np.log(1.0 / alpha**2 + 0.25)
    return out


def marginal_posterior(data, prior: str = "reference", which: str = "alpha"):
    """Approximate (Laplace) marginal log posterior of alpha or beta.

    Returns a function of the parameter value giving the unnormalized log
    density.
    """
    _check_prior(prior)
    st = sample_stats(data)
    t = st.sorted
    n = st.n
    c = math.sqrt(st.s / st.r) - 1.0
    if which == "alpha":
        if prior == "jeffreys":
            return lambda a: -(n + 1) * np.log(a) + 0.5 * np.log(4 + np.asarray(a) ** 2) - n * c / np.asarray(a) ** 2
        return lambda a: -n * np.log(a) - n * c / np.asarray(a) ** 2
    if which != "beta":
        raise DomainError("which must be 'alpha' or 'beta'")

    def base(b):
        b = np.asarray(b, dtype=float)
        u = st.s / (2 * b) + b / (2 * st.r) - 1.0
        lprod = np.log(b[..., None] + t).sum(axis=-1) if b.ndim else float(np.sum(np.log(b + t)))
        return b, u, lprod - (n / 2 + 1) * np.log(b)

    if prior == "jeffreys":
        def f(b):
            b, u, lb = base(b)
            return lb + 0.5 * np.log(4 + 2 * n / (n + 2) * u) - (n + 1) / 2 * np.log(u)
    else:
        def f(b):
            b, u, lb = base(b)
            return lb - n / 2 * np.log(u)
    return f


def _argmax(f, center, width):
    res = optimize.minimize_scalar(lambda x: -f(math.exp(x)),
                                   bracket=(math.log(center) - width, math.log(center), math.log(center) + width))
    if not res.success:
        raise ConvergenceError("posterior mode search failed", res)
    return math.exp(res.x)


def posterior_mode(data, prior: str = "reference") -> PosteriorSummary:
    """Modes of the approximate marginal posteriors."""
    t = _data(data)
    fit = mle(t)
    fa = marginal_posterior(t, prior, "alpha")
    fb = marginal_posterior(t, prior, "beta")
    return PosteriorSummary(_argmax(fa, fit.alpha, 0.1), _argmax(fb, fit.beta, 0.05))


def lindley_estimates(data) -> tuple[float, float]:
    """Lindley approximations to the posterior means under the reference prior.

    ``u_B = u + sum_j rho_j sigma_uj + 1/2 sum L_ijk sigma_ij sigma_ku`` with
    ``rho = -log(alpha) - log(beta)``, third log-likelihood derivatives
    ``L_ijk`` at the MLE and ``sigma`` the inverse expected information.
    """
    t = _data(data)
    fit = mle(t)
    a, b = fit.alpha, fit.beta
    n = t.size
    S = float(np.sum(t / b + b / t - 2.0))
    S_b = float(np.sum(1.0 / t - t / b**2))
    info = fisher_info(BsParams(a, b), n).matrix
    s_aa = 1.0 / info[0, 0]
    s_bb = 1.0 / info[1, 1]
    l_aaa = -2.0 * n / a**3 + 12.0 * S / a**5
    l_abb = float(np.sum(2.0 * t / (a**3 * b**3)))
    l_aab = -3.0 * S_b / a**4
    l_bbb = -n / b**3 + float(np.sum(2.0 / (b + t) ** 3)) + float(np.sum(3.0 * t / (a * a * b**4)))
    alpha_b = a - s_aa / a + 0.5 * (l_aaa * s_aa**2 + l_abb * s_aa * s_bb)
    beta_b = b - s_bb / b + 0.5 * (l_bbb * s_bb**2 + l_aab * s_aa * s_bb)
    return alpha_b, beta_b


def posterior_sample(data, prior: str = "reference", chain: int = 20000, seed=None,
                     burn_in: float = 0.2, level: float = 0.95, init: BsParams | None = None
                     ) -> PosteriorSummary:
    """Metropolis-within-Gibbs sampler for the joint posterior.

    Each sweep updates log(alpha) and then log(beta) with Gaussian random
    walk proposals.  Step sizes adapt during burn-in towards an acceptance
    rate near 0.4 and are frozen afterwards.
    """
    _check_prior(prior)
    if chain < 1000:
        raise DomainError("chain length must be at least 1000")
    t = _data(data)
    st = sample_stats(t)
    if st.s - st.r <= 1e-14 * st.s:
        raise DomainError("degenerate data: all observations equal")
    rng = np.random.default_rng(seed)
    fit = init or mle(t).params
    x = np.array([math.log(fit.alpha), math.log(fit.beta)])
    n = t.size
    step = np.array([1.0 / math.sqrt(2 * n), fit.alpha / math.sqrt(n)]) * 2.4

    jeff = prior == "jeffreys"

    def lp(v):
        # log posterior in log-parameters, including the Jacobian
        a, b = math.exp(v[0]), math.exp(v[1])
        A = n * st.s / (2 * b) + n * b / (2 * st.r) - n
        out = float(np.log(b + t).sum()) - A / (a * a) - n * v[0] - (n / 2) * v[1]
        if jeff:
            out += 0.5 * math.log(1.0 / (a * a) + 0.25)
        return out

    cur = lp(x)
    nburn = int(burn_in * chain)
    out = np.empty((chain, 2))
    acc = np.zeros(2)
    acc_win = np.zeros(2)
    for it in range(chain + nburn):
        for k in range(2):
            prop = x.copy()
            prop[k] += step[k] * rng.standard_normal()
            new = lp(prop)
            if math.log(rng.random()) < new - cur:
                x, cur = prop, new
                acc_win[k] += 1
                if it >= nburn:
                    acc[k] += 1
        if it < nburn and (it + 1) % 50 == 0:
            rate = acc_win / 50.0
            step *= np.exp(rate - 0.4)
            acc_win[:] = 0
        if it >= nburn:
            out[it - nburn] = np.exp(x)
    q = [(1 - level) / 2, 1 - (1 - level) / 2]
    mode = posterior_mode(t, prior)
    return PosteriorSummary(
        mode.mode_alpha, mode.mode_beta,
        float(out[:, 0].mean()), float(out[:, 1].mean()), level,
        tuple(np.quantile(out[:, 0], q)), tuple(np.quantile(out[:, 1], q)),
        chain, tuple(acc / chain), out,
    )


def geweke_z(x, first: float = 0.1, last: float = 0.5) -> float:
    """Geweke z-score comparing early and late chain segments.

    Segment variances use batch means to account for autocorrelation.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    a = x[: int(first * n)]
    b = x[int((1 - last) * n):]

    def var_mean(y):
        nb = 20
        m = y.size // nb
        means = y[: m * nb].reshape(nb, m).mean(axis=1)
        return means.var(ddof=1) / nb

    return float((a.mean() - b.mean()) / math.sqrt(var_mean(a) + var_mean(b)))
