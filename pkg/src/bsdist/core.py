"""The univariate Birnbaum-Saunders law BS(alpha, beta).

``T ~ BS(alpha, beta)`` when ``(1/alpha) * eps(T/beta)`` is standard normal,
with ``eps(t) = sqrt(t) - 1/sqrt(t)``.  ``alpha`` is a shape parameter and
``beta`` is both the scale and the median.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    ConvergenceError,
    DomainError,
    RootBracket,
    norm_cdf,
    norm_logcdf,
    norm_pdf,
    norm_sf,
    solve_root,
    std_normal_quantile,
)

__all__ = [
    "BsParams",
    "MomentsSummary",
    "eps",
    "eps_prime",
    "eps_dprime",
    "pdf",
    "logpdf",
    "cdf",
    "sf",
    "quantile",
    "hazard",
    "mode",
    "hazard_change_point",
    "sample",
    "sample_chisq_route",
    "transform_from_normal",
    "moment",
    "describe",
    "reciprocal",
]


@dataclass(frozen=True)
class BsParams:
    """Shape `alpha` and scale `beta` of a BS law."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"BS parameters must be positive, got {self.alpha}, {self.beta}")
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise DomainError("BS parameters must be finite")


@dataclass(frozen=True)
class MomentsSummary:
    mean: float
    variance: float
    cv: float
    skewness: float
    kurtosis: float


def eps(t):
    """``sqrt(t) - 1/sqrt(t)``."""
    s = np.sqrt(t)
    return s - 1.0 / s


def eps_prime(t):
    s = np.sqrt(t)
    return (s + 1.0 / s) / (2.0 * t)


def eps_dprime(t):
    s = np.sqrt(t)
    return -(s + 3.0 / s) / (4.0 * t * t)


def _positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("BS support is t > 0")
    return t


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def logpdf(p: BsParams, t):
    """Log density."""
    x = _positive(t) / p.beta
    s = np.sqrt(x)
    z = (s - 1.0 / s) / p.alpha
    out = (np.log(s + 1.0 / s) - np.log(2.0 * x) - math.log(p.alpha * p.beta)
           - 0.5 * z * z - 0.5 * math.log(2.0 * math.pi))
    return _ret(out)


def pdf(p: BsParams, t):
    """Density ``phi(eps(t/beta)/alpha) * eps'(t/beta) / (alpha beta)``."""
    return _ret(np.exp(logpdf(p, t)))


def cdf(p: BsParams, t):
    x = _positive(t) / p.beta
    return _ret(norm_cdf(eps(x) / p.alpha))


def sf(p: BsParams, t):
    x = _positive(t) / p.beta
    return _ret(norm_sf(eps(x) / p.alpha))


def transform_from_normal(alpha: float, beta: float, z):
    """Map standard normal values to BS(alpha, beta) values."""
    a = alpha * np.asarray(z, dtype=float) / 2.0
    # sqrt(a^2+1)+a loses accuracy for large negative a; use its reciprocal form
    r = np.where(a >= 0, a + np.sqrt(a * a + 1.0), 1.0 / (np.sqrt(a * a + 1.0) - a))
    return beta * r * r


def quantile(p: BsParams, q):
    """``(beta/4) * (alpha z_q + sqrt((alpha z_q)^2 + 4))^2``."""
    z = std_normal_quantile(q)
    return _ret(transform_from_normal(p.alpha, p.beta, z))


def hazard(p: BsParams, t):
    """Hazard rate ``pdf / (1 - cdf)``, computed on the log scale."""
    x = _positive(t) / p.beta
    z = eps(x) / p.alpha
    lh = logpdf(p, np.asarray(t, dtype=float)) - norm_logcdf(-z)
    return _ret(np.exp(lh))


def _mode_cubic(alpha: float):
    a2 = alpha * alpha
    return lambda t: ((t + (a2 + 1.0)) * t + (3.0 * a2 - 1.0)) * t - 1.0


def mode(p: BsParams) -> float:
    """Mode ``beta * m`` with m the positive root of the cubic
    ``t^3 + (alpha^2+1) t^2 + (3 alpha^2 - 1) t - 1 = 0``.
    """
    f = _mode_cubic(p.alpha)
    # f(0) = -1 and f(1) = 4 alpha^2 + 2 > 0: the positive root lies in (0, 1)
    return p.beta * solve_root(f, RootBracket(0.0, 1.0, tol=1e-15))


def _change_point_eq(alpha: float):
    # the change-point equation divided by Phi(-eps/alpha), which keeps it
    # finite far in the tail where Phi and phi both underflow
    def g(t):
        e = float(eps(t))
        e1 = float(eps_prime(t))
        e2 = float(eps_dprime(t))
        z = -e / alpha
        mills = math.exp(-0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - float(norm_logcdf(z)))
        return -e1 * e1 * e + alpha * alpha * e2 + alpha * mills * e1 * e1

    return g


def hazard_change_point(p: BsParams, approx: bool = False) -> float:
    """Location of the maximum of the hazard rate.

    With ``approx=True`` the closed-form approximation
    ``beta / (-0.4604 + 1.8417 alpha)^2`` is returned (valid for alpha > 0.25).
    """
    if approx:
        if p.alpha <= 0.25:
            raise DomainError("the approximation requires alpha > 0.25")
        return p.beta / (-0.4604 + 1.8417 * p.alpha) ** 2
    g = _change_point_eq(p.alpha)
    lo = mode(BsParams(p.alpha, 1.0))
    # g is a rescaled derivative of the log-hazard, positive before the peak.
    # Far in the tail its terms cancel to rounding level, so walk up from the
    # mode in small geometric steps and stop at the first sign change.
    hi = lo * 1.05
    while g(hi) > 0:
        lo, hi = hi, hi * 1.05
        if hi > 1e12:
            raise ConvergenceError("hazard change point not bracketed")
    return p.beta * solve_root(g, RootBracket(lo, hi, tol=1e-14))


def sample(p: BsParams, n: int, seed=None) -> np.ndarray:
    """Draw `n` variates through the normal transform."""
    rng = np.random.default_rng(seed)
    return transform_from_normal(p.alpha, p.beta, rng.standard_normal(n))


def sample_chisq_route(p: BsParams, n: int, seed=None) -> np.ndarray:
    """Draw `n` variates from a chi-square(1) variate and a fair coin.

    ``t/beta + beta/t - 2 = alpha^2 W`` has two roots ``beta x`` and
    ``beta / x``; each is chosen with probability one half.
    """
    rng = np.random.default_rng(seed)
    w = rng.chisquare(1.0, n)
    c = 1.0 + p.alpha * p.alpha * w / 2.0
    big = c + np.sqrt(c * c - 1.0)
    flip = rng.random(n) < 0.5
    return p.beta * np.where(flip, big, 1.0 / big)


def _moment_unit(alpha: float, r: int) -> float:
    total = 0.0
    for j in range(r + 1):
        inner = 0.0
        for i in range(j + 1):
            k = r - j + i
            # (2k)! / (2^k k!) is E(Z^(2k))
            inner += math.comb(j, i) * math.factorial(2 * k) / (2.0**k * math.factorial(k)) * (alpha / 2.0) ** (2 * k)
        total += math.comb(2 * r, 2 * j) * inner
    return total


def moment(p: BsParams, r: int) -> float:
    """E(T^r) for a nonzero integer r."""
    if int(r) != r or r == 0:
        raise DomainError("moment order must be a nonzero integer")
    r = int(r)
    if r > 0:
        return p.beta**r * _moment_unit(p.alpha, r)
    return p.beta**r * _moment_unit(p.alpha, -r)


def describe(p: BsParams) -> MomentsSummary:
    """Mean, variance, coefficient of variation, skewness and kurtosis."""
    a2 = p.alpha**2
    mean = p.beta * (a2 + 2.0) / 2.0
    var = p.beta**2 * (5.0 * a2 * a2 + 4.0 * a2) / 4.0
    cv = math.sqrt(5.0 * a2 * a2 + 4.0 * a2) / (a2 + 2.0)
    skew = (44.0 * a2 * p.alpha + 24.0 * p.alpha) / (5.0 * a2 + 4.0) ** 1.5
    kurt = 3.0 + (558.0 * a2 * a2 + 240.0 * a2) / (5.0 * a2 + 4.0) ** 2
    return MomentsSummary(mean, var, cv, skew, kurt)


def reciprocal(p: BsParams) -> BsParams:
    """Law of 1/T: BS(alpha, 1/beta)."""
    return BsParams(p.alpha, 1.0 / p.beta)
