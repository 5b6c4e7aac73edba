"""Distributions built from the BS construction.

* sinh-normal ``SN(alpha, gamma, sigma)``: ``(2/alpha) sinh((Y - gamma)/sigma)``
  is standard normal; ``log T ~ SN(alpha, log beta, 2)`` for ``T ~ BS(alpha, beta)``.
* bivariate sinh-normal, the law of the logarithm of a bivariate BS vector.
* length-biased BS ``LBS(alpha, beta)`` with density ``t f_BS(t) / E(T)``.
* epsilon-generalized BS ``EGBS(alpha, beta, epsilon)``: BS transform of an
  epsilon-skew symmetric variable.
* generalized BS with an elliptical kernel, univariate, multivariate and
  matrix-variate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

from . import core
from .core import BsParams, eps, eps_prime, transform_from_normal
from .multivariate import MvBsParams, mv_mle
from .numerics import (
    ConvergenceError,
    DomainError,
    NonexistenceError,
    bvn_cdf,
    cholesky,
    log_bessel_k,
    norm_cdf,
)

__all__ = [
    "SnParams",
    "SnFit",
    "sn_pdf",
    "sn_logpdf",
    "sn_cdf",
    "sn_sample",
    "sn_mgf",
    "sn_loglik",
    "sn_alpha_profile",
    "sn_mle",
    "BsnParams",
    "bsn_pdf",
    "bsn_cdf",
    "bsn_sample",
    "LbsParams",
    "LbsFit",
    "lbs_pdf",
    "lbs_logpdf",
    "lbs_cdf",
    "lbs_mode",
    "lbs_moment",
    "lbs_loglik",
    "lbs_hessian",
    "lbs_fisher",
    "lbs_mle",
    "lbs_sample",
    "GbsKernel",
    "EgbsParams",
    "egbs_pdf",
    "egbs_cdf",
    "egbs_sample",
    "egbs_moment",
    "egbs_scale",
    "egbs_reciprocal",
    "egbs_loglik",
    "egbs_mle",
    "gbs_pdf",
    "gbs_logpdf",
    "gbs_sample",
    "mgbs_logpdf",
    "mgbs_pdf",
    "mgbs_loglik",
    "mgbs_mle",
    "mgbs_profile_nu",
    "matrix_gbs_logpdf",
    "matrix_gbs_pdf",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


# ---------------------------------------------------------------------------
# sinh-normal

@dataclass(frozen=True)
class SnParams:
    """Shape `alpha`, location `gamma` and scale `sigma` of a sinh-normal law."""

    alpha: float
    gamma: float = 0.0
    sigma: float = 2.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.sigma > 0):
            raise DomainError("sinh-normal alpha and sigma must be positive")
        if not all(math.isfinite(v) for v in (self.alpha, self.gamma, self.sigma)):
            raise DomainError("sinh-normal parameters must be finite")

    @classmethod
    def from_bs(cls, p: BsParams) -> "SnParams":
        """Law of ``log T`` for ``T ~ BS(p)``."""
        return cls(p.alpha, math.log(p.beta), 2.0)


@dataclass
class SnFit:
    params: SnParams
    loglik: float
    n: int
    sigma_fixed: bool
    iterations: int = 0


def _sn_parts(p: SnParams, y):
    u = (np.asarray(y, dtype=float) - p.gamma) / p.sigma
    with np.errstate(over="ignore"):
        return u, (2.0 / p.alpha) * np.sinh(u)


def _log_cosh(u):
    a = np.abs(u)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def sn_logpdf(p: SnParams, y):
    u, z = _sn_parts(p, y)
    with np.errstate(over="ignore"):
        out = math.log(2.0 / (p.alpha * p.sigma)) + _log_cosh(u) - 0.5 * z * z - 0.5 * _LOG_2PI
    return _ret(out)


def sn_pdf(p: SnParams, y):
    """``(2/(alpha sigma)) cosh(u) phi((2/alpha) sinh(u))`` with ``u = (y - gamma)/sigma``."""
    return _ret(np.exp(sn_logpdf(p, y)))


def sn_cdf(p: SnParams, y):
    return _ret(norm_cdf(_sn_parts(p, y)[1]))


def sn_sample(p: SnParams, n: int, seed=None) -> np.ndarray:
    """``gamma + sigma asinh(alpha Z / 2)`` with ``Z`` standard normal."""
    rng = np.random.default_rng(seed)
    return p.gamma + p.sigma * np.arcsinh(p.alpha * rng.standard_normal(n) / 2.0)


def sn_mgf(p: SnParams, s: float) -> float:
    """Moment generating function.

    ``e^(gamma s) [K_a(alpha^-2) + K_b(alpha^-2)] / (2 K_(1/2)(alpha^-2))``
    with ``a = (sigma s + 1)/2`` and ``b = (sigma s - 1)/2``.  The tails of
    the law are exponentially thin, so the transform is finite for every
    real ``s``.
    """
    s = float(s)
    if not math.isfinite(s):
        raise DomainError("mgf argument must be finite")
    w = p.alpha ** -2
    ref = log_bessel_k(0.5, w)
    la = log_bessel_k((p.sigma * s + 1.0) / 2.0, w) - ref
    lb = log_bessel_k((p.sigma * s - 1.0) / 2.0, w) - ref
    m = max(la, lb)
    return math.exp(p.gamma * s + m + math.log(0.5 * (math.exp(la - m) + math.exp(lb - m))))


def _finite(data, name="data") -> np.ndarray:
    y = np.asarray(data, dtype=float).ravel()
    if y.size == 0 or np.any(~np.isfinite(y)):
        raise DomainError(f"{name} must be a non-empty finite sample")
    return y


def sn_loglik(p: SnParams, data) -> float:
    return float(np.sum(sn_logpdf(p, _finite(data))))


def sn_alpha_profile(data, gamma: float, sigma: float) -> float:
    """ML estimate of alpha for fixed location and scale, ``sqrt((4/n) sum sinh^2)``."""
    y = _finite(data)
    return float(math.sqrt(4.0 * np.mean(np.sinh((y - gamma) / sigma) ** 2)))


def _sn_profile(y, gamma, sigma):
    a = sn_alpha_profile(y, gamma, sigma)
    if not a > 0 or not math.isfinite(a):
        return -math.inf
    return sn_loglik(SnParams(a, gamma, sigma), y)


def sn_mle(data, sigma: float | None = None) -> SnFit:
    """ML fit of the sinh-normal law.

    alpha is profiled out in closed form.  With `sigma` given, the location
    is found by a grid scan followed by a bounded refinement; otherwise
    ``(gamma, log sigma)`` are maximised jointly by Nelder-Mead from the best
    grid location at ``sigma = 2``.

    Raises
    ------
    DomainError
        Fewer than three observations or a constant sample.
    ConvergenceError
        If the joint search fails.
    NonexistenceError
        If the free-scale likelihood is maximised only in the normal limit.
    """
    y = _finite(data)
    if y.size < 3:
        raise DomainError("sinh-normal fit needs at least three observations")
    spread = float(y.max() - y.min())
    if spread <= 0:
        raise DomainError("constant sample")
    s0 = 2.0 if sigma is None else float(sigma)
    if not s0 > 0:
        raise DomainError("sigma must be positive")

    grid = np.linspace(y.min(), y.max(), 201)
    vals = [_sn_profile(y, g, s0) for g in grid]
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda g: -_sn_profile(y, g, s0), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12 * max(1.0, abs(grid[k]))})
    g_hat = float(res.x)
    if sigma is not None:
        a = sn_alpha_profile(y, g_hat, s0)
        return SnFit(SnParams(a, g_hat, s0), -float(res.fun), y.size, True, int(res.nfev))

    def nll(x):
        v = _sn_profile(y, x[0], math.exp(x[1]))
        return -v if math.isfinite(v) else 1e300

    res2 = optimize.minimize(nll, [g_hat, math.log(s0)], method="Nelder-Mead",
                             options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
    if not res2.success:
        raise ConvergenceError("sinh-normal fit did not converge", res2)
    g_hat, sig = float(res2.x[0]), math.exp(res2.x[1])
    a = sn_alpha_profile(y, g_hat, sig)
    if a < 1e-5:
        # sigma asinh(alpha z/2) tends to a normal law as alpha -> 0 with alpha sigma fixed
        raise NonexistenceError(
            f"likelihood increases towards the normal limit (alpha={a:.3g}, sigma={sig:.3g}); fix sigma")
    return SnFit(SnParams(a, g_hat, sig), -float(res2.fun), y.size, False, int(res2.nit))


# ---------------------------------------------------------------------------
# bivariate sinh-normal

@dataclass(frozen=True)
class BsnParams:
    first: SnParams
    second: SnParams
    rho: float

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise DomainError("rho must lie in (-1, 1)")

    @classmethod
    def from_bs(cls, mp: MvBsParams) -> "BsnParams":
        """Law of the coordinate-wise logarithm of a bivariate BS vector."""
        if mp.p != 2:
            raise DomainError("need a bivariate BS law")
        return cls(SnParams(mp.alpha[0], math.log(mp.beta[0]), 2.0),
                   SnParams(mp.alpha[1], math.log(mp.beta[1]), 2.0), float(mp.gamma[0, 1]))


def _pairs(y):
    y = np.asarray(y, dtype=float)
    y2 = np.atleast_2d(y)
    if y2.shape[-1] != 2:
        raise DomainError("expected two coordinates")
    return y2


def bsn_pdf(p: BsnParams, y):
    """``phi_2(z1, z2; rho) prod (2/(alpha_j sigma_j)) cosh(u_j)``."""
    y2 = _pairs(y)
    u1, z1 = _sn_parts(p.first, y2[:, 0])
    u2, z2 = _sn_parts(p.second, y2[:, 1])
    r = p.rho
    q = (z1 * z1 - 2 * r * z1 * z2 + z2 * z2) / (1 - r * r)
    lp = (-0.5 * q - _LOG_2PI - 0.5 * math.log(1 - r * r)
          + math.log(2.0 / (p.first.alpha * p.first.sigma)) + _log_cosh(u1)
          + math.log(2.0 / (p.second.alpha * p.second.sigma)) + _log_cosh(u2))
    out = np.exp(lp)
    return float(out[0]) if np.ndim(y) == 1 else out


def bsn_cdf(p: BsnParams, y) -> float:
    y2 = _pairs(y)[0]
    z1 = _sn_parts(p.first, y2[0])[1]
    z2 = _sn_parts(p.second, y2[1])[1]
    return bvn_cdf(float(z1), float(z2), p.rho)


def bsn_sample(p: BsnParams, n: int, seed=None) -> np.ndarray:
    """Correlated normals mapped through ``gamma + sigma asinh(alpha z / 2)``."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    z2 = p.rho * z[:, 0] + math.sqrt(1 - p.rho**2) * z[:, 1]
    return np.column_stack([
        p.first.gamma + p.first.sigma * np.arcsinh(p.first.alpha * z[:, 0] / 2.0),
        p.second.gamma + p.second.sigma * np.arcsinh(p.second.alpha * z2 / 2.0),
    ])


# ---------------------------------------------------------------------------
# length-biased BS

@dataclass(frozen=True)
class LbsParams:
    alpha: float
    beta: float

    def __post_init__(self):
        BsParams(self.alpha, self.beta)

    @property
    def bs(self) -> BsParams:
        return BsParams(self.alpha, self.beta)

    @property
    def parent_mean(self) -> float:
        """Mean of the BS law being length-biased, ``beta (alpha^2 + 2)/2``."""
        return self.beta * (self.alpha**2 + 2.0) / 2.0


@dataclass
class LbsFit:
    params: LbsParams
    loglik: float
    n: int
    se_alpha: float
    se_beta: float
    cov: np.ndarray = field(repr=False)
    iterations: int = 0


def lbs_logpdf(p: LbsParams, t):
    t = core._positive(t)
    return _ret(np.log(t) + core.logpdf(p.bs, t) - math.log(p.parent_mean))


def lbs_pdf(p: LbsParams, t):
    return _ret(np.exp(lbs_logpdf(p, t)))


def lbs_cdf(p: LbsParams, t):
    """``E[T 1(T <= t)] / E(T)`` under the parent BS law, by quadrature on the normal scale."""
    t = core._positive(t)

    def one(x):
        # the normal weight is negligible beyond |z| = 40
        zc = min(float(eps(x / p.beta) / p.alpha), 40.0)
        if zc <= -40.0:
            return 0.0
        val, _ = integrate.quad(
            lambda z: transform_from_normal(p.alpha, 1.0, z) * math.exp(-0.5 * z * z),
            -40.0, zc, points=[0.0] if zc > 0 else None, epsabs=0.0, epsrel=1e-12, limit=200)
        return p.beta * val / math.sqrt(2 * math.pi) / p.parent_mean

    return _ret(np.vectorize(one)(t))


def lbs_mode(p: LbsParams) -> float:
    """Mode: the positive root of
    ``t^3 + beta (1 - alpha^2) t^2 - beta^2 (1 - alpha^2) t - beta^3 = 0``
    of largest density."""
    a2 = p.alpha**2
    roots = np.roots([1.0, 1.0 - a2, -(1.0 - a2), -1.0])
    pos = [r.real for r in roots if abs(r.imag) < 1e-10 and r.real > 0]
    cand = [p.beta * r for r in pos]
    return float(max(cand, key=lambda x: lbs_logpdf(p, x)))


def lbs_moment(p: LbsParams, r: int) -> float:
    """``E(T^r) = E(Y^(r+1)) / E(Y)`` with ``Y`` the parent BS variable."""
    if int(r) != r or r < 1:
        raise DomainError("moment order must be a positive integer")
    return core.moment(p.bs, int(r) + 1) / p.parent_mean


def lbs_loglik(p: LbsParams, data) -> float:
    """``-n log(alpha^3 + 2 alpha) - (3n/2) log beta + sum log(t + beta)
    - (1/2) sum log t - sum (t/beta + beta/t - 2)/(2 alpha^2)`` plus a constant."""
    t = core._positive(np.asarray(data, dtype=float).ravel())
    return float(np.sum(lbs_logpdf(p, t)))


def lbs_hessian(p: LbsParams, data) -> np.ndarray:
    """Second derivatives of the log-likelihood in ``(alpha, beta)``."""
    t = core._positive(np.asarray(data, dtype=float).ravel())
    a, b = p.alpha, p.beta
    n = t.size
    s11 = 3.0 * np.sum(2.0 - t / b - b / t) / a**4 + n * (3 * a**4 + 4) / (2 * a + a**3) ** 2
    s12 = np.sum(1.0 / t - t / b**2) / a**3
    s22 = 3.0 * n / (2 * b * b) - np.sum(t / (a * a * b**3) + 1.0 / (t + b) ** 2)
    return np.array([[s11, s12], [s12, s22]])


def lbs_fisher(p: LbsParams, data) -> np.ndarray:
    """Observed information ``-H``; its inverse estimates the ML covariance."""
    return -lbs_hessian(p, data)


def lbs_mle(data, init: LbsParams | None = None) -> LbsFit:
    """ML fit by quasi-Newton on ``(log alpha, log beta)``.

    Starts from the BS moment-type estimates of the data rescaled for the
    length bias unless `init` is given.
    """
    t = core._positive(np.asarray(data, dtype=float).ravel())
    if t.size < 3 or np.ptp(t) <= 0:
        raise DomainError("LBS fit needs at least three distinct observations")
    if init is None:
        s, r = float(t.mean()), float(1.0 / np.mean(1.0 / t))
        init = LbsParams(math.sqrt(max(2.0 * (math.sqrt(s / r) - 1.0), 1e-4)), math.sqrt(s * r))

    def nll(x):
        return -lbs_loglik(LbsParams(math.exp(x[0]), math.exp(x[1])), t)

    res = optimize.minimize(nll, [math.log(init.alpha), math.log(init.beta)], method="BFGS",
                            options={"gtol": 1e-10})
    if not (res.success or res.status == 2):
        raise ConvergenceError("LBS fit did not converge", res)
    p = LbsParams(math.exp(res.x[0]), math.exp(res.x[1]))
    info = lbs_fisher(p, t)
    cov = np.linalg.inv(info)
    return LbsFit(p, -float(res.fun), t.size, math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]), cov,
                  int(res.nit))


def lbs_sample(p: LbsParams, n: int, seed=None) -> np.ndarray:
    """Two-component generalized inverse Gaussian mixture.

    The BS law is an equal mixture of ``IG(beta, beta/alpha^2)`` and its
    length-biased version; length-biasing each part gives GIG laws of index
    1/2 and 3/2 with weights ``1/(2 + alpha^2)`` and ``(1 + alpha^2)/(2 + alpha^2)``.
    """
    from scipy.stats import geninvgauss

    rng = np.random.default_rng(seed)
    b = p.alpha**-2
    w1 = 1.0 / (2.0 + p.alpha**2)
    first = rng.random(n) < w1
    out = np.empty(n)
    k = int(first.sum())
    out[first] = geninvgauss.rvs(0.5, b, scale=p.beta, size=k, random_state=rng)
    out[~first] = geninvgauss.rvs(1.5, b, scale=p.beta, size=n - k, random_state=rng)
    return out


# ---------------------------------------------------------------------------
# elliptical kernels

@dataclass(frozen=True)
class GbsKernel:
    """Density generator of a symmetric (elliptical) law.

    A p-dimensional vector with this kernel and identity dispersion has
    density ``h_p(x^T x)``.  Built-in tags carry exact constants:

    ``normal``     ``h_p(u) = (2 pi)^(-p/2) exp(-u/2)``
    ``student_t``  ``h_p(u) = G((nu+p)/2) / (G(nu/2) (nu pi)^(p/2)) (1 + u/nu)^(-(nu+p)/2)``
    ``custom``     univariate only, ``h_1(u) = c g(u)``; checked for
                   normalisation at construction.
    """

    tag: str = "normal"
    nu: float | None = None
    log_g: Callable | None = field(default=None, repr=False)
    c: float | None = None

    def __post_init__(self):
        if self.tag == "normal":
            return
        if self.tag == "student_t":
            if self.nu is None or not self.nu > 0:
                raise DomainError("student_t kernel needs nu > 0")
            return
        if self.tag != "custom":
            raise DomainError(f"unknown kernel {self.tag!r}")
        if self.log_g is None or self.c is None or not self.c > 0:
            raise DomainError("custom kernel needs log_g and a positive constant c")
        total, _ = integrate.quad(lambda x: self.c * math.exp(self.log_g(x * x)), -math.inf, math.inf,
                                  epsabs=1e-12, epsrel=1e-10, limit=400)
        if abs(total - 1.0) > 1e-6:
            raise DomainError(f"custom kernel integrates to {total:.8g}, not 1")

    @classmethod
    def normal(cls) -> "GbsKernel":
        return cls("normal")

    @classmethod
    def student_t(cls, nu: float) -> "GbsKernel":
        return cls("student_t", nu=float(nu))

    @classmethod
    def custom(cls, log_g: Callable, c: float) -> "GbsKernel":
        return cls("custom", log_g=log_g, c=float(c))

    def log_h(self, u, p: int = 1):
        u = np.asarray(u, dtype=float)
        if self.tag == "normal":
            return -0.5 * p * _LOG_2PI - 0.5 * u
        if self.tag == "student_t":
            nu = self.nu
            return (special.gammaln((nu + p) / 2.0) - special.gammaln(nu / 2.0)
                    - 0.5 * p * math.log(nu * math.pi) - 0.5 * (nu + p) * np.log1p(u / nu))
        if p != 1:
            raise DomainError("custom kernels are univariate")
        return math.log(self.c) + np.vectorize(self.log_g, otypes=[float])(u)

    def logpdf(self, x):
        """Univariate log density of the symmetric base law."""
        x = np.asarray(x, dtype=float)
        return self.log_h(x * x, 1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "normal":
            return norm_cdf(x)
        if self.tag == "student_t":
            return special.stdtr(self.nu, x)

        def one(v):
            part, _ = integrate.quad(lambda s: math.exp(float(self.logpdf(s))), 0.0, abs(v),
                                     epsabs=1e-13, epsrel=1e-11, limit=200)
            return 0.5 + math.copysign(part, v)

        return np.vectorize(one, otypes=[float])(x)

    def sample(self, n: int, rng) -> np.ndarray:
        if self.tag == "normal":
            return rng.standard_normal(n)
        if self.tag == "student_t":
            return rng.standard_t(self.nu, n)
        # inverse cdf on a tabulated grid
        grid = np.linspace(-40.0, 40.0, 8001)
        F = self.cdf(grid)
        F, idx = np.unique(F, return_index=True)
        return np.interp(rng.random(n), F, grid[idx])


# ---------------------------------------------------------------------------
# generalized BS with an elliptical kernel

def gbs_logpdf(alpha: float, beta: float, kernel: GbsKernel, t):
    BsParams(alpha, beta)
    t = core._positive(t)
    q = eps(t / beta) ** 2 / alpha**2
    out = kernel.log_h(q, 1) + np.log(t + beta) - 1.5 * np.log(t) - math.log(2 * alpha * math.sqrt(beta))
    return _ret(out)


def gbs_pdf(alpha: float, beta: float, kernel: GbsKernel, t):
    """``(c/(2 alpha sqrt(beta))) t^(-3/2) (t + beta) g(eps(t/beta)^2 / alpha^2)``."""
    return _ret(np.exp(gbs_logpdf(alpha, beta, kernel, t)))


def gbs_sample(alpha: float, beta: float, kernel: GbsKernel, n: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return transform_from_normal(alpha, beta, kernel.sample(n, rng))


def _mv_rows(mp: MvBsParams, t):
    t2 = np.atleast_2d(np.asarray(t, dtype=float))
    if t2.shape[-1] != mp.p:
        raise DomainError(f"expected {mp.p} coordinates, got {t2.shape[-1]}")
    if np.any(~(t2 > 0)):
        raise DomainError("all coordinates must be positive")
    return t2


def mgbs_logpdf(mp: MvBsParams, kernel: GbsKernel, t):
    """``|Gamma|^(-1/2) h_p(v^T Gamma^-1 v) prod eps'(t_j/beta_j)/(alpha_j beta_j)``."""
    t2 = _mv_rows(mp, t)
    v = eps(t2 / mp.beta) / mp.alpha
    L = cholesky(mp.gamma)
    w = np.linalg.solve(L, v.T)
    u = np.sum(w * w, axis=0)
    jac = np.sum(np.log(eps_prime(t2 / mp.beta)) - np.log(mp.alpha * mp.beta), axis=-1)
    out = kernel.log_h(u, mp.p) - np.sum(np.log(np.diag(L))) + jac
    return float(out[0]) if np.ndim(t) == 1 else out


def mgbs_pdf(mp: MvBsParams, kernel: GbsKernel, t):
    return np.exp(mgbs_logpdf(mp, kernel, t))


def mgbs_loglik(mp: MvBsParams, kernel: GbsKernel, data) -> float:
    return float(np.sum(mgbs_logpdf(mp, kernel, np.atleast_2d(data))))


def _corr_from_free(x, p):
    """Correlation matrix ``L L^T`` where L has unit-normalised lower-triangular rows."""
    L = np.eye(p)
    L[np.tril_indices(p, -1)] = x
    L /= np.linalg.norm(L, axis=1)[:, None]
    g = L @ L.T
    np.fill_diagonal(g, 1.0)
    return g


def _free_from_corr(g):
    L = np.linalg.cholesky(g)
    L = L / np.diag(L)[:, None]
    return L[np.tril_indices(g.shape[0], -1)]


def mgbs_mle(data, kernel: GbsKernel, init: MvBsParams | None = None):
    """ML fit of a generalized multivariate BS law for a fixed kernel.

    Optimises ``(log alpha, log beta, free Cholesky entries of Gamma)`` by
    BFGS starting from the normal-kernel fit.  Returns ``(params, loglik)``.
    """
    t = np.atleast_2d(np.asarray(data, dtype=float))
    p = t.shape[1]
    if init is None:
        init = mv_mle(t).params
    x0 = np.concatenate([np.log(init.alpha), np.log(init.beta), _free_from_corr(init.gamma)])

    def unpack(x):
        return MvBsParams(np.exp(x[:p]), np.exp(x[p:2 * p]), _corr_from_free(x[2 * p:], p))

    def nll(x):
        try:
            return -mgbs_loglik(unpack(x), kernel, t)
        except DomainError:
            return 1e300

    res = optimize.minimize(nll, x0, method="BFGS", options={"gtol": 1e-8, "maxiter": 2000})
    if not (res.success or res.status == 2):
        raise ConvergenceError("generalized multivariate BS fit did not converge", res)
    return unpack(res.x), -float(res.fun)


def mgbs_profile_nu(data, nu_grid) -> dict:
    """Profile the Student-t kernel's degrees of freedom over a grid.

    Returns ``{"nu": [...], "loglik": [...], "best_nu": nu, "best": params}``.
    """
    nus = [float(v) for v in nu_grid]
    if not nus:
        raise DomainError("empty nu grid")
    t = np.atleast_2d(np.asarray(data, dtype=float))
    start = mv_mle(t).params
    lls, fits = [], []
    for nu in nus:
        fit, ll = mgbs_mle(t, GbsKernel.student_t(nu), init=start)
        lls.append(ll)
        fits.append(fit)
    k = int(np.argmax(lls))
    return {"nu": nus, "loglik": lls, "best_nu": nus[k], "best": fits[k]}


def matrix_gbs_logpdf(A, B, kernel: GbsKernel, T) -> float:
    """Matrix-variate generalized BS log density.

    ``h_(nk)(sum_ij eps(T_ij/B_ij)^2 / A_ij^2) prod_ij (T_ij + B_ij) / (2 A_ij sqrt(B_ij) T_ij^(3/2))``
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    T = np.asarray(T, dtype=float)
    if A.shape != B.shape or A.shape != T.shape or A.ndim != 2:
        raise DomainError("A, B and T must be matrices of the same shape")
    if np.any(~(A > 0)) or np.any(~(B > 0)) or np.any(~(T > 0)):
        raise DomainError("all entries must be positive")
    u = float(np.sum(eps(T / B) ** 2 / A**2))
    jac = np.sum(np.log(T + B) - 1.5 * np.log(T) - np.log(2 * A * np.sqrt(B)))
    return float(kernel.log_h(u, A.size) + jac)


def matrix_gbs_pdf(A, B, kernel: GbsKernel, T) -> float:
    return math.exp(matrix_gbs_logpdf(A, B, kernel, T))


# ---------------------------------------------------------------------------
# epsilon-generalized BS

@dataclass(frozen=True)
class EgbsParams:
    """``W = beta (alpha X/2 + sqrt((alpha X/2)^2 + 1))^2`` with ``X`` epsilon-skew.

    The epsilon-skew law of `kernel` has density ``f0(x/(1 + epsilon))`` for
    ``x < 0`` and ``f0(x/(1 - epsilon))`` for ``x >= 0``.
    """

    alpha: float
    beta: float
    epsilon: float = 0.0
    kernel: GbsKernel = field(default_factory=GbsKernel)

    def __post_init__(self):
        BsParams(self.alpha, self.beta)
        if not -1.0 < self.epsilon < 1.0:
            raise DomainError("epsilon must lie in (-1, 1)")


def _es_logpdf(e, kernel, x):
    x = np.asarray(x, dtype=float)
    d = np.where(x < 0, 1.0 + e, 1.0 - e)
    return kernel.logpdf(x / d)


def _es_cdf(e, kernel, x):
    x = np.asarray(x, dtype=float)
    neg = (1.0 + e) * kernel.cdf(np.minimum(x, 0.0) / (1.0 + e))
    pos = (1.0 - e) * (kernel.cdf(np.maximum(x, 0.0) / (1.0 - e)) - 0.5)
    return np.where(x < 0, neg, (1.0 + e) / 2.0 + pos)


def egbs_logpdf(p: EgbsParams, w):
    w = core._positive(w)
    x = eps(w / p.beta) / p.alpha
    out = _es_logpdf(p.epsilon, p.kernel, x) + np.log(eps_prime(w / p.beta)) - math.log(p.alpha * p.beta)
    return _ret(out)


def egbs_pdf(p: EgbsParams, w):
    """Kernel density of the skewed variable at ``eps(w/beta)/alpha`` times the
    Jacobian, with the skew factor switching at ``w = beta``."""
    return _ret(np.exp(egbs_logpdf(p, w)))


def egbs_cdf(p: EgbsParams, w):
    w = core._positive(w)
    return _ret(_es_cdf(p.epsilon, p.kernel, eps(w / p.beta) / p.alpha))


def egbs_sample(p: EgbsParams, n: int, seed=None) -> np.ndarray:
    """``X = -(1 + epsilon)|Z|`` with probability ``(1 + epsilon)/2``, else ``(1 - epsilon)|Z|``."""
    rng = np.random.default_rng(seed)
    z = np.abs(p.kernel.sample(n, rng))
    left = rng.random(n) < (1.0 + p.epsilon) / 2.0
    x = np.where(left, -(1.0 + p.epsilon) * z, (1.0 - p.epsilon) * z)
    return transform_from_normal(p.alpha, p.beta, x)


def egbs_moment(p: EgbsParams, k: float) -> float:
    """``E(W^k)`` by quadrature over the skewed variable, split at zero."""

    def f(x):
        return transform_from_normal(p.alpha, p.beta, x) ** k * math.exp(float(_es_logpdf(p.epsilon, p.kernel, x)))

    a, _ = integrate.quad(f, -math.inf, 0.0, epsabs=0.0, epsrel=1e-11, limit=200)
    b, _ = integrate.quad(f, 0.0, math.inf, epsabs=0.0, epsrel=1e-11, limit=200)
    val = a + b
    if not math.isfinite(val):
        raise DomainError("moment does not exist for this kernel")
    return val


def egbs_scale(p: EgbsParams, a: float) -> EgbsParams:
    """Law of ``a W`` for ``a > 0``."""
    if not a > 0:
        raise DomainError("scale factor must be positive")
    return EgbsParams(p.alpha, a * p.beta, p.epsilon, p.kernel)


def egbs_reciprocal(p: EgbsParams) -> EgbsParams:
    """Law of ``1/W``: the skew variable changes sign, so epsilon flips."""
    return EgbsParams(p.alpha, 1.0 / p.beta, -p.epsilon, p.kernel)


def egbs_loglik(p: EgbsParams, data) -> float:
    return float(np.sum(egbs_logpdf(p, np.asarray(data, dtype=float).ravel())))


def egbs_mle(data, kernel: GbsKernel | None = None, init: EgbsParams | None = None):
    """ML fit of ``(alpha, beta, epsilon)`` by BFGS on
    ``(log alpha, log beta, atanh epsilon)``.  Returns ``(params, loglik)``."""
    kernel = kernel or GbsKernel()
    t = core._positive(np.asarray(data, dtype=float).ravel())
    if t.size < 4:
        raise DomainError("EGBS fit needs at least four observations")
    if init is None:
        from .complete import mle

        f = mle(t)
        init = EgbsParams(f.alpha, f.beta, 0.0, kernel)
    x0 = [math.log(init.alpha), math.log(init.beta), math.atanh(init.epsilon)]

    def nll(x):
        return -egbs_loglik(EgbsParams(math.exp(x[0]), math.exp(x[1]), math.tanh(x[2]), kernel), t)

    res = optimize.minimize(nll, x0, method="BFGS", options={"gtol": 1e-8})
    if not (res.success or res.status == 2):
        raise ConvergenceError("EGBS fit did not converge", res)
    p = EgbsParams(math.exp(res.x[0]), math.exp(res.x[1]), math.tanh(res.x[2]), kernel)
    return p, -float(res.fun)
