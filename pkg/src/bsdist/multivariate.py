"""Bivariate and p-variate BS distributions.

``T ~ BS_p(alpha, beta, Gamma)`` when ``v_j = eps(T_j/beta_j)/alpha_j`` is a
standard normal vector with correlation matrix ``Gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .complete import _z
from .core import BsParams, eps, eps_prime, transform_from_normal
from .numerics import (
    ConvergenceError,
    DomainError,
    cholesky,
    mvn_cdf,
    numerical_gradient,
    numerical_hessian,
)

__all__ = [
    "MvBsParams",
    "DependenceMeasures",
    "MvFitResult",
    "mv_pdf",
    "mv_logpdf",
    "mv_cdf",
    "copula_measures",
    "mv_sample",
    "bv_sample_explicit",
    "marginal",
    "conditional_pdf",
    "conditional_cdf",
    "reciprocal_blocks",
    "mv_loglik",
    "alpha_given_beta",
    "gamma_given_beta",
    "profile_loglik",
    "mv_mle",
    "mv_mm",
    "mv_ci",
    "stress_strength",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MvBsParams:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).ravel()
        b = np.asarray(self.beta, dtype=float).ravel()
        g = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        p = a.size
        if p < 2 or b.size != p or g.shape != (p, p):
            raise DomainError("need p >= 2 with matching alpha, beta and a p x p gamma")
        if np.any(~(a > 0)) or np.any(~(b > 0)):
            raise DomainError("alpha and beta must be positive")
        if not np.allclose(g, g.T, atol=1e-12) or not np.allclose(np.diag(g), 1.0, atol=1e-12):
            raise DomainError("gamma must be a symmetric matrix with unit diagonal")
        cholesky(g)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma", g)

    @property
    def p(self) -> int:
        return int(self.alpha.size)

    @classmethod
    def bivariate(cls, alpha1, beta1, alpha2, beta2, rho) -> "MvBsParams":
        if not -1.0 < rho < 1.0:
            raise DomainError("rho must lie in (-1, 1)")
        return cls(np.array([alpha1, alpha2]), np.array([beta1, beta2]), np.array([[1.0, rho], [rho, 1.0]]))


@dataclass(frozen=True)
class DependenceMeasures:
    blomqvist: float
    kendall: float
    spearman: float


@dataclass
class MvFitResult:
    params: MvBsParams
    method: str
    n: int
    loglik: float | None = None
    iterations: int = 0
    se: dict = field(default_factory=dict)
    ci: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "method": self.method,
            "n": self.n,
            "alpha": self.params.alpha.tolist(),
            "beta": self.params.beta.tolist(),
            "gamma": self.params.gamma.tolist(),
        }
        if self.loglik is not None:
            out["loglik"] = self.loglik
        if self.se:
            out["se"] = {k: float(v) for k, v in self.se.items()}
        if self.ci:
            out["ci"] = {k: list(v) for k, v in self.ci.items()}
        return out


def _rows(mp: MvBsParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    t2 = np.atleast_2d(t)
    if t2.shape[-1] != mp.p:
        raise DomainError(f"expected {mp.p} coordinates, got {t2.shape[-1]}")
    if np.any(~(t2 > 0)):
        raise DomainError("all coordinates must be positive")
    return t2


def _v(mp: MvBsParams, t2):
    return eps(t2 / mp.beta) / mp.alpha


def _log_jac(mp: MvBsParams, t2):
    return np.sum(np.log(eps_prime(t2 / mp.beta)) - np.log(mp.alpha * mp.beta), axis=-1)


def _mvn_logpdf(v, gamma):
    L = cholesky(gamma)
    w = np.linalg.solve(L, v.T)
    p = gamma.shape[0]
    return -0.5 * np.sum(w * w, axis=0) - np.sum(np.log(np.diag(L))) - 0.5 * p * _LOG_2PI


def mv_logpdf(mp: MvBsParams, t):
    t2 = _rows(mp, t)
    out = _mvn_logpdf(_v(mp, t2), mp.gamma) + _log_jac(mp, t2)
    return float(out[0]) if np.ndim(t) == 1 else out


def mv_pdf(mp: MvBsParams, t):
    """``phi_p(v; Gamma) prod (1/(alpha_j beta_j)) eps'(t_j/beta_j)``."""
    return np.exp(mv_logpdf(mp, t))


def mv_cdf(mp: MvBsParams, t, **kw) -> float:
    """``Phi_p(v; Gamma)`` at the transformed point."""
    t2 = _rows(mp, t)
    return mvn_cdf(_v(mp, t2)[0], mp.gamma, **kw)


def copula_measures(rho: float) -> DependenceMeasures:
    """Blomqvist beta, Kendall tau and Spearman rho of the Gaussian copula."""
    if not -1.0 < rho < 1.0:
        raise DomainError("rho must lie in (-1, 1)")
    tau = 2.0 / math.pi * math.asin(rho)
    return DependenceMeasures(tau, tau, 6.0 / math.pi * math.asin(rho / 2.0))


def mv_sample(mp: MvBsParams, n: int, seed=None) -> np.ndarray:
    """``n x p`` sample: Cholesky-correlated normals pushed through the BS transform."""
    rng = np.random.default_rng(seed)
    A = cholesky(mp.gamma)
    z = rng.standard_normal((n, mp.p)) @ A.T
    return transform_from_normal(mp.alpha, mp.beta, z)


def bv_sample_explicit(mp: MvBsParams, n: int, seed=None) -> np.ndarray:
    """Bivariate sample from the symmetric square-root mixing of two normals."""
    if mp.p != 2:
        raise DomainError("explicit mixing applies to p = 2")
    rho = mp.gamma[0, 1]
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n, 2))
    c1 = (math.sqrt(1 + rho) + math.sqrt(1 - rho)) / 2.0
    c2 = (math.sqrt(1 + rho) - math.sqrt(1 - rho)) / 2.0
    z = np.column_stack([c1 * u[:, 0] + c2 * u[:, 1], c2 * u[:, 0] + c1 * u[:, 1]])
    return transform_from_normal(mp.alpha, mp.beta, z)


def _index(mp: MvBsParams, idx):
    idx = np.atleast_1d(np.asarray(idx, dtype=int))
    if idx.size == 0 or idx.size != np.unique(idx).size or idx.min() < 0 or idx.max() >= mp.p:
        raise DomainError("invalid index set")
    return idx


def marginal(mp: MvBsParams, idx):
    """Law of a sub-vector; a :class:`BsParams` for a single index."""
    idx = _index(mp, idx)
    if idx.size == 1:
        return BsParams(float(mp.alpha[idx[0]]), float(mp.beta[idx[0]]))
    return MvBsParams(mp.alpha[idx], mp.beta[idx], mp.gamma[np.ix_(idx, idx)])


def _conditional_parts(mp: MvBsParams, given, values):
    given = _index(mp, given)
    rest = np.setdiff1d(np.arange(mp.p), given)
    if rest.size == 0:
        raise DomainError("the conditioning set must be a proper subset")
    values = np.asarray(values, dtype=float).ravel()
    if values.size != given.size or np.any(~(values > 0)):
        raise DomainError("conditioning values must be positive, one per index")
    G = mp.gamma
    G12 = G[np.ix_(rest, given)]
    G22 = G[np.ix_(given, given)]
    try:
        K = np.linalg.solve(G22, G12.T).T
    except np.linalg.LinAlgError:
        raise DomainError("conditioning block is singular") from None
    v2 = eps(values / mp.beta[given]) / mp.alpha[given]
    S = G[np.ix_(rest, rest)] - K @ G12.T
    return rest, K @ v2, S


def conditional_pdf(mp: MvBsParams, given, values):
    """Density of the remaining coordinates given ``T[given] = values``.

    ``phi_q(w; Gamma_11.2) prod (1/(alpha_i beta_i)) eps'(t_i/beta_i)`` with
    ``w = v_1 - Gamma_12 Gamma_22^-1 v_2``.
    """
    rest, shift, S = _conditional_parts(mp, given, values)
    a, b = mp.alpha[rest], mp.beta[rest]

    def f(t):
        t2 = np.atleast_2d(np.asarray(t, dtype=float))
        if np.any(~(t2 > 0)):
            raise DomainError("coordinates must be positive")
        w = eps(t2 / b) / a - shift
        lj = np.sum(np.log(eps_prime(t2 / b)) - np.log(a * b), axis=-1)
        out = np.exp(_mvn_logpdf(w, S) + lj)
        return float(out[0]) if np.ndim(t) <= 1 and np.size(t) == rest.size else out

    return f


def conditional_cdf(mp: MvBsParams, given, values, t, **kw) -> float:
    rest, shift, S = _conditional_parts(mp, given, values)
    t = np.asarray(t, dtype=float).ravel()
    w = eps(t / mp.beta[rest]) / mp.alpha[rest] - shift
    d = np.sqrt(np.diag(S))
    return mvn_cdf(w / d, S / np.outer(d, d), **kw)


def reciprocal_blocks(mp: MvBsParams, invert) -> MvBsParams:
    """Parameters of T with the coordinates in `invert` replaced by their reciprocals."""
    inv = np.zeros(mp.p, dtype=bool)
    if np.size(invert):
        inv[_index(mp, invert)] = True
    s = np.where(inv, -1.0, 1.0)
    beta = np.where(inv, 1.0 / mp.beta, mp.beta)
    return MvBsParams(mp.alpha.copy(), beta, mp.gamma * np.outer(s, s))


# ---------------------------------------------------------------------------
# estimation

def _data(data) -> np.ndarray:
    t = np.asarray(data, dtype=float)
    if t.ndim != 2 or t.shape[1] < 2:
        raise DomainError("data must be an n x p array with p >= 2")
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("data must be finite and positive")
    if t.shape[0] <= t.shape[1]:
        raise DomainError("need more rows than columns")
    return t


def mv_loglik(mp: MvBsParams, data) -> float:
    """Full log-likelihood including the normal constant."""
    return float(np.sum(mv_logpdf(mp, _data(data))))


def alpha_given_beta(data, beta) -> np.ndarray:
    """``alpha_j(beta) = (s_j/beta_j + beta_j/r_j - 2)^(1/2)``."""
    t = _data(data)
    s = t.mean(axis=0)
    r = 1.0 / np.mean(1.0 / t, axis=0)
    return np.sqrt(np.maximum(s / beta + beta / r - 2.0, 0.0))


def gamma_given_beta(data, beta) -> np.ndarray:
    """``P Q P`` with ``Q`` the second-moment matrix of ``eps(t_j/beta_j)``."""
    t = _data(data)
    e = eps(t / beta)
    Q = e.T @ e / t.shape[0]
    d = 1.0 / np.sqrt(np.diag(Q))
    G = Q * np.outer(d, d)
    np.fill_diagonal(G, 1.0)
    return G


def profile_loglik(beta, data) -> float:
    t = _data(data)
    beta = np.asarray(beta, dtype=float)
    if np.any(~(beta > 0)):
        return -np.inf
    a = alpha_given_beta(t, beta)
    if np.any(a <= 0):
        return -np.inf
    G = gamma_given_beta(t, beta)
    try:
        return mv_loglik(MvBsParams(a, beta, G), t)
    except DomainError:
        return -np.inf


def mv_mm(data) -> MvBsParams:
    """Modified moment estimates; the correlation matrix is that of the
    eps-transforms at the moment estimates of beta."""
    t = _data(data)
    s = t.mean(axis=0)
    r = 1.0 / np.mean(1.0 / t, axis=0)
    a = np.sqrt(2.0 * (np.sqrt(s / r) - 1.0))
    b = np.sqrt(s * r)
    return MvBsParams(a, b, gamma_given_beta(t, b))


def mv_mle(data, init: MvBsParams | None = None) -> MvFitResult:
    """ML estimates by maximizing the profile log-likelihood over beta.

    For given beta the ML estimates of alpha and Gamma are explicit, so the
    search is p-dimensional.  The search runs on ``log beta`` starting at the
    modified moment estimate.
    """
    t = _data(data)
    init = init or mv_mm(t)
    b0 = init.beta
    f = lambda x: -profile_loglik(b0 * np.exp(x), t)
    res = optimize.minimize(f, np.zeros(t.shape[1]), method="BFGS", options={"gtol": 1e-9})
    res2 = optimize.minimize(f, res.x, method="Nelder-Mead",
                             options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    x = res2.x if res2.fun <= res.fun else res.x
    if not np.isfinite(min(res.fun, res2.fun)):
        raise ConvergenceError("profile likelihood maximization failed", res)
    b = b0 * np.exp(x)
    mp = MvBsParams(alpha_given_beta(t, b), b, gamma_given_beta(t, b))
    return MvFitResult(mp, "ML", t.shape[0], mv_loglik(mp, t), int(res.nit + res2.nit))


def _pack(mp: MvBsParams) -> np.ndarray:
    iu = np.triu_indices(mp.p, 1)
    return np.concatenate([mp.alpha, mp.beta, mp.gamma[iu]])


def _unpack(x, p) -> MvBsParams:
    G = np.eye(p)
    iu = np.triu_indices(p, 1)
    G[iu] = x[2 * p:]
    G[(iu[1], iu[0])] = x[2 * p:]
    return MvBsParams(x[:p], x[p:2 * p], G)


def _names(p):
    iu = np.triu_indices(p, 1)
    return ([f"alpha{j + 1}" for j in range(p)] + [f"beta{j + 1}" for j in range(p)]
            + ["rho" if p == 2 else f"gamma{i + 1}{j + 1}" for i, j in zip(*iu)])


def mv_ci(fit: MvFitResult, data, level: float = 0.95, info: str = "observed") -> dict:
    """Wald intervals for all parameters.

    info="observed" inverts the numerical Hessian of the log-likelihood;
    info="opg" inverts the sum of outer products of per-observation scores.
    Returns ``{name: (lo, hi)}`` and stores standard errors on `fit`.
    """
    t = _data(data)
    p = t.shape[1]
    x0 = _pack(fit.params)

    def ll_rows(x):
        try:
            return mv_logpdf(_unpack(x, p), t)
        except DomainError:
            return np.full(t.shape[0], -np.inf)

    if info == "observed":
        J = -numerical_hessian(lambda x: float(np.sum(ll_rows(x))), x0)
    elif info == "opg":
        h = 1e-6 * np.maximum(np.abs(x0), 1e-3)
        G = np.empty((t.shape[0], x0.size))
        for k in range(x0.size):
            e = np.zeros_like(x0)
            e[k] = h[k]
            G[:, k] = (ll_rows(x0 + e) - ll_rows(x0 - e)) / (2 * h[k])
        J = G.T @ G
    else:
        raise DomainError("info must be 'observed' or 'opg'")
    try:
        cov = np.linalg.inv(J)
    except np.linalg.LinAlgError:
        raise DomainError("information matrix is singular") from None
    se = np.sqrt(np.diag(cov))
    z = _z(level)
    names = _names(p)
    fit.se = dict(zip(names, se))
    out = {k: (float(v - z * s), float(v + z * s)) for k, v, s in zip(names, x0, se)}
    fit.ci[level] = out
    return out


def stress_strength(mp: MvBsParams, i: int = 0, j: int = 1, n: int = 100_000, seed=None) -> tuple[float, float]:
    """Monte Carlo estimate of ``P(T_i < T_j)`` and its standard error."""
    x = mv_sample(mp, n, seed)
    hit = x[:, i] < x[:, j]
    pr = float(hit.mean())
    return pr, math.sqrt(pr * (1 - pr) / n)
