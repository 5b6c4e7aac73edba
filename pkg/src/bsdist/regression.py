"""Log-BS (sinh-normal error) linear regression.

``y_i = x_i^T theta + e_i`` with ``e_i ~ SN(alpha, 0, 2)``, so that
``exp(y_i)`` is BS with shape alpha and scale ``exp(x_i^T theta)``.  With
residuals ``r_i = y_i - x_i^T theta``,

    w_i = (2/alpha) cosh(r_i/2),   z_i = (2/alpha) sinh(r_i/2),

and the log-likelihood without additive constant is
``sum log w_i - (1/2) sum z_i^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .numerics import ConvergenceError, DomainError, numerical_gradient

__all__ = [
    "RegressionModel",
    "RegressionFit",
    "design_check",
    "reg_loglik",
    "reg_score",
    "reg_alpha_profile",
    "reg_profile_loglik",
    "reg_lse",
    "c_alpha",
    "reg_mle",
    "reg_residuals",
]


def design_check(X, y=None):
    """Validate a design matrix (and response); returns float arrays.

    Raises
    ------
    DomainError
        Non-finite entries, mismatched lengths, ``n <= p`` or a design
        without full column rank.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise DomainError("design must be a finite n x p matrix")
    n, p = X.shape
    if n <= p:
        raise DomainError(f"need more observations than coefficients (n={n}, p={p})")
    if np.linalg.matrix_rank(X) < p:
        raise DomainError("design matrix does not have full column rank")
    if y is None:
        return X
    y = np.asarray(y, dtype=float).ravel()
    if y.size != n:
        raise DomainError(f"response has {y.size} values, design has {n} rows")
    if not np.all(np.isfinite(y)):
        raise DomainError("response must be finite")
    return X, y


@dataclass(frozen=True)
class RegressionModel:
    theta: np.ndarray
    alpha: float
    design: np.ndarray = field(repr=False)

    def __post_init__(self):
        X = design_check(self.design)
        th = np.asarray(self.theta, dtype=float).ravel()
        if th.size != X.shape[1]:
            raise DomainError(f"theta has {th.size} entries, design has {X.shape[1]} columns")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "design", X)


@dataclass
class RegressionFit:
    """ML fit; `flags` lists diagnostics such as boundary fits or multiple maxima."""

    theta: np.ndarray
    alpha: float
    loglik: float
    n: int
    cov_theta: np.ndarray | None = None
    var_alpha: float | None = None
    iterations: int = 0
    starts: int = 1
    flags: list = field(default_factory=list)

    @property
    def se_theta(self) -> np.ndarray | None:
        return None if self.cov_theta is None else np.sqrt(np.diag(self.cov_theta))

    @property
    def se_alpha(self) -> float | None:
        return None if self.var_alpha is None else math.sqrt(self.var_alpha)

    def as_dict(self) -> dict:
        out = {"theta": self.theta.tolist(), "alpha": self.alpha, "loglik": self.loglik,
               "n": self.n, "iterations": self.iterations, "starts": self.starts,
               "flags": list(self.flags)}
        if self.cov_theta is not None:
            out["se_theta"] = self.se_theta.tolist()
            out["se_alpha"] = self.se_alpha
        return out


def _loglik(theta, alpha, X, y):
    r = y - X @ theta
    h = r / 2.0
    a = np.abs(h)
    log_cosh = a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)
    z = (2.0 / alpha) * np.sinh(h)
    return float(np.sum(math.log(2.0 / alpha) + log_cosh) - 0.5 * np.sum(z * z))


def reg_loglik(m: RegressionModel, y) -> float:
    """``sum log w_i - (1/2) sum z_i^2``."""
    X, y = design_check(m.design, y)
    return _loglik(m.theta, m.alpha, X, y)


def _score(theta, alpha, X, y):
    r = y - X @ theta
    g_theta = -X.T @ (0.5 * np.tanh(r / 2.0) - np.sinh(r) / alpha**2)
    g_alpha = -y.size / alpha + 4.0 * float(np.sum(np.sinh(r / 2.0) ** 2)) / alpha**3
    return np.append(g_theta, g_alpha)


def reg_score(m: RegressionModel, y) -> np.ndarray:
    """Gradient of :func:`reg_loglik` in ``(theta, alpha)``."""
    X, y = design_check(m.design, y)
    return _score(m.theta, m.alpha, X, y)


def _alpha_hat(theta, X, y):
    return math.sqrt(4.0 * float(np.mean(np.sinh((y - X @ theta) / 2.0) ** 2)))


def reg_alpha_profile(X, y, theta) -> float:
    """``alpha(theta) = sqrt((4/n) sum sinh^2((y_i - x_i^T theta)/2))``."""
    X, y = design_check(X, y)
    return _alpha_hat(np.asarray(theta, dtype=float), X, y)


def reg_profile_loglik(X, y, theta) -> float:
    X, y = design_check(X, y)
    theta = np.asarray(theta, dtype=float)
    a = _alpha_hat(theta, X, y)
    if a <= 0:
        return math.inf
    return _loglik(theta, a, X, y)


def reg_lse(X, y) -> np.ndarray:
    """Least-squares estimate ``(X^T X)^-1 X^T y``."""
    X, y = design_check(X, y)
    return np.linalg.solve(X.T @ X, X.T @ y)


def c_alpha(alpha: float) -> float:
    """``2 + 4/alpha^2 - sqrt(2 pi/alpha^2) erfc(sqrt(2)/alpha) exp(2/alpha^2)``.

    The product ``erfc(x) exp(x^2)`` is evaluated as the scaled
    complementary error function to avoid overflow for small alpha.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    x = math.sqrt(2.0) / alpha
    return 2.0 + 4.0 / alpha**2 - math.sqrt(2.0 * math.pi) / alpha * float(special.erfcx(x))


def reg_residuals(fit: RegressionFit, X, y) -> np.ndarray:
    """Standardised residuals ``z_i``, standard normal under the model."""
    X, y = design_check(X, y)
    return (2.0 / fit.alpha) * np.sinh((y - X @ fit.theta) / 2.0)


def _maximise(X, y, theta0, tol):
    n = y.size

    def nll(th):
        a = _alpha_hat(th, X, y)
        if not a > 0:
            return math.inf, np.zeros_like(th)
        # envelope theorem: the alpha-derivative vanishes on the profile
        return -_loglik(th, a, X, y) / n, -_score(th, a, X, y)[:-1] / n

    res = optimize.minimize(nll, theta0, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 5000})
    theta = res.x
    it = int(res.nit)
    # Newton polish on the profile score
    for _ in range(20):
        g = nll(theta)[1]
        if np.max(np.abs(g)) * n <= tol:
            break
        H = np.array([numerical_gradient(lambda th, j=j: nll(th)[1][j], theta) for j in range(theta.size)])
        H = 0.5 * (H + H.T)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if nll(theta - step)[0] > nll(theta)[0] + 1e-15:
            break
        theta = theta - step
        it += 1
    return theta, it


def reg_mle(X, y, init=None, seed=0, tol: float = 1e-8, n_starts: int = 5) -> RegressionFit:
    """ML fit of ``(theta, alpha)``.

    Maximises the profile log-likelihood in theta by BFGS with Newton
    polishing, starting from the least-squares estimate (or `init`).  When
    ``alpha > 2`` the likelihood may have several maxima; the fit is then
    repeated from `n_starts` jittered starts, the best is kept and a flag
    records disagreeing local maxima.

    The covariance estimates are ``4 (X^T X)^-1 / C(alpha)`` for theta and
    ``alpha^2 / (2n)`` for alpha.

    Raises
    ------
    DomainError
        Invalid or rank-deficient design.
    ConvergenceError
        If the score does not vanish to `tol` at the returned point.
    """
    X, y = design_check(X, y)
    n, p = X.shape
    theta0 = reg_lse(X, y) if init is None else np.asarray(init, dtype=float).ravel()
    flags = []
    if _alpha_hat(theta0, X, y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        flags.append("perfect fit: alpha at the boundary 0")
        return RegressionFit(theta0, 0.0, math.inf, n, flags=flags)

    theta, it = _maximise(X, y, theta0, tol)
    alpha = _alpha_hat(theta, X, y)
    best = (_loglik(theta, alpha, X, y), theta, it)
    starts = 1
    if alpha > 2.0:
        rng = np.random.default_rng(seed)
        scale = np.sqrt(np.diag(np.linalg.inv(X.T @ X))) * alpha * 2.0
        optima = [best]
        for _ in range(n_starts):
            th, k = _maximise(X, y, theta0 + scale * rng.standard_normal(p), tol)
            optima.append((_loglik(th, _alpha_hat(th, X, y), X, y), th, k))
        starts += n_starts
        best = max(optima, key=lambda o: o[0])
        if any(np.max(np.abs(o[1] - best[1])) > 1e-4 * max(1.0, np.max(np.abs(best[1]))) for o in optima):
            flags.append("alpha > 2: distinct local maxima found; best kept")
    ll, theta, it = best
    alpha = _alpha_hat(theta, X, y)
    g = _score(theta, alpha, X, y)
    if np.max(np.abs(g[:-1])) > tol * max(1.0, n):
        raise ConvergenceError("regression score did not vanish", {"theta": theta, "score": g})
    cov = 4.0 / c_alpha(alpha) * np.linalg.inv(X.T @ X)
    return RegressionFit(theta, alpha, ll, n, cov, alpha**2 / (2.0 * n), it, starts, flags)
