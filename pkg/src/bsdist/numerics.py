"""Numerical primitives shared by the rest of the package.

Normal probabilities, bivariate and multivariate normal CDFs, the modified
Bessel function of the third kind, bracketed root finding, Cholesky
factorisation and expectation helpers for the BS law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special
from scipy.stats import qmc

__all__ = [
    "DomainError",
    "ConvergenceError",
    "NonexistenceError",
    "RootBracket",
    "QuadratureSpec",
    "std_normal",
    "norm_pdf",
    "norm_cdf",
    "norm_sf",
    "norm_logcdf",
    "std_normal_quantile",
    "bvn_cdf",
    "mvn_cdf",
    "bessel_k",
    "log_bessel_k",
    "solve_root",
    "cholesky",
    "integrate_normal",
    "integrate_positive",
    "numerical_hessian",
    "numerical_gradient",
]

SQRT2PI = math.sqrt(2.0 * math.pi)


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NonexistenceError(ArithmeticError):
    """The requested estimator does not exist for the given data."""


class ConvergenceError(RuntimeError):
    """An iterative procedure failed to converge.

    Parameters
    ----------
    message : str
        Human readable description.
    state : object, optional
        Last iterate or trace, kept for diagnostics.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class RootBracket:
    """Bracket for a scalar root search."""

    lo: float
    hi: float
    tol: float = 1e-12
    max_iter: int = 500

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"degenerate bracket [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for adaptive quadrature."""

    scheme: str = "adaptive"
    nodes: int = 64
    epsabs: float = 1e-12
    epsrel: float = 1e-10

    def __post_init__(self):
        if self.epsabs <= 0 or self.epsrel <= 0:
            raise DomainError("quadrature tolerances must be positive")


# ---------------------------------------------------------------------------
# univariate normal

def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT2PI


def norm_cdf(x):
    return special.ndtr(x)


def norm_sf(x):
    return special.ndtr(-np.asarray(x, dtype=float))


def norm_logcdf(x):
    return special.log_ndtr(x)


def std_normal(x):
    """Return ``(pdf, cdf)`` of the standard normal law at `x`."""
    return norm_pdf(x), norm_cdf(x)


def std_normal_quantile(q):
    """Standard normal quantile function.

    Raises
    ------
    DomainError
        If any `q` lies outside the open unit interval.
    """
    qa = np.asarray(q, dtype=float)
    if np.any((qa <= 0) | (qa >= 1)) or np.any(np.isnan(qa)):
        raise DomainError("quantile level must lie in (0, 1)")
    out = special.ndtri(qa)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# bivariate and multivariate normal

def bvn_cdf(h: float, k: float, rho: float) -> float:
    """P(Z1 <= h, Z2 <= k) for a standard bivariate normal with correlation rho.

    Uses the arcsine integral representation

        Phi2 = Phi(h) Phi(k)
               + 1/(2 pi) int_0^{asin rho} exp(-(h^2 + k^2 - 2 h k sin t) / (2 cos^2 t)) dt

    evaluated by adaptive quadrature.
    """
    if not -1.0 < rho < 1.0:
        raise DomainError("correlation must lie in (-1, 1)")
    if h == -math.inf or k == -math.inf:
        return 0.0
    if h == math.inf:
        return float(norm_cdf(k))
    if k == math.inf:
        return float(norm_cdf(h))
    base = float(norm_cdf(h) * norm_cdf(k))
    if rho == 0.0:
        return base
    a = math.asin(rho)
    hk = h * k
    hh = h * h + k * k

    def integrand(t):
        c = math.cos(t)
        return math.exp(-(hh - 2.0 * hk * math.sin(t)) / (2.0 * c * c))

    val, _ = integrate.quad(integrand, 0.0, a, epsabs=1e-15, epsrel=1e-13, limit=200)
    return min(1.0, max(0.0, base + val / (2.0 * math.pi)))


def _check_corr(gamma: np.ndarray) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DomainError("correlation matrix must be square")
    if not np.allclose(g, g.T, atol=1e-12):
        raise DomainError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(g), 1.0, atol=1e-12):
        raise DomainError("correlation matrix must have unit diagonal")
    return g


def mvn_cdf(u, gamma, n_points: int = 2**13, n_shifts: int = 16, seed: int = 0,
            return_error: bool = False):
    """Standard multivariate normal CDF with correlation matrix `gamma`.

    Dimensions one and two are evaluated deterministically.  For p >= 3 the
    Genz separation-of-variables transform is integrated with randomly
    shifted Sobol points; the standard error across shifts is available
    through `return_error`.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    g = _check_corr(gamma)
    p = u.size
    if g.shape != (p, p):
        raise DomainError("dimension mismatch between point and matrix")
    if p == 1:
        val, err = float(norm_cdf(u[0])), 0.0
    elif p == 2:
        cholesky(g)
        val, err = bvn_cdf(u[0], u[1], g[0, 1]), 0.0
    else:
        L = cholesky(g)
        rng = np.random.default_rng(seed)
        sob = qmc.Sobol(d=p - 1, scramble=False, seed=seed)
        base = sob.random(n_points) if p > 1 else np.zeros((n_points, 0))
        ests = []
        for _ in range(n_shifts):
            w = (base + rng.random(p - 1)) % 1.0
            ests.append(_genz_sov(u, L, w))
        ests = np.array(ests)
        val = float(ests.mean())
        err = float(ests.std(ddof=1) / math.sqrt(n_shifts))
    return (val, err) if return_error else val


def _genz_sov(u, L, w):
    n = w.shape[0]
    p = u.size
    y = np.zeros((n, p))
    e = np.full(n, norm_cdf(u[0] / L[0, 0]))
    f = e.copy()
    for i in range(1, p):
        y[:, i - 1] = special.ndtri(np.clip(w[:, i - 1] * e, 1e-300, 1 - 1e-16))
        s = y[:, :i] @ L[i, :i]
        e = norm_cdf((u[i] - s) / L[i, i])
        f = f * e
    return f.mean()


# ---------------------------------------------------------------------------
# special functions

def log_bessel_k(lam: float, w: float) -> float:
    """Logarithm of the modified Bessel function of the third kind, K_lam(w), w > 0.

    Evaluated from

        K_lam(w) = (1/2) (w/2)^lam int_0^inf y^(-lam-1) exp(-y - w^2/(4y)) dy

    after the substitution y = exp(s), with the integrand scaled by its peak
    so that large arguments do not underflow.
    """
    if not w > 0:
        raise DomainError("bessel_k requires w > 0")
    c = w * w / 4.0
    # peak of the log-integrand in s
    s0 = math.log((-lam + math.sqrt(lam * lam + 4.0 * c)) / 2.0)

    def logf(s):
        with np.errstate(over="ignore"):
            return float(-lam * s - np.exp(s) - c * np.exp(-s))

    m = logf(s0)
    # integrand width at the peak and a window beyond which it is negligible
    sd = 1.0 / math.sqrt(math.exp(s0) + c * math.exp(-s0))
    spread = math.log(abs(lam) + 1.0)
    lo = min(s0, math.log(c) - spread) - 8.0 - 40.0 * sd
    hi = max(s0, spread) + 8.0 + 40.0 * sd
    val, _ = integrate.quad(lambda s: math.exp(logf(s) - m), lo, hi,
                            points=[s0], epsabs=0.0, epsrel=1e-13, limit=500)
    return math.log(0.5 * val) + lam * math.log(w / 2.0) + m


def bessel_k(lam: float, w: float) -> float:
    """Modified Bessel function of the third kind, K_lam(w), for w > 0."""
    return math.exp(log_bessel_k(lam, w))


# ---------------------------------------------------------------------------
# roots, factorisations, quadrature

def solve_root(f, bracket: RootBracket) -> float:
    """Root of `f` inside `bracket` (Brent's method)."""
    flo, fhi = f(bracket.lo), f(bracket.hi)
    if flo == 0:
        return bracket.lo
    if fhi == 0:
        return bracket.hi
    if np.sign(flo) == np.sign(fhi):
        raise DomainError("objective has no sign change on the bracket")
    try:
        return optimize.brentq(f, bracket.lo, bracket.hi, xtol=bracket.tol,
                               rtol=4 * np.finfo(float).eps, maxiter=bracket.max_iter)
    except RuntimeError as exc:  # brentq signals iteration exhaustion this way
        raise ConvergenceError(str(exc)) from exc


def cholesky(gamma) -> np.ndarray:
    """Lower-triangular L with L @ L.T == gamma."""
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DomainError("matrix must be square")
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DomainError("matrix is not positive definite") from exc
    if np.any(np.diag(L) <= 1e-14):
        raise DomainError("matrix is not positive definite")
    return L


def integrate_positive(f, scale: float = 1.0, spec: QuadratureSpec | None = None) -> float:
    """Integral of `f` over (0, inf), split at `scale` for better accuracy."""
    spec = spec or QuadratureSpec()
    a, _ = integrate.quad(f, 0.0, scale, epsabs=spec.epsabs, epsrel=spec.epsrel, limit=200)
    b, _ = integrate.quad(f, scale, math.inf, epsabs=spec.epsabs, epsrel=spec.epsrel, limit=200)
    return a + b


def integrate_normal(g, spec: QuadratureSpec | None = None) -> float:
    """E[g(Z)] for Z standard normal."""
    spec = spec or QuadratureSpec()
    val, _ = integrate.quad(lambda z: g(z) * math.exp(-0.5 * z * z) / SQRT2PI,
                            -math.inf, math.inf, epsabs=spec.epsabs, epsrel=spec.epsrel,
                            limit=200)
    return val


def numerical_gradient(f, x, h=None) -> np.ndarray:
    """Central-difference gradient."""
    x = np.asarray(x, dtype=float)
    h = np.full(x.size, 1e-6) * np.maximum(1.0, np.abs(x)) if h is None else np.broadcast_to(h, x.shape)
    g = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2 * h[i])
    return g


def numerical_hessian(f, x, h=None) -> np.ndarray:
    """Central-difference Hessian with per-coordinate steps."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = 1e-4 * np.maximum(np.abs(x), 1e-3) if h is None else np.broadcast_to(np.asarray(h, float), x.shape)
    H = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            H[i, j] = H[j, i] = v
    return H
