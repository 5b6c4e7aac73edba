"""Point and interval estimation of (alpha, beta) from a complete sample.

Covers maximum likelihood, moment and modified-moment (MM) estimators, the
From-Li family, the pairwise-ratio estimator, median-based explicit
estimators, bias corrections, Fisher information, asymptotic intervals,
the modified signed log-likelihood root interval and a Kolmogorov-Smirnov
goodness-of-fit check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import core
from .core import BsParams, eps
from .numerics import (
    ConvergenceError,
    DomainError,
    NonexistenceError,
    RootBracket,
    norm_cdf,
    numerical_hessian,
    solve_root,
    std_normal_quantile,
)

__all__ = [
    "SampleStats",
    "FitResult",
    "FisherInfo",
    "sample_stats",
    "loglik",
    "mle",
    "moment_est",
    "mm_est",
    "from_li",
    "bz_est",
    "new_est",
    "bias_correct",
    "jackknife_correct",
    "h_alpha",
    "i_alpha",
    "h1",
    "h2",
    "fisher_info",
    "asymp_ci",
    "r_star",
    "r_star_ci",
    "ks_distance",
    "ks_pvalue",
    "ks_test",
]


@dataclass(frozen=True)
class SampleStats:
    """Summary statistics used by the closed-form estimators.

    Attributes
    ----------
    n : int
    s : float
        Arithmetic mean.
    r : float
        Harmonic mean.
    v : float
        Sample variance (divisor n - 1).
    med : float
        Sample median.
    sorted : numpy.ndarray
        Ordered copy of the data.
    """

    n: int
    s: float
    r: float
    v: float
    med: float
    sorted: np.ndarray


@dataclass
class FitResult:
    """Outcome of a univariate fit.

    `ci` maps a confidence level to ``((alpha_lo, alpha_hi), (beta_lo, beta_hi))``.
    `extras` holds method-specific values, e.g. the uncorrected estimates
    behind a bias-corrected fit.
    """

    alpha: float
    beta: float
    method: str
    n: int
    se_alpha: float | None = None
    se_beta: float | None = None
    ci: dict = field(default_factory=dict)
    iterations: int = 0
    converged: bool = True
    loglik: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def params(self) -> BsParams:
        return BsParams(self.alpha, self.beta)

    def as_dict(self) -> dict:
        out = {
            "method": self.method,
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        if self.se_alpha is not None:
            out["se_alpha"] = self.se_alpha
            out["se_beta"] = self.se_beta
        if self.loglik is not None:
            out["loglik"] = self.loglik
        if self.ci:
            out["ci"] = {str(k): {"alpha": list(v[0]), "beta": list(v[1])} for k, v in self.ci.items()}
        return out


@dataclass(frozen=True)
class FisherInfo:
    """Expected information for (alpha, beta); the off-diagonal is zero."""

    matrix: np.ndarray
    h_alpha: float
    i_alpha: float


def _data(data) -> np.ndarray:
    t = np.asarray(data, dtype=float).ravel()
    if t.size == 0:
        raise DomainError("empty sample")
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("lifetimes must be finite and strictly positive")
    return t


def sample_stats(data) -> SampleStats:
    t = _data(data)
    n = t.size
    v = float(t.var(ddof=1)) if n > 1 else 0.0
    return SampleStats(n, float(t.mean()), float(1.0 / np.mean(1.0 / t)), v,
                       float(np.median(t)), np.sort(t))


def loglik(p: BsParams, data) -> float:
    """Full log-likelihood including the normal constant."""
    return float(np.sum(core.logpdf(p, _data(data))))


def _alpha_given_beta(st: SampleStats, beta: float) -> float:
    return math.sqrt(max(st.s / beta + beta / st.r - 2.0, 0.0))


# ---------------------------------------------------------------------------
# point estimators

def mle(data) -> FitResult:
    """Maximum likelihood estimates.

    The scale estimate is the unique root in (r, s) of
    ``beta^2 - beta (2 r + K(beta)) + r (s + K(beta)) = 0`` where ``K(x)`` is
    the harmonic mean of ``x + t_i``; then ``alpha^2 = s/beta + beta/r - 2``.

    Raises
    ------
    NonexistenceError
        For fewer than two observations or a constant sample.
    """
    t = _data(data)
    st = sample_stats(t)
    if st.n < 2 or st.s - st.r <= 1e-14 * st.s:
        raise NonexistenceError("ML estimates need at least two distinct observations")

    def K(x):
        return 1.0 / np.mean(1.0 / (x + t))

    def g(b):
        k = K(b)
        return b * b - b * (2.0 * st.r + k) + st.r * (st.s + k)

    beta = solve_root(g, RootBracket(st.r, st.s, tol=1e-13 * st.s))
    alpha = _alpha_given_beta(st, beta)
    return FitResult(alpha, beta, "ML", st.n, loglik=loglik(BsParams(alpha, beta), t))


def moment_est(data) -> FitResult:
    """Moment estimates from the sample mean and variance.

    Exist when the sample coefficient of variation is below sqrt(5).
    """
    st = sample_stats(data)
    s, v = st.s, st.v
    if st.n < 2 or v <= 0:
        raise NonexistenceError("moment estimates need a non-constant sample")
    if v >= 5.0 * s * s:
        raise NonexistenceError("sample coefficient of variation is at least sqrt(5)")
    d = 5.0 * s * s - v
    b = s * s - v
    a2 = (-2.0 * b + 2.0 * math.sqrt(b * b + v * d)) / d
    alpha = math.sqrt(a2)
    return FitResult(alpha, 2.0 * s / (a2 + 2.0), "moment", st.n)


def mm_est(data) -> FitResult:
    """Modified moment estimates ``alpha = sqrt(2 (sqrt(s/r) - 1))``, ``beta = sqrt(s r)``."""
    st = sample_stats(data)
    ratio = max(st.s / st.r, 1.0)
    return FitResult(math.sqrt(2.0 * (math.sqrt(ratio) - 1.0)), math.sqrt(st.s * st.r), "MM", st.n)


def from_li(data, variant: int = 1, n1: int | None = None, n2: int | None = None) -> FitResult:
    """From-Li estimators.

    variant 1
        Moment-type equations for the normalised transform.
    variant 2
        Median for beta, sample variance for alpha.
    variant 3
        Median for beta, median of per-order-statistic alpha values.
    variant 4
        Trimmed version of variant 1 using order statistics n1..n2 (1-based),
        with ``n1/n < 0.5 < n2/n``.  Defaults to the middle half.
    """
    st = sample_stats(data)
    t = st.sorted
    n = st.n
    if variant == 1:
        beta = float(np.sum(np.sqrt(t)) / np.sum(1.0 / np.sqrt(t)))
        alpha = math.sqrt(float(np.mean(t / beta + beta / t - 2.0)))
    elif variant == 2:
        beta = st.med
        a2 = (-2.0 + 2.0 * math.sqrt(1.0 + 5.0 * st.v / beta**2)) / 5.0
        alpha = math.sqrt(a2)
    elif variant == 3:
        beta = st.med
        i = np.arange(1, n + 1)
        z = std_normal_quantile(i / (n + 1.0))
        keep = np.abs(z) > 1e-12
        alpha = float(np.median(eps(t[keep] / beta) / z[keep]))
    elif variant == 4:
        if n1 is None:
            n1 = max(1, math.ceil(0.25 * n))
        if n2 is None:
            n2 = max(n1 + 1, math.floor(0.75 * n))
        if not (1 <= n1 < n2 <= n and n1 / n < 0.5 < n2 / n):
            raise DomainError("ranks must satisfy n1/n < 0.5 < n2/n")
        sub = t[n1 - 1:n2]
        i = np.arange(n1, n2 + 1)
        z = std_normal_quantile(i / (n + 1.0))
        beta = float(np.sum(np.sqrt(sub)) / np.sum(1.0 / np.sqrt(sub)))
        alpha = math.sqrt(float(np.sum(eps(sub / beta) ** 2) / np.sum(z * z)))
    else:
        raise DomainError("variant must be 1, 2, 3 or 4")
    return FitResult(alpha, beta, f"FL{variant}", n)


def bz_est(data) -> tuple[float, float, float]:
    """Pairwise-ratio estimator: ``(alpha, beta_1, beta_2)``.

    ``zbar`` is the mean of ``t_i / t_j`` over ordered pairs ``i != j``.
    """
    st = sample_stats(data)
    n = st.n
    if n < 2:
        raise DomainError("need at least two observations")
    t = st.sorted
    zbar = (np.sum(t) * np.sum(1.0 / t) - n) / (n * (n - 1.0))
    zbar = max(float(zbar), 1.0)
    rz = math.sqrt(zbar)
    return math.sqrt(2.0 * (rz - 1.0)), st.s / rz, st.r * rz


def new_est(data) -> FitResult:
    """Median for beta and root mean square of the transformed data for alpha."""
    st = sample_stats(data)
    beta = st.med
    u = eps(st.sorted / beta)
    return FitResult(math.sqrt(float(np.mean(u * u))), beta, "new", st.n)


def bias_correct(fit: FitResult, kind: str | None = None) -> FitResult:
    """Bias-corrected ML (UML) or MM (UMM) estimates.

    ``alpha* = n/(n-1) alpha`` and ``beta* = beta / (1 + alpha*^2/(4n))``.
    """
    kind = kind or {"ML": "UML", "MM": "UMM"}.get(fit.method)
    need = {"UML": "ML", "UMM": "MM"}
    if kind not in need or fit.method != need[kind]:
        raise DomainError(f"{kind} correction needs a {need.get(kind, 'ML/MM')} fit, got {fit.method}")
    n = fit.n
    a = n / (n - 1.0) * fit.alpha
    b = fit.beta / (1.0 + a * a / (4.0 * n))
    return FitResult(a, b, kind, n, extras={"base_alpha": fit.alpha, "base_beta": fit.beta})


_ESTIMATORS = {
    "ML": mle,
    "MM": mm_est,
    "moment": moment_est,
    "new": new_est,
    "FL1": lambda d: from_li(d, 1),
    "FL2": lambda d: from_li(d, 2),
    "FL3": lambda d: from_li(d, 3),
    "FL4": lambda d: from_li(d, 4),
}


def jackknife_correct(data, base_method: str = "ML") -> FitResult:
    """Leave-one-out jackknife bias correction of a base estimator."""
    t = _data(data)
    n = t.size
    if n < 3:
        raise DomainError("jackknife needs at least three observations")
    est = _ESTIMATORS[base_method]
    full = est(t)
    loo = np.array([(f.alpha, f.beta) for f in (est(np.delete(t, i)) for i in range(n))])
    a = n * full.alpha - (n - 1) * loo[:, 0].mean()
    b = n * full.beta - (n - 1) * loo[:, 1].mean()
    return FitResult(a, b, f"jackknife-{base_method}", n,
                     extras={"base_alpha": full.alpha, "base_beta": full.beta})


# ---------------------------------------------------------------------------
# information and intervals

def h_alpha(alpha: float) -> float:
    """``alpha sqrt(pi/2) - pi exp(2/alpha^2) (1 - Phi(2/alpha))``, overflow-safe."""
    # exp(x^2/2) * (1 - Phi(x)) = erfcx(x / sqrt 2) / 2 with x = 2/alpha
    return alpha * math.sqrt(math.pi / 2.0) - 0.5 * math.pi * special.erfcx(math.sqrt(2.0) / alpha)


def _g(y):
    return 1.0 + y * y / 2.0 + y * math.sqrt(1.0 + y * y / 4.0)


def i_alpha(alpha: float) -> float:
    """``2 int_0^inf ((1 + g(alpha x))^-1 - 1/2)^2 dPhi(x)``."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    f = lambda x: (1.0 / (1.0 + _g(alpha * x)) - 0.5) ** 2 * math.exp(-0.5 * x * x)
    val, _ = integrate.quad(f, 0.0, math.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return 2.0 * val / math.sqrt(2.0 * math.pi)


def h1(x: float) -> float:
    return 0.25 + x**-2 + i_alpha(x)


def h2(x: float) -> float:
    return (1.0 + 0.75 * x * x) / (1.0 + x * x / 2.0) ** 2


def fisher_info(p: BsParams, n: int = 1) -> FisherInfo:
    """Expected Fisher information for n observations."""
    ha = h_alpha(p.alpha)
    a, b = p.alpha, p.beta
    m = np.array([[2.0 * n / a**2, 0.0],
                  [0.0, n / (a * a * b * b) * (1.0 + a * ha / math.sqrt(2.0 * math.pi))]])
    return FisherInfo(m, ha, i_alpha(a))


def _z(level: float) -> float:
    if not 0 < level < 1:
        raise DomainError("confidence level must lie in (0, 1)")
    return float(std_normal_quantile(1.0 - (1.0 - level) / 2.0))


def asymp_ci(fit: FitResult, level: float = 0.95, form: str = "pivot"):
    """Asymptotic intervals ``((alpha_lo, alpha_hi), (beta_lo, beta_hi))``.

    form="pivot"
        Intervals of the form ``theta / (1 +- z c)`` where ``c`` is the
        relative asymptotic standard deviation.  For ML/MM fits
        ``c_alpha = 1/sqrt(2n)``; ML uses ``c_beta = 1/sqrt(n h1(alpha))``
        and MM ``c_beta = alpha sqrt(h2(alpha)/n)``.  Bias-corrected fits
        use ``c_alpha = sqrt(n/2)/(n-1)`` and multiply ``c_beta`` (evaluated
        at the corrected alpha) by ``4n/(4n + alpha^2)``.
    form="wald"
        Symmetric intervals ``theta +- z se`` with ``se_alpha = alpha/sqrt(2n)``
        and ``se_beta = beta sqrt(alpha h2(alpha)/n)``, the standard errors
        taken at the uncorrected estimates.
    """
    z = _z(level)
    n = fit.n
    a, b = fit.alpha, fit.beta
    kind = fit.method
    if kind not in ("ML", "MM", "UML", "UMM"):
        raise DomainError(f"no asymptotic interval for method {kind}")
    if form == "wald":
        a0 = fit.extras.get("base_alpha", a)
        b0 = fit.extras.get("base_beta", b)
        sa = a0 / math.sqrt(2.0 * n)
        sb = b0 * math.sqrt(a0 * h2(a0) / n)
        return (a - z * sa, a + z * sa), (b - z * sb, b + z * sb)
    if form != "pivot":
        raise DomainError("form must be 'pivot' or 'wald'")
    if kind in ("ML", "MM"):
        ca = 1.0 / math.sqrt(2.0 * n)
        shrink = 1.0
    else:
        ca = math.sqrt(n / 2.0) / (n - 1.0)
        shrink = 4.0 * n / (4.0 * n + a * a)
    if kind in ("ML", "UML"):
        cb = 1.0 / math.sqrt(n * h1(a))
    else:
        cb = a * math.sqrt(h2(a) / n)
    cb *= shrink
    if z * ca >= 1 or z * cb >= 1:
        raise DomainError("interval is unbounded at this level and sample size")
    return ((a / (1 + z * ca), a / (1 - z * ca)), (b / (1 + z * cb), b / (1 - z * cb)))


# ---------------------------------------------------------------------------
# modified signed log-likelihood root

def _loglik_theta(theta, t):
    a, b = theta
    if a <= 0 or b <= 0:
        return -np.inf
    x = t / b
    return float(np.sum(-math.log(a) - math.log(b) + np.log(np.sqrt(1 / x) + (1 / x) ** 1.5)
                        - (x + 1 / x - 2) / (2 * a * a)))


def _l_t(theta, t):
    """Derivative of each log-density term with respect to its observation."""
    a, b = theta
    x = t / b
    e, e1, e2 = eps(x), core.eps_prime(x), core.eps_dprime(x)
    return (e2 / e1 - e * e1 / (a * a)) / b


def r_star(beta: float, data, fit: FitResult | None = None) -> tuple[float, float]:
    """Signed root ``r(beta)`` and its modified version ``r*(beta)``.

    The ancillary directions come from the pivot ``z_i = eps(t_i/beta)/alpha``
    evaluated at the unconstrained MLE.
    """
    t = _data(data)
    fit = fit or mle(t)
    st = sample_stats(t)
    th = np.array([fit.alpha, fit.beta])
    thb = np.array([_alpha_given_beta(st, beta), beta])
    l_hat = _loglik_theta(th, t)
    l_b = _loglik_theta(thb, t)
    r = math.copysign(math.sqrt(max(2.0 * (l_hat - l_b), 0.0)), fit.beta - beta)

    a0, b0 = th
    x0 = t / b0
    v1 = b0 * eps(x0) / (a0 * core.eps_prime(x0))
    v2 = t / b0
    V = np.vstack([v1, v2])

    def lv(theta):
        return V @ _l_t(theta, t)

    def dlv(theta):
        out = np.zeros((2, 2))
        for k in range(2):
            hstep = 1e-6 * theta[k]
            e = np.zeros(2)
            e[k] = hstep
            out[:, k] = (lv(theta + e) - lv(theta - e)) / (2 * hstep)
        return out

    f = lambda th_: _loglik_theta(th_, t)
    j_full = -numerical_hessian(f, th, h=1e-4 * th)
    j_aa = -numerical_hessian(lambda x: f(np.array([x[0], beta])), thb[:1], h=1e-4 * thb[:1])[0, 0]
    num = np.column_stack([lv(th) - lv(thb), dlv(thb)[:, 0]])
    den = dlv(th)
    q = (np.linalg.det(num) / np.linalg.det(den)) * math.sqrt(np.linalg.det(j_full) / j_aa)
    if abs(r) < 1e-8 or q / r <= 0:
        return r, r
    return r, r + math.log(q / r) / r


def r_star_ci(data, level: float = 0.95) -> tuple[float, float]:
    """Interval ``{beta : |r*(beta)| <= z}`` for the scale parameter."""
    t = _data(data)
    z = _z(level)
    fit = mle(t)
    b0 = fit.beta
    rs = lambda b: r_star(b, t, fit)[1]

    def edge(sign):
        # r* decreases in beta; step away from the MLE until |r*| passes z
        step = max(fit.alpha, 0.05) * b0 / math.sqrt(t.size)
        lo = b0
        hi = b0 + sign * step
        for _ in range(200):
            if hi <= 0:
                hi = lo / 2.0
            if sign * (rs(hi) + sign * z) < 0:
                break
            lo, hi = hi, hi + sign * step
            step *= 1.5
        else:
            raise ConvergenceError("r* interval endpoint not bracketed")
        # skip the neighbourhood of the MLE where r* is numerically singular
        a_, b_ = sorted((lo if lo != b0 else b0 + sign * 1e-3 * step, hi))
        return solve_root(lambda b: rs(b) + sign * z, RootBracket(a_, b_, tol=1e-10 * b0))

    return edge(-1.0), edge(+1.0)


# ---------------------------------------------------------------------------
# goodness of fit

def ks_distance(data, p: BsParams) -> float:
    """Sup distance between the empirical CDF and the fitted CDF."""
    t = np.sort(_data(data))
    n = t.size
    F = core.cdf(p, t)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_pvalue(d: float, n: int, terms: int = 100) -> float:
    """Asymptotic Kolmogorov p-value ``2 sum (-1)^(k-1) exp(-2 k^2 n d^2)``."""
    lam = math.sqrt(n) * d
    if lam < 0.2:
        return 1.0
    k = np.arange(1, terms + 1)
    return float(min(1.0, max(0.0, 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * lam * lam)))))


def ks_test(data, p: BsParams) -> tuple[float, float]:
    """KS distance and asymptotic p-value against BS(p)."""
    t = _data(data)
    d = ks_distance(t, p)
    return d, ks_pvalue(d, t.size)
