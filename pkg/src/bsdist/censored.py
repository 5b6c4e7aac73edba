"""Type-II and progressively Type-II censored samples.

Type-II: the ``r`` smallest of ``n`` lifetimes are observed.  Progressive
Type-II: at the i-th of ``m`` failures, ``R_i`` surviving units are
withdrawn, with ``sum(R) = n - m``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import optimize

from .complete import FitResult, _z, fisher_info, mle
from .core import BsParams, eps, eps_dprime, eps_prime, transform_from_normal
from .numerics import (
    ConvergenceError,
    DomainError,
    NonexistenceError,
    RootBracket,
    norm_logcdf,
    norm_pdf,
    numerical_hessian,
    solve_root,
)

__all__ = [
    "Type2Sample",
    "ProgressiveSample",
    "type2_loglik",
    "type2_mle",
    "type2_bias_factor",
    "type2_ci",
    "type2_q",
    "progressive_loglik",
    "progressive_fit",
    "progressive_censor",
    "load_progressive",
    "censor_type2",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _prepare_times(t, jitter: bool) -> np.ndarray:
    t = np.asarray(t, dtype=float).ravel()
    if t.size == 0 or np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("lifetimes must be finite and strictly positive")
    order = np.argsort(t, kind="stable")
    t = t[order]
    d = np.diff(t)
    if np.any(d <= 0):
        if not jitter:
            raise DomainError("tied observations; pass jitter=True to separate them")
        # rank-preserving relative jitter
        t = t * (1.0 + 1e-9 * np.arange(t.size))
    return t


@dataclass(frozen=True)
class Type2Sample:
    """The ``r`` smallest order statistics out of ``n`` units."""

    t: np.ndarray
    n: int

    @property
    def r(self) -> int:
        return int(self.t.size)

    @classmethod
    def from_values(cls, t, n: int, jitter: bool = False) -> "Type2Sample":
        t = _prepare_times(t, jitter)
        if not 1 <= t.size <= n:
            raise DomainError(f"need 1 <= r <= n, got r={t.size}, n={n}")
        return cls(t, int(n))

    def scaled(self, c: float) -> "Type2Sample":
        return Type2Sample(self.t * c, self.n)


def censor_type2(values, r: int, jitter: bool = False) -> Type2Sample:
    """Keep the ``r`` smallest of a complete sample."""
    t = _prepare_times(values, jitter)
    if not 1 <= r <= t.size:
        raise DomainError(f"need 1 <= r <= n, got r={r}, n={t.size}")
    return Type2Sample(t[:r], t.size)


@dataclass(frozen=True)
class ProgressiveSample:
    """Failure times with the number of units withdrawn at each failure."""

    t: np.ndarray
    R: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return int(self.t.size)

    @classmethod
    def from_values(cls, t, R, n: int | None = None, jitter: bool = False) -> "ProgressiveSample":
        R = np.asarray(R, dtype=int).ravel()
        t_arr = np.asarray(t, dtype=float).ravel()
        if R.size != t_arr.size:
            raise DomainError("one removal count per failure time is required")
        if np.any(np.diff(t_arr) < 0):
            raise DomainError("failure times must be increasing")
        t_arr = _prepare_times(t_arr, jitter)
        if np.any(R < 0):
            raise DomainError("removal counts must be non-negative")
        m = t_arr.size
        total = m + int(R.sum())
        if n is None:
            n = total
        if total != n:
            raise DomainError(f"removal counts sum to {int(R.sum())}, expected n - m = {n - m}")
        return cls(t_arr, R, int(n))

    def scaled(self, c: float) -> "ProgressiveSample":
        return ProgressiveSample(self.t * c, self.R, self.n)


# ---------------------------------------------------------------------------
# Type-II

def type2_loglik(p: BsParams, s: Type2Sample) -> float:
    """Censored log-likelihood without the combinatorial constant.

    ``(n-r) ln(1 - Phi(eps(t_r/beta)/alpha)) - r ln(alpha beta)
    + sum ln eps'(t_i/beta) - sum eps^2(t_i/beta)/(2 alpha^2)``
    """
    x = s.t / p.beta
    e = eps(x)
    out = (-s.r * math.log(p.alpha * p.beta) + float(np.sum(np.log(eps_prime(x))))
           - float(np.sum(e * e)) / (2.0 * p.alpha**2))
    if s.n > s.r:
        out += (s.n - s.r) * float(norm_logcdf(-e[-1] / p.alpha))
    return out


def _theta_loglik(fn, sample):
    def f(v):
        return fn(BsParams(math.exp(v[0]), math.exp(v[1])), sample)
    return f


def _maximize(f, x0, method="Nelder-Mead"):
    res = optimize.minimize(lambda v: -f(v), x0, method=method,
                            options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 20000, "maxfev": 40000})
    if not res.success:
        raise ConvergenceError(f"likelihood maximization failed: {res.message}", res)
    # polish with a quasi-Newton step
    res2 = optimize.minimize(lambda v: -f(v), res.x, method="BFGS", options={"gtol": 1e-10})
    x = res2.x if res2.fun <= res.fun else res.x
    return x, int(res.nit)


def _complete_start(t):
    t = np.asarray(t, dtype=float)
    if t.size >= 2 and t[-1] > t[0]:
        f = mle(t)
        return math.log(f.alpha), math.log(f.beta)
    return math.log(0.5), math.log(float(np.median(t)))


def _hazard_ratio(x):
    # phi(x) / (1 - Phi(x)) on the log scale
    return np.exp(-0.5 * x * x - 0.5 * _LOG_2PI - norm_logcdf(-x))


def _mills_phi_over_Phi(x):
    return np.exp(-0.5 * x * x - 0.5 * _LOG_2PI - norm_logcdf(x))


def type2_q(beta: float, s: Type2Sample, h_variant: str = "hazard") -> tuple[float, float]:
    """``(Q(beta), psi^2(beta))`` of the profile score equation.

    With ``x_i = t_i/beta`` and ``c = 1 + (1/r) sum x_i eps''(x_i)/eps'(x_i)``:
    ``h1 = eps(x_r)``, ``h2 = -(1/r) sum eps^2(x_i)``,
    ``h3 = x_r eps'(x_r)/c``, ``h4 = -(1/(r c)) sum x_i eps(x_i) eps'(x_i)``,
    ``psi^2 = (h2 h3 - h1 h4)/(h1 - h3)`` and
    ``Q = psi^2 (1/2 - 1/K) - u/2 + 1/(2v) - psi (n-r)/r H(eps(x_r)/psi) x_r eps'(x_r)``
    where ``u``, ``v`` and ``K`` are the arithmetic mean of ``x``, the
    harmonic mean of ``x`` and the harmonic mean of ``1 + x``.

    `h_variant` selects ``H``: "hazard" uses ``phi/(1 - Phi)``, which is what
    the censoring term of the likelihood produces; "phi_over_phi" uses
    ``phi/Phi``.
    """
    r, n = s.r, s.n
    x = s.t / beta
    e = eps(x)
    e1 = eps_prime(x)
    e2 = eps_dprime(x)
    c = 1.0 + float(np.mean(x * e2 / e1))
    h1 = float(e[-1])
    h2 = -float(np.mean(e * e))
    h3 = float(x[-1] * e1[-1]) / c
    h4 = -float(np.mean(x * e * e1)) / c
    psi2 = (h2 * h3 - h1 * h4) / (h1 - h3)
    u = float(np.mean(x))
    v = 1.0 / float(np.mean(1.0 / x))
    K = 1.0 / float(np.mean(1.0 / (1.0 + x)))
    psi = math.sqrt(psi2) if psi2 > 0 else float("nan")
    if h_variant == "hazard":
        H = _hazard_ratio
    elif h_variant == "phi_over_phi":
        H = _mills_phi_over_Phi
    else:
        raise DomainError("h_variant must be 'hazard' or 'phi_over_phi'")
    cens = 0.0
    if n > r:
        cens = psi * (n - r) / r * float(H(h1 / psi)) * float(x[-1] * e1[-1])
    q = psi2 * (0.5 - 1.0 / K) - u / 2.0 + 1.0 / (2.0 * v) - cens
    return q, psi2


def type2_mle(s: Type2Sample, strategy: str = "direct", h_variant: str = "hazard") -> FitResult:
    """ML estimates from a Type-II censored sample.

    strategy="direct" maximizes the censored log-likelihood over
    ``(log alpha, log beta)``; strategy="root" solves ``Q(beta) = 0`` and sets
    ``alpha = psi(beta)``.  Standard errors come from the observed
    information.

    Raises
    ------
    NonexistenceError
        If ``r <= 1``.
    """
    if s.r <= 1:
        raise NonexistenceError("ML estimates do not exist for r <= 1")
    # fit on a unit-scale copy so that results are exactly scale-equivariant
    scale = float(s.t[0] * s.t[-1]) ** 0.5
    u = s.scaled(1.0 / scale)
    if strategy == "direct":
        f = _theta_loglik(type2_loglik, u)
        x, it = _maximize(f, np.array(_complete_start(u.t)))
        a, b = math.exp(x[0]), math.exp(x[1])
    elif strategy == "root":
        def q(lb):
            val, psi2 = type2_q(math.exp(lb), u, h_variant)
            return val if psi2 > 0 else float("nan")

        grid = np.linspace(math.log(u.t[0]) - 3.0, math.log(u.t[-1]) + 3.0, 400)
        vals = np.array([q(g) for g in grid])
        idx = [i for i in range(grid.size - 1)
               if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] <= 0]
        if not idx:
            raise ConvergenceError("no sign change of Q(beta) found", vals)
        roots = [solve_root(q, RootBracket(grid[i], grid[i + 1], tol=1e-14)) for i in idx]
        f = _theta_loglik(type2_loglik, u)
        cands = [(lb, 0.5 * math.log(type2_q(math.exp(lb), u, h_variant)[1])) for lb in roots]
        lb, la = max(cands, key=lambda c: f(np.array([c[1], c[0]])))
        a, b, it = math.exp(la), math.exp(lb), len(idx)
    else:
        raise DomainError("strategy must be 'direct' or 'root'")
    b *= scale
    fit = FitResult(a, b, f"ML-type2-{strategy}", s.n, iterations=it, loglik=type2_loglik(BsParams(a, b), s),
                    extras={"r": s.r})
    try:
        cov = _observed_cov(type2_loglik, BsParams(a, b), s)
        fit.se_alpha, fit.se_beta = float(math.sqrt(cov[0, 0])), float(math.sqrt(cov[1, 1]))
    except DomainError:
        pass
    return fit


def _observed_cov(fn, p: BsParams, sample) -> np.ndarray:
    f = lambda v: fn(BsParams(v[0], v[1]), sample)
    H = numerical_hessian(f, np.array([p.alpha, p.beta]))
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        raise DomainError("observed information is singular") from None
    if not (cov[0, 0] > 0 and cov[1, 1] > 0):
        raise DomainError("observed information is not positive definite")
    return cov


def type2_bias_factor(n: int, r: int) -> float:
    """Divisor ``1 - (1/n)(1 + 2.5 (1 - r/n))`` removing the first-order bias of alpha."""
    return 1.0 - (1.0 + 2.5 * (1.0 - r / n)) / n


def type2_ci(fit: FitResult, s: Type2Sample, level: float = 0.95, corrected: bool = False):
    """Normal-theory intervals from the observed information.

    alpha: ``alpha +- z se_alpha``.  beta:
    ``(beta / (1 + z se_beta/beta), beta / (1 - z se_beta/beta))``.
    With ``corrected=True`` alpha is first divided by
    :func:`type2_bias_factor` and the information is evaluated at the
    corrected alpha and the uncorrected beta.

    Returns ``((alpha_lo, alpha_hi), (beta_lo, beta_hi), (alpha, beta))``.
    """
    z = _z(level)
    a, b = fit.alpha, fit.beta
    if corrected:
        a = a / type2_bias_factor(s.n, s.r)
    cov = _observed_cov(type2_loglik, BsParams(a, b), s)
    sa, sb = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    if z * sb >= b:
        raise DomainError("beta interval is unbounded at this level")
    return (a - z * sa, a + z * sa), (b / (1.0 + z * sb / b), b / (1.0 - z * sb / b)), (a, b)


# ---------------------------------------------------------------------------
# progressive Type-II

def progressive_loglik(p: BsParams, s: ProgressiveSample) -> float:
    """``sum ln f(t_i) + R_i ln Phi(-g(t_i))`` with ``g = eps(t/beta)/alpha``."""
    x = s.t / p.beta
    z = eps(x) / p.alpha
    lf = np.log(eps_prime(x)) - math.log(p.alpha * p.beta) - 0.5 * z * z - 0.5 * _LOG_2PI
    return float(np.sum(lf) + np.sum(s.R * norm_logcdf(-z)))


def _trunc_grid(zc, nodes=200, width=12.0):
    """Nodes and weights for ``E[g(Z) | Z > zc]``, standard normal Z.

    Gauss-Legendre on ``[zc, zc + width]``; the tail beyond is negligible.
    """
    zc = np.atleast_1d(np.asarray(zc, dtype=float))
    x, gw = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * width * (x + 1.0)
    z = zc[:, None] + u[None, :]
    w = gw[None, :] * np.exp(-0.5 * (z * z - zc[:, None] ** 2))  # rescaled to avoid underflow
    return z, w / w.sum(axis=1, keepdims=True)


def _em_stats(p: BsParams, s: ProgressiveSample):
    """Expected complete-data statistics ``(sum z, sum T, sum 1/T)``."""
    a, b = p.alpha, p.beta
    Z = float(np.sum(s.t / (b + s.t)))
    A = float(np.sum(s.t))
    B = float(np.sum(1.0 / s.t))
    mask = s.R > 0
    if np.any(mask):
        zc = eps(s.t[mask] / b) / a
        zz, w = _trunc_grid(zc)
        tt = transform_from_normal(a, b, zz)
        R = s.R[mask]
        Z += float(R @ np.sum(w * tt / (b + tt), axis=1))
        A += float(R @ np.sum(w * tt, axis=1))
        B += float(R @ np.sum(w / tt, axis=1))
    return Z, A, B


def _em_mstep(N, Z, A, B):
    # maximize -N ln a + (N/2 - Z) ln b - (A/b + B b - 2N)/(2 a^2)
    k = 1.0 - 2.0 * Z / N
    qa = 2.0 * Z / N * B
    qb = 2.0 * N * k
    qc = -A * (k + 1.0)
    b = (-qb + math.sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa)
    a2 = (A / b + B * b - 2.0 * N) / N
    return math.sqrt(max(a2, 1e-300)), b


def _louis_info(p: BsParams, s: ProgressiveSample) -> np.ndarray:
    """Observed information as complete information minus missing information."""
    a, b = p.alpha, p.beta

    def pieces(t, wz):
        # wz = P(length-biased component | t); returns E[-hess], E[score], E[score score^T]
        q = t / b + b / t - 2.0
        qb = -t / b**2 + 1.0 / t
        qbb = 2.0 * t / b**3
        sa = -1.0 / a + q / a**3
        # score in beta for each component
        sb0 = 0.5 / b - qb / (2 * a * a)
        sb1 = -0.5 / b - qb / (2 * a * a)
        e_sb = (1 - wz) * sb0 + wz * sb1
        e_sb2 = (1 - wz) * sb0**2 + wz * sb1**2
        haa = 1.0 / a**2 - 3.0 * q / a**4
        hab = qb / a**3
        hbb_comp = -(0.5 - wz) / b**2 - qbb / (2 * a * a)
        negH = np.stack([-haa, -hab, -hab, -hbb_comp])
        S1 = np.stack([sa, e_sb])
        S2 = np.stack([sa * sa, sa * e_sb, sa * e_sb, e_sb2])
        return negH, S1, S2

    info = np.zeros(4)
    negH, S1, S2 = pieces(s.t, s.t / (b + s.t))
    info += np.sum(negH - (S2 - np.stack([S1[0] * S1[0], S1[0] * S1[1], S1[0] * S1[1], S1[1] * S1[1]])), axis=1)
    mask = s.R > 0
    if np.any(mask):
        zc = eps(s.t[mask] / b) / a
        zz, w = _trunc_grid(zc)
        tt = transform_from_normal(a, b, zz)
        negH, S1, S2 = pieces(tt, tt / (b + tt))
        eH = np.sum(negH * w, axis=2)
        eS1 = np.sum(S1 * w, axis=2)
        eS2 = np.sum(S2 * w, axis=2)
        cov = eS2 - np.stack([eS1[0] * eS1[0], eS1[0] * eS1[1], eS1[0] * eS1[1], eS1[1] * eS1[1]])
        info += (eH - cov) @ s.R[mask]
    return info.reshape(2, 2)


def progressive_fit(s: ProgressiveSample, strategy: str = "direct", se_method: str = "observed",
                    tol: float = 1e-10, max_iter: int = 5000) -> FitResult:
    """ML fit of a progressively censored sample.

    strategy="direct" maximizes :func:`progressive_loglik`; strategy="em"
    runs EM on the inverse-Gaussian mixture representation with the latent
    lifetimes of withdrawn units and the latent component labels as missing
    data.

    se_method="observed" uses the observed information (numerical Hessian
    for direct, the missing-information decomposition for EM);
    se_method="complete" uses the expected information of ``n`` complete
    observations evaluated at the estimates.
    """
    if s.m < 2:
        raise NonexistenceError("need at least two failures")
    scale = float(s.t[0] * s.t[-1]) ** 0.5
    u = s.scaled(1.0 / scale)
    trace = []
    if strategy == "direct":
        f = _theta_loglik(progressive_loglik, u)
        x, it = _maximize(f, np.array(_complete_start(u.t)))
        a, b = math.exp(x[0]), math.exp(x[1])
    elif strategy == "em":
        a, b = (math.exp(v) for v in _complete_start(u.t))
        ll = progressive_loglik(BsParams(a, b), u)
        trace.append(ll)
        for it in range(1, max_iter + 1):
            a_new, b_new = _em_mstep(u.n, *_em_stats(BsParams(a, b), u))
            ll_new = progressive_loglik(BsParams(a_new, b_new), u)
            if ll_new < ll - 1e-10 * max(1.0, abs(ll)):
                raise ConvergenceError("EM decreased the log-likelihood", trace)
            trace.append(ll_new)
            done = abs(a_new - a) <= tol * a and abs(b_new - b) <= tol * b
            a, b, ll = a_new, b_new, ll_new
            if done:
                break
        else:
            raise ConvergenceError("EM did not converge", trace)
    else:
        raise DomainError("strategy must be 'direct' or 'em'")
    b *= scale
    p = BsParams(a, b)
    fit = FitResult(a, b, f"ML-progressive-{strategy}", s.n, iterations=it,
                    loglik=progressive_loglik(p, s), extras={"m": s.m, "trace": trace})
    if se_method == "observed":
        if strategy == "em":
            cov = np.linalg.inv(_louis_info(p, s))
        else:
            cov = _observed_cov(progressive_loglik, p, s)
    elif se_method == "complete":
        cov = np.linalg.inv(fisher_info(p, s.n).matrix)
    else:
        raise DomainError("se_method must be 'observed' or 'complete'")
    fit.se_alpha, fit.se_beta = float(math.sqrt(cov[0, 0])), float(math.sqrt(cov[1, 1]))
    return fit


def progressive_ci(fit: FitResult, level: float = 0.95):
    """Symmetric normal-theory intervals ``theta +- z se``."""
    z = _z(level)
    return ((fit.alpha - z * fit.se_alpha, fit.alpha + z * fit.se_alpha),
            (fit.beta - z * fit.se_beta, fit.beta + z * fit.se_beta))


def progressive_censor(values, R, rule: str = "random", seed=None) -> ProgressiveSample:
    """Apply a removal scheme to a complete sample.

    rule="random" withdraws survivors uniformly at random; rule="largest"
    withdraws the largest surviving lifetimes.
    """
    alive = list(np.sort(np.asarray(values, dtype=float)))
    R = [int(x) for x in R]
    n = len(alive)
    if sum(R) + len(R) != n:
        raise DomainError(f"removal counts sum to {sum(R)}, expected n - m = {n - len(R)}")
    rng = np.random.default_rng(seed)
    times = []
    for r in R:
        times.append(alive.pop(0))
        if r == 0:
            continue
        if rule == "largest":
            del alive[len(alive) - r:]
        elif rule == "random":
            drop = set(rng.choice(len(alive), size=r, replace=False).tolist())
            alive = [v for i, v in enumerate(alive) if i not in drop]
        else:
            raise DomainError("rule must be 'random' or 'largest'")
    return ProgressiveSample(np.array(times), np.array(R), n)


def load_progressive(name: str) -> ProgressiveSample:
    """Packaged progressive fixture (``MCS-1``, ``MCS-2`` or ``MCS-3``)."""
    fname = name.lower().replace("-", "") + ".csv"
    ref = resources.files("bsdist") / "data" / fname
    if not ref.is_file():
        raise KeyError(f"no progressive fixture named {name!r}")
    with ref.open() as fh:
        rows = list(csv.DictReader(fh))
    return ProgressiveSample.from_values([float(r["time"]) for r in rows], [int(r["removal"]) for r in rows])
