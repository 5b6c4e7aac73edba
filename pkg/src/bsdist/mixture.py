"""Inverse-Gaussian representation of BS and two-component BS mixtures.

``BS(alpha, beta)`` is the equal mixture of ``IG(mu, lambda)`` and its
length-biased version, with ``mu = beta`` and ``lambda = beta/alpha^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import core
from .core import BsParams
from .numerics import ConvergenceError, DomainError

__all__ = [
    "IgParams",
    "MixtureParams",
    "EmTrace",
    "ig_pdf",
    "lb_ig_pdf",
    "bs_as_ig_mixture",
    "bs_mgf",
    "sample_ig_route",
    "mixture_pdf",
    "mixture_loglik",
    "mixture_moments",
    "mixture_moment",
    "mixture_sample",
    "mstep_component",
    "default_init",
    "em_fit",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class IgParams:
    mu: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > 0):
            raise DomainError("IG parameters must be positive")


@dataclass(frozen=True)
class MixtureParams:
    """Weight `p` on BS(alpha1, beta1) and ``1 - p`` on BS(alpha2, beta2)."""

    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    p: float

    def __post_init__(self):
        if not min(self.alpha1, self.beta1, self.alpha2, self.beta2) > 0:
            raise DomainError("mixture shape and scale parameters must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError("mixing weight must lie in [0, 1]")

    @property
    def components(self) -> tuple[BsParams, BsParams]:
        return BsParams(self.alpha1, self.beta1), BsParams(self.alpha2, self.beta2)

    def swapped(self) -> "MixtureParams":
        return MixtureParams(self.alpha2, self.beta2, self.alpha1, self.beta1, 1.0 - self.p)


@dataclass
class EmTrace:
    loglik: list = field(default_factory=list)
    params: list = field(default_factory=list)
    resp_a: np.ndarray | None = None
    resp_b: np.ndarray | None = None
    flags: list = field(default_factory=list)


def _pos(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("support is t > 0")
    return t


def _ig_logpdf(mu, lam, t):
    return 0.5 * (np.log(lam) - _LOG_2PI - 3.0 * np.log(t)) - lam * (t - mu) ** 2 / (2.0 * mu * mu * t)


def ig_pdf(p: IgParams, t):
    """``sqrt(lambda/(2 pi t^3)) exp(-lambda (t - mu)^2 / (2 mu^2 t))``."""
    t = _pos(t)
    return core._ret(np.exp(_ig_logpdf(p.mu, p.lam, t)))


def lb_ig_pdf(p: IgParams, t):
    """Length-biased IG density ``t f_IG(t) / mu``."""
    t = _pos(t)
    return core._ret(np.exp(_ig_logpdf(p.mu, p.lam, t) + np.log(t / p.mu)))


def bs_as_ig_mixture(alpha: float, beta: float) -> tuple[IgParams, tuple[float, float]]:
    """IG parameters and weights with ``BS = 1/2 IG + 1/2 length-biased IG``."""
    BsParams(alpha, beta)
    return IgParams(beta, beta / alpha**2), (0.5, 0.5)


def bs_mgf(alpha: float, beta: float, t: float) -> float:
    """Moment generating function, finite for ``t < lambda/(2 mu^2)``."""
    ig, _ = bs_as_ig_mixture(alpha, beta)
    mu, lam = ig.mu, ig.lam
    if not t < lam / (2.0 * mu * mu):
        raise DomainError("the moment generating function diverges for t >= 1/(2 alpha^2 beta)")
    root = math.sqrt(1.0 - 2.0 * mu * mu * t / lam)
    return 0.5 * math.exp(lam / mu * (1.0 - root)) * (1.0 + 1.0 / root)


def sample_ig_route(p: BsParams, n: int, seed=None) -> np.ndarray:
    """BS variates as an equal mixture of ``X ~ IG(mu, lambda)`` and ``mu^2 / X``."""
    rng = np.random.default_rng(seed)
    ig, _ = bs_as_ig_mixture(p.alpha, p.beta)
    x = rng.wald(ig.mu, ig.lam, n)
    flip = rng.random(n) < 0.5
    return np.where(flip, ig.mu**2 / x, x)


def mixture_pdf(mp: MixtureParams, t):
    t = _pos(t)
    c1, c2 = mp.components
    out = mp.p * np.asarray(core.pdf(c1, t))
    if mp.p < 1.0:
        out = out + (1.0 - mp.p) * np.asarray(core.pdf(c2, t))
    return core._ret(out)


def mixture_loglik(mp: MixtureParams, data) -> float:
    t = _pos(np.asarray(data, dtype=float).ravel())
    c1, c2 = mp.components
    with np.errstate(divide="ignore"):
        l1 = np.log(mp.p) + core.logpdf(c1, t)
        l2 = np.log1p(-mp.p) + core.logpdf(c2, t)
    return float(np.sum(np.logaddexp(l1, l2)))


def mixture_moments(mp: MixtureParams) -> tuple[float, float]:
    """``(E Y, E Y^2)`` in closed form."""
    def m1(a, b):
        return b * (1.0 + 0.5 * a * a)

    def m2(a, b):
        return b * b * (1.0 + 2.0 * a * a + 1.5 * a**4)

    q = 1.0 - mp.p
    return (mp.p * m1(mp.alpha1, mp.beta1) + q * m1(mp.alpha2, mp.beta2),
            mp.p * m2(mp.alpha1, mp.beta1) + q * m2(mp.alpha2, mp.beta2))


def mixture_moment(mp: MixtureParams, r: float) -> float:
    """``E Y^r`` for any real r, by quadrature on the normal scale."""
    total = 0.0
    for w, c in zip((mp.p, 1.0 - mp.p), mp.components):
        if w == 0:
            continue
        f = lambda z: core.transform_from_normal(c.alpha, c.beta, z) ** r * math.exp(-0.5 * z * z)
        val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        total += w * val / math.sqrt(2.0 * math.pi)
    return total


def mixture_sample(mp: MixtureParams, n: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    c1, c2 = mp.components
    first = rng.random(n) < mp.p
    z = rng.standard_normal(n)
    return np.where(first, core.transform_from_normal(c1.alpha, c1.beta, z),
                    core.transform_from_normal(c2.alpha, c2.beta, z))


def mstep_component(y, a, b) -> tuple[float, float, bool]:
    """Maximize one component of the expected complete-data log-likelihood.

    `a` and `b` are the weights of the IG and length-biased IG pieces.
    With ``A = sum b``, ``B = sum (a + b)/2``, ``C = sum (a + b) y / 2`` and
    ``D = sum (a + b)/(2 y)``:
    ``mu = [B (A - B) + sqrt(B^2 (A - B)^2 + A C D (2B - A))] / (A D)`` and
    ``lambda = 2 B mu^2 / sum (a + b)(y - mu)^2 / y``.

    Returns ``(mu, lambda, fallback)``; `fallback` is True when the
    closed form was unusable and a one-dimensional search was used.
    """
    y = np.asarray(y, dtype=float)
    w = a + b
    A = float(b.sum())
    B = 0.5 * float(w.sum())
    C = 0.5 * float(w @ y)
    D = 0.5 * float(w @ (1.0 / y))
    disc = (B * (A - B)) ** 2 + A * C * D * (2.0 * B - A)
    fallback = False
    if A > 0 and disc >= 0:
        mu = (B * (A - B) + math.sqrt(disc)) / (D * A)
    elif A == 0:
        # the quadratic degenerates to its linear part: mu = C / B
        mu = C / B
    else:
        fallback = True
        from scipy.optimize import minimize_scalar

        def neg(lm):
            m = math.exp(lm)
            lam = B * m * m / (C - 2 * B * m + D * m * m)
            return -(B * math.log(lam) - lam * (C - 2 * B * m + D * m * m) / (m * m) - A * lm)

        mu = math.exp(minimize_scalar(neg, bracket=(math.log(C / B) - 1, math.log(C / B) + 1)).x)
    denom = float(w @ ((y - mu) ** 2 / y))
    lam = 2.0 * B * mu * mu / denom if denom > 0 else math.inf
    return mu, lam, fallback


def default_init(data) -> MixtureParams:
    """Two-means split of log-data; pooled modified-moment alpha; p = 1/2."""
    from .complete import mm_est

    y = np.sort(np.asarray(data, dtype=float))
    ly = np.log(y)
    c = np.quantile(ly, [0.25, 0.75])
    for _ in range(100):
        lab = np.abs(ly - c[0]) > np.abs(ly - c[1])
        if lab.all() or (~lab).all():
            break
        new = np.array([ly[~lab].mean(), ly[lab].mean()])
        if np.allclose(new, c):
            break
        c = new
    a = mm_est(y).alpha
    return MixtureParams(a, float(math.exp(c[0])), a, float(math.exp(c[1])), 0.5)


def _responsibilities(mp: MixtureParams, y):
    logs = []
    for w, (a, b) in zip((mp.p, 1.0 - mp.p), ((mp.alpha1, mp.beta1), (mp.alpha2, mp.beta2))):
        lig = _ig_logpdf(b, b / a**2, y)
        with np.errstate(divide="ignore"):
            lw = math.log(w / 2.0) if w > 0 else -np.inf
        logs.append(lw + lig)
        logs.append(lw + lig + np.log(y / b))
    L = np.stack(logs)
    mx = L.max(axis=0)
    R = np.exp(L - mx)
    tot = R.sum(axis=0)
    R /= tot
    ll = float(np.sum(mx + np.log(tot)))
    # rows: a_1, b_1, a_2, b_2
    return R, ll


def em_fit(data, init: MixtureParams | None = None, tol: float = 1e-10, max_iter: int = 5000,
           min_weight: float = 1e-6) -> tuple[MixtureParams, EmTrace]:
    """EM estimates of a two-component BS mixture.

    Each observation carries four latent labels: component j and whether it
    came from the IG or the length-biased IG piece.  Iteration stops when
    the relative gain in log-likelihood falls below `tol`.

    Raises
    ------
    ConvergenceError
        On component collapse or when `max_iter` is reached; ``.state`` is
        the :class:`EmTrace`.
    """
    y = _pos(np.asarray(data, dtype=float).ravel())
    if y.size < 10:
        raise DomainError("EM needs at least 10 observations")
    mp = init or default_init(y)
    trace = EmTrace()
    R, ll = _responsibilities(mp, y)
    trace.loglik.append(ll)
    trace.params.append(mp)
    n = y.size
    for it in range(1, max_iter + 1):
        p1 = float(R[0].sum() + R[1].sum()) / n
        if p1 < min_weight or p1 > 1.0 - min_weight:
            trace.resp_a, trace.resp_b = R[[0, 2]], R[[1, 3]]
            raise ConvergenceError("mixture component collapsed", trace)
        mu1, lam1, f1 = mstep_component(y, R[0], R[1])
        mu2, lam2, f2 = mstep_component(y, R[2], R[3])
        if not all(math.isfinite(v) and v > 0 for v in (mu1, lam1, mu2, lam2)):
            raise ConvergenceError("degenerate component scale", trace)
        if f1 or f2:
            trace.flags.append(it)
        mp = MixtureParams(math.sqrt(mu1 / lam1), mu1, math.sqrt(mu2 / lam2), mu2, p1)
        R, ll_new = _responsibilities(mp, y)
        if ll_new < ll - 1e-10 * max(1.0, abs(ll)):
            raise ConvergenceError("EM decreased the log-likelihood", trace)
        trace.loglik.append(ll_new)
        trace.params.append(mp)
        gain = (ll_new - ll) / max(1.0, abs(ll))
        ll = ll_new
        if gain < tol:
            trace.resp_a, trace.resp_b = R[[0, 2]], R[[1, 3]]
            return mp, trace
    raise ConvergenceError("EM did not converge", trace)
