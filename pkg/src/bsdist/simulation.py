"""Monte Carlo experiments: estimator bias, interval coverage and robustness.

Replication ``i`` draws from its own generator spawned from the master seed,
so results do not depend on how replications are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .complete import FitResult, asymp_ci, from_li, mle
from .core import transform_from_normal
from .numerics import DomainError

__all__ = [
    "McRow",
    "McTable",
    "mle_batch",
    "mm_batch",
    "draw_samples",
    "bias_experiment",
    "coverage_experiment",
    "robust_experiment",
]


@dataclass
class McRow:
    """One estimator's summary; ``*_se`` are Monte Carlo standard errors."""

    estimator: str
    target: str
    value: float
    value_se: float
    mse: float | None = None
    reference: float | None = None


@dataclass
class McTable:
    experiment: str
    settings: dict
    rows: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "settings": self.settings,
                "rows": [vars(r) for r in self.rows]}


def _children(seed, reps):
    return np.random.SeedSequence(seed).spawn(reps)


def _draw_chunk(args):
    alpha, beta, n, seeds, contamination = args
    out = np.empty((len(seeds), n))
    for k, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        out[k] = transform_from_normal(alpha, beta, rng.standard_normal(n))
        if contamination:
            frac, factor = contamination
            out[k] = np.where(rng.random(n) < frac, out[k] * factor, out[k])
    return out


def draw_samples(alpha, beta, n, reps, seed=0, workers: int = 1, contamination=None) -> np.ndarray:
    """``reps x n`` array of BS samples, one spawned generator per row.

    `contamination` ``(frac, factor)`` multiplies each value by `factor`
    with probability `frac`.
    """
    if reps < 1 or n < 2:
        raise DomainError("need reps >= 1 and n >= 2")
    seeds = _children(seed, reps)
    if workers <= 1:
        return _draw_chunk((alpha, beta, n, seeds, contamination))
    chunks = np.array_split(np.arange(reps), workers)
    with ProcessPoolExecutor(workers) as ex:
        parts = ex.map(_draw_chunk, [(alpha, beta, n, [seeds[i] for i in c], contamination)
                                     for c in chunks if c.size])
        return np.vstack(list(parts))


def mm_batch(x: np.ndarray):
    """Row-wise modified moment estimates of a ``reps x n`` array."""
    s = x.mean(axis=1)
    r = 1.0 / np.mean(1.0 / x, axis=1)
    return np.sqrt(2.0 * (np.sqrt(np.maximum(s / r, 1.0)) - 1.0)), np.sqrt(s * r)


def mle_batch(x: np.ndarray, iters: int = 200):
    """Row-wise ML estimates of a ``reps x n`` array.

    Solves the scale equation of :func:`bsdist.complete.mle` by vectorised
    bisection on ``(r, s)``.
    """
    s = x.mean(axis=1)
    r = 1.0 / np.mean(1.0 / x, axis=1)

    def g(b):
        k = 1.0 / np.mean(1.0 / (b[:, None] + x), axis=1)
        return b * b - b * (2.0 * r + k) + r * (s + k)

    lo, hi = r.copy(), s.copy()
    glo = g(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        left = np.sign(gm) == np.sign(glo)
        lo = np.where(left, mid, lo)
        glo = np.where(left, gm, glo)
        hi = np.where(left, hi, mid)
        if np.all(hi - lo <= 1e-14 * hi):
            break
    beta = 0.5 * (lo + hi)
    alpha = np.sqrt(np.maximum(s / beta + beta / r - 2.0, 0.0))
    return alpha, beta


def _summary(name, target, est, truth, reference=None):
    err = est - truth
    m = est.size
    return McRow(name, target, float(err.mean()), float(err.std(ddof=1) / math.sqrt(m)),
                 float(np.mean(err * err)), reference)


def bias_experiment(alpha: float, beta: float, n: int, reps: int = 10_000, seed=0,
                    workers: int = 1) -> McTable:
    """Bias and MSE of the ML and MM estimators.

    The reference values are the first-order approximations
    ``-alpha/n`` and ``-beta alpha^2/(4n)``.
    """
    if reps < 100:
        raise DomainError("need at least 100 replications")
    x = draw_samples(alpha, beta, n, reps, seed, workers)
    tab = McTable("bias", {"alpha": alpha, "beta": beta, "n": n, "reps": reps, "seed": seed})
    ra, rb = -alpha / n, -beta * alpha**2 / (4.0 * n)
    for name, (a, b) in (("ML", mle_batch(x)), ("MM", mm_batch(x))):
        tab.rows.append(_summary(name, "alpha", a, alpha, ra))
        tab.rows.append(_summary(name, "beta", b, beta, rb))
    return tab


def coverage_experiment(alpha: float, beta: float, n: int, reps: int = 1000, seed=0,
                        level: float = 0.95, method: str = "UML", workers: int = 1) -> McTable:
    """Coverage of the pivot intervals for ML, MM, UML or UMM fits."""
    if reps < 100:
        raise DomainError("need at least 100 replications")
    if method not in ("ML", "MM", "UML", "UMM"):
        raise DomainError("method must be ML, MM, UML or UMM")
    x = draw_samples(alpha, beta, n, reps, seed, workers)
    a, b = mle_batch(x) if method in ("ML", "UML") else mm_batch(x)
    base = "ML" if method in ("ML", "UML") else "MM"
    hit = np.zeros((reps, 2), dtype=bool)
    for i in range(reps):
        fit = FitResult(float(a[i]), float(b[i]), base, n)
        if method != base:
            aa = n / (n - 1.0) * fit.alpha
            fit = FitResult(aa, fit.beta / (1.0 + aa * aa / (4.0 * n)), method, n)
        (alo, ahi), (blo, bhi) = asymp_ci(fit, level)
        hit[i] = (alo <= alpha <= ahi, blo <= beta <= bhi)
    tab = McTable("coverage", {"alpha": alpha, "beta": beta, "n": n, "reps": reps, "seed": seed,
                               "level": level, "method": method})
    for j, target in enumerate(("alpha", "beta")):
        c = float(hit[:, j].mean())
        tab.rows.append(McRow(method, target, c, math.sqrt(c * (1 - c) / reps), None, level))
    return tab


def robust_experiment(alpha: float, beta: float, n: int, reps: int = 1000, seed=0,
                      frac: float = 0.05, factor: float = 10.0, workers: int = 1) -> McTable:
    """MSE of ML and From-Li method 4 under multiplicative outlier contamination."""
    if reps < 100:
        raise DomainError("need at least 100 replications")
    x = draw_samples(alpha, beta, n, reps, seed, workers, contamination=(frac, factor))
    a_ml, b_ml = mle_batch(x)
    fl = np.array([(f.alpha, f.beta) for f in (from_li(row, 4) for row in x)])
    tab = McTable("robust", {"alpha": alpha, "beta": beta, "n": n, "reps": reps, "seed": seed,
                             "contamination": frac, "factor": factor})
    for name, a, b in (("ML", a_ml, b_ml), ("FL4", fl[:, 0], fl[:, 1])):
        tab.rows.append(_summary(name, "alpha", a, alpha))
        tab.rows.append(_summary(name, "beta", b, beta))
    return tab
