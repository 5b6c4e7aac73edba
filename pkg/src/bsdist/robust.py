"""Optimal bias-robust estimation (standardized OBRE) of (alpha, beta).

The estimating function is ``Psi = (s - a) W_c`` with ``s`` the score,
``W_c = min(1, c / ||A (s - a)||)`` and ``(A, a)`` fixed by
``E[Psi] = 0`` and ``E[Psi Psi^T] = (A^T A)^-1`` under the fitted model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complete import FitResult, _data, fisher_info, mle
from .core import BsParams, transform_from_normal
from .numerics import ConvergenceError, DomainError, QuadratureSpec

__all__ = ["ObreConfig", "ObreState", "score", "obre", "model_expectation"]


@dataclass(frozen=True)
class ObreConfig:
    """Tuning of the OBRE iteration.

    Attributes
    ----------
    c : float
        Bound on the standardized influence function; must exceed sqrt(2).
    eta : float
        Relative step tolerance of the outer iteration.
    max_outer : int
    inner_tol : float
        Tolerance of the fixed point for ``(A, a)``.
    quad : QuadratureSpec
        ``nodes`` sets the size of the normal-scale grid for expectations.
    """

    c: float = 4.0
    eta: float = 1e-6
    max_outer: int = 200
    inner_tol: float = 1e-8
    max_inner: int = 500
    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(nodes=4001))

    def __post_init__(self):
        if not self.c > math.sqrt(2.0):
            raise DomainError("the bound c must exceed sqrt(2)")
        if not self.eta > 0:
            raise DomainError("eta must be positive")


@dataclass
class ObreState:
    A: np.ndarray
    a: np.ndarray
    theta: np.ndarray


def score(p: BsParams, t) -> np.ndarray:
    """Score of one observation; shape ``(2,)`` or ``(2, len(t))``."""
    t = np.asarray(t, dtype=float)
    a, b = p.alpha, p.beta
    s_a = (-a * a * b * t + t * t - 2 * b * t + b * b) / (a**3 * b * t)
    s_b = (-b * a * a * t * t + b * b * a * a * t + t**3 - b * b * t + b * t * t - b**3) / (
        2 * b * b * a * a * t * (t + b))
    return np.array([s_a, s_b])


def _grid(spec: QuadratureSpec):
    z = np.linspace(-10.0, 10.0, spec.nodes)
    w = np.exp(-0.5 * z * z)
    w[0] *= 0.5
    w[-1] *= 0.5
    return z, w / w.sum()


def model_expectation(p: BsParams, fn, spec: QuadratureSpec | None = None):
    """``E[fn(T)]`` under BS(p) on a dense normal-scale trapezoidal grid.

    `fn` receives the vector of grid lifetimes and returns an array whose
    last axis runs over them.
    """
    z, w = _grid(spec or QuadratureSpec(nodes=4001))
    t = transform_from_normal(p.alpha, p.beta, z)
    return np.asarray(fn(t)) @ w


def _weights(A, a, s, c):
    nrm = np.linalg.norm(A @ (s - a[:, None]), axis=0)
    return np.minimum(1.0, c / np.maximum(nrm, 1e-300))


def _solve_inner(p: BsParams, A, a, cfg: ObreConfig):
    z, w = _grid(cfg.quad)
    t = transform_from_normal(p.alpha, p.beta, z)
    s = score(p, t)
    for it in range(cfg.max_inner):
        W = _weights(A, a, s, cfg.c)
        a_new = (s * W) @ w / (W @ w)
        d = s - a_new[:, None]
        M2 = (d * W * W) @ (d * w).T
        L = np.linalg.cholesky(M2)
        A_new = np.linalg.inv(L)
        done = (np.max(np.abs(A_new - A)) <= cfg.inner_tol * max(1.0, np.max(np.abs(A)))
                and np.max(np.abs(a_new - a)) <= cfg.inner_tol * max(1.0, np.max(np.abs(a))))
        A, a = A_new, a_new
        if done:
            break
    W = _weights(A, a, s, cfg.c)
    d = s - a[:, None]
    M1 = (d * W) @ (d * w).T
    return A, a, M1


def obre(data, cfg: ObreConfig | None = None, init: BsParams | None = None) -> FitResult:
    """Standardized OBRE of (alpha, beta).

    Starts from the MLE (or `init`) with ``a = 0`` and ``A = I^(-1/2)``, and
    iterates Newton-type steps ``Delta = M1^-1 mean((s_i - a) W_i)`` until
    the relative step falls below ``eta``.

    Raises
    ------
    ConvergenceError
        If ``max_outer`` iterations are exhausted; the last state is attached.
    """
    cfg = cfg or ObreConfig()
    t = _data(data)
    if t.size < 2:
        raise DomainError("need at least two observations")
    p = init or mle(t).params
    theta = np.array([p.alpha, p.beta])
    info = fisher_info(p, 1).matrix
    A = np.diag(1.0 / np.sqrt(np.diag(info)))
    a = np.zeros(2)
    for it in range(1, cfg.max_outer + 1):
        p = BsParams(*theta)
        A, a, M1 = _solve_inner(p, A, a, cfg)
        s = score(p, t)
        W = _weights(A, a, s, cfg.c)
        g = ((s - a[:, None]) * W).mean(axis=1)
        delta = np.linalg.solve(M1, g)
        step = np.abs(delta / theta)
        new = theta + delta
        # keep the iterate inside the parameter space
        while np.any(new <= 0):
            delta /= 2.0
            new = theta + delta
        theta = new
        if np.max(step) <= cfg.eta:
            p = BsParams(*theta)
            W = _weights(A, a, score(p, t), cfg.c)
            return FitResult(theta[0], theta[1], "OBRE", t.size, iterations=it,
                             extras={"A": A, "a": a, "weights": W, "c": cfg.c})
    raise ConvergenceError("OBRE iteration did not converge", ObreState(A, a, theta))
