"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved over the doubled variable vector (alpha, alpha*) by
SMO with second-order working-set selection (the compiled ``smo``
kernel).  Inputs are expected standardised; the fit path takes care of
that through the shared scaler.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .. import _kernels

log = logging.getLogger(__name__)

STANDARDIZE = True


class NotConverged(UserWarning):
    pass


@dataclass(frozen=True)
class Params:
    c_penalty: float = 1.0
    epsilon: float = 0.1
    gamma: float = 0.1
    max_iter: int = 200_000
    tol: float = 1e-3

    def __post_init__(self):
        if not self.c_penalty > 0:
            raise ValueError("c_penalty must be > 0")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


def rbf_kernel(a, b, gamma: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def intercept(a, g, c: float) -> float:
    """b = -rho, rho averaged over free variables (midpoint of the
    feasible interval when none are free)."""
    n = a.shape[0] // 2
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    yg = sign * g
    free = (a > 0.0) & (a < c)
    if free.any():
        return -float(yg[free].mean())
    at_ub, at_lb = a >= c, a <= 0.0
    upper = (at_ub & (sign < 0)) | (at_lb & (sign > 0))
    lower = (at_ub & (sign > 0)) | (at_lb & (sign < 0))
    ub = yg[upper].min() if upper.any() else np.inf
    lb = yg[lower].max() if lower.any() else -np.inf
    return -float((ub + lb) / 2.0)


def solve(kmat, y, c: float, eps: float, tol: float = 1e-3, max_iter: int = 200_000):
    """(beta, b, iterations, gap) for the epsilon-SVR dual on a precomputed kernel."""
    kmat = np.ascontiguousarray(kmat, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    a, g, it, gap = _kernels.smo(kmat, y, float(c), float(eps), float(tol), int(max_iter))
    n = y.shape[0]
    beta = a[:n] - a[n:]
    return beta, intercept(a, g, c), int(it), float(gap)


def fit_core(params: Params, x, y, rng):
    x = np.ascontiguousarray(x, dtype=np.float64)
    kmat = rbf_kernel(x, x, params.gamma)
    beta, b, it, gap = solve(kmat, y, params.c_penalty, params.epsilon, params.tol, params.max_iter)
    converged = gap <= params.tol
    if not converged:
        warnings.warn(f"SMO stopped after {it} iterations with KKT gap {gap:.3g}", NotConverged,
                      stacklevel=2)
    keep = beta != 0.0
    state = {"support": x[keep], "beta": beta[keep], "b": np.array(b)}
    return state, {"iterations": it, "kkt_gap": gap, "converged": bool(converged),
                   "n_support": int(keep.sum())}


def predict_core(params: Params, state, x):
    if state["beta"].shape[0] == 0:
        return np.full(np.atleast_2d(x).shape[0], float(state["b"]))
    return rbf_kernel(x, state["support"], params.gamma) @ state["beta"] + float(state["b"])
