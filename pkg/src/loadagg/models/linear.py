"""Ridge regression with an unpenalised intercept, solved through the SVD."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STANDARDIZE = True


@dataclass(frozen=True)
class Params:
    ridge_lambda: float = 0.0

    def __post_init__(self):
        if not self.ridge_lambda >= 0:
            raise ValueError("ridge_lambda must be >= 0")


def ridge(x, y, lam: float = 0.0, rcond: float = 1e-12):
    """argmin ||x w + b - y||^2 + lam ||w||^2.

    Centering removes the intercept from the penalised problem.  With
    ``lam == 0`` and a rank-deficient design the minimum-norm solution is
    returned (singular values below ``rcond * s_max`` are dropped).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm, ym = x.mean(axis=0), y.mean()
    u, s, vt = np.linalg.svd(x - xm, full_matrices=False)
    if lam > 0:
        shrink = s / (s * s + lam)
    else:
        keep = s > rcond * (s[0] if s.size else 0.0)
        shrink = np.divide(1.0, s, out=np.zeros_like(s), where=keep)
    w = vt.T @ (shrink * (u.T @ (y - ym)))
    return w, float(ym - xm @ w)


def fit_core(params: Params, x, y, rng):
    w, b = ridge(x, y, params.ridge_lambda)
    return {"w": w, "b": np.array(b)}, {}


def predict_core(params: Params, state, x):
    return np.asarray(x) @ state["w"] + float(state["b"])
