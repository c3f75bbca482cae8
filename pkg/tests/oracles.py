"""Slow, obviously-correct reference implementations used only by tests."""
import itertools
import math

import numpy as np


def apen_bruteforce(x, m=2, r_rel=0.2):
    """Direct double loop over templates, self-matches counted."""
    x = [float(v) for v in x]
    n = len(x)
    mean = sum(x) / n
    sd = math.sqrt(sum((v - mean) ** 2 for v in x) / n)
    if sd == 0:
        return 0.0
    r = r_rel * sd

    def phi(mm):
        count = n - mm + 1
        total = 0.0
        for i in range(count):
            c = 0
            for j in range(count):
                if max(abs(x[i + k] - x[j + k]) for k in range(mm)) <= r:
                    c += 1
            total += math.log(c / count)
        return total / count

    return phi(m) - phi(m + 1)


def ols_normal_equations(x, y, lam=0.0):
    """Intercept-augmented normal equations, intercept unpenalised."""
    x = np.asarray(x, dtype=float)
    a = np.hstack([x, np.ones((x.shape[0], 1))])
    pen = lam * np.eye(a.shape[1])
    pen[-1, -1] = 0.0
    coef = np.linalg.solve(a.T @ a + pen, a.T @ np.asarray(y, dtype=float))
    return coef[:-1], coef[-1]


def best_stump(x, y):
    """Every split between adjacent distinct values of every feature.

    Returns (sse, feature, threshold, left_mean, right_mean) with the
    first-found minimum (feature order, then threshold order).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    best = (float(((y - y.mean()) ** 2).sum()), -1, None, y.mean(), y.mean())
    for f in range(x.shape[1]):
        vals = sorted(set(x[:, f].tolist()))
        for lo, hi in zip(vals[:-1], vals[1:]):
            t = (lo + hi) / 2
            left = x[:, f] <= t
            yl, yr = y[left], y[~left]
            sse = float(((yl - yl.mean()) ** 2).sum() + ((yr - yr.mean()) ** 2).sum())
            if sse < best[0] - 1e-12 * max(1.0, best[0]):
                best = (sse, f, t, yl.mean(), yr.mean())
    return best


def fd_gradient(fun, w, h=1e-5):
    """Central differences of scalar ``fun()`` w.r.t. every entry of array ``w`` (in place)."""
    g = np.zeros_like(w)
    for idx in itertools.product(*(range(s) for s in w.shape)):
        old = w[idx]
        w[idx] = old + h
        a = fun()
        w[idx] = old - h
        b = fun()
        w[idx] = old
        g[idx] = (a - b) / (2 * h)
    return g


def max_rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(floor, np.abs(a) + np.abs(b))))


def svr_dual_qp(kmat, y, c, eps):
    """epsilon-SVR dual solved as a generic QP with cvxopt.

    Variables z = (alpha, alpha*); minimise
    1/2 (a - a*)' K (a - a*) + eps * sum(a + a*) - y'(a - a*)
    subject to sum(a - a*) = 0 and 0 <= a, a* <= C.
    Returns beta = a - a*.
    """
    from cvxopt import matrix, solvers

    n = len(y)
    k = np.asarray(kmat, dtype=float)
    p = np.block([[k, -k], [-k, k]]) + 1e-10 * np.eye(2 * n)
    q = np.concatenate([eps - y, eps + y])
    g = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
    h = np.concatenate([np.zeros(2 * n), np.full(2 * n, c)])
    a_eq = np.concatenate([np.ones(n), -np.ones(n)])[None, :]
    solvers.options["show_progress"] = False
    solvers.options["abstol"] = 1e-10
    solvers.options["reltol"] = 1e-10
    solvers.options["feastol"] = 1e-10
    sol = solvers.qp(matrix(p), matrix(q), matrix(g), matrix(h), matrix(a_eq), matrix(0.0))
    z = np.array(sol["x"]).ravel()
    return z[:n] - z[n:]


def svr_dual_objective(kmat, y, beta, eps):
    return 0.5 * beta @ kmat @ beta + eps * np.abs(beta).sum() - y @ beta
