"""Gradient-boosted regression trees under squared loss.

Trees grow level by level; the exact split search over presorted
feature values is the compiled ``level_splits`` kernel.  A sample goes
left when ``x[f] <= threshold``, thresholds sit halfway between adjacent
distinct training values, and leaves store the learning-rate-scaled mean
residual.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels

STANDARDIZE = False


@dataclass(frozen=True)
class Params:
    learning_rate: float = 0.1
    n_estimators: int = 100
    max_depth: int = 3
    min_leaf: int = 1

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if int(self.n_estimators) != self.n_estimators or self.n_estimators < 0:
            raise ValueError("n_estimators must be an integer >= 0")
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise ValueError("max_depth must be an integer >= 1")
        if int(self.min_leaf) != self.min_leaf or self.min_leaf < 1:
            raise ValueError("min_leaf must be an integer >= 1")


def grow_tree(xt, order, resid, max_depth: int, min_leaf: int = 1):
    """One regression tree on ``resid``.

    Returns (feature, threshold, left, right, value, leaf_of) where the
    first five are per-node arrays (feature -1 marks a leaf) and
    ``leaf_of`` maps each training sample to its leaf.
    """
    n = resid.shape[0]
    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    gid = np.zeros(n, dtype=np.intp)       # global node of each sample
    local = np.zeros(n, dtype=np.intp)     # node index within the open level, -1 once closed
    level = [0]
    for _ in range(max_depth):
        n_open = len(level)
        active = local >= 0
        node_sum = np.bincount(local[active], weights=resid[active], minlength=n_open)
        node_cnt = np.bincount(local[active], minlength=n_open).astype(np.intp)
        _, feat, thr = _kernels.level_splits(xt, order, local, resid, node_sum, node_cnt, min_leaf)
        nxt = []
        child = np.full((n_open, 2), -1, dtype=np.intp)
        for nd, g in enumerate(level):
            if feat[nd] < 0:
                continue
            lo, hi = len(feature), len(feature) + 1
            feature[g], threshold[g], left[g], right[g] = int(feat[nd]), float(thr[nd]), lo, hi
            feature += [-1, -1]
            threshold += [0.0, 0.0]
            left += [-1, -1]
            right += [-1, -1]
            child[nd] = (len(nxt), len(nxt) + 1)
            nxt += [lo, hi]
        if not nxt:
            break
        idx = np.flatnonzero(active)
        nd = local[idx]
        f = feat[nd]
        split = f >= 0
        idx, nd, f = idx[split], nd[split], f[split]
        go_right = (xt[f, idx] > thr[nd]).astype(np.intp)
        local[:] = -1
        local[idx] = child[nd, go_right]
        gid[idx] = np.asarray(nxt, dtype=np.intp)[local[idx]]
        level = nxt
    n_nodes = len(feature)
    sums = np.bincount(gid, weights=resid, minlength=n_nodes)
    cnts = np.bincount(gid, minlength=n_nodes)
    value = np.divide(sums, cnts, out=np.zeros(n_nodes), where=cnts > 0)
    return (np.asarray(feature, dtype=np.intp), np.asarray(threshold), np.asarray(left, dtype=np.intp),
            np.asarray(right, dtype=np.intp), value, gid)


def fit_core(params: Params, x, y, rng):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xt = np.ascontiguousarray(x.T)
    order = np.ascontiguousarray(np.argsort(xt, axis=1, kind="stable").astype(np.intp))
    init = float(y.mean())
    pred = np.full(y.shape[0], init)
    mse = [float(np.mean((y - pred) ** 2))]
    parts = {k: [] for k in ("feature", "threshold", "left", "right", "value")}
    starts = []
    offset = 0
    for _ in range(int(params.n_estimators)):
        resid = y - pred
        feat, thr, lft, rgt, val, leaf_of = grow_tree(xt, order, resid, int(params.max_depth),
                                                      int(params.min_leaf))
        val = params.learning_rate * val
        pred = pred + val[leaf_of]
        mse.append(float(np.mean((y - pred) ** 2)))
        starts.append(offset)
        for k, arr in zip(parts, (feat, thr, np.where(lft >= 0, lft + offset, -1),
                                  np.where(rgt >= 0, rgt + offset, -1), val)):
            parts[k].append(arr)
        offset += feat.shape[0]
    floats = ("threshold", "value")
    state = {k: np.concatenate(v) if v else np.zeros(0, dtype=np.float64 if k in floats else np.intp)
             for k, v in parts.items()}
    state["roots"] = np.asarray(starts, dtype=np.intp)
    state["init"] = np.array(init)
    return state, {"train_mse": mse}


def predict_core(params: Params, state, x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = np.full(x.shape[0], float(state["init"]))
    feature, threshold = state["feature"], state["threshold"]
    left, right, value = state["left"], state["right"], state["value"]
    rows = np.arange(x.shape[0])
    for root in state["roots"]:
        node = np.full(x.shape[0], root, dtype=np.intp)
        for _ in range(int(params.max_depth)):
            f = feature[node]
            inner = f >= 0
            if not inner.any():
                break
            fi = np.where(inner, f, 0)
            go_left = x[rows, fi] <= threshold[node]
            step = np.where(go_left, left[node], right[node])
            node = np.where(inner, step, node)
        out += value[node]
    return out
