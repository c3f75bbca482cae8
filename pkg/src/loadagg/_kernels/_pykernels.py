"""Pure numpy implementations of the compiled kernels.

Same signatures and return values as ``_ckernels``.  Arithmetic is laid
out in the same order so both paths agree bit-for-bit on the integer
outputs and, for the split search and SMO, on the floating ones too.
"""
import numpy as np

_BLOCK = 256


def apen_counts(x, m, r):
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    n_m = n - m + 1
    n_m1 = n - m
    emb = np.lib.stride_tricks.sliding_window_view(x, m + 1)  # n_m1 rows
    head = np.lib.stride_tricks.sliding_window_view(x, m)  # n_m rows
    cm = np.zeros(n_m, dtype=np.int64)
    cm1 = np.zeros(n_m1, dtype=np.int64)
    for s in range(0, n_m, _BLOCK):
        blk = head[s:s + _BLOCK]
        dist = np.abs(blk[:, None, :] - head[None, :, :]).max(axis=2)
        close = dist <= r
        cm[s:s + _BLOCK] = close.sum(axis=1)
        rows = min(s + _BLOCK, n_m1) - s
        if rows > 0:
            last = np.abs(emb[s:s + rows, None, m] - emb[None, :, m]) <= r
            cm1[s:s + rows] = (close[:rows, :n_m1] & last).sum(axis=1)
    return cm, cm1


def level_splits(xt, order, node_of, resid, node_sum, node_cnt, min_leaf):
    n_feat = xt.shape[0]
    n_nodes = node_sum.shape[0]
    best_gain = np.zeros(n_nodes)
    best_feat = np.full(n_nodes, -1, dtype=np.intp)
    best_thr = np.zeros(n_nodes)
    with np.errstate(divide="ignore", invalid="ignore"):
        parent = np.where(node_cnt > 0, node_sum * node_sum / node_cnt, 0.0)
    active = node_of >= 0
    for nd in range(n_nodes):
        total = node_cnt[nd]
        if total < 2 * min_leaf:
            continue
        in_node = active & (node_of == nd)
        for f in range(n_feat):
            idx = order[f][in_node[order[f]]]
            v = xt[f, idx]
            csum = np.cumsum(resid[idx])
            # candidate p splits between sorted positions p-1 and p
            nl = np.arange(1, total, dtype=np.intp)
            ok = (v[1:] > v[:-1]) & (nl >= min_leaf) & (total - nl >= min_leaf)
            if not ok.any():
                continue
            sl = csum[:-1][ok]
            nlo = nl[ok]
            nr = total - nlo
            sr = node_sum[nd] - sl
            g = sl * sl / nlo + sr * sr / nr - parent[nd]
            k = int(np.argmax(g))
            if g[k] > best_gain[nd]:
                pos = np.flatnonzero(ok)[k]
                lo, hi = v[pos], v[pos + 1]
                t = lo + (hi - lo) * 0.5
                if t >= hi:
                    t = lo
                best_gain[nd] = g[k]
                best_feat[nd] = f
                best_thr[nd] = t
    return best_gain, best_feat, best_thr


def smo(kmat, y, c, eps, tol, max_iter):
    n = y.shape[0]
    a = np.zeros(2 * n)
    g = np.concatenate([eps - y, eps + y])
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    base = np.concatenate([np.arange(n), np.arange(n)])
    kdiag = np.diag(kmat)[base]
    it = 0
    while True:
        viol = -sign * g
        up = np.where(sign > 0, a < c, a > 0.0)
        low = np.where(sign > 0, a > 0.0, a < c)
        if not up.any():
            gmax, gmin = -1e300, 1e300
            break
        cand = np.where(up, viol, -np.inf)
        i = int(np.argmax(cand))
        gmax = cand[i]
        lowv = viol[low]
        gmin = lowv.min() if lowv.size else 1e300
        ii = base[i]
        b = gmax - viol
        elig = low & (b > 0.0)
        if not elig.any() or gmax - gmin <= tol or it >= max_iter:
            break
        quad = kmat[ii, ii] + kdiag - 2.0 * kmat[ii][base]
        quad = np.where(quad <= 0.0, 1e-12, quad)
        obj = np.where(elig, -(b * b) / quad, np.inf)
        j = int(np.argmin(obj))
        jj = base[j]
        yi, yj = sign[i], sign[j]
        bij = gmax - (-yj * g[j])
        q = kmat[ii, ii] + kmat[jj, jj] - 2.0 * kmat[ii, jj]
        if q <= 0.0:
            q = 1e-12
        d = bij / q
        ui = c - a[i] if yi > 0 else a[i]
        uj = a[j] if yj > 0 else c - a[j]
        if ui < d:
            d = ui
        if uj < d:
            d = uj
        if d == ui:
            a[i] = c if yi > 0 else 0.0
        else:
            a[i] = a[i] + yi * d
        if d == uj:
            a[j] = 0.0 if yj > 0 else c
        else:
            a[j] = a[j] - yj * d
        g += sign * d * (kmat[base, ii] - kmat[base, jj])
        it += 1
    return a, g, it, gmax - gmin
