# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops.

Every function here has a line-for-line numpy twin in ``_pykernels`` and
must return identical values for identical inputs.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def apen_counts(const double[::1] x, Py_ssize_t m, double r):
    """Template match counts for lengths m and m+1 (self-matches included)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_m = n - m + 1
    cdef Py_ssize_t n_m1 = n - m
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cm_arr = np.zeros(n_m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cm1_arr = np.zeros(n_m1, dtype=np.int64)
    cdef cnp.int64_t[::1] cm = cm_arr
    cdef cnp.int64_t[::1] cm1 = cm1_arr
    cdef Py_ssize_t i, j, k
    cdef bint ok
    with nogil:
        for i in range(n_m):
            cm[i] += 1
            if i < n_m1:
                cm1[i] += 1
            for j in range(i + 1, n_m):
                ok = True
                for k in range(m):
                    if fabs(x[i + k] - x[j + k]) > r:
                        ok = False
                        break
                if ok:
                    cm[i] += 1
                    cm[j] += 1
                    if j < n_m1 and fabs(x[i + m] - x[j + m]) <= r:
                        cm1[i] += 1
                        cm1[j] += 1
    return cm_arr, cm1_arr


def level_splits(const double[:, ::1] xt, const cnp.intp_t[:, ::1] order,
                 const cnp.intp_t[::1] node_of, const double[::1] resid,
                 const double[::1] node_sum, const cnp.intp_t[::1] node_cnt,
                 Py_ssize_t min_leaf):
    """Best exact squared-error split for every open node of one tree level.

    ``xt`` is the feature matrix transposed (features x samples) and
    ``order[f]`` the stable argsort of feature ``f``.  Samples with
    ``node_of < 0`` are ignored.  Returns (gain, feature, threshold) per
    node; feature is -1 where no valid split exists.
    """
    cdef Py_ssize_t n_feat = xt.shape[0]
    cdef Py_ssize_t n_samp = xt.shape[1]
    cdef Py_ssize_t n_nodes = node_sum.shape[0]
    gain_arr = np.zeros(n_nodes, dtype=np.float64)
    feat_arr = np.full(n_nodes, -1, dtype=np.intp)
    thr_arr = np.zeros(n_nodes, dtype=np.float64)
    cdef double[::1] best_gain = gain_arr
    cdef cnp.intp_t[::1] best_feat = feat_arr
    cdef double[::1] best_thr = thr_arr
    cdef double[::1] sum_l = np.zeros(n_nodes, dtype=np.float64)
    cdef cnp.intp_t[::1] cnt_l = np.zeros(n_nodes, dtype=np.intp)
    cdef double[::1] last_v = np.zeros(n_nodes, dtype=np.float64)
    cdef double[::1] parent = np.zeros(n_nodes, dtype=np.float64)
    cdef Py_ssize_t f, p, i, nd, nl, nr
    cdef double v, sl, sr, g, t
    for nd in range(n_nodes):
        if node_cnt[nd] > 0:
            parent[nd] = node_sum[nd] * node_sum[nd] / node_cnt[nd]
    with nogil:
        for f in range(n_feat):
            for nd in range(n_nodes):
                sum_l[nd] = 0.0
                cnt_l[nd] = 0
            for p in range(n_samp):
                i = order[f, p]
                nd = node_of[i]
                if nd < 0:
                    continue
                v = xt[f, i]
                nl = cnt_l[nd]
                if nl >= min_leaf and v > last_v[nd]:
                    nr = node_cnt[nd] - nl
                    if nr >= min_leaf:
                        sl = sum_l[nd]
                        sr = node_sum[nd] - sl
                        g = sl * sl / nl + sr * sr / nr - parent[nd]
                        if g > best_gain[nd]:
                            t = last_v[nd] + (v - last_v[nd]) * 0.5
                            if t >= v:
                                t = last_v[nd]
                            best_gain[nd] = g
                            best_feat[nd] = f
                            best_thr[nd] = t
                sum_l[nd] += resid[i]
                cnt_l[nd] = nl + 1
                last_v[nd] = v
    return gain_arr, feat_arr, thr_arr


def smo(const double[:, ::1] kmat, const double[::1] y, double c, double eps,
        double tol, Py_ssize_t max_iter):
    """Solve the epsilon-SVR dual over the doubled (alpha, alpha*) vector.

    Working-set selection uses maximal violation for the first index and
    second-order gain for the second.  Returns (a, grad, iterations, gap).
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t l = 2 * n
    a_arr = np.zeros(l, dtype=np.float64)
    g_arr = np.empty(l, dtype=np.float64)
    cdef double[::1] a = a_arr
    cdef double[::1] g = g_arr
    cdef Py_ssize_t s, t, si, ii, jj, i, j, it = 0
    cdef double ys, gmax, gmin, val, b, quad, obj, best_obj, d, ui, uj, yi, yj
    cdef double tau = 1e-12
    for s in range(n):
        g[s] = eps - y[s]
        g[s + n] = eps + y[s]
    gmax = 0.0
    gmin = 0.0
    with nogil:
        while True:
            # first index: maximal violation over I_up
            gmax = -1e300
            i = -1
            for s in range(l):
                if s < n:
                    if a[s] < c:
                        val = -g[s]
                        if val > gmax:
                            gmax = val
                            i = s
                else:
                    if a[s] > 0.0:
                        val = g[s]
                        if val > gmax:
                            gmax = val
                            i = s
            # second index: best second-order gain over I_low
            gmin = 1e300
            j = -1
            best_obj = 1e300
            if i >= 0:
                ii = i if i < n else i - n
                for t in range(l):
                    if t < n:
                        if not a[t] > 0.0:
                            continue
                        val = -g[t]
                        si = t
                    else:
                        if not a[t] < c:
                            continue
                        val = g[t]
                        si = t - n
                    if val < gmin:
                        gmin = val
                    b = gmax - val
                    if b > 0.0:
                        quad = kmat[ii, ii] + kmat[si, si] - 2.0 * kmat[ii, si]
                        if quad <= 0.0:
                            quad = tau
                        obj = -(b * b) / quad
                        if obj < best_obj:
                            best_obj = obj
                            j = t
            if i < 0 or j < 0 or gmax - gmin <= tol or it >= max_iter:
                break
            ii = i if i < n else i - n
            jj = j if j < n else j - n
            yi = 1.0 if i < n else -1.0
            yj = 1.0 if j < n else -1.0
            b = gmax - (-yj * g[j])
            quad = kmat[ii, ii] + kmat[jj, jj] - 2.0 * kmat[ii, jj]
            if quad <= 0.0:
                quad = tau
            d = b / quad
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
            for s in range(l):
                si = s if s < n else s - n
                ys = 1.0 if s < n else -1.0
                g[s] += ys * d * (kmat[si, ii] - kmat[si, jj])
            it += 1
    return a_arr, g_arr, it, gmax - gmin
