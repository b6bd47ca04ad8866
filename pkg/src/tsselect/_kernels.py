"""Compiled inner loops for the tree, boosting and elastic-net learners."""

import numpy as np
from numba import njit

_GAIN_EPS = 1e-12


@njit(cache=True)
def presort(X):
    n, p = X.shape
    order = np.empty((p, n), dtype=np.int64)
    for f in range(p):
        order[f] = np.argsort(X[:, f], kind="mergesort")
    return order


@njit(cache=True)
def _best_split(X, y, w, sorted_rows, start, end, min_split):
    """Best weighted-SSE split of rows ``sorted_rows[:, start:end]``.

    Returns (feature, threshold, gain); feature -1 when no split helps.
    Ties keep the lowest feature index, then the lowest threshold.
    """
    p = X.shape[1]
    W = 0.0
    S = 0.0
    for k in range(start, end):
        r = sorted_rows[0, k]
        W += w[r]
        S += w[r] * y[r]
    best_f = -1
    best_thr = 0.0
    best_gain = 0.0
    if W < min_split:
        return best_f, best_thr, best_gain
    parent = S * S / W
    tol = _GAIN_EPS * (abs(parent) + 1.0)
    for f in range(p):
        wl = 0.0
        sl = 0.0
        for k in range(start, end - 1):
            r = sorted_rows[f, k]
            wl += w[r]
            sl += w[r] * y[r]
            x_here = X[r, f]
            x_next = X[sorted_rows[f, k + 1], f]
            if x_next <= x_here:
                continue
            wr = W - wl
            sr = S - sl
            gain = sl * sl / wl + sr * sr / wr - parent
            if gain > best_gain + tol:
                best_gain = gain
                best_f = f
                best_thr = 0.5 * (x_here + x_next)
    return best_f, best_thr, best_gain


@njit(cache=True)
def build_tree(X, y, w, order, max_depth, min_split, feat, thr, left, right, value):
    """Grow one CART regression tree into preallocated node arrays.

    Rows with zero weight are ignored. ``max_depth < 0`` means unlimited.
    Returns the node count.
    """
    n, p = X.shape
    n_active = 0
    for r in range(n):
        if w[r] > 0.0:
            n_active += 1
    rows = np.empty((p, n_active), dtype=np.int64)
    for f in range(p):
        c = 0
        for k in range(n):
            r = order[f, k]
            if w[r] > 0.0:
                rows[f, c] = r
                c += 1
    buf = np.empty(n_active, dtype=np.int64)
    go_left = np.zeros(n, dtype=np.bool_)

    # explicit stack of (node, start, end, depth)
    stack_node = np.empty(2 * n_active + 2, dtype=np.int64)
    stack_start = np.empty(2 * n_active + 2, dtype=np.int64)
    stack_end = np.empty(2 * n_active + 2, dtype=np.int64)
    stack_depth = np.empty(2 * n_active + 2, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n_active
    stack_depth[0] = 0
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        W = 0.0
        S = 0.0
        for k in range(start, end):
            r = rows[0, k]
            W += w[r]
            S += w[r] * y[r]
        value[node] = S / W
        feat[node] = -1
        left[node] = -1
        right[node] = -1
        if end - start < 2 or (max_depth >= 0 and depth >= max_depth):
            continue
        f, t, gain = _best_split(X, y, w, rows, start, end, min_split)
        if f < 0:
            continue
        for k in range(start, end):
            r = rows[0, k]
            go_left[r] = X[r, f] <= t
        n_left = 0
        for ff in range(p):
            a = start
            b = 0
            for k in range(start, end):
                r = rows[ff, k]
                if go_left[r]:
                    rows[ff, a] = r
                    a += 1
                else:
                    buf[b] = r
                    b += 1
            for k in range(b):
                rows[ff, a + k] = buf[k]
            n_left = a - start
        feat[node] = f
        thr[node] = t
        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        left[node] = li
        right[node] = ri
        stack_node[top] = ri
        stack_start[top] = start + n_left
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = li
        stack_start[top] = start
        stack_end[top] = start + n_left
        stack_depth[top] = depth + 1
        top += 1
    return n_nodes


@njit(cache=True)
def predict_tree(X, feat, thr, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feat[node] >= 0:
            if X[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True)
def bootstrap_weights(draws):
    """Per-tree multiplicity of each training row from ``draws[b, :]`` row indices."""
    B, n = draws.shape
    weights = np.zeros((B, n))
    for b in range(B):
        for k in range(n):
            weights[b, draws[b, k]] += 1.0
    return weights


@njit(cache=True)
def fit_forest(X, y, weights, max_depth, min_split):
    """Grow one tree per row of ``weights`` (bootstrap counts)."""
    n = X.shape[0]
    B = weights.shape[0]
    max_nodes = 2 * n + 1
    order = presort(X)
    feat = np.full((B, max_nodes), -1, dtype=np.int64)
    thr = np.zeros((B, max_nodes))
    left = np.full((B, max_nodes), -1, dtype=np.int64)
    right = np.full((B, max_nodes), -1, dtype=np.int64)
    value = np.zeros((B, max_nodes))
    for b in range(B):
        build_tree(X, y, weights[b], order, max_depth, min_split,
                   feat[b], thr[b], left[b], right[b], value[b])
    return feat, thr, left, right, value


@njit(cache=True)
def predict_forest(X, feat, thr, left, right, value):
    n = X.shape[0]
    B = feat.shape[0]
    out = np.zeros(n)
    for b in range(B):
        out += predict_tree(X, feat[b], thr[b], left[b], right[b], value[b])
    return out / B


@njit(cache=True)
def fit_boosted_stumps(X, y, base, n_iter, learning_rate):
    """Least-squares gradient boosting of depth-1 trees starting from ``base``."""
    n, p = X.shape
    order = presort(X)
    w = np.ones(n)
    pred = np.full(n, base)
    resid = np.empty(n)
    feat = np.full(n_iter, -1, dtype=np.int64)
    thr = np.zeros(n_iter)
    lval = np.zeros(n_iter)
    rval = np.zeros(n_iter)
    for m in range(n_iter):
        for i in range(n):
            resid[i] = y[i] - pred[i]
        f, t, gain = _best_split(X, resid, w, order, 0, n, 2.0)
        if f < 0:
            # no split: stump predicts the mean residual everywhere
            mu = resid.mean()
            lval[m] = mu
            rval[m] = mu
            for i in range(n):
                pred[i] += learning_rate * mu
            continue
        sl = 0.0
        wl = 0.0
        sr = 0.0
        wr = 0.0
        for i in range(n):
            if X[i, f] <= t:
                sl += resid[i]
                wl += 1.0
            else:
                sr += resid[i]
                wr += 1.0
        feat[m] = f
        thr[m] = t
        lval[m] = sl / wl
        rval[m] = sr / wr
        for i in range(n):
            if X[i, f] <= t:
                pred[i] += learning_rate * lval[m]
            else:
                pred[i] += learning_rate * rval[m]
    return base, feat, thr, lval, rval


@njit(cache=True)
def predict_boosted_stumps(X, base, feat, thr, lval, rval, learning_rate):
    n = X.shape[0]
    out = np.full(n, base)
    for m in range(feat.shape[0]):
        f = feat[m]
        for i in range(n):
            if f < 0 or X[i, f] <= thr[m]:
                out[i] += learning_rate * lval[m]
            else:
                out[i] += learning_rate * rval[m]
    return out


@njit(cache=True)
def elastic_net_cd(Z, yc, lam, alpha, tol, max_sweeps):
    """Coordinate descent for centred, unit-variance columns ``Z``.

    Minimises ``1/(2n) ||yc - Z b||^2 + lam * ((1-alpha)/2 ||b||^2 + alpha ||b||_1)``.
    Returns (coef, sweeps used).
    """
    n, p = Z.shape
    beta = np.zeros(p)
    resid = yc.copy()
    col_sq = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += Z[i, j] * Z[i, j]
        col_sq[j] = s / n
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            rho = 0.0
            for i in range(n):
                rho += Z[i, j] * resid[i]
            rho = rho / n + col_sq[j] * beta[j]
            if rho > l1:
                new = (rho - l1) / (col_sq[j] + l2)
            elif rho < -l1:
                new = (rho + l1) / (col_sq[j] + l2)
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                for i in range(n):
                    resid[i] -= Z[i, j] * delta
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            return beta, sweep + 1
    return beta, max_sweeps


@njit(cache=True)
def knn_predict(train_X, train_y, k, X):
    """Mean target of the ``k`` nearest training rows; ties keep earlier rows."""
    n_train, p = train_X.shape
    n = X.shape[0]
    out = np.empty(n)
    d2 = np.empty(n_train)
    for i in range(n):
        for j in range(n_train):
            s = 0.0
            for f in range(p):
                diff = X[i, f] - train_X[j, f]
                s += diff * diff
            d2[j] = s
        nearest = np.argsort(d2, kind="mergesort")
        acc = 0.0
        for m in range(k):
            acc += train_y[nearest[m]]
        out[i] = acc / k
    return out
