"""Pure-Python kernels.

Reference implementation for ``_kernels.pyx``. Every floating-point
expression is evaluated in the same order as the compiled version, so the two
backends return bit-identical trees and weights.
"""
import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    """64-bit SplitMix generator shared by both backends."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n):
        return self.next() % n


def _column_entries(col_ptr, row_idx, col_val, y, mult, f, n, pos):
    """Distinct-value groups of column ``f`` restricted to the current node.

    Returns values, sample counts and positive counts sorted by value; the
    implicit zeros of the column form one group.
    """
    lo, hi = col_ptr[f], col_ptr[f + 1]
    rows = row_idx[lo:hi]
    m = mult[rows]
    sel = m > 0
    vals = col_val[lo:hi][sel]
    cnt = m[sel]
    pcnt = cnt * y[rows[sel]]
    n_zero = n - int(cnt.sum())
    if n_zero > 0:
        vals = np.append(vals, 0.0)
        cnt = np.append(cnt, n_zero)
        pcnt = np.append(pcnt, pos - int(pcnt.sum()))
    order = np.argsort(vals, kind="stable")
    return vals[order], cnt[order], pcnt[order]


def _find_split(col_ptr, row_idx, col_val, y, mult, n, pos, feat, rng, n_candidates):
    n_features = len(feat)
    best_imp = np.inf
    best_f = -1
    best_t = 0.0
    evaluated = 0
    for j in range(n_features):
        if evaluated >= n_candidates and best_f >= 0:
            break
        r = j + rng.below(n_features - j)
        feat[j], feat[r] = feat[r], feat[j]
        f = feat[j]
        evaluated += 1

        sv, cnt, pcnt = _column_entries(col_ptr, row_idx, col_val, y, mult, f, n, pos)
        boundary = sv[:-1] < sv[1:]
        if not boundary.any():
            continue
        nl = np.cumsum(cnt)[:-1].astype(np.float64)
        nr = n - nl
        pl = np.cumsum(pcnt)[:-1].astype(np.float64)
        pr = pos - pl
        ql = nl - pl
        qr = nr - pr
        imp = (nl - (pl * pl + ql * ql) / nl) + (nr - (pr * pr + qr * qr) / nr)
        imp[~boundary] = np.inf
        i = int(np.argmin(imp))
        if imp[i] < best_imp:
            best_imp = imp[i]
            best_f = f
            a, b = sv[i], sv[i + 1]
            t = (a + b) / 2.0
            if not t > a:
                t = b
            best_t = float(t)
    if best_f < 0:
        return None
    return best_f, best_t


def build_tree(col_ptr, row_idx, col_val, y, samples, max_depth, n_candidates, seed):
    """Grow one Gini decision tree on the rows listed in ``samples``.

    Parameters
    ----------
    col_ptr, row_idx, col_val : ndarrays
        Training matrix in CSC form (int64, int64, float64) without
        explicit zeros.
    y : ndarray of shape (n,), int8 labels in {0, 1}
    samples : ndarray of int64
        Row indices (duplicates allowed, as produced by bootstrapping).
    max_depth : int
        ``-1`` for unlimited depth.
    n_candidates : int
        Number of features examined per node before accepting the best split.
        More are examined when none of the first ``n_candidates`` can split.
    seed : int
        Seed of the SplitMix64 stream used for feature sampling.

    Returns
    -------
    feature, threshold, left, right, value : ndarrays
        Flat node arrays; ``feature == -1`` marks a leaf and ``value`` is the
        fraction of positive samples reaching the node.

    Notes
    -----
    Candidate thresholds are midpoints between consecutive distinct values
    (the upper value when the midpoint rounds down onto the lower one) and
    rows with ``x < threshold`` go left. Only the non-zero entries of a
    column are visited, so a node costs time proportional to its size plus
    the non-zeros of the examined columns.
    """
    rng = SplitMix64(seed)
    n_rows = y.shape[0]
    feat = list(range(len(col_ptr) - 1))
    buf = np.array(samples, dtype=np.int64)
    y64 = y.astype(np.int64)
    mult = np.zeros(n_rows, dtype=np.int64)
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
    stack = [(0, 0, buf.shape[0], 0)]
    while stack:
        node, start, end, depth = stack.pop()
        idx = buf[start:end]
        n = end - start
        pos = int(y64[idx].sum())
        value[node] = pos / n
        if pos == 0 or pos == n or depth == max_depth:
            continue
        np.add.at(mult, idx, 1)
        split = _find_split(col_ptr, row_idx, col_val, y64, mult, n, pos, feat, rng, n_candidates)
        mult[idx] = 0
        if split is None:
            continue
        f, t = split
        xcol = np.zeros(n_rows)
        lo, hi = col_ptr[f], col_ptr[f + 1]
        xcol[row_idx[lo:hi]] = col_val[lo:hi]
        goes_left = xcol[idx] < t
        mid = start + int(goes_left.sum())
        buf[start:end] = np.concatenate([idx[goes_left], idx[~goes_left]])
        li = len(feature)
        for arr, fill in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
            arr.extend([fill, fill])
        feature[node], threshold[node], left[node], right[node] = f, t, li, li + 1
        stack.append((li + 1, mid, end, depth + 1))
        stack.append((li, start, mid, depth + 1))
    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64))


def predict_tree(X, feature, threshold, left, right, value):
    """Leaf ``value`` reached by each row of ``X``; ``x < threshold`` goes left."""
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = np.nonzero(feature[node] >= 0)[0]
    while active.size:
        nd = node[active]
        goes_left = X[active, feature[nd]] < threshold[nd]
        node[active] = np.where(goes_left, left[nd], right[nd])
        active = active[feature[node[active]] >= 0]
    return value[node]


def pegasos(data, indices, indptr, y, order, w, b, lam, t):
    """Run Pegasos subgradient steps over CSR rows in ``order``.

    ``w`` is updated in place; returns the new bias and step counter. The
    bias acts as the weight of a constant feature of value 1 and is shrunk
    together with ``w``. Weights are stored as ``scale * v`` so the per-step
    shrinkage costs O(1).
    """
    data = data.tolist()
    indices = indices.tolist()
    indptr = indptr.tolist()
    y = y.tolist()
    v = w.tolist()
    n_features = len(v)
    scale = 1.0
    vb = float(b)
    for i in order.tolist():
        t += 1
        eta = 1.0 / (lam * t)
        lo, hi = indptr[i], indptr[i + 1]
        s = vb
        for k in range(lo, hi):
            s += v[indices[k]] * data[k]
        margin = y[i] * (scale * s)
        shrink = 1.0 - eta * lam
        if shrink <= 0.0:
            for j in range(n_features):
                v[j] = 0.0
            vb = 0.0
            scale = 1.0
        else:
            scale *= shrink
        if margin < 1.0:
            coef = eta * y[i] / scale
            for k in range(lo, hi):
                v[indices[k]] += coef * data[k]
            vb += coef
        if scale < 1e-9:
            for j in range(n_features):
                v[j] *= scale
            vb *= scale
            scale = 1.0
    for j in range(n_features):
        w[j] = scale * v[j]
    return scale * vb, t
