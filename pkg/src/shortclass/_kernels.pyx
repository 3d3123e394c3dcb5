# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: sparse decision-tree growth, tree prediction and Pegasos SVM steps.

Mirrors ``_kernels_py`` operation for operation; see that module for the
reference semantics.
"""
import numpy as np

from libc.math cimport INFINITY
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort


ctypedef struct Group:
    double value
    int64_t count
    int64_t pos


cdef int _cmp_group(const void* a, const void* b) noexcept nogil:
    cdef double x = (<Group*>a).value
    cdef double z = (<Group*>b).value
    return (x > z) - (x < z)


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def build_tree(const int64_t[:] col_ptr, const int64_t[:] row_idx, const double[:] col_val,
               const signed char[:] y, samples, int max_depth, int n_candidates, seed):
    cdef Py_ssize_t n_total = len(samples)
    cdef Py_ssize_t n_rows = y.shape[0]
    cdef Py_ssize_t n_features = col_ptr.shape[0] - 1
    cdef Py_ssize_t capacity = 2 * n_total + 1
    cdef Py_ssize_t max_nnz = 0, f

    for f in range(n_features):
        if col_ptr[f + 1] - col_ptr[f] > max_nnz:
            max_nnz = col_ptr[f + 1] - col_ptr[f]

    buf_arr = np.array(samples, dtype=np.int64)
    feature_arr = np.full(capacity, -1, dtype=np.int64)
    threshold_arr = np.zeros(capacity, dtype=np.float64)
    left_arr = np.full(capacity, -1, dtype=np.int64)
    right_arr = np.full(capacity, -1, dtype=np.int64)
    value_arr = np.zeros(capacity, dtype=np.float64)
    feat_arr = np.arange(n_features, dtype=np.int64)
    stack_arr = np.zeros((capacity, 4), dtype=np.int64)
    mult_arr = np.zeros(n_rows, dtype=np.int64)
    xcol_arr = np.zeros(n_rows, dtype=np.float64)

    cdef int64_t[:] buf = buf_arr
    cdef int64_t[:] feature = feature_arr
    cdef double[:] threshold = threshold_arr
    cdef int64_t[:] left = left_arr
    cdef int64_t[:] right = right_arr
    cdef double[:] value = value_arr
    cdef int64_t[:] feat = feat_arr
    cdef int64_t[:, :] stack = stack_arr
    cdef int64_t[:] mult = mult_arr
    cdef double[:] xcol = xcol_arr

    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Group* groups = <Group*>malloc((max_nnz + 1) * sizeof(Group))
    if groups == NULL:
        raise MemoryError()

    cdef Py_ssize_t n_nodes = 1, sp = 1
    cdef Py_ssize_t node, start, end, depth, n, pos, k, i, j, r, mid, g, p
    cdef Py_ssize_t best_f, evaluated, local_i
    cdef int64_t tmp, row, m, cl, cpl, nn, pnn
    cdef double best_imp, best_t, local_imp, imp, nl, nr, pl, pr, ql, qr, a, bval, t

    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_total
    stack[0, 3] = 0
    try:
        with nogil:
            while sp > 0:
                sp -= 1
                node = stack[sp, 0]
                start = stack[sp, 1]
                end = stack[sp, 2]
                depth = stack[sp, 3]
                n = end - start
                pos = 0
                for k in range(start, end):
                    pos += y[buf[k]]
                value[node] = <double>pos / <double>n
                if pos == 0 or pos == n or depth == max_depth:
                    continue

                for k in range(start, end):
                    mult[buf[k]] += 1
                best_imp = INFINITY
                best_f = -1
                best_t = 0.0
                evaluated = 0
                for j in range(n_features):
                    if evaluated >= n_candidates and best_f >= 0:
                        break
                    r = j + <Py_ssize_t>(_splitmix(&state) % <uint64_t>(n_features - j))
                    tmp = feat[j]
                    feat[j] = feat[r]
                    feat[r] = tmp
                    f = feat[j]
                    evaluated += 1

                    g = 0
                    nn = 0
                    pnn = 0
                    for p in range(col_ptr[f], col_ptr[f + 1]):
                        row = row_idx[p]
                        m = mult[row]
                        if m > 0:
                            groups[g].value = col_val[p]
                            groups[g].count = m
                            groups[g].pos = m * y[row]
                            nn += m
                            pnn += groups[g].pos
                            g += 1
                    if nn < n:
                        groups[g].value = 0.0
                        groups[g].count = n - nn
                        groups[g].pos = pos - pnn
                        g += 1
                    if g < 2:
                        continue
                    qsort(groups, g, sizeof(Group), _cmp_group)

                    local_imp = INFINITY
                    local_i = -1
                    cl = 0
                    cpl = 0
                    for i in range(g - 1):
                        cl += groups[i].count
                        cpl += groups[i].pos
                        if groups[i].value < groups[i + 1].value:
                            nl = <double>cl
                            nr = <double>n - nl
                            pl = <double>cpl
                            pr = <double>pos - pl
                            ql = nl - pl
                            qr = nr - pr
                            imp = (nl - (pl * pl + ql * ql) / nl) + (nr - (pr * pr + qr * qr) / nr)
                            if imp < local_imp:
                                local_imp = imp
                                local_i = i
                    if local_i >= 0 and local_imp < best_imp:
                        best_imp = local_imp
                        best_f = f
                        a = groups[local_i].value
                        bval = groups[local_i + 1].value
                        t = (a + bval) / 2.0
                        if not t > a:
                            t = bval
                        best_t = t
                for k in range(start, end):
                    mult[buf[k]] = 0

                if best_f < 0:
                    continue

                for p in range(col_ptr[best_f], col_ptr[best_f + 1]):
                    xcol[row_idx[p]] = col_val[p]
                mid = start
                for k in range(start, end):
                    if xcol[buf[k]] < best_t:
                        tmp = buf[k]
                        buf[k] = buf[mid]
                        buf[mid] = tmp
                        mid += 1
                for p in range(col_ptr[best_f], col_ptr[best_f + 1]):
                    xcol[row_idx[p]] = 0.0

                feature[node] = best_f
                threshold[node] = best_t
                left[node] = n_nodes
                right[node] = n_nodes + 1
                stack[sp, 0] = n_nodes + 1
                stack[sp, 1] = mid
                stack[sp, 2] = end
                stack[sp, 3] = depth + 1
                stack[sp + 1, 0] = n_nodes
                stack[sp + 1, 1] = start
                stack[sp + 1, 2] = mid
                stack[sp + 1, 3] = depth + 1
                sp += 2
                n_nodes += 2
    finally:
        free(groups)

    return (feature_arr[:n_nodes].copy(), threshold_arr[:n_nodes].copy(),
            left_arr[:n_nodes].copy(), right_arr[:n_nodes].copy(),
            value_arr[:n_nodes].copy())


def predict_tree(const double[:, :] X, const int64_t[:] feature, const double[:] threshold,
                 const int64_t[:] left, const int64_t[:] right, const double[:] value):
    cdef Py_ssize_t n = X.shape[0], i
    cdef int64_t node
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[:] out = out_arr
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] = value[node]
    return out_arr


def pegasos(const double[:] data, const int64_t[:] indices, const int64_t[:] indptr,
            const double[:] y, const int64_t[:] order, double[:] w,
            double b, double lam, long long t):
    cdef Py_ssize_t n_features = w.shape[0], n_steps = order.shape[0]
    cdef Py_ssize_t step, j
    cdef int64_t i, k, lo, hi
    cdef double eta, s, margin, shrink, coef, scale = 1.0, vb = b
    v_arr = np.array(w, dtype=np.float64)
    cdef double[:] v = v_arr
    with nogil:
        for step in range(n_steps):
            i = order[step]
            t += 1
            eta = 1.0 / (lam * <double>t)
            lo = indptr[i]
            hi = indptr[i + 1]
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
