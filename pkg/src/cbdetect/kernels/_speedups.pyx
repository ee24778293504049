# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot training kernels.

Semantics mirror :mod:`cbdetect.kernels.reference`; that module documents
the contracts. The inner loops run without the GIL so tree building can
use real thread parallelism.
"""

from libc.math cimport INFINITY, exp, log1p

import numpy as np

COMPILED = True

ctypedef unsigned long long u64

cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef u64 _MIX2 = 0x94D049BB133111EBULL
cdef double _INV_2_53 = 1.0 / 9007199254740992.0


def rng_state(seed):
    return np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)


cdef inline u64 _next_u64(u64[::1] state) noexcept nogil:
    cdef u64 s = state[0] + _GOLDEN
    cdef u64 z = s
    state[0] = s
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


def rng_next(u64[::1] state):
    return _next_u64(state)


cdef inline double _uniform(u64[::1] state) noexcept nogil:
    return (_next_u64(state) >> 11) * _INV_2_53


def rng_uniform(u64[::1] state):
    return _uniform(state)


cdef inline Py_ssize_t _bisect_right(double[::1] cum, double u) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = cum.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def sample_negatives(u64[::1] state, double[::1] cum, Py_ssize_t k):
    out = np.empty(k, dtype=np.int64)
    cdef long long[::1] ov = out
    cdef Py_ssize_t i, idx, n = cum.shape[0]
    for i in range(k):
        idx = _bisect_right(cum, _uniform(state))
        if idx >= n:
            idx = n - 1
        ov[i] = idx
    return out


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


def train_sentence_sg(double[:, ::1] vin, double[:, ::1] vout, long long[::1] ids,
                      int window, int negatives, double alpha0, double alpha_min,
                      long long total_pairs, long long pairs_done,
                      double[::1] neg_cum, long long[::1] neg_ids, u64[::1] state):
    cdef Py_ssize_t n = ids.shape[0]
    cdef Py_ssize_t dim = vin.shape[1]
    cdef Py_ssize_t ncand = neg_cum.shape[0]
    cdef double loss = 0.0
    cdef long long k = 0
    cdef Py_ssize_t i, j, d, idx, lo, hi
    cdef long long center, ctx, neg
    cdef int m
    cdef double alpha, f, g

    accum_arr = np.zeros(dim, dtype=np.float64)
    cdef double[::1] accum = accum_arr

    with nogil:
        for i in range(n):
            center = ids[i]
            lo = i - window
            if lo < 0:
                lo = 0
            hi = i + window + 1
            if hi > n:
                hi = n
            for j in range(lo, hi):
                if j == i:
                    continue
                ctx = ids[j]
                alpha = alpha0 + (alpha_min - alpha0) * ((pairs_done + k) / (<double>total_pairs))
                if alpha < alpha_min:
                    alpha = alpha_min
                for d in range(dim):
                    accum[d] = 0.0

                f = 0.0
                for d in range(dim):
                    f += vin[center, d] * vout[ctx, d]
                loss += _softplus(-f)
                g = (1.0 - _sigmoid(f)) * alpha
                for d in range(dim):
                    accum[d] += g * vout[ctx, d]
                for d in range(dim):
                    vout[ctx, d] += g * vin[center, d]

                for m in range(negatives):
                    idx = _bisect_right(neg_cum, _uniform(state))
                    if idx >= ncand:
                        idx = ncand - 1
                    neg = neg_ids[idx]
                    if neg == ctx:
                        continue
                    f = 0.0
                    for d in range(dim):
                        f += vin[center, d] * vout[neg, d]
                    loss += _softplus(f)
                    g = (0.0 - _sigmoid(f)) * alpha
                    for d in range(dim):
                        accum[d] += g * vout[neg, d]
                    for d in range(dim):
                        vout[neg, d] += g * vin[center, d]

                for d in range(dim):
                    vin[center, d] += accum[d]
                k += 1
    return loss, k


def best_split(double[::1] values, long long[::1] labels, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2 * min_leaf:
        return -1, INFINITY
    cdef long long total1 = 0, c1 = 0
    cdef Py_ssize_t i, best_pos = -1
    cdef double nl, nr, c1l, c1r, p1l, p0l, gl, p1r, p0r, gr, score
    cdef double best_score = INFINITY
    cdef double nd = <double>n
    with nogil:
        for i in range(n):
            total1 += labels[i]
        for i in range(1, n):
            c1 += labels[i - 1]
            if i < min_leaf or i > n - min_leaf:
                continue
            if values[i - 1] == values[i]:
                continue
            nl = <double>i
            nr = <double>(n - i)
            c1l = <double>c1
            c1r = <double>(total1 - c1)
            p1l = c1l / nl
            p0l = (nl - c1l) / nl
            gl = 1.0 - p1l * p1l - p0l * p0l
            p1r = c1r / nr
            p0r = (nr - c1r) / nr
            gr = 1.0 - p1r * p1r - p0r * p0r
            score = (nl * gl + nr * gr) / nd
            if score < best_score:
                best_score = score
                best_pos = i
    if best_pos < 0:
        return -1, INFINITY
    return best_pos, best_score
