# cython: language_level=3
"""Compiled inner loops: pairwise co-occurrence counting and ancestral sampling."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef extern from *:
    """
    static inline int clt_popcount(unsigned long long v) { return __builtin_popcountll(v); }
    """
    int clt_popcount(unsigned long long v) nogil


def pair_counts(const cnp.intp_t[:, ::1] data, Py_ssize_t r):
    """Co-occurrence counts ``C[i, j, a, b]`` for every ordered column pair.

    Each column is split into ``r`` one-hot bitsets over the samples; a count
    is the popcount of the AND of two bitsets. Only ``i <= j`` is computed,
    the rest is filled by transposition.
    """
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t d = data.shape[1]
    cdef Py_ssize_t words = (n + 63) // 64
    cdef Py_ssize_t s, i, j, a, b, w
    cdef cnp.int64_t acc
    bits_arr = np.zeros((d * r, words), dtype=np.uint64)
    cdef cnp.uint64_t[:, ::1] bits = bits_arr
    out = np.zeros((d, d, r, r), dtype=np.int64)
    cdef cnp.int64_t[:, :, :, ::1] c = out
    cdef const cnp.uint64_t* u
    cdef const cnp.uint64_t* v

    with nogil:
        for s in range(n):
            for i in range(d):
                bits[i * r + data[s, i], s >> 6] |= (<cnp.uint64_t>1) << (s & 63)
        for i in range(d):
            for a in range(r):
                u = &bits[i * r + a, 0]
                for j in range(i, d):
                    for b in range(r):
                        if j == i and b != a:
                            continue
                        v = &bits[j * r + b, 0]
                        acc = 0
                        for w in range(words):
                            acc += clt_popcount(u[w] & v[w])
                        c[i, j, a, b] = acc

    for i in range(d):
        for j in range(i + 1, d):
            out[j, i] = out[i, j].T
    return out


def ancestral_sample(const cnp.intp_t[::1] order,
                     const cnp.intp_t[::1] parent,
                     const double[:, :, ::1] cdf,
                     const double[:, ::1] u):
    """Inverse-CDF ancestral sampling driven by pre-drawn uniforms.

    ``cdf[i, a, :]`` is the cumulative conditional of node ``i`` given its
    parent takes value ``a``; roots use row 0.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t d = order.shape[0]
    cdef Py_ssize_t r = cdf.shape[2]
    cdef Py_ssize_t s, t, i, p, a, b
    cdef double v
    out = np.zeros((n, d), dtype=np.intp)
    cdef cnp.intp_t[:, ::1] x = out

    with nogil:
        for s in range(n):
            for t in range(d):
                i = order[t]
                p = parent[i]
                a = x[s, p] if p >= 0 else 0
                v = u[s, i]
                b = 0
                while b < r - 1 and v >= cdf[i, a, b]:
                    b += 1
                x[s, i] = b
    return out
