# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the smooth recall@k loss.

Same math as ``_recallk_py``; loops natively instead of materializing the
(positives x database) temporaries, which is what makes large training
batches cheap.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def recallk_value_grad(scores, labels, ks, double temp_rank, double temp_outer):
    """Value and score-gradient of the sigmoid-relaxed recall@k loss."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] y = np.ascontiguousarray(labels, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kvals = np.ascontiguousarray(ks, dtype=np.int64)

    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t n_ks = kvals.shape[0]
    cdef Py_ssize_t i, j, p, ki, k
    cdef Py_ssize_t n_pos = 0
    for i in range(n):
        if y[i] == 1:
            n_pos += 1

    cdef cnp.ndarray[cnp.int64_t, ndim=1] pos = np.empty(n_pos, dtype=np.int64)
    j = 0
    for i in range(n):
        if y[i] == 1:
            pos[j] = i
            j += 1

    # dsig[p, j] = sigmoid'((s_j - s_p)/temp_rank), zero at j == p
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dsig = np.zeros((n_pos, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ranks = np.empty(n_pos, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coeff = np.zeros(n_pos, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(n, dtype=np.float64)

    cdef double sp, sg, rank_p, value, member, c_k, member_sum, row_total, g

    for p in range(n_pos):
        sp = s[pos[p]]
        rank_p = 1.0
        for j in range(n):
            if j == pos[p]:
                continue
            sg = _sigmoid((s[j] - sp) / temp_rank)
            rank_p += sg
            dsig[p, j] = sg * (1.0 - sg)
        ranks[p] = rank_p

    value = 0.0
    for ki in range(n_ks):
        k = <Py_ssize_t>kvals[ki]
        c_k = <double>(n_pos if n_pos < k else k)
        member_sum = 0.0
        for p in range(n_pos):
            member = _sigmoid((<double>k - ranks[p]) / temp_outer)
            member_sum += member
            coeff[p] += member * (1.0 - member) / (c_k * temp_outer)
        value += 1.0 - member_sum / c_k
    value /= <double>n_ks
    for p in range(n_pos):
        coeff[p] /= <double>n_ks

    for p in range(n_pos):
        row_total = 0.0
        for j in range(n):
            g = coeff[p] * dsig[p, j] / temp_rank
            grad[j] += g
            row_total += g
        grad[pos[p]] -= row_total

    return value, grad
