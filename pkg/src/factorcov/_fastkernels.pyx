# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Same contracts as ``_pykernels``; each symmetric output is accumulated once
per (j, l) pair with a fixed inner summation order, so results are
deterministic and independent of any caller-side parallel schedule.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sample_cross_moment(double[:, ::1] u):
    cdef Py_ssize_t p = u.shape[0]
    cdef Py_ssize_t n = u.shape[1]
    s_arr = np.empty((p, p), dtype=np.float64)
    cdef double[:, ::1] s = s_arr
    cdef Py_ssize_t j, l, i
    cdef double acc
    for j in range(p):
        for l in range(j, p):
            acc = 0.0
            for i in range(n):
                acc += u[j, i] * u[l, i]
            s[j, l] = acc / n
            s[l, j] = s[j, l]
    return s_arr


def cross_moments(double[:, ::1] u):
    cdef Py_ssize_t p = u.shape[0]
    cdef Py_ssize_t n = u.shape[1]
    s_arr = np.empty((p, p), dtype=np.float64)
    q_arr = np.empty((p, p), dtype=np.float64)
    cdef double[:, ::1] s = s_arr
    cdef double[:, ::1] q = q_arr
    cdef Py_ssize_t j, l, i
    cdef double acc_s, acc_q, prod
    for j in range(p):
        for l in range(j, p):
            acc_s = 0.0
            acc_q = 0.0
            for i in range(n):
                prod = u[j, i] * u[l, i]
                acc_s += prod
                acc_q += prod * prod
            s[j, l] = acc_s / n
            s[l, j] = s[j, l]
            q[j, l] = acc_q / n
            q[l, j] = q[j, l]
    return s_arr, q_arr


def soft_threshold_matrix(double[:, ::1] s, double[:, ::1] mu):
    cdef Py_ssize_t p = s.shape[0]
    out_arr = np.empty((p, p), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, l
    cdef double v, shrunk
    for j in range(p):
        for l in range(p):
            if j == l:
                out[j, l] = s[j, l]
                continue
            v = s[j, l]
            shrunk = (v if v >= 0.0 else -v) - mu[j, l]
            if shrunk <= 0.0:
                out[j, l] = 0.0
            elif v >= 0.0:
                out[j, l] = shrunk
            else:
                out[j, l] = -shrunk
    return out_arr


def max_abs_diff(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t rows = a.shape[0]
    cdef Py_ssize_t cols = a.shape[1]
    cdef Py_ssize_t j, l
    cdef double best = 0.0, d
    for j in range(rows):
        for l in range(cols):
            d = a[j, l] - b[j, l]
            if d < 0.0:
                d = -d
            if d > best:
                best = d
    return best
