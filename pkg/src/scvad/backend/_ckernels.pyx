# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the row-wise kernels in py_kernels.py.

Single-threaded by design: reduction order is fixed per row so results do
not depend on any thread-count setting.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

NAME = "compiled"


def softmax_rows(x):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(n):
        m = xv[i, 0]
        for j in range(1, d):
            if xv[i, j] > m:
                m = xv[i, j]
        s = 0.0
        for j in range(d):
            ov[i, j] = exp(xv[i, j] - m)
            s += ov[i, j]
        for j in range(d):
            ov[i, j] /= s
    return out


def softmax_rows_backward(y, dy):
    cdef double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] gv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], d = yv.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double dot
    for i in range(n):
        dot = 0.0
        for j in range(d):
            dot += yv[i, j] * gv[i, j]
        for j in range(d):
            ov[i, j] = yv[i, j] * (gv[i, j] - dot)
    return out


def layer_norm_rows(x, gain, bias, double eps):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] gv = np.ascontiguousarray(gain, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(bias, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    xhat = np.empty((n, d), dtype=np.float64)
    invstd = np.empty((n, 1), dtype=np.float64)
    cdef double[:, ::1] ov = out, hv = xhat, sv = invstd
    cdef Py_ssize_t i, j
    cdef double mean, var, diff, istd
    for i in range(n):
        mean = 0.0
        for j in range(d):
            mean += xv[i, j]
        mean /= d
        var = 0.0
        for j in range(d):
            diff = xv[i, j] - mean
            var += diff * diff
        var /= d
        istd = 1.0 / sqrt(var + eps)
        sv[i, 0] = istd
        for j in range(d):
            hv[i, j] = (xv[i, j] - mean) * istd
            ov[i, j] = hv[i, j] * gv[0, j] + bv[0, j]
    return out, xhat, invstd


def layer_norm_rows_backward(dy, xhat, invstd, gain):
    cdef double[:, ::1] gv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef double[:, ::1] hv = np.ascontiguousarray(xhat, dtype=np.float64)
    cdef double[:, ::1] sv = np.ascontiguousarray(invstd, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(gain, dtype=np.float64)
    cdef Py_ssize_t n = gv.shape[0], d = gv.shape[1]
    dx = np.empty((n, d), dtype=np.float64)
    dgain = np.zeros((1, d), dtype=np.float64)
    dbias = np.zeros((1, d), dtype=np.float64)
    cdef double[:, ::1] dxv = dx, dgv = dgain, dbv = dbias
    cdef Py_ssize_t i, j
    cdef double m1, m2, dh
    for i in range(n):
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            dh = gv[i, j] * wv[0, j]
            m1 += dh
            m2 += dh * hv[i, j]
        m1 /= d
        m2 /= d
        for j in range(d):
            dh = gv[i, j] * wv[0, j]
            dxv[i, j] = (dh - m1 - hv[i, j] * m2) * sv[i, 0]
            dgv[0, j] += gv[i, j] * hv[i, j]
            dbv[0, j] += gv[i, j]
    return dx, dgain, dbias
