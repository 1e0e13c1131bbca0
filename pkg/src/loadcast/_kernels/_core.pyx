# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend.

Mirror of numpy_backend with typed loops.  The win over numpy is per-call
overhead on the many small arrays the autodiff tape pushes around (gate
vectors, smoothing-state scalars), not raw FLOPs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp as c_exp, isfinite, log as c_log, tanh as c_tanh

cnp.import_array()

NAME = "compiled"


def matmul(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, p
    cdef double aip
    for i in range(m):
        for p in range(k):
            aip = a[i, p]
            for j in range(n):
                o[i, j] += aip * b[p, j]
    return out


def add(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = a[i, j] + b[i, j]
    return out


def subtract(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = a[i, j] - b[i, j]
    return out


def multiply(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = a[i, j] * b[i, j]
    return out


def scalar_mul(double[:, ::1] a, double c):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = a[i, j] * c
    return out


def sigmoid(double[:, ::1] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double x, e
    for i in range(m):
        for j in range(n):
            x = a[i, j]
            if x >= 0.0:
                o[i, j] = 1.0 / (1.0 + c_exp(-x))
            else:
                e = c_exp(x)
                o[i, j] = e / (1.0 + e)
    return out


def tanh(double[:, ::1] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = c_tanh(a[i, j])
    return out


def exp(double[:, ::1] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = c_exp(a[i, j])
    return out


def log(double[:, ::1] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = c_log(a[i, j])
    return out


def array_sum(double[:, ::1] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef double s = 0.0
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            s += a[i, j]
    return s


def array_min(double[:, ::1] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef double lo = a[0, 0]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            if a[i, j] < lo:
                lo = a[i, j]
    return lo


def all_finite(double[:, ::1] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            if not isfinite(a[i, j]):
                return False
    return True


def acc(double[:, ::1] out, double[:, ::1] g):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += g[i, j]


def acc_neg(double[:, ::1] out, double[:, ::1] g):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] -= g[i, j]


def acc_prod(double[:, ::1] out, double[:, ::1] g, double[:, ::1] other):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += g[i, j] * other[i, j]


def acc_scaled(double[:, ::1] out, double[:, ::1] g, double c):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += g[i, j] * c


def acc_fill(double[:, ::1] out, double value):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += value


def matmul_acc_a(double[:, ::1] out, double[:, ::1] g, double[:, ::1] b):
    # out += g @ b.T ; g is (m, n), b is (k, n), out is (m, k)
    cdef Py_ssize_t m = g.shape[0], n = g.shape[1], k = b.shape[0]
    cdef Py_ssize_t i, j, p
    cdef double s
    for i in range(m):
        for p in range(k):
            s = 0.0
            for j in range(n):
                s += g[i, j] * b[p, j]
            out[i, p] += s


def matmul_acc_b(double[:, ::1] out, double[:, ::1] g, double[:, ::1] a):
    # out += a.T @ g ; a is (m, k), g is (m, n), out is (k, n)
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = g.shape[1]
    cdef Py_ssize_t i, j, p
    cdef double aip
    for i in range(m):
        for p in range(k):
            aip = a[i, p]
            for j in range(n):
                out[p, j] += aip * g[i, j]


def sigmoid_acc(double[:, ::1] out, double[:, ::1] g, double[:, ::1] y):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += g[i, j] * y[i, j] * (1.0 - y[i, j])


def tanh_acc(double[:, ::1] out, double[:, ::1] g, double[:, ::1] y):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += g[i, j] * (1.0 - y[i, j] * y[i, j])


def exp_acc(double[:, ::1] out, double[:, ::1] g, double[:, ::1] y):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += g[i, j] * y[i, j]


def log_acc(double[:, ::1] out, double[:, ::1] g, double[:, ::1] x):
    cdef Py_ssize_t m = out.shape[0], n = out.shape[1]
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[i, j] += g[i, j] / x[i, j]
