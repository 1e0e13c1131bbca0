"""Pure-numpy kernel backend.

Every function here has a twin in the compiled backend (_core.pyx) with the
same name and signature.  All arrays are 2-D C-contiguous float64.  Forward
kernels allocate and return a fresh array; backward kernels accumulate into
``out`` in place (gradients from several consumers add up).
"""

import numpy as np

NAME = "numpy"


def matmul(a, b):
    return a @ b


def add(a, b):
    return a + b


def subtract(a, b):
    return a - b


def multiply(a, b):
    return a * b


def scalar_mul(a, c):
    return a * c


def sigmoid(a):
    out = np.empty_like(a)
    pos = a >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def tanh(a):
    return np.tanh(a)


def exp(a):
    return np.exp(a)


def log(a):
    return np.log(a)


def array_sum(a):
    return float(np.sum(a))


def array_min(a):
    return float(np.min(a))


def all_finite(a):
    # a finite sum implies every element is finite; mixed +inf/-inf gives nan
    return bool(np.isfinite(np.sum(a)))


def acc(out, g):
    out += g


def acc_neg(out, g):
    out -= g


def acc_prod(out, g, other):
    out += g * other


def acc_scaled(out, g, c):
    out += g * c


def acc_fill(out, value):
    out += value


def matmul_acc_a(out, g, b):
    out += g @ b.T


def matmul_acc_b(out, g, a):
    out += a.T @ g


def sigmoid_acc(out, g, y):
    out += g * y * (1.0 - y)


def tanh_acc(out, g, y):
    out += g * (1.0 - y * y)


def exp_acc(out, g, y):
    out += g * y


def log_acc(out, g, x):
    out += g / x
