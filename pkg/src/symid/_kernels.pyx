# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled recursion kernels (hot loops of simulation and gradients).

Mirrors symid._kernels_py; the matrices involved are small (n of a few
dozen) so plain nested loops beat BLAS dispatch overhead here.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True


def simulate(const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] C,
             const double[:, ::1] u, const double[::1] x0):
    cdef Py_ssize_t T = u.shape[0]
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[1]
    cdef Py_ssize_t p = C.shape[0]
    x_arr = np.empty((T, n))
    y_arr = np.empty((T, p))
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] y = y_arr
    cdef Py_ssize_t k, i, j
    cdef double acc
    for i in range(n):
        x[0, i] = x0[i]
    for k in range(T - 1):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[k, j]
            for j in range(m):
                acc += B[i, j] * u[k, j]
            x[k + 1, i] = acc
    for k in range(T):
        for i in range(p):
            acc = 0.0
            for j in range(n):
                acc += C[i, j] * x[k, j]
            y[k, i] = acc
    return x_arr, y_arr


def gradient_core(const double[:, ::1] A, const double[:, ::1] C,
                  const double[:, ::1] resid, const double[:, ::1] x, const double[:, ::1] u):
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t K = T - 1
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = u.shape[1]
    cdef Py_ssize_t p = C.shape[0]
    ga_arr = np.zeros((n, n))
    gb_arr = np.zeros((n, m))
    cdef double[:, ::1] ga = ga_arr
    cdef double[:, ::1] gb = gb_arr
    cdef double[::1] gamma = np.zeros(n)
    cdef double[::1] gnew = np.zeros(n)
    cdef Py_ssize_t i, j, l, step
    cdef double acc, g
    if K < 1:
        return ga_arr, gb_arr
    for i in range(n):
        acc = 0.0
        for j in range(p):
            acc += C[j, i] * resid[K, j]
        gamma[i] = acc
    for i in range(n):
        g = -2.0 * gamma[i]
        for j in range(n):
            ga[i, j] += g * x[K - 1, j]
        for j in range(m):
            gb[i, j] += g * u[K - 1, j]
    for step in range(1, K):
        for i in range(n):
            acc = 0.0
            for j in range(p):
                acc += C[j, i] * resid[K - step, j]
            for l in range(n):
                acc += A[i, l] * gamma[l]
            gnew[i] = acc
        for i in range(n):
            gamma[i] = gnew[i]
        for i in range(n):
            g = -2.0 * gamma[i]
            for j in range(n):
                ga[i, j] += g * x[K - 1 - step, j]
            for j in range(m):
                gb[i, j] += g * u[K - 1 - step, j]
    return ga_arr, gb_arr


def sensitivity(const double[:, ::1] A, const double[:, ::1] C,
                const double[:, ::1] xi_A, const double[:, ::1] xi_B, const double[:, ::1] xi_C,
                const double[:, ::1] x, const double[:, ::1] u):
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = u.shape[1]
    cdef Py_ssize_t p = C.shape[0]
    dy_arr = np.empty((T, p))
    cdef double[:, ::1] dy = dy_arr
    cdef double[::1] s = np.zeros(n)
    cdef double[::1] snew = np.zeros(n)
    cdef Py_ssize_t k, i, j
    cdef double acc
    for i in range(p):
        acc = 0.0
        for j in range(n):
            acc += xi_C[i, j] * x[0, j]
        dy[0, i] = acc
    for k in range(T - 1):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * s[j] + xi_A[i, j] * x[k, j]
            for j in range(m):
                acc += xi_B[i, j] * u[k, j]
            snew[i] = acc
        for i in range(n):
            s[i] = snew[i]
        for i in range(p):
            acc = 0.0
            for j in range(n):
                acc += C[i, j] * s[j] + xi_C[i, j] * x[k + 1, j]
            dy[k + 1, i] = acc
    return dy_arr
