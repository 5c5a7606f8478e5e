# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot inner-loop kernels.

Mirrors ergomix._kernels_py function for function; see that module for the
argument conventions.
"""

from libc.math cimport exp, INFINITY


def gauss_box(double[:, :] out, const double[::1] xs, const double[::1] ys,
              double mx, double my, double i11, double i12, double i22,
              double norm):
    cdef Py_ssize_t i, j
    cdef double dxv, dyv, q
    for i in range(ys.shape[0]):
        dyv = ys[i] - my
        for j in range(xs.shape[0]):
            dxv = xs[j] - mx
            q = i11 * dxv * dxv + (2.0 * i12 * dxv) * dyv + i22 * dyv * dyv
            out[i, j] = norm * exp(-0.5 * q)


def abs_sum(const double[::1] a):
    cdef Py_ssize_t i
    cdef double total = 0.0
    for i in range(a.shape[0]):
        total += a[i] if a[i] >= 0.0 else -a[i]
    return total


def masked_sum(const double[::1] a, const Py_ssize_t[::1] idx):
    cdef Py_ssize_t i
    cdef double total = 0.0
    for i in range(idx.shape[0]):
        total += a[idx[i]]
    return total


def masked_abs_sum(const double[::1] a, const Py_ssize_t[::1] idx):
    cdef Py_ssize_t i
    cdef double v
    cdef double total = 0.0
    for i in range(idx.shape[0]):
        v = a[idx[i]]
        total += v if v >= 0.0 else -v
    return total


def nearest_negative_scan(const double[:, ::1] values, const double[::1] xs,
                          const double[::1] ys, double px, double py):
    cdef Py_ssize_t i, j, best = -1
    cdef double dxv, dyv, d2
    cdef double best_d2 = INFINITY
    cdef Py_ssize_t nx = xs.shape[0]
    for i in range(ys.shape[0]):
        dyv = ys[i] - py
        for j in range(nx):
            if values[i, j] < 0.0:
                dxv = xs[j] - px
                d2 = dxv * dxv + dyv * dyv
                if d2 < best_d2:
                    best_d2 = d2
                    best = i * nx + j
    return best


def nearest_negative_among(const double[::1] vals, const double[::1] cx,
                           const double[::1] cy, double px, double py):
    cdef Py_ssize_t i, best = -1
    cdef double dxv, dyv, d2
    cdef double best_d2 = INFINITY
    for i in range(vals.shape[0]):
        if vals[i] < 0.0:
            dxv = cx[i] - px
            dyv = cy[i] - py
            d2 = dxv * dxv + dyv * dyv
            if d2 < best_d2:
                best_d2 = d2
                best = i
    return best
