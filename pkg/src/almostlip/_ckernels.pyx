# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled farthest-point and norm kernels. Mirrors ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


cdef inline double _dist(const double[:, ::1] p, Py_ssize_t i, Py_ssize_t j,
                         Py_ssize_t m, int code) noexcept nogil:
    cdef Py_ssize_t t
    cdef double acc = 0.0, d
    if code == 0:
        for t in range(m):
            d = fabs(p[i, t] - p[j, t])
            if d > acc:
                acc = d
        return acc
    elif code == 1:
        for t in range(m):
            d = p[i, t] - p[j, t]
            acc += d * d
        return sqrt(acc)
    else:
        for t in range(m):
            acc += fabs(p[i, t] - p[j, t])
        return acc


def fps(points, int code, double stop_radius, Py_ssize_t start=0):
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], m = p.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mind_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] mind = mind_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] radii_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] order = order_arr
    cdef double[::1] radii = radii_arr
    cdef Py_ssize_t i, k = 0, c = start, best
    cdef double d, far

    with nogil:
        while True:
            order[k] = c
            far = -1.0
            best = 0
            for i in range(n):
                d = _dist(p, i, c, m, code)
                if k == 0 or d < mind[i]:
                    mind[i] = d
                if mind[i] > far:
                    far = mind[i]
                    best = i
            radii[k] = far
            k += 1
            if far <= stop_radius or k >= n:
                break
            c = best
    return order_arr[:k].copy(), radii_arr[:k].copy(), mind_arr


def row_norms(points, int code):
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], m = p.shape[1], i, t
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, v
    with nogil:
        for i in range(n):
            acc = 0.0
            for t in range(m):
                v = fabs(p[i, t])
                if code == 0:
                    if v > acc:
                        acc = v
                elif code == 1:
                    acc += v * v
                else:
                    acc += v
            out[i] = sqrt(acc) if code == 1 else acc
    return out_arr
