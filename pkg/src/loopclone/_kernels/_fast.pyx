# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the pairwise kernels.

Same contracts as ``_numpy_impl``; plain nested loops over an (N, d) point
cloud with infinity-norm distances. Results are bitwise-identical to the
NumPy versions up to floating-point summation order, which both backends
avoid by using only max/min/compare operations.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _inf_dist(const double[:, ::1] W, Py_ssize_t k,
                             Py_ssize_t l, Py_ssize_t d) nogil:
    cdef double best = 0.0
    cdef double diff
    cdef Py_ssize_t j
    for j in range(d):
        diff = W[k, j] - W[l, j]
        if diff < 0.0:
            diff = -diff
        if diff > best:
            best = diff
    return best


def neighborhood_spreads(W, z, double rho):
    """Per-point spread of z over the closed rho-ball around each point."""
    cdef const double[:, ::1] wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0]
    cdef Py_ssize_t d = wv.shape[1]
    spread_arr = np.zeros(n, dtype=np.float64)
    has_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] spread = spread_arr
    cdef unsigned char[::1] has = has_arr
    cdef Py_ssize_t k, l
    cdef double zmax, zmin, val
    with nogil:
        for k in range(n):
            zmax = zv[k]
            zmin = zv[k]
            for l in range(n):
                if l == k:
                    continue
                if _inf_dist(wv, k, l, d) <= rho:
                    has[k] = 1
                    val = zv[l]
                    if val > zmax:
                        zmax = val
                    if val < zmin:
                        zmin = val
            if has[k]:
                spread[k] = zmax - zmin
    return spread_arr, has_arr.astype(bool)


def secant_excess_max(W, z, double two_eps):
    """Largest deadzoned secant slope of z over distinct-point pairs."""
    cdef const double[:, ::1] wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0]
    cdef Py_ssize_t d = wv.shape[1]
    cdef double best = 0.0
    cdef double dist, excess, slope
    cdef bint found = False
    cdef Py_ssize_t k, l
    with nogil:
        for k in range(n):
            for l in range(k + 1, n):
                dist = _inf_dist(wv, k, l, d)
                if dist <= 0.0:
                    continue
                found = True
                excess = zv[k] - zv[l]
                if excess < 0.0:
                    excess = -excess
                excess -= two_eps
                if excess <= 0.0:
                    continue
                slope = excess / dist
                if slope > best:
                    best = slope
    return best, found


def min_pairwise_dist(W):
    """Smallest infinity-norm distance over distinct index pairs."""
    cdef const double[:, ::1] wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0]
    cdef Py_ssize_t d = wv.shape[1]
    if n < 2:
        return float("inf")
    cdef double best = np.inf
    cdef double dist
    cdef Py_ssize_t k, l
    with nogil:
        for k in range(n):
            for l in range(k + 1, n):
                dist = _inf_dist(wv, k, l, d)
                if dist < best:
                    best = dist
    return best
