# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()

cdef double _SAFEMIN = 2.2250738585072014e-308
cdef double _EPS = 2.220446049250313e-16


cdef inline Py_ssize_t _count(const double[::1] d, const double[::1] e2,
                              double x, double pivmin) nogil:
    cdef Py_ssize_t n = d.shape[0], i, count = 0
    cdef double q = d[0] - x
    if fabs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def sturm_count(d, e2, double x, double pivmin):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e2, dtype=np.float64)
    return _count(dv, ev, x, pivmin)


def bisect_eigenvalues(d, e, indices, double rtol, double lower, double upper):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[::1] e2 = np.ascontiguousarray(e, dtype=np.float64) ** 2
    cdef Py_ssize_t[::1] idx = np.ascontiguousarray(indices, dtype=np.intp)
    cdef Py_ssize_t m, it, k, nidx = idx.shape[0]
    cdef double scale = max(fabs(lower), fabs(upper), _SAFEMIN)
    cdef double emax = 1.0, lo, hi, mid, width
    cdef Py_ssize_t i
    for i in range(e2.shape[0]):
        if e2[i] > emax:
            emax = e2[i]
    cdef double pivmin = _SAFEMIN * emax
    cdef double atol = 4.0 * _EPS * scale
    out = np.empty(nidx)
    cdef double[::1] ov = out
    with nogil:
        for m in range(nidx):
            k = idx[m]
            lo = lower
            hi = upper
            for it in range(256):
                width = rtol * max(fabs(lo), fabs(hi))
                if hi - lo <= max(width, atol):
                    break
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if _count(dv, e2, mid, pivmin) > k:
                    hi = mid
                else:
                    lo = mid
            ov[m] = 0.5 * (lo + hi)
    return out


cdef inline Py_ssize_t _slope_count(const double[::1] mu, const double[::1] c,
                                    const double[::1] b, double x, double pivmin) nogil:
    cdef Py_ssize_t n = b.shape[0], j, count = 0
    cdef double ratio = 1.0 / mu[0], w, t
    for j in range(n):
        w = ratio - c[j] - x * b[j]
        t = 1.0 + mu[j + 1] * w
        if fabs(t) < pivmin:
            t = -pivmin
        if t < 0:
            count += 1
        ratio = w / t
    return count


def slope_count(mu, c, b, double x, double pivmin):
    cdef const double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    return _slope_count(mv, cv, bv, x, pivmin)


def bisect_slope(mu, c, b, indices, double rtol, double lower, double upper):
    cdef const double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t[::1] idx = np.ascontiguousarray(indices, dtype=np.intp)
    cdef Py_ssize_t m, it, k, nidx = idx.shape[0]
    cdef double atol = rtol, lo, hi, mid, width
    out = np.empty(nidx)
    cdef double[::1] ov = out
    with nogil:
        for m in range(nidx):
            k = idx[m]
            lo = lower
            hi = upper
            for it in range(256):
                width = rtol * max(fabs(lo), fabs(hi))
                if hi - lo <= max(width, atol):
                    break
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if _slope_count(mv, cv, bv, mid, _SAFEMIN) > k:
                    hi = mid
                else:
                    lo = mid
            ov[m] = 0.5 * (lo + hi)
    return out


def gtsv(double[::1] dl, double[::1] d, double[::1] du, double[:, ::1] b):
    cdef Py_ssize_t n = d.shape[0], m = b.shape[1], i, j
    cdef double fact, temp, pmin = INFINITY
    with nogil:
        for i in range(n - 1):
            if fabs(d[i]) >= fabs(dl[i]):
                if d[i] == 0.0:
                    with gil:
                        return i + 1, 0.0
                fact = dl[i] / d[i]
                d[i + 1] -= fact * du[i]
                for j in range(m):
                    b[i + 1, j] -= fact * b[i, j]
                if i < n - 2:
                    dl[i] = 0.0
            else:
                fact = d[i] / dl[i]
                d[i] = dl[i]
                temp = d[i + 1]
                d[i + 1] = du[i] - fact * temp
                if i < n - 2:
                    dl[i] = du[i + 1]
                    du[i + 1] = -fact * dl[i]
                du[i] = temp
                for j in range(m):
                    temp = b[i, j]
                    b[i, j] = b[i + 1, j]
                    b[i + 1, j] = temp - fact * b[i + 1, j]
        if d[n - 1] == 0.0:
            with gil:
                return n, 0.0
        for i in range(n):
            if fabs(d[i]) < pmin:
                pmin = fabs(d[i])
        for j in range(m):
            b[n - 1, j] /= d[n - 1]
            if n > 1:
                b[n - 2, j] = (b[n - 2, j] - du[n - 2] * b[n - 1, j]) / d[n - 2]
            for i in range(n - 3, -1, -1):
                b[i, j] = (b[i, j] - du[i] * b[i + 1, j] - dl[i] * b[i + 2, j]) / d[i]
    return 0, pmin
