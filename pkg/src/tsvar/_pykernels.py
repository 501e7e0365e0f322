"""Pure-Python tridiagonal kernels.

Reference implementation of the routines in ``_ckernels.pyx``.  Loops are
written out element by element because every routine here is a sequential
recurrence; the compiled module is a line-for-line translation.
"""
import math

import numpy as np

_SAFEMIN = np.finfo(float).tiny


def sturm_count(d, e2, x, pivmin):
    """Number of eigenvalues of the symmetric tridiagonal (d, e) below ``x``.

    ``e2`` holds the squared off-diagonal.  Pivots smaller than ``pivmin`` in
    magnitude are replaced by ``-pivmin``.
    """
    n = len(d)
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def bisect_eigenvalues(d, e, indices, rtol, lower, upper):
    """Eigenvalues with 0-based ascending ``indices`` by Sturm bisection.

    ``[lower, upper]`` must enclose the spectrum.  Each value is refined until
    the bracket is below ``rtol`` relative (with an absolute floor of a few
    ulps of the spectral radius).
    """
    d = [float(v) for v in d]
    e2 = [float(v) * float(v) for v in e]
    pivmin = _SAFEMIN * max(1.0, max(e2, default=1.0))
    atol = 4.0 * 2.220446049250313e-16 * max(abs(lower), abs(upper), _SAFEMIN)
    return _bisect(lambda x: sturm_count(d, e2, x, pivmin), indices, rtol, lower, upper, atol)


def slope_count(mu, c, b, x, pivmin):
    """Eigenvalues below ``x`` of the pencil of a second-difference operator.

    The pencil is ``A y = lam B y`` with ``y_0 = y_n = 0`` and
    ``(A y)_j = -(y_{j+1}-y_j)/mu_j + (y_j-y_{j-1})/mu_{j-1} - c_j y_j`` and
    ``B = diag(b)``.  Shooting in slope form counts sign changes of ``y``
    without forming ``1/mu`` sized diagonal entries, so the count is accurate
    on fine grids where the plain pivot recurrence cancels.  ``mu`` has one
    more entry than ``c`` and ``b``.
    """
    count = 0
    ratio = 1.0 / mu[0]
    for j in range(len(b)):
        w = ratio - c[j] - x * b[j]
        t = 1.0 + mu[j + 1] * w
        if abs(t) < pivmin:
            t = -pivmin
        if t < 0:
            count += 1
        ratio = w / t
    return count


def _bisect(count, indices, rtol, lower, upper, atol):
    out = np.empty(len(indices))
    for m, k in enumerate(indices):
        lo, hi = lower, upper
        for _ in range(256):
            if hi - lo <= max(rtol * max(abs(lo), abs(hi)), atol):
                break
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if count(mid) > k:
                hi = mid
            else:
                lo = mid
        out[m] = 0.5 * (lo + hi)
    return out


def bisect_slope(mu, c, b, indices, rtol, lower, upper):
    """Like :func:`bisect_eigenvalues` for the pencil of :func:`slope_count`.

    The slope-form count stays accurate far below ``eps`` times the spectral
    radius, so the absolute floor is ``rtol`` rather than a few ulps of it.
    """
    mu = [float(v) for v in mu]
    c = [float(v) for v in c]
    b = [float(v) for v in b]
    return _bisect(lambda x: slope_count(mu, c, b, x, _SAFEMIN), indices, rtol, lower, upper, rtol)


def gtsv(dl, d, du, b):
    """Solve a general tridiagonal system with partial pivoting in place.

    ``dl``, ``d``, ``du`` are the sub-, main and super-diagonals (lengths
    n-1, n, n-1); ``b`` is an (n, m) right-hand side overwritten with the
    solution.  Returns ``(info, min_pivot)`` where ``info`` is 0 on success or
    the 1-based row of an exactly zero pivot.
    """
    n = len(d)
    m = b.shape[1]
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if d[i] == 0.0:
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
        return n, 0.0
    pmin = math.inf
    for i in range(n):
        if abs(d[i]) < pmin:
            pmin = abs(d[i])
    for j in range(m):
        b[n - 1, j] /= d[n - 1]
        if n > 1:
            b[n - 2, j] = (b[n - 2, j] - du[n - 2] * b[n - 1, j]) / d[n - 2]
        for i in range(n - 3, -1, -1):
            b[i, j] = (b[i, j] - du[i] * b[i + 1, j] - dl[i] * b[i + 2, j]) / d[i]
    return 0, pmin
