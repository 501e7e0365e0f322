"""Tridiagonal linear algebra on top of a swappable kernel backend.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
pure-Python ``_pykernels`` module is used.  ``BACKEND`` names the active one
and :func:`use_backend` switches explicitly (tests and the benchmark run both).
"""
from __future__ import annotations

import numpy as np

from . import _pykernels
from .errors import NumericalFailure

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

BACKEND = "cython" if _ckernels is not None else "python"
_impl = _BACKENDS[BACKEND]

EIG_RTOL = 1e-13


class SingularMatrix(NumericalFailure):
    """A tridiagonal factorization met a zero pivot."""


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name: str):
    """Select the kernel backend by name; returns the previous name."""
    global BACKEND, _impl
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    prev = BACKEND
    BACKEND, _impl = name, _BACKENDS[name]
    return prev


def get_backend(name: str | None = None):
    return _impl if name is None else _BACKENDS[name]


def tridiag_solve(lower, diag, upper, rhs, rcond=1e-14):
    """Solve ``T x = rhs`` for general tridiagonal ``T`` (partial pivoting).

    ``rhs`` may be 1-D or 2-D.  Raises :class:`SingularMatrix` when a pivot is
    zero or smaller than ``rcond`` times the largest entry of ``T``.
    """
    diag = np.array(diag, dtype=float)
    n = len(diag)
    dl = np.array(lower, dtype=float).reshape(n - 1)
    du = np.array(upper, dtype=float).reshape(n - 1)
    rhs = np.asarray(rhs, dtype=float)
    b = np.array(rhs.reshape(n, -1), dtype=float, order="C")
    tmax = max(np.abs(diag).max(initial=0.0), np.abs(dl).max(initial=0.0),
               np.abs(du).max(initial=0.0))
    info, pmin = _impl.gtsv(dl, diag, du, b)
    if info or pmin <= rcond * tmax:
        raise SingularMatrix(f"tridiagonal matrix is singular to working precision (row {info})")
    return b.reshape(rhs.shape)


def gershgorin(d, e):
    d = np.asarray(d, dtype=float)
    r = np.zeros_like(d)
    if len(e):
        ae = np.abs(e)
        r[:-1] += ae
        r[1:] += ae
    lo, hi = float(np.min(d - r)), float(np.max(d + r))
    pad = 2.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0)
    return lo - pad, hi + pad


def tridiag_eigvalsh(d, e, indices=None, rtol=EIG_RTOL):
    """Selected ascending eigenvalues of the symmetric tridiagonal (d, e)."""
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    if indices is None:
        indices = np.arange(len(d))
    lo, hi = gershgorin(d, e)
    return _impl.bisect_eigenvalues(d, e, np.asarray(indices, dtype=np.intp), rtol, lo, hi)


def difference_pencil_eigvalsh(mu, c, indices, lower, upper, rtol=EIG_RTOL):
    """Selected eigenvalues of the second-difference pencil on a grid.

    ``mu`` are the N gaps of the grid, ``c`` the N-1 interior potential terms;
    the mass matrix is ``diag(mu[:-1])``.  ``[lower, upper]`` must enclose the
    spectrum.  See ``_pykernels.slope_count`` for the operator.
    """
    mu = np.ascontiguousarray(mu, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    b = np.ascontiguousarray(mu[:-1])
    idx = np.asarray(indices, dtype=np.intp)
    return _impl.bisect_slope(mu, c, b, idx, rtol, lower, upper)


def tridiag_eigvec(d, e, lam, previous=(), max_iter=5, tol=None):
    """Unit eigenvector of the symmetric tridiagonal (d, e) for eigenvalue ``lam``.

    Inverse iteration on ``T - lam I`` from a fixed start vector.  Vectors in
    ``previous`` (unit eigenvectors of nearby eigenvalues) are projected out
    after every solve.
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    n = len(d)
    if n == 1:
        return np.ones(1)
    norm_t = max(np.abs(d).max() + 2 * np.abs(e).max(initial=0.0), np.finfo(float).tiny)
    eps = np.finfo(float).eps
    if tol is None:
        tol = 8 * n * eps * norm_t + 2 * EIG_RTOL * abs(lam)
    # a shift exactly at an eigenvalue makes the factorization singular
    shift = lam + eps * norm_t
    z = 1.0 + 0.1 * np.cos(np.arange(n) * 1.7)
    z /= np.linalg.norm(z)
    for _ in range(max_iter):
        try:
            w = tridiag_solve(e, d - shift, e, z, rcond=0.0)
        except SingularMatrix:
            shift += 4 * eps * norm_t
            continue
        for p in previous:
            w -= np.dot(p, w) * p
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            break
        z = w / nw
        resid = d * z - lam * z
        resid[:-1] += e * z[1:]
        resid[1:] += e * z[:-1]
        if np.linalg.norm(resid) <= tol:
            return z
    raise NumericalFailure(f"inverse iteration stagnated for eigenvalue {lam!r}")
