"""Dirichlet Sturm-Liouville eigenproblems on finite time scales.

The problem ``y^{Delta Delta}(t) + q(t) y^sigma(t) + lam y^sigma(t) = 0`` on
``T^{kappa^2}`` with ``y(a) = y(b) = 0`` is the stationarity condition of

    J(y) = int ((y^Delta)^2 - q (y^sigma)^2) Delta t   subject to
    I(y) = int (y^sigma)^2 Delta t = 1.

On the interior values both functionals are quadratic forms, ``J = y'Ay``
with ``A`` symmetric tridiagonal and ``I = y'By`` with ``B`` diagonal, so the
eigenproblem is the generalized pencil ``A y = lam B y``.  Scaling by
``B^{-1/2}`` keeps it tridiagonal.  Eigenvalues come from Sturm-count
bisection, with the count taken by shooting in slope form (same inertia as
the scaled matrix, without its ``1/mu^2`` cancellation); eigenvectors come
from inverse iteration on the scaled matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DegenerateScale, DomainError, InvalidSpec, NumericalFailure
from .expr import Expr, Var, as_expr
from .timescale import GridFunction, TimeScale, delta_derivative
from .variational import eval_functional

CLUSTER_GAP = 1e-12


@dataclass(frozen=True)
class SLProblem:
    scale: TimeScale
    q: Expr
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "q", as_expr(self.q))
        if len(self.scale) < 3:
            raise DegenerateScale("a Sturm-Liouville problem needs at least 3 points")
        if not self.q.variables <= {"t"}:
            raise InvalidSpec(f"q may only depend on t, got variables {sorted(self.q.variables)}")
        ndof = len(self.scale) - 2
        if not 1 <= self.k <= ndof:
            raise InvalidSpec(f"k must be between 1 and {ndof}, got {self.k}")

    @property
    def rayleigh_integrand(self) -> Expr:
        """``v^2 - q(t) x^2``, the integrand of J."""
        x, v = Var("x"), Var("v")
        return v**2 - self.q * x**2


@dataclass(frozen=True)
class QuadraticForms:
    """``J(y) = y'Ay`` and ``I(y) = y'By`` on the interior values y_1..y_{N-1}."""

    a_diag: np.ndarray
    a_off: np.ndarray
    b_diag: np.ndarray

    def dense(self):
        A = np.diag(self.a_diag) + np.diag(self.a_off, 1) + np.diag(self.a_off, -1)
        return A, np.diag(self.b_diag)

    def energy(self, y):
        """``y'Ay`` for interior vectors (rows of a 2-D array are separate vectors)."""
        y = np.asarray(y, dtype=float)
        out = self.a_diag * y * y
        out[..., :-1] += 2.0 * self.a_off * y[..., :-1] * y[..., 1:]
        return out.sum(axis=-1)

    def mass(self, y):
        y = np.asarray(y, dtype=float)
        return (self.b_diag * y * y).sum(axis=-1)


def _potential(p: SLProblem) -> np.ndarray:
    """q sampled at the left point of every gap."""
    t = p.scale.points[:-1]
    q = np.broadcast_to(p.q.eval(t=t), t.shape)
    if np.any(np.isnan(q)):
        raise DomainError(f"q = {p.q} undefined", int(np.argmax(np.isnan(q))))
    return q


def assemble(p: SLProblem) -> QuadraticForms:
    mu = p.scale.graininess[:-1]
    q = _potential(p)
    inv = 1.0 / mu
    # interior value y_j (j = 1..N-1) enters terms j-1 and j
    a_diag = inv[:-1] + inv[1:] - mu[:-1] * q[:-1]
    a_off = -inv[1:-1]
    return QuadraticForms(a_diag, a_off, mu[:-1].copy())


class EigenResult(NamedTuple):
    lambdas: np.ndarray
    eigenfunctions: list
    rayleigh: np.ndarray
    residual_max: np.ndarray
    normalization: np.ndarray
    clusters: list

    def as_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "rayleigh": self.rayleigh.tolist(),
            "residual_max": self.residual_max.tolist(),
        }


def _scaled_tridiagonal(forms: QuadraticForms):
    s = 1.0 / np.sqrt(forms.b_diag)
    return forms.a_diag * s * s, forms.a_off * s[:-1] * s[1:], s


def solve_eigs(p: SLProblem) -> EigenResult:
    forms = assemble(p)
    d, e, s = _scaled_tridiagonal(forms)
    # bisect in slope form: counting on C directly loses eps*|C| ~ eps/mu^2
    mu = p.scale.graininess[:-1]
    lo, hi = kernels.gershgorin(d, e)
    lambdas = kernels.difference_pencil_eigvalsh(mu, mu[:-1] * _potential(p)[:-1],
                                                 np.arange(p.k), lo, hi)
    norm_c = float(np.abs(d).max() + 2.0 * np.abs(e).max(initial=0.0))
    scale = p.scale
    integrand = p.rayleigh_integrand
    vectors, funcs = [], []
    rayleigh = np.empty(p.k)
    resid = np.empty(p.k)
    norms = np.empty(p.k)
    for k, lam in enumerate(lambdas):
        near = [z for z, mu_ in zip(vectors, lambdas) if abs(mu_ - lam) <= 1e-3 * norm_c]
        try:
            z = kernels.tridiag_eigvec(d, e, lam, previous=near)
        except NumericalFailure as exc:
            raise NumericalFailure(f"eigenvector {k + 1}: {exc}") from exc
        vectors.append(z)
        interior = z * s
        big = np.abs(interior) > 1e-8 * np.abs(interior).max()
        if interior[np.argmax(big)] < 0:
            interior = -interior
        y = np.concatenate(([0.0], interior, [0.0]))
        y /= np.sqrt(np.dot(scale.graininess[:-1], y[1:] ** 2))
        f = GridFunction(scale, y)
        funcs.append(f)
        norms[k] = np.dot(scale.graininess[:-1], y[1:] ** 2)
        rayleigh[k] = eval_functional(integrand, scale, f)
        resid[k] = residual_check(p, f, lam)
    return EigenResult(lambdas, funcs, rayleigh, resid, norms, _clusters(lambdas))


def _clusters(lambdas):
    groups, current = [], [0]
    for k in range(1, len(lambdas)):
        if lambdas[k] - lambdas[k - 1] < CLUSTER_GAP * (1.0 + abs(lambdas[k])):
            current.append(k)
        else:
            groups.append(current)
            current = [k]
    groups.append(current)
    return [g for g in groups if len(g) > 1]


def residual_check(p: SLProblem, y: GridFunction, lam: float) -> float:
    """Max over T^{kappa^2} of |y^{Delta Delta} + (q + lam) y^sigma|."""
    if len(y) != len(p.scale):
        raise ValueError("y must be given on every point, boundary zeros included")
    ydd = delta_derivative(delta_derivative(y)).values
    t = p.scale.points[: len(ydd)]
    q = np.broadcast_to(p.q.eval(t=t), t.shape)
    if np.any(np.isnan(q)):
        raise DomainError(f"q = {p.q} undefined", int(np.argmax(np.isnan(q))))
    ysig = y.values[1 : len(ydd) + 1]
    return float(np.max(np.abs(ydd + (q + lam) * ysig)))


class RayleighCheck(NamedTuple):
    lambda1: float
    rayleigh_first: float
    rayleigh_min: float
    normalization: float
    trials: int
    trial_min: float
    match: bool


def verify_rayleigh_minimum(p: SLProblem, trials: int = 1000, seed: int = 0,
                    tol: float = 1e-10) -> RayleighCheck:
    """Check that the first eigenvalue is the constrained minimum of J.

    ``J(y_1)`` is evaluated independently through :func:`eval_functional`.
    Half of the ``trials`` random admissible functions are generic, half are
    small perturbations of ``y_1``; after normalization to ``I = 1`` none may
    go below ``lambda_1``.
    """
    res = solve_eigs(p)
    lam1 = float(res.lambdas[0])
    forms = assemble(p)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((trials, len(forms.b_diag)))
    y1 = res.eigenfunctions[0].values[1:-1]
    half = trials // 2
    z[half:] = y1 + 1e-3 * z[half:] / np.sqrt(len(y1))
    z /= np.sqrt(forms.mass(z))[:, None]
    trial_vals = forms.energy(z)
    basis_vals = [eval_functional(p.rayleigh_integrand, p.scale, f) for f in res.eigenfunctions]
    trial_min = float(trial_vals.min()) if trials else float("inf")
    rmin = min(min(basis_vals), trial_min)
    j1 = basis_vals[0]
    norm1 = float(res.normalization[0])
    match = (
        abs(j1 - lam1) <= tol * (1.0 + abs(lam1))
        and abs(norm1 - 1.0) <= 1e-12
        and rmin >= lam1 - tol
    )
    return RayleighCheck(lam1, j1, rmin, norm1, trials, trial_min, bool(match))
