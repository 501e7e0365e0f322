"""Isoperimetric problems on finite time scales.

The discretized problem is

    minimize (or maximize)  J(y) = sum_i mu_i L(t_i, y_{i+1}, (y_{i+1}-y_i)/mu_i)
    subject to              I(y) = sum_i mu_i g(t_i, y_{i+1}, (y_{i+1}-y_i)/mu_i) = l,
                            y_0 = y_a, y_N = y_b,

which is the continuous problem evaluated exactly on the grid: the ``x`` slot
of the integrand receives ``y^sigma`` and the ``v`` slot the forward quotient.

:func:`solve_iso` runs damped Newton on the bordered KKT system for the
interior values and the multiplier.  The gradient row for ``y_j`` equals
``-mu(t_{j-1})`` times the Euler-Lagrange residual at ``t_{j-1}``, so a
converged run certifies the Euler-Lagrange equation on ``T^{kappa^2}`` up to
``tol / min(mu)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import DegenerateScale, DomainError, InvalidSpec
from .expr import Const, Expr, as_expr, simplify
from .kernels import SingularMatrix, tridiag_solve
from .timescale import GridFunction, TimeScale, cumulative_integral

log = logging.getLogger(__name__)

STATUSES = ("converged", "max_iter", "singular", "domain_error")
_ARMIJO = 1e-4
_MAX_HALVINGS = 20
_DENSE_FALLBACK_MAX = 2000


@dataclass(frozen=True)
class IsoProblem:
    """Fixed-endpoint isoperimetric problem on a finite time scale."""

    scale: TimeScale
    lagrangian: Expr
    constraint: Expr
    ya: float
    yb: float
    level: float
    sense: str = "min"

    def __post_init__(self):
        object.__setattr__(self, "lagrangian", as_expr(self.lagrangian))
        object.__setattr__(self, "constraint", as_expr(self.constraint))
        if len(self.scale) < 3:
            raise DegenerateScale("an isoperimetric problem needs a scale with at least 3 points")
        if self.sense not in ("min", "max"):
            raise InvalidSpec(f"sense must be 'min' or 'max', got {self.sense!r}")
        for name in ("ya", "yb", "level"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise InvalidSpec(f"{name} must be finite")
            object.__setattr__(self, name, val)

    def linear_guess(self) -> np.ndarray:
        t = self.scale.points
        return self.ya + (self.yb - self.ya) * (t - t[0]) / (t[-1] - t[0])


class ExtremalCheck(NamedTuple):
    flag: bool
    deviation: float


@dataclass
class SolveReport:
    y: GridFunction
    lam: float
    objective: float
    constraint_value: float
    kkt_residual_norm: float
    el_residual_max: float
    dr_deviation: float
    extremal_of_I_deviation: float
    iterations: int
    status: str
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "lambda": self.lam,
            "objective": self.objective,
            "constraint_value": self.constraint_value,
            "kkt_residual_norm": self.kkt_residual_norm,
            "el_residual_max": self.el_residual_max,
            "dr_deviation": self.dr_deviation,
            "extremal_of_I_deviation": self.extremal_of_I_deviation,
            "iterations": self.iterations,
            "message": self.message,
            "t": self.y.scale.points.tolist(),
            "y": self.y.values.tolist(),
        }


def _nodes(scale: TimeScale, y):
    """Arguments ``(t_i, y^sigma(t_i), y^Delta(t_i))`` for i in T^kappa."""
    y = np.asarray(y.values if isinstance(y, GridFunction) else y, dtype=float)
    if len(y) != len(scale):
        raise ValueError(f"trajectory has {len(y)} values, scale has {len(scale)} points")
    mu = scale.graininess[:-1]
    return scale.points[:-1], y[1:], np.diff(y) / mu


def _eval_nodes(e: Expr, args, what="integrand"):
    vals = e.eval(*args)
    bad = np.isnan(vals)
    if np.any(bad):
        raise DomainError(f"{what} {e} undefined", int(np.argmax(bad)))
    return vals


def eval_functional(integrand, scale: TimeScale, y) -> float:
    """``int_a^b integrand(t, y^sigma, y^Delta) Delta t`` on the grid."""
    e = as_expr(integrand)
    args = _nodes(scale, y)
    return float(np.dot(scale.graininess[:-1], _eval_nodes(e, args)))


def _multiplier_form(problem: IsoProblem, lam: float) -> Expr:
    return simplify(problem.lagrangian - Const(float(lam)) * problem.constraint)


def _first_integral(integrand: Expr, scale: TimeScale, y) -> np.ndarray:
    """``f_v(t) - int_a^t f_x Delta tau`` on T^kappa."""
    args = _nodes(scale, y)
    fv = _eval_nodes(integrand.diff("v"), args, "partial")
    fx = _eval_nodes(integrand.diff("x"), args, "partial")
    running = cumulative_integral(GridFunction(scale, fx, drop=1)).values
    return fv - running[:-1]


def el_residual(problem: IsoProblem, y, lam: float) -> GridFunction:
    """Euler-Lagrange residual ``F_v^Delta - F_x`` on T^{kappa^2}, F = L - lam g."""
    F = _multiplier_form(problem, lam)
    scale = problem.scale
    args = _nodes(scale, y)
    fv = _eval_nodes(F.diff("v"), args, "partial")
    fx = _eval_nodes(F.diff("x"), args, "partial")
    mu = scale.graininess[:-2]
    return GridFunction(scale, np.diff(fv) / mu - fx[:-1], drop=2)


def dr_deviation(problem: IsoProblem, y, lam: float) -> float:
    """Spread (max - min) of the DuBois-Reymond first integral of F = L - lam g."""
    e = _first_integral(_multiplier_form(problem, lam), problem.scale, y)
    return float(e.max() - e.min())


def is_extremal_of_I(problem: IsoProblem, y, tol: float = 1e-10) -> ExtremalCheck:
    """Whether ``y`` is an extremal of the constraint functional (abnormal case)."""
    e = _first_integral(problem.constraint, problem.scale, y)
    dev = float(e.max() - e.min())
    return ExtremalCheck(dev <= tol, dev)


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 60
    init: str = "linear"
    init_values: np.ndarray | None = None
    lambda0: float = 0.0
    retry: bool = True


class _Partials:
    """First and second partials of an integrand, evaluated on the grid."""

    def __init__(self, e: Expr):
        self.f = e
        self.fx = e.diff("x")
        self.fv = e.diff("v")
        self.fxx = self.fx.diff("x")
        self.fxv = self.fx.diff("v")
        self.fvv = self.fv.diff("v")

    def first(self, args):
        return self.f.eval(*args), self.fx.eval(*args), self.fv.eval(*args)

    def second(self, args):
        return self.fxx.eval(*args), self.fxv.eval(*args), self.fvv.eval(*args)


class IsoSolver:
    """Damped Newton on the bordered KKT system of one :class:`IsoProblem`.

    The solver keeps mutable work arrays; use one instance per concurrent solve.
    """

    def __init__(self, problem: IsoProblem):
        self.problem = problem
        self.sign = 1.0 if problem.sense == "min" else -1.0
        L = problem.lagrangian if self.sign > 0 else simplify(-problem.lagrangian)
        self.L = _Partials(L)
        self.g = _Partials(problem.constraint)
        scale = problem.scale
        self.mu = np.array(scale.graininess[:-1])
        self.t = np.array(scale.points[:-1])
        self.y = np.empty(len(scale))

    def _args(self, y):
        return self.t, y[1:], np.diff(y) / self.mu

    def gradients(self, y):
        """``(J, I, dJ/dy_j, dI/dy_j)`` for interior j, with the internal L."""
        args = self._args(y)
        mu = self.mu
        out = []
        for part in (self.L, self.g):
            f, fx, fv = part.first(args)
            total = float(np.dot(mu, f))
            grad = mu[:-1] * fx[:-1] + fv[:-1] - fv[1:]
            out.append((total, grad))
        (J, dJ), (I, dI) = out
        return J, I, dJ, dI

    def residual(self, y, lam):
        J, I, dJ, dI = self.gradients(y)
        r = np.empty(len(dJ) + 1)
        r[:-1] = dJ - lam * dI
        r[-1] = I - self.problem.level
        return r, dI, J, I

    def hessian(self, y, lam):
        """Tridiagonal Hessian of ``J - lam I`` in the interior values."""
        args = self._args(y)
        Lxx, Lxv, Lvv = self.L.second(args)
        gxx, gxv, gvv = self.g.second(args)
        mu = self.mu
        fxx, fxv, fvv = Lxx - lam * gxx, Lxv - lam * gxv, Lvv - lam * gvv
        # term i couples y_i (a) and y_{i+1} (b)
        h_bb = mu * fxx + 2.0 * fxv + fvv / mu
        h_ab = -fxv - fvv / mu
        h_aa = fvv / mu
        diag = h_bb[:-1] + h_aa[1:]
        off = h_ab[1:-1]
        return diag, off

    def newton_step(self, y, lam, r, c):
        """Solve ``[[H, -c], [c^T, 0]] [dy; dlam] = -r``; None if singular."""
        diag, off = self.hessian(y, lam)
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
            return None
        rhs = np.column_stack([c, r[:-1]])
        try:
            z = tridiag_solve(off, diag, off, rhs)
        except SingularMatrix:
            return self._dense_step(diag, off, r, c)
        z1, z2 = z[:, 0], z[:, 1]
        s = float(np.dot(c, z1))
        if abs(s) <= 1e-13 * np.linalg.norm(c) * np.linalg.norm(z1) or s == 0.0:
            return None
        dlam = (float(np.dot(c, z2)) - r[-1]) / s
        return dlam * z1 - z2, dlam

    def _dense_step(self, diag, off, r, c):
        n = len(diag)
        if n + 1 > _DENSE_FALLBACK_MAX:
            return None
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        K[:n, n] = -c
        K[n, :n] = c
        if np.linalg.cond(K) > 1e13:
            return None
        sol = np.linalg.solve(K, -r)
        return sol[:-1], float(sol[-1])

    def _run(self, y0, lam0, opts: SolverOptions):
        p = self.problem
        y = self.y
        y[:] = y0
        y[0], y[-1] = p.ya, p.yb
        lam = lam0
        tol = opts.tol
        with np.errstate(all="ignore"):
            r, c, J, I = self.residual(y, lam)
        if not (np.all(np.isfinite(r)) and np.isfinite(J)):
            return "domain_error", y.copy(), lam, 0, float(np.linalg.norm(r)), "integrand undefined at the initial trajectory"
        norm = float(np.linalg.norm(r))
        for it in range(opts.max_iter + 1):
            unorm = np.hypot(np.linalg.norm(y[1:-1]), lam)
            if norm <= tol * (1.0 + unorm) and abs(I - p.level) <= tol * (1.0 + abs(p.level)):
                return "converged", y.copy(), lam, it, norm, ""
            if it == opts.max_iter:
                break
            with np.errstate(all="ignore"):
                step = self.newton_step(y, lam, r, c)
            if step is None:
                hint = " (Hessian of L - lambda g vanishes; try a nonzero lambda0)" if it == 0 else ""
                return "singular", y.copy(), lam, it, norm, "KKT matrix is singular" + hint
            dy, dlam = step
            alpha = 1.0
            for _ in range(_MAX_HALVINGS + 1):
                trial = y.copy()
                trial[1:-1] += alpha * dy
                tlam = lam + alpha * dlam
                with np.errstate(all="ignore"):
                    tr, tc, tJ, tI = self.residual(trial, tlam)
                tnorm = float(np.linalg.norm(tr))
                if np.isfinite(tnorm) and np.isfinite(tJ) and tnorm**2 <= (1.0 - 2.0 * _ARMIJO * alpha) * norm**2:
                    break
                alpha *= 0.5
            else:
                return "max_iter", y.copy(), lam, it, norm, "line search failed to reduce the KKT residual"
            y[:] = trial
            lam, r, c, I, norm = tlam, tr, tc, tI, tnorm
            log.debug("iter %d |R|=%.3e alpha=%g lambda=%.6g", it + 1, norm, alpha, lam)
        return "max_iter", y.copy(), lam, opts.max_iter, norm, f"no convergence in {opts.max_iter} iterations"

    def solve(self, opts: SolverOptions | None = None) -> SolveReport:
        opts = opts or SolverOptions()
        p = self.problem
        if opts.init == "linear":
            y0 = p.linear_guess()
        elif opts.init in ("given", "values"):
            if opts.init_values is None:
                raise InvalidSpec("init='values' needs init_values")
            y0 = np.asarray(opts.init_values, dtype=float)
            if y0.shape != (len(p.scale),):
                raise InvalidSpec(f"init_values must have {len(p.scale)} entries")
        else:
            raise InvalidSpec(f"unknown init {opts.init!r}")
        lam0 = self.sign * opts.lambda0

        status, y, lam, iters, norm, msg = self._run(y0, lam0, opts)
        if status in ("singular", "max_iter") and opts.retry:
            t = p.scale.points
            bump = 4.0 * (t - t[0]) * (t[-1] - t) / (t[-1] - t[0]) ** 2
            amp = 1e-2 * (1.0 + abs(p.yb - p.ya))
            log.info("first attempt ended with %s; retrying with a perturbed start", status)
            status2, y2, lam2, iters2, norm2, msg2 = self._run(y0 + amp * bump, lam0, opts)
            iters += iters2
            if status2 == "converged" or status == "max_iter":
                status, y, lam, norm, msg = status2, y2, lam2, norm2, msg2
        return self._report(y, self.sign * lam, norm, iters, status, msg, opts.tol)

    def _report(self, y, lam, norm, iters, status, msg, tol):
        p = self.problem
        traj = GridFunction(p.scale, y)
        nan = float("nan")
        with np.errstate(all="ignore"):
            try:
                objective = eval_functional(p.lagrangian, p.scale, traj)
                cval = eval_functional(p.constraint, p.scale, traj)
            except DomainError:
                objective = cval = nan
            try:
                el = float(np.max(np.abs(el_residual(p, traj, lam).values)))
                dr = dr_deviation(p, traj, lam)
            except DomainError:
                el = dr = nan
            try:
                ext = is_extremal_of_I(p, traj, tol).deviation
            except DomainError:
                ext = nan
        if status == "converged" and ext <= tol:
            status = "singular"
            msg = "solution is an extremal of the constraint functional"
        if status == "singular" and ext <= tol:
            note = f"abnormal problem: trajectory is an extremal of I (deviation {ext:.3g})"
            msg = f"{note}; {msg}" if msg and "extremal" not in msg else note
        return SolveReport(traj, lam, objective, cval, norm, el, dr, ext, iters, status, msg)


def solve_iso(problem: IsoProblem, opts: SolverOptions | None = None, **kwargs) -> SolveReport:
    """Solve ``problem`` for the trajectory and Lagrange multiplier.

    Keyword arguments override fields of :class:`SolverOptions`.
    """
    opts = replace(opts or SolverOptions(), **kwargs)
    return IsoSolver(problem).solve(opts)
