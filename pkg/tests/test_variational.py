import math

import numpy as np
import pytest

from helpers import random_scale
from tsvar.errors import DegenerateScale, DomainError, InvalidSpec
from tsvar.expr import parse
from tsvar.timescale import GridFunction, Interval, Points, build, cumulative_integral
from tsvar.variational import (IsoProblem, IsoSolver, dr_deviation, el_residual,
                               eval_functional, is_extremal_of_I, solve_iso)

SEMICIRCLE = dict(lagrangian="x", constraint="sqrt(1+v^2)", ya=0.0, yb=0.0, level=math.pi,
                  sense="max")


def semicircle(h):
    return IsoProblem(build([Interval(-1, 1, h)]), **SEMICIRCLE)


# smooth problems with nonzero second partials, used for identities
SMOOTH = [("v^2 + x^2", "x"), ("sqrt(1+v^2)*(2+sin(t))", "x*cos(t)"),
          ("exp(0.3*x)*v^2 + t*x", "x^2 + 0.1*v^2"), ("atan(v) + x^3", "sin(x) + v")]


class TestFunctional:
    def test_constant_function(self):
        ts = build([Points([0, 1, 3])])
        assert eval_functional("x", ts, [5, 5, 5]) == 15.0

    def test_telescoping(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            ts = random_scale(rng)
            y = rng.normal(size=len(ts))
            assert eval_functional("v", ts, y) == pytest.approx(y[-1] - y[0], abs=1e-11)

    def test_two_unit_steps(self):
        ts = build([Points([-1, 0, 1])])
        assert eval_functional("sqrt(1+v^2)", ts, [0, 1, 0]) == pytest.approx(2 * math.sqrt(2), rel=1e-15)

    def test_x_slot_receives_forward_value(self):
        ts = build([Points([0, 1, 3])])
        assert eval_functional("x", ts, [100, 1, 2]) == 1 * 1 + 2 * 2

    def test_domain_error_carries_index(self):
        ts = build([Points([0, 1, 2, 3])])
        with pytest.raises(DomainError) as info:
            eval_functional("log(x)", ts, [1, 1, -1, 1])
        assert info.value.index == 1


class TestResiduals:
    def test_straight_line(self):
        rng = np.random.default_rng(1)
        ts = random_scale(rng)
        p = IsoProblem(ts, "v^2", "x", 1.0, 3.0, 0.0)
        y = p.linear_guess()
        assert np.max(np.abs(el_residual(p, y, 0.0).values)) <= 1e-10
        assert dr_deviation(p, y, 0.0) <= 1e-10

    def test_residual_domain(self):
        ts = build([Interval(0, 1, 0.25)])
        p = IsoProblem(ts, "v^2", "x", 0.0, 0.0, 0.0)
        assert len(el_residual(p, np.zeros(5), 0.0)) == 3

    def test_random_trajectory_is_not_extremal(self):
        rng = np.random.default_rng(2)
        for L, g in SMOOTH:
            ts = random_scale(rng, 5, 50)
            p = IsoProblem(ts, L, g, 0.0, 0.0, 0.0)
            assert dr_deviation(p, 0.3 * rng.normal(size=len(ts)), 0.7) > 0

    def test_dr_bounded_by_el_sum(self):
        # E_{i+1} - E_i = mu_i R_i exactly, so the spread is at most sum mu |R|
        rng = np.random.default_rng(3)
        for L, g in SMOOTH:
            ts = random_scale(rng, 5, 80)
            p = IsoProblem(ts, L, g, 0.0, 0.0, 0.0)
            y = 0.3 * rng.normal(size=len(ts))
            R = el_residual(p, y, 0.4).values
            bound = np.dot(ts.graininess[:-2], np.abs(R))
            assert dr_deviation(p, y, 0.4) <= bound * (1 + 1e-12) + 1e-12


class TestExtremalOfI:
    def test_v_constraint_always_extremal(self):
        ts = build([Interval(0, 2, 0.1)])
        p = IsoProblem(ts, "v^2", "v", 0.0, 1.0, 1.0)
        chk = is_extremal_of_I(p, np.random.default_rng(0).normal(size=len(ts)))
        assert chk.flag and chk.deviation == 0.0

    def test_length_on_segment(self):
        ts = build([Interval(-1, 1, 0.1)])
        p = IsoProblem(ts, "x", "sqrt(1+v^2)", 0.0, 0.0, 2.0)
        assert is_extremal_of_I(p, np.zeros(len(ts))).flag

    def test_area_constraint_is_not(self):
        ts = build([Points([0, 0.5, 2, 3])])
        p = IsoProblem(ts, "v^2", "x", 0.0, 0.0, 0.0)
        chk = is_extremal_of_I(p, np.array([0.0, 1.0, 2.0, 0.0]))
        assert not chk.flag
        assert chk.deviation == pytest.approx(2.0)  # E^g_i = -(t_i - a) on T^kappa


class TestGradients:
    def test_kkt_el_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            for L, g in SMOOTH:
                ts = random_scale(rng, 4, 60)
                p = IsoProblem(ts, L, g, 0.1, -0.2, 0.0)
                y = 0.5 * rng.normal(size=len(ts))
                lam = float(rng.normal())
                _, _, dJ, dI = IsoSolver(p).gradients(y)
                lhs = dJ - lam * dI
                rhs = -ts.graininess[:-2] * el_residual(p, y, lam).values
                scale = np.maximum(np.abs(lhs), 1.0)
                assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale * 10)

    def test_gradient_against_finite_differences(self):
        rng = np.random.default_rng(5)
        for L, g in SMOOTH:
            ts = random_scale(rng, 4, 20)
            p = IsoProblem(ts, L, g, 0.0, 0.0, 0.0)
            s = IsoSolver(p)
            y = 0.5 * rng.normal(size=len(ts))
            _, _, dJ, dI = s.gradients(y)
            for j in range(1, len(ts) - 1):
                h = 1e-6
                yp, ym = y.copy(), y.copy()
                yp[j] += h
                ym[j] -= h
                for f, grad in ((L, dJ), (g, dI)):
                    fd = (eval_functional(f, ts, yp) - eval_functional(f, ts, ym)) / (2 * h)
                    assert grad[j - 1] == pytest.approx(fd, rel=1e-5, abs=1e-6)

    def test_hessian_against_finite_differences(self):
        rng = np.random.default_rng(6)
        for L, g in SMOOTH:
            ts = random_scale(rng, 5, 15)
            p = IsoProblem(ts, L, g, 0.0, 0.0, 0.0)
            s = IsoSolver(p)
            y = 0.5 * rng.normal(size=len(ts))
            lam = 0.3
            diag, off = s.hessian(y, lam)
            H = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
            h = 1e-6
            n = len(ts) - 2
            fd = np.empty((n, n))
            for j in range(n):
                yp, ym = y.copy(), y.copy()
                yp[j + 1] += h
                ym[j + 1] -= h
                gp = s.residual(yp, lam)[0][:-1]
                gm = s.residual(ym, lam)[0][:-1]
                fd[:, j] = (gp - gm) / (2 * h)
            np.testing.assert_allclose(H, fd, rtol=1e-5, atol=1e-5 * np.abs(H).max())


class TestSolve:
    def test_zero_solution(self):
        ts = build([Interval(0, 1, 0.2), Points([1.5, 2.5])])
        r = solve_iso(IsoProblem(ts, "v^2", "x", 0.0, 0.0, 0.0))
        assert r.converged
        assert np.all(np.abs(r.y.values) <= 1e-12) and abs(r.lam) <= 1e-12
        assert abs(r.objective) <= 1e-20

    def test_semicircle(self):
        r = solve_iso(semicircle(0.01), lambda0=1.0)
        assert r.converged
        assert abs(r.objective - math.pi / 2) <= 0.02
        assert r.el_residual_max <= 0.05 and r.dr_deviation <= 0.05
        assert abs(r.constraint_value - math.pi) <= 1e-10 * (1 + math.pi)
        assert r.lam == pytest.approx(1.0, abs=0.02)  # radius of the arc

    def test_semicircle_without_lambda0_is_singular(self):
        # L = x is linear, so at lambda = 0 the Hessian is identically zero
        r = solve_iso(semicircle(0.05), retry=False)
        assert r.status == "singular" and "lambda0" in r.message

    def test_refinement(self):
        errs = []
        for h in (0.1, 0.05, 0.025, 0.0125):
            r = solve_iso(semicircle(h), lambda0=1.0)
            assert r.converged
            errs.append(abs(r.objective - math.pi / 2))
        assert all(b < a * 1.1 for a, b in zip(errs, errs[1:]))

    def test_converged_invariants(self):
        rng = np.random.default_rng(7)
        tol = 1e-10
        for L, g, lev in [("v^2", "x", 1.0), ("v^2 + x^2", "x^2", 2.0),
                          ("v^2*(2+sin(t))", "x", -0.5)]:
            ts = random_scale(rng, 5, 60)
            p = IsoProblem(ts, L, g, 0.2, -0.1, lev)
            r = solve_iso(p, tol=tol)
            assert r.converged, r.message
            assert abs(r.constraint_value - lev) <= tol * (1 + abs(lev))
            mu_min = ts.graininess[:-1].min()
            unorm = math.hypot(np.linalg.norm(r.y.values[1:-1]), r.lam)
            assert r.el_residual_max <= tol * (1 + unorm) / mu_min
            assert r.dr_deviation <= 10 * tol * len(ts) * (1 + unorm)

    def test_max_equals_min_of_negated(self):
        ts = build([Interval(-1, 1, 0.05)])
        a = solve_iso(IsoProblem(ts, "x", "sqrt(1+v^2)", 0, 0, 2.5, "max"), lambda0=1.0)
        b = solve_iso(IsoProblem(ts, "-x", "sqrt(1+v^2)", 0, 0, 2.5, "min"), lambda0=-1.0)
        assert a.converged and b.converged
        np.testing.assert_array_equal(a.y.values, b.y.values)
        assert a.lam == -b.lam

    def test_abnormal(self):
        ts = build([Interval(0, 1, 0.1)])
        r = solve_iso(IsoProblem(ts, "v^2", "v", 0.0, 2.0, 2.0))
        assert r.status == "singular"
        assert r.extremal_of_I_deviation <= 1e-10
        assert "extremal of I" in r.message

    def test_domain_error_at_start(self):
        ts = build([Interval(0, 1, 0.25)])
        r = solve_iso(IsoProblem(ts, "log(x)", "x", -1.0, -1.0, 0.0))
        assert r.status == "domain_error"

    def test_given_init(self):
        ts = build([Interval(0, 1, 0.1)])
        p = IsoProblem(ts, "v^2", "x", 0.0, 0.0, 0.1)
        ref = solve_iso(p)
        r = solve_iso(p, init="values", init_values=ref.y.values)
        assert r.converged and r.iterations <= 1
        with pytest.raises(InvalidSpec):
            solve_iso(p, init="values", init_values=np.zeros(3))

    def test_report_dict(self):
        ts = build([Interval(0, 1, 0.25)])
        d = solve_iso(IsoProblem(ts, "v^2", "x", 0.0, 0.0, 0.0)).as_dict()
        assert list(d)[:3] == ["status", "lambda", "objective"]
        assert len(d["t"]) == len(d["y"]) == 5


def test_problem_validation():
    with pytest.raises(DegenerateScale):
        IsoProblem(build([Points([0, 1])]), "v^2", "x", 0, 0, 0)
    ts = build([Points([0, 1, 2])])
    with pytest.raises(InvalidSpec):
        IsoProblem(ts, "v^2", "x", 0, 0, 0, sense="sideways")
    with pytest.raises(InvalidSpec):
        IsoProblem(ts, "v^2", "x", 0, float("nan"), 0)


def test_dr_uses_cumulative_integral():
    ts = build([Points([0, 1, 3, 4])])
    p = IsoProblem(ts, "x^2", "x", 0.0, 0.0, 0.0)
    y = np.array([0.0, 1.0, 2.0, 0.0])
    # F = x^2: F_v = 0, E_i = -cumint(2 x^sigma)
    fx = GridFunction(ts, 2 * y[1:], drop=1)
    e = -cumulative_integral(fx).values[:-1]
    assert dr_deviation(p, y, 0.0) == pytest.approx(e.max() - e.min())
    assert parse("x^2").diff("v").eval(x=1.0) == 0.0
