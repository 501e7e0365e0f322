import numpy as np
import pytest
from hypothesis import given, strategies as st

from tsvar.errors import DegenerateScale, InvalidSpec
from tsvar.timescale import (GridFunction, Interval, Points, build, cumulative_integral,
                             delta_derivative, delta_integral)


@st.composite
def scales(draw, min_size=3, max_size=60):
    vals = draw(st.lists(st.floats(-100, 100, allow_nan=False), min_size=min_size,
                         max_size=max_size, unique=True))
    vals = np.unique(np.round(np.array(vals), 6))
    if len(vals) < min_size:
        vals = np.concatenate([vals, vals.max() + np.arange(1, min_size + 1)])
    return Points(vals.tolist()), build([Points(vals.tolist())])


@st.composite
def scale_and_functions(draw):
    _, ts = draw(scales())
    n = len(ts)
    elems = st.floats(-1e3, 1e3, allow_nan=False)
    f = draw(st.lists(elems, min_size=n, max_size=n))
    g = draw(st.lists(elems, min_size=n, max_size=n))
    return ts, GridFunction(ts, f), GridFunction(ts, g)


GAPPED = build([Interval(0, 1, 0.5), Interval(2, 3, 0.5)])
SMALL = build([Points([0, 1, 3])])


class TestBuild:
    def test_interval_and_points(self):
        ts = build([Interval(0, 1, 0.5), Points([2, 2.5, 3])])
        np.testing.assert_array_equal(ts.points, [0, 0.5, 1, 2, 2.5, 3])

    def test_step_adjusted_to_hit_endpoint(self):
        ts = build([Interval(0, 1, 0.3)])
        np.testing.assert_allclose(ts.points, [0, 0.25, 0.5, 0.75, 1], rtol=0, atol=1e-15)
        assert ts.points[-1] == 1.0

    def test_merged_duplicate_leaves_one_point(self):
        with pytest.raises(InvalidSpec):
            build([Points([1]), Points([1 + 1e-15])])

    def test_touching_intervals_merge(self):
        ts = build([Interval(0, 1, 0.5), Interval(1, 2, 0.5)])
        np.testing.assert_array_equal(ts.points, [0, 0.5, 1, 1.5, 2])
        assert ts.block_index[2] == 0  # earlier block keeps the shared point

    def test_overlap_rejected(self):
        with pytest.raises(InvalidSpec):
            build([Interval(0, 2, 0.5), Points([1.5, 3])])

    @pytest.mark.parametrize("blk", [Interval(1, 1, 0.1), Interval(0, 1, 0), Points([])])
    def test_bad_blocks(self, blk):
        with pytest.raises(InvalidSpec):
            build([blk, Points([5, 6])])

    def test_block_order_is_irrelevant(self):
        a = build([Points([5, 6]), Interval(0, 1, 0.5)])
        b = build([Interval(0, 1, 0.5), Points([5, 6])])
        assert a == b

    def test_immutable(self):
        with pytest.raises(ValueError):
            GAPPED.points[0] = 7.0


class TestJumps:
    def test_sigma(self):
        i1 = int(np.flatnonzero(GAPPED.points == 1)[0])
        assert GAPPED.points[GAPPED.sigma(i1)] == 2
        assert GAPPED.sigma(GAPPED.N) == GAPPED.N
        assert SMALL.sigma(0) == 1

    def test_rho(self):
        assert SMALL.points[SMALL.rho(2)] == 1
        assert SMALL.rho(0) == 0
        ts = build([Points([0, 0.5, 1, 2])])
        assert ts.points[ts.rho(3)] == 1

    def test_mu(self):
        i1 = int(np.flatnonzero(GAPPED.points == 1)[0])
        assert GAPPED.mu(i1) == 1.0
        assert GAPPED.mu(1) == 0.5
        assert GAPPED.mu(GAPPED.N) == 0.0

    @pytest.mark.parametrize("i", [-1, 3, 2.0])
    def test_bad_index(self, i):
        with pytest.raises(IndexError):
            SMALL.sigma(i)
        with pytest.raises(IndexError):
            SMALL.mu(i)

    def test_kappa(self):
        assert list(SMALL.kappa()) == [0, 1]
        assert list(SMALL.kappa(2)) == [0]
        five = build([Interval(0, 1, 0.25)])
        assert len(five.kappa()) == 4 and len(five.kappa(2)) == 3
        with pytest.raises(DegenerateScale):
            build([Points([0, 1])]).kappa(2)


class TestClassify:
    def test_interval_end_before_gap(self):
        cls = GAPPED.classify(2)  # t = 1
        assert not cls["idealized"].right_dense and cls["idealized"].left_dense

    def test_interval_interior(self):
        cls = GAPPED.classify(1)  # t = 0.5
        assert cls["idealized"].right_dense and cls["idealized"].left_dense
        assert not cls["literal"].right_dense and not cls["literal"].left_dense

    def test_isolated_points(self):
        cls = SMALL.classify(1)
        assert cls["literal"] == cls["idealized"]
        assert not cls["literal"].right_dense and not cls["literal"].left_dense

    def test_interval_start_after_gap(self):
        cls = GAPPED.classify(3)  # t = 2
        assert cls["idealized"].right_dense and not cls["idealized"].left_dense

    def test_extremes_follow_jump_conventions(self):
        assert SMALL.classify(SMALL.N)["literal"].right_dense
        assert SMALL.classify(0)["literal"].left_dense


class TestCalculus:
    def test_derivative_at_scattered_point(self):
        f = GAPPED.function(lambda t: t**2)
        i1 = int(np.flatnonzero(GAPPED.points == 1)[0])
        assert delta_derivative(f)[i1] == 3.0

    def test_derivative_small_grid(self):
        d = delta_derivative(SMALL.function(lambda t: t**2))
        np.testing.assert_array_equal(d.values, [1, 4])
        assert d.drop == 1

    def test_derivative_of_constant(self):
        d = delta_derivative(GAPPED.function(np.full(len(GAPPED), 3.7)))
        assert np.all(d.values == 0)

    def test_integral(self):
        f = SMALL.function(lambda t: t**2)
        assert delta_integral(f) == 2.0
        assert delta_integral(f, 1, 1) == 0.0
        with pytest.raises(IndexError):
            delta_integral(f, 2, 1)

    def test_single_step_integral(self):
        f = GAPPED.function(np.sin)
        for i in range(GAPPED.N):
            assert delta_integral(f, i, GAPPED.sigma(i)) == GAPPED.mu(i) * f[i]

    def test_cumulative(self):
        F = cumulative_integral(SMALL.function(lambda t: t**2))
        np.testing.assert_array_equal(F.values, [0, 0, 2])
        F1 = cumulative_integral(SMALL.function(np.ones(3)))
        np.testing.assert_array_equal(F1.values, [0, 1, 3])

    def test_derivative_converges_on_interval(self):
        # forward quotient is first order at idealized dense points
        errs = []
        for h in (0.1, 0.05, 0.025):
            ts = build([Interval(0, 1, h)])
            d = delta_derivative(ts.function(np.sin))
            errs.append(np.max(np.abs(d.values - np.cos(d.t))))
        assert errs[0] / errs[1] == pytest.approx(2, rel=0.1)
        assert errs[1] / errs[2] == pytest.approx(2, rel=0.1)


@given(scale_and_functions())
def test_jump_transfer_identity(data):
    ts, f, _ = data
    d = delta_derivative(f)
    lhs = f.values[1:]
    rhs = f.values[:-1] + ts.graininess[:-1] * d.values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(f.values).max()))


@given(scale_and_functions())
def test_integration_by_parts(data):
    ts, f, g = data
    mu = ts.graininess[:-1]
    fd, gd = delta_derivative(f).values, delta_derivative(g).values
    fv, gv = f.values, g.values
    boundary = fv[-1] * gv[-1] - fv[0] * gv[0]
    # first form: f^sigma g^Delta, second: f g^Delta
    t1 = mu * fv[1:] * gd
    t2 = mu * fd * gv[:-1]
    scale = np.abs(t1).sum() + np.abs(t2).sum() + abs(boundary)
    assert abs(t1.sum() - (boundary - t2.sum())) <= 1e-12 * (1 + scale)
    t3 = mu * fv[:-1] * gd
    t4 = mu * fd * gv[1:]
    scale = np.abs(t3).sum() + np.abs(t4).sum() + abs(boundary)
    assert abs(t3.sum() - (boundary - t4.sum())) <= 1e-12 * (1 + scale)


@given(scale_and_functions(), st.data())
def test_integral_additive_and_linear(data, draw):
    ts, f, g = data
    a = draw.draw(st.integers(0, ts.N))
    b = draw.draw(st.integers(a, ts.N))
    c = draw.draw(st.integers(b, ts.N))
    scale = np.dot(ts.graininess, np.abs(f.values)) + 1
    assert abs(delta_integral(f, a, c) - delta_integral(f, a, b) - delta_integral(f, b, c)) <= 1e-12 * scale
    combo = 2.5 * f - g
    lin = 2.5 * delta_integral(f) - delta_integral(g)
    scale2 = np.dot(ts.graininess, 2.5 * np.abs(f.values) + np.abs(g.values)) + 1
    assert abs(delta_integral(combo) - lin) <= 1e-12 * scale2
    dd = delta_derivative(combo).values
    ref = 2.5 * delta_derivative(f).values - delta_derivative(g).values
    np.testing.assert_allclose(dd, ref, rtol=1e-9, atol=1e-9 * (1 + np.abs(ref).max()))


@given(scales())
def test_jump_operator_properties(data):
    _, ts = data
    for i in range(1, ts.N):
        assert ts.sigma(ts.rho(i)) == i and ts.rho(ts.sigma(i)) == i
    sig = [ts.sigma(i) for i in range(len(ts))]
    assert sig == sorted(sig)
    assert np.all(ts.graininess[:-1] > 0) and ts.graininess[-1] == 0


@given(scale_and_functions())
def test_cumulative_matches_full_integral(data):
    _, f, _ = data
    assert cumulative_integral(f).values[-1] == pytest.approx(delta_integral(f), rel=1e-12, abs=1e-9)


@given(scales(), st.lists(st.booleans(), min_size=200, max_size=200), st.floats(-5, 5))
def test_vanishing_shift_forces_zero_after_start(data, zeros, f0):
    _, ts = data
    n = len(ts)
    vals = np.where(np.array(zeros[:n]), 0.0, 1.0)
    vals[0] = f0
    f = GridFunction(ts, vals)
    if np.all(f.shifted().values == 0):
        assert np.all(f.values[1:] == 0)
    else:
        assert np.any(f.values[1:] != 0)


def test_numpy_scalar_keeps_grid_function():
    f = SMALL.function(np.ones(3))
    assert isinstance(np.float64(2.0) * f, GridFunction)
    assert isinstance(f + np.float64(1.0), GridFunction)
