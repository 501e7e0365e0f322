"""Finite time scales and exact delta calculus on them.

A :class:`TimeScale` is a strictly increasing grid ``t_0 < ... < t_N`` built
from interval blocks (sampled uniformly) and blocks of isolated points.  All
jump-operator arithmetic works on point *indices*; timestamps are only looked
up, never compared for equality.

On the literal grid every point except the maximum is right-scattered, so the
delta derivative is the forward quotient and the delta integral is the
graininess-weighted left sum.  Both are exact time-scale operations for the
finite scale; the continuum picture of an interval block is recovered as the
sampling step goes to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateScale, InvalidSpec

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[a, b]`` sampled with a step of at most ``h``."""

    a: float
    b: float
    h: float

    def sample(self) -> np.ndarray:
        if not (math.isfinite(self.a) and math.isfinite(self.b) and math.isfinite(self.h)):
            raise InvalidSpec(f"non-finite interval bounds {self!r}")
        if not self.a < self.b:
            raise InvalidSpec(f"interval needs a < b, got a={self.a}, b={self.b}")
        if not self.h > 0:
            raise InvalidSpec(f"interval step must be positive, got h={self.h}")
        n = math.ceil((self.b - self.a) / self.h)
        # guard against ceil(1.0000000000000002)
        if n > 1 and math.isclose((self.b - self.a) / (n - 1), self.h, rel_tol=1e-12):
            n -= 1
        n = max(n, 1)
        pts = self.a + (self.b - self.a) * np.arange(n + 1) / n
        pts[-1] = self.b
        return pts

    @property
    def lo(self):
        return self.a

    @property
    def hi(self):
        return self.b


@dataclass(frozen=True)
class Points:
    """A block of isolated points."""

    values: tuple

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    def sample(self) -> np.ndarray:
        if not self.values:
            raise InvalidSpec("points block is empty")
        if not all(math.isfinite(v) for v in self.values):
            raise InvalidSpec("points block contains non-finite values")
        return np.sort(np.asarray(self.values, dtype=float))

    @property
    def lo(self):
        return min(self.values)

    @property
    def hi(self):
        return max(self.values)


Block = Union[Interval, Points]


@dataclass(frozen=True)
class PointClass:
    right_dense: bool
    left_dense: bool

    def __str__(self):
        right = "right-dense" if self.right_dense else "right-scattered"
        left = "left-dense" if self.left_dense else "left-scattered"
        return f"{right}|{left}"


@dataclass(frozen=True, eq=False)
class TimeScale:
    """Strictly increasing finite grid with block provenance.

    ``block_index[i]`` is the block the point ``points[i]`` came from and
    ``dense_mask[i]`` is true when that block is an interval.
    """

    points: np.ndarray
    blocks: tuple
    block_index: np.ndarray
    dense_mask: np.ndarray
    _mu: np.ndarray = field(repr=False)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Block]) -> "TimeScale":
        return build(blocks)

    @classmethod
    def from_points(cls, values) -> "TimeScale":
        return build([Points(values)])

    def __len__(self):
        return len(self.points)

    @property
    def N(self) -> int:
        """Index of the maximum point; the grid has ``N + 1`` points."""
        return len(self.points) - 1

    @property
    def a(self) -> float:
        return float(self.points[0])

    @property
    def b(self) -> float:
        return float(self.points[-1])

    @property
    def graininess(self) -> np.ndarray:
        """``mu`` at every point, zero at the maximum."""
        return self._mu

    def _check(self, i):
        if not isinstance(i, (int, np.integer)) or not 0 <= i <= self.N:
            raise IndexError(f"point index {i!r} out of range 0..{self.N}")
        return int(i)

    def sigma(self, i: int) -> int:
        i = self._check(i)
        return i + 1 if i < self.N else self.N

    def rho(self, i: int) -> int:
        i = self._check(i)
        return i - 1 if i > 0 else 0

    def mu(self, i: int) -> float:
        i = self._check(i)
        return float(self.points[self.sigma(i)] - self.points[i])

    def classify(self, i: int) -> dict:
        """Literal (grid gap) and idealized (block-based) point classes."""
        i = self._check(i)
        literal = PointClass(right_dense=i == self.N, left_dense=i == 0)
        t = self.points[i]
        right_dense = i == self.N
        left_dense = i == 0
        for blk in self.blocks:
            if isinstance(blk, Interval) and blk.a - MERGE_TOL <= t <= blk.b + MERGE_TOL:
                right_dense |= t < blk.b - MERGE_TOL
                left_dense |= t > blk.a + MERGE_TOL
        return {"literal": literal, "idealized": PointClass(right_dense, left_dense)}

    def kappa(self, order: int = 1) -> range:
        """Index range of ``T^kappa`` (order 1) or ``T^{kappa^2}`` (order 2)."""
        if order < 0:
            raise ValueError("order must be non-negative")
        if self.N - order < 0:
            raise DegenerateScale(
                f"T^kappa^{order} is empty on a scale with {len(self)} points"
            )
        return range(0, self.N + 1 - order)

    def function(self, f) -> "GridFunction":
        """Sample ``f`` (callable of an array, or array of values) on the grid."""
        values = f(self.points) if callable(f) else f
        return GridFunction(self, values)

    def __eq__(self, other):
        return isinstance(other, TimeScale) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())


def build(blocks: Sequence[Block]) -> TimeScale:
    """Sample and merge ``blocks`` into a :class:`TimeScale`."""
    if not blocks:
        raise InvalidSpec("a time scale needs at least one block")
    raw = [blk.sample() for blk in blocks]  # validates every block
    order = sorted(range(len(blocks)), key=lambda k: (raw[k][0], raw[k][-1]))
    ordered = [blocks[k] for k in order]
    samples = [raw[k] for k in order]
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt.lo < prev.hi - MERGE_TOL:
            raise InvalidSpec(f"overlapping blocks {prev!r} and {nxt!r}")

    pts, owner = [], []
    for k, s in enumerate(samples):
        for t in s:
            if pts and t - pts[-1] <= MERGE_TOL:
                continue  # earlier block keeps the point
            pts.append(float(t))
            owner.append(k)
    if len(pts) < 2:
        raise InvalidSpec(f"time scale needs at least 2 distinct points, got {len(pts)}")

    points = np.array(pts)
    owner = np.array(owner, dtype=np.intp)
    dense = np.array([isinstance(ordered[k], Interval) for k in owner])
    mu = np.zeros_like(points)
    mu[:-1] = np.diff(points)
    for arr in (points, owner, dense, mu):
        arr.flags.writeable = False
    return TimeScale(points, tuple(ordered), owner, dense, mu)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values on ``scale``; ``drop`` trailing points are excluded.

    ``drop=0`` is a function on all of T, ``drop=1`` on ``T^kappa`` and so on.
    """

    scale: TimeScale
    values: np.ndarray
    drop: int = 0

    __array_ufunc__ = None  # numpy scalars defer to our operators

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) != len(self.scale) - self.drop:
            raise ValueError(
                f"expected {len(self.scale) - self.drop} values, got shape {vals.shape}"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def t(self) -> np.ndarray:
        return self.scale.points[: len(self.values)]

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def shifted(self) -> "GridFunction":
        """``f^sigma`` on ``T^kappa`` (``f`` composed with the forward jump)."""
        return GridFunction(self.scale, self.values[1:], self.drop + 1)

    def _binary(self, other, op):
        if isinstance(other, GridFunction):
            if other.scale is not self.scale and other.scale != self.scale:
                raise ValueError("grid functions live on different scales")
            n = min(len(self), len(other))
            return GridFunction(
                self.scale, op(self.values[:n], other.values[:n]), max(self.drop, other.drop)
            )
        return GridFunction(self.scale, op(self.values, other), self.drop)

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.scale, -self.values, self.drop)


def sigma(ts: TimeScale, i: int) -> int:
    return ts.sigma(i)


def rho(ts: TimeScale, i: int) -> int:
    return ts.rho(i)


def mu(ts: TimeScale, i: int) -> float:
    return ts.mu(i)


def classify(ts: TimeScale, i: int) -> dict:
    return ts.classify(i)


def kappa(ts: TimeScale, order: int = 1) -> range:
    return ts.kappa(order)


def delta_derivative(f: GridFunction) -> GridFunction:
    """Forward quotient ``(f(sigma(t)) - f(t)) / mu(t)`` on one fewer point."""
    ts = f.scale
    n = len(f) - 1
    if n < 1:
        raise DegenerateScale("delta derivative needs at least two points")
    d = np.diff(f.values) / ts.graininess[:n]
    return GridFunction(ts, d, f.drop + 1)


def delta_integral(f: GridFunction, start: int = 0, stop: int | None = None) -> float:
    """``int_{t_start}^{t_stop} f Delta t`` as the sum of ``mu(i) f_i``."""
    ts = f.scale
    stop = ts.N if stop is None else stop
    if not (0 <= start <= ts.N and 0 <= stop <= ts.N):
        raise IndexError(f"integration bounds {start}..{stop} outside 0..{ts.N}")
    if start > stop:
        raise IndexError("integration bounds must satisfy start <= stop")
    if stop > len(f):
        raise IndexError(f"integrand defined on {len(f)} points, cannot reach index {stop}")
    return float(np.dot(ts.graininess[start:stop], f.values[start:stop]))


def cumulative_integral(f: GridFunction) -> GridFunction:
    """Running integral ``F_j = sum_{i<j} mu(i) f_i`` with ``F_0 = 0``.

    ``f`` only needs to be defined on ``T^kappa``; the result always lives on
    the whole scale.
    """
    ts = f.scale
    if len(f) < ts.N:
        raise ValueError("cumulative integral needs f on T^kappa at least")
    out = np.zeros(len(ts))
    np.cumsum(ts.graininess[: ts.N] * f.values[: ts.N], out=out[1:])
    return GridFunction(ts, out)
