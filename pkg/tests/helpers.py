"""Random generators shared by the test modules."""
import math

import numpy as np

from tsvar.expr import Binary, Const, Unary, Var
from tsvar.timescale import Interval, Points, build


def random_blocks(rng, min_points=3, max_points=200):
    """Left-to-right mix of interval and point blocks with separating gaps."""
    while True:
        nblocks = int(rng.integers(1, 5))
        t = float(rng.uniform(-5, 5))
        blocks = []
        for _ in range(nblocks):
            if rng.random() < 0.6:
                length = float(rng.uniform(0.2, 3.0))
                n = int(rng.integers(1, max(2, max_points // nblocks)))
                blocks.append(Interval(t, t + length, length / n))
                t += length
            else:
                k = int(rng.integers(1, 6))
                gaps = rng.uniform(0.05, 1.0, size=k)
                vals = t + np.cumsum(gaps)
                blocks.append(Points(vals.tolist()))
                t = float(vals[-1])
            t += float(rng.uniform(0.05, 1.5))
        try:
            ts = build(blocks)
        except Exception:
            continue
        if min_points <= len(ts) <= max_points:
            return blocks, ts


def random_scale(rng, min_points=3, max_points=200):
    return random_blocks(rng, min_points, max_points)[1]


def random_grid_function(rng, t):
    """Polynomial or trigonometric function sampled at ``t``."""
    if rng.random() < 0.5:
        coef = rng.uniform(-2, 2, size=int(rng.integers(1, 5)))
        return np.polyval(coef, t / 5.0)
    a, b, c = rng.uniform(-2, 2), rng.uniform(-3, 3), rng.uniform(-math.pi, math.pi)
    return a * np.sin(b * t + c) + rng.uniform(-1, 1)


_SAFE_UNARY = ("sin", "cos", "atan", "exp_small", "log_pos", "sqrt_pos", "tan_small")


def random_expr(rng, depth=3, variables=("t", "x", "v")):
    """Random smooth expression that is defined for |t|, |x|, |v| <= 1."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.3:
            return Const(float(np.round(rng.uniform(-2, 2), 3)))
        return Var(str(rng.choice(variables)))
    kind = rng.random()
    if kind < 0.35:
        op = str(rng.choice(_SAFE_UNARY))
        arg = random_expr(rng, depth - 1, variables)
        if op == "exp_small":
            return Unary("exp", Unary("sin", arg))
        if op == "log_pos":
            return Unary("log", Const(1.5) + Unary("sin", arg))
        if op == "sqrt_pos":
            return Unary("sqrt", Const(1.0) + arg * arg)
        if op == "tan_small":
            return Unary("tan", Const(0.5) * Unary("sin", arg))
        return Unary(op, arg)
    left = random_expr(rng, depth - 1, variables)
    right = random_expr(rng, depth - 1, variables)
    op = str(rng.choice(["add", "sub", "mul", "div", "pow", "neg"]))
    if op == "div":
        return Binary("div", left, Const(2.0) + Unary("cos", right))
    if op == "pow":
        if rng.random() < 0.5:
            return Binary("pow", left, Const(float(rng.integers(0, 4))))
        # positive base, variable exponent
        return Binary("pow", Const(1.5) + Unary("sin", left), Unary("cos", right))
    if op == "neg":
        return Unary("neg", left)
    return Binary(op, left, right)


def random_env(rng):
    return {k: float(rng.uniform(-1, 1)) for k in ("t", "x", "v")}


def rel_close(a, b, rtol, scale=None):
    """``|a - b| <= rtol * max(1, |a|, |b|, scale)`` elementwise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ref = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    if scale is not None:
        ref = np.maximum(ref, scale)
    return bool(np.all(np.abs(a - b) <= rtol * ref))
