"""Scalar expressions in ``t``, ``x`` and ``v``.

Lagrangians and constraint integrands are written as plain strings such as
``"x - 0.5*sqrt(1+v^2)"``, where ``x`` stands for ``y^sigma`` and ``v`` for
``y^Delta``.  This module parses them into immutable trees, evaluates them on
numpy arrays and differentiates them symbolically.

Grammar (whitespace is insignificant)::

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := unary ("^" factor)?          # right associative
    unary   := "-" unary | primary
    primary := number | "t" | "x" | "v" | func "(" expr ")" | "(" expr ")"

Note that unary minus binds tighter than ``^``, so ``-x^2`` is ``(-x)^2``.

Evaluation never raises on domain violations: log of a non-positive number,
sqrt of a negative one, division by zero and overflow all produce NaN, and
:meth:`Expr.eval_checked` turns those into :class:`~tsvar.errors.EvalDomain`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvalDomain, ParseError

VARIABLES = ("t", "x", "v")
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "atan")

Number = Union[float, np.ndarray]


class Expr:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    # -- construction helpers -------------------------------------------
    def __add__(self, other):
        return Binary("add", self, _lift(other))

    def __radd__(self, other):
        return Binary("add", _lift(other), self)

    def __sub__(self, other):
        return Binary("sub", self, _lift(other))

    def __rsub__(self, other):
        return Binary("sub", _lift(other), self)

    def __mul__(self, other):
        return Binary("mul", self, _lift(other))

    def __rmul__(self, other):
        return Binary("mul", _lift(other), self)

    def __truediv__(self, other):
        return Binary("div", self, _lift(other))

    def __rtruediv__(self, other):
        return Binary("div", _lift(other), self)

    def __pow__(self, other):
        return Binary("pow", self, _lift(other))

    def __neg__(self):
        return Unary("neg", self)

    # -- queries --------------------------------------------------------
    @property
    def variables(self) -> frozenset:
        raise NotImplementedError

    def eval(self, t: Number = 0.0, x: Number = 0.0, v: Number = 0.0) -> Number:
        """Evaluate at scalars or broadcastable arrays; NaN marks domain errors."""
        with np.errstate(all="ignore"):
            out = self._eval(t, x, v)
        shape = np.broadcast(t, x, v).shape
        if not shape:
            return float(out)
        return np.array(np.broadcast_to(out, shape), dtype=float)

    def eval_checked(self, t: Number = 0.0, x: Number = 0.0, v: Number = 0.0) -> Number:
        """Like :meth:`eval` but raise :class:`EvalDomain` on any NaN."""
        out = self.eval(t, x, v)
        bad = np.isnan(out)
        if np.any(bad):
            where = "" if np.ndim(out) == 0 else f" at element {int(np.argmax(bad))}"
            raise EvalDomain(f"{self} is undefined{where}")
        return out

    def _eval(self, t, x, v):
        raise NotImplementedError

    def diff(self, var: str) -> "Expr":
        """Exact partial derivative with respect to ``var``, simplified."""
        if var not in VARIABLES:
            raise ValueError(f"unknown variable {var!r}")
        return simplify(self._diff(var))

    def _diff(self, var):
        raise NotImplementedError

    def __str__(self):
        return self._fmt()

    def _fmt(self):
        raise NotImplementedError


def _lift(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(float(value))


def _finite(a):
    # domain violations and overflow are reported uniformly as NaN
    return np.where(np.isfinite(a), a, np.nan) if np.ndim(a) else (a if math.isfinite(a) else math.nan)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    @property
    def variables(self):
        return frozenset()

    def _eval(self, t, x, v):
        return self.value

    def _diff(self, var):
        return ZERO

    def _fmt(self):
        val = self.value
        if val.is_integer() and abs(val) < 1e15:
            return str(int(val))
        return repr(val)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")

    @property
    def variables(self):
        return frozenset((self.name,))

    def _eval(self, t, x, v):
        return {"t": t, "x": x, "v": v}[self.name]

    def _diff(self, var):
        return ONE if var == self.name else ZERO

    def _fmt(self):
        return self.name


_UNARY_EVAL = {
    "neg": np.negative,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": lambda a: np.log(np.where(np.asarray(a) > 0, a, np.nan)),
    "sqrt": np.sqrt,
    "atan": np.arctan,
}


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr

    def __post_init__(self):
        if self.op not in _UNARY_EVAL:
            raise ValueError(f"unknown unary operator {self.op!r}")

    @property
    def variables(self):
        return self.arg.variables

    def _eval(self, t, x, v):
        return _finite(_UNARY_EVAL[self.op](self.arg._eval(t, x, v)))

    def _diff(self, var):
        u, du = self.arg, self.arg._diff(var)
        op = self.op
        if op == "neg":
            return -du
        if op == "sin":
            outer = Unary("cos", u)
        elif op == "cos":
            outer = -Unary("sin", u)
        elif op == "tan":
            outer = ONE / Unary("cos", u) ** TWO
        elif op == "exp":
            outer = self
        elif op == "log":
            return du / u
        elif op == "sqrt":
            return du / (TWO * self)
        else:  # atan
            return du / (ONE + u ** TWO)
        return outer * du

    def _fmt(self):
        if self.op == "neg":
            inner = self.arg._fmt()
            if isinstance(self.arg, Binary):
                inner = f"({inner})"
            return f"-{inner}"
        return f"{self.op}({self.arg._fmt()})"


_BINARY_EVAL = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
    "pow": np.power,
}
_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 3}
_SYMBOL = {"add": " + ", "sub": " - ", "mul": "*", "div": "/", "pow": "^"}


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in _BINARY_EVAL:
            raise ValueError(f"unknown binary operator {self.op!r}")

    @property
    def variables(self):
        return self.left.variables | self.right.variables

    def _eval(self, t, x, v):
        a = self.left._eval(t, x, v)
        b = self.right._eval(t, x, v)
        if self.op == "pow":
            a = np.asarray(a, dtype=float)
        return _finite(_BINARY_EVAL[self.op](a, b))

    def _diff(self, var):
        f, g = self.left, self.right
        op = self.op
        if op in ("add", "sub"):
            return Binary(op, f._diff(var), g._diff(var))
        if op == "mul":
            return f._diff(var) * g + f * g._diff(var)
        if op == "div":
            return (f._diff(var) * g - f * g._diff(var)) / g ** TWO
        # pow
        if not g.variables:
            c = simplify(g)
            return c * f ** simplify(c - ONE) * f._diff(var)
        if not f.variables:
            return self * Unary("log", f) * g._diff(var)
        return Unary("exp", Unary("log", f) * g)._diff(var)

    def _fmt(self):
        prec = _PREC[self.op]
        left, right = self.left._fmt(), self.right._fmt()
        if self.op == "pow":
            if isinstance(self.left, Binary):
                left = f"({left})"
            if isinstance(self.right, Binary) and self.right.op != "pow":
                right = f"({right})"
        else:
            if isinstance(self.left, Binary) and _PREC[self.left.op] < prec:
                left = f"({left})"
            if isinstance(self.right, Binary) and _PREC[self.right.op] <= prec:
                right = f"({right})"
        return f"{left}{_SYMBOL[self.op]}{right}"


ZERO = Const(0.0)
ONE = Const(1.0)
TWO = Const(2.0)


# -- simplification ------------------------------------------------------

def _is(e, value):
    return isinstance(e, Const) and e.value == value


def simplify(e: Expr) -> Expr:
    """Constant folding and removal of neutral elements (bottom-up)."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Unary):
        a = simplify(e.arg)
        if e.op == "neg":
            if isinstance(a, Unary) and a.op == "neg":
                return a.arg
            if isinstance(a, Const):
                return Const(-a.value)
        node = Unary(e.op, a)
        return _fold(node) if isinstance(a, Const) else node
    a, b = simplify(e.left), simplify(e.right)
    op = e.op
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(Binary(op, a, b))
        if isinstance(folded, Const):
            return folded
    if op == "add":
        if _is(a, 0.0):
            return b
        if _is(b, 0.0):
            return a
    elif op == "sub":
        if _is(b, 0.0):
            return a
        if _is(a, 0.0):
            return simplify(Unary("neg", b))
    elif op == "mul":
        if _is(a, 0.0) or _is(b, 0.0):
            return ZERO
        if _is(a, 1.0):
            return b
        if _is(b, 1.0):
            return a
    elif op == "div":
        if _is(b, 1.0):
            return a
        if _is(a, 0.0):
            return ZERO
    elif op == "pow":
        if _is(b, 1.0):
            return a
        if _is(b, 0.0):
            return ONE
    return Binary(op, a, b)


def _fold(node: Expr) -> Expr:
    val = node.eval()
    if math.isfinite(val):
        return Const(val)
    return node


# -- parsing -------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


def _byte_offset(src, pos):
    return len(src[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, _byte_offset(self.src, tok[2]))

    def expect(self, text):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != text:
            self.fail(f"expected {text!r}" + (f", found {tok[1]!r}" if tok[1] else ", found end of input"))
        return self.take()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(f"unexpected trailing {tok[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = "add" if self.take()[1] == "+" else "sub"
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = "mul" if self.take()[1] == "*" else "div"
            node = Binary(op, node, self.factor())
        return node

    def factor(self):
        base = self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("pow", base, self.factor())
        return base

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Unary("neg", self.unary())
        return self.primary()

    def primary(self):
        tok = self.peek()
        kind, text, _ = tok
        if kind == "num":
            self.take()
            return Const(float(text))
        if kind == "name":
            self.take()
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            self.fail(f"unknown identifier {text!r}", tok)
        if kind == "op" and text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected {text!r}")


def parse(src: str) -> Expr:
    """Parse ``src`` into an :class:`Expr`; raises :class:`ParseError`."""
    if not isinstance(src, str) or not src.strip():
        raise ParseError("empty expression", 0)
    return _Parser(src).parse()


def evaluate(e: Expr, env: dict) -> Number:
    return e.eval(env.get("t", 0.0), env.get("x", 0.0), env.get("v", 0.0))


def diff(e: Expr, var: str) -> Expr:
    return e.diff(var)


def as_expr(src) -> Expr:
    """Accept either an :class:`Expr` or its source text."""
    return src if isinstance(src, Expr) else parse(src)
