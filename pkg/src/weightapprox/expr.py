"""A tiny expression language in ``x`` with symbolic differentiation.

Grammar (lowest to highest precedence, binary operators left associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] INTEGER)*
    atom   := NUMBER | 'x' | NAME '(' expr ')' | '(' expr ')'

with ``NAME`` one of sin, cos, exp, sqrt, abs, atan, log1p.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError, NonDifferentiable, UnknownFunction

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "atan": np.arctan,
    "log1p": np.log1p,
}


class Expr:
    """Base class of the AST nodes; nodes are immutable and compare structurally."""

    prec = 5

    def __call__(self, x, strict=True):
        return evaluate(self, x, strict)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    pass


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr
    prec = 3


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr
    prec = 1
    op = "+"


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr
    prec = 1
    op = "-"


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr
    prec = 2
    op = "*"


@dataclass(frozen=True, eq=True)
class Div(Expr):
    left: Expr
    right: Expr
    prec = 2
    op = "/"


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: int
    prec = 4


@dataclass(frozen=True, eq=True)
class Call(Expr):
    fn: str
    arg: Expr


X = Var()

# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(src):
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            break  # trailing whitespace
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            toks.append(("num", m.group(1), start))
        elif m.group(2) is not None:
            toks.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ExprSyntaxError(f"unexpected character {ch!r}", _byte_offset(src, start))
            toks.append(("op", ch, start))
        pos = m.end()
    toks.append(("end", "", len(src)))
    return toks


def _byte_offset(src, index):
    return len(src[:index].encode("utf-8"))


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(message, _byte_offset(self.src, tok[2]))

    def expect(self, ch):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != ch:
            self.fail(f"expected {ch!r}")
        self.take()

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            tok = self.peek()
            if tok[0] != "num" or not tok[1].isdigit():
                self.fail("exponent must be an integer")
            self.take()
            node = Pow(node, sign * int(tok[1]))
        return node

    def atom(self):
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return Num(float(tok[1]))
        if tok[0] == "name":
            self.take()
            name = tok[1]
            if name == "x":
                return X
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if name not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {name!r}")
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            self.fail(f"unknown identifier {name!r}", tok)
        if tok[0] == "op" and tok[1] == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if tok[0] == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected {tok[1]!r}")


def parse(src):
    """Parse ``src`` into an :class:`Expr`."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(src)
    node = p.expr()
    if p.peek()[0] != "end":
        p.fail(f"unexpected {p.peek()[1]!r}")
    return node


# ---------------------------------------------------------------- printing

def _num_str(v):
    if v.is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 else s


def to_string(e):
    """Text form that parses back to the same tree."""
    if isinstance(e, Num):
        return _num_str(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        return "-" + (f"({inner})" if e.arg.prec < Neg.prec else inner)
    if isinstance(e, Pow):
        base = to_string(e.base)
        if e.base.prec < 5:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    left = to_string(e.left)
    right = to_string(e.right)
    if e.left.prec < e.prec:
        left = f"({left})"
    if e.right.prec <= e.prec:
        right = f"({right})"
    return f"{left}{e.op}{right}"


# ---------------------------------------------------------------- evaluation

def _eval(e, x):
    if isinstance(e, Num):
        return np.full(np.shape(x), e.value)
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, Add):
        return _eval(e.left, x) + _eval(e.right, x)
    if isinstance(e, Sub):
        return _eval(e.left, x) - _eval(e.right, x)
    if isinstance(e, Mul):
        return _eval(e.left, x) * _eval(e.right, x)
    if isinstance(e, Div):
        return _eval(e.left, x) / _eval(e.right, x)
    if isinstance(e, Pow):
        return np.power(_eval(e.base, x), float(e.exponent))
    if isinstance(e, Call):
        return FUNCTIONS[e.fn](_eval(e.arg, x))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, x, strict=True):
    """Vectorised value of ``e`` at ``x``; with ``strict`` a NaN produced from a
    finite input raises :class:`ExprDomainError`."""
    arr = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = np.asarray(_eval(e, arr), dtype=float)
    if strict:
        bad = np.isnan(out) & np.isfinite(arr)
        if np.any(bad):
            where = float(np.broadcast_to(arr, out.shape)[bad].flat[0])
            raise ExprDomainError(f"{to_string(e)} is undefined at x={where!r}")
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- simplifying constructors

ZERO, ONE = Num(0.0), Num(1.0)


def _is(e, v):
    return isinstance(e, Num) and e.value == v


def add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if _is(a, -1):
        return neg(b)
    if _is(b, -1):
        return neg(a)
    if isinstance(b, Num) and not isinstance(a, Num):
        a, b = b, a
    if isinstance(a, Num):
        if isinstance(b, Num):
            return Num(a.value * b.value)
        if isinstance(b, Mul) and isinstance(b.left, Num):
            return mul(Num(a.value * b.left.value), b.right)
        if isinstance(b, Neg):
            return mul(Num(-a.value), b.arg)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    return Mul(a, b)


def div(a, b):
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return Num(a.value / b.value)
    return Div(a, b)


def power(a, n):
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Num) and (a.value != 0 or n > 0):
        return Num(a.value**n)
    return Pow(a, n)


def call(fn, a):
    return Call(fn, a)


# ---------------------------------------------------------------- differentiation

def _d(e):
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return neg(_d(e.arg))
    if isinstance(e, Add):
        return add(_d(e.left), _d(e.right))
    if isinstance(e, Sub):
        return sub(_d(e.left), _d(e.right))
    if isinstance(e, Mul):
        return add(mul(_d(e.left), e.right), mul(e.left, _d(e.right)))
    if isinstance(e, Div):
        if isinstance(e.right, Num):
            return div(_d(e.left), e.right)
        num = sub(mul(_d(e.left), e.right), mul(e.left, _d(e.right)))
        return div(num, power(e.right, 2))
    if isinstance(e, Pow):
        return mul(mul(Num(float(e.exponent)), power(e.base, e.exponent - 1)), _d(e.base))
    if isinstance(e, Call):
        u, du = e.arg, _d(e.arg)
        if e.fn == "abs":
            raise NonDifferentiable("abs is not differentiable; remove it to take derivatives")
        if _is(du, 0):
            return ZERO
        outer = {
            "sin": lambda: call("cos", u),
            "cos": lambda: neg(call("sin", u)),
            "exp": lambda: call("exp", u),
            "sqrt": lambda: div(ONE, mul(Num(2.0), call("sqrt", u))),
            "atan": lambda: div(ONE, add(ONE, power(u, 2))),
            "log1p": lambda: div(ONE, add(ONE, u)),
        }[e.fn]()
        return mul(outer, du)
    raise TypeError(f"not an expression node: {e!r}")


def differentiate(e, order=1):
    """``order``-th derivative of ``e`` with constant folding."""
    order = int(order)
    if order < 0:
        raise ValueError("order must be >= 0")
    for _ in range(order):
        e = _d(e)
    return e


def contains_abs(e):
    if isinstance(e, Call):
        return e.fn == "abs" or contains_abs(e.arg)
    if isinstance(e, Neg):
        return contains_abs(e.arg)
    if isinstance(e, Pow):
        return contains_abs(e.base)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return contains_abs(e.left) or contains_abs(e.right)
    return False


def derivative_functions(e, r, strict=False):
    """``[f, f', ..., f^{(r)}]`` as vectorised callables."""
    out = []
    cur = e
    for k in range(r + 1):
        if k:
            cur = differentiate(cur, 1)
        out.append(_Bound(cur, strict))
    return out


class _Bound:
    def __init__(self, e, strict):
        self.expr = e
        self.strict = strict

    def __call__(self, x):
        return evaluate(self.expr, x, self.strict)

    def __repr__(self):
        return f"<{to_string(self.expr)}>"
