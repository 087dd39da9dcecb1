import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from weightapprox.errors import ExprDomainError, ExprSyntaxError, NonDifferentiable, UnknownFunction
from weightapprox.expr import (
    Add, Call, Div, Mul, Neg, Num, Pow, Sub, X, derivative_functions, differentiate, evaluate, parse,
    to_string,
)

CORPUS = [
    "sin(x)+x^3",
    "x*exp(-x^2/4)+x",
    "1/(1+x^2)",
    "atan(x)",
    "sqrt(1+x^2)",
    "log1p(x^2)",
    "cos(x)*exp(x/3)",
    "(x^2-1)/(x^2+2)",
    "exp(sin(x))",
    "x-(x-1)*2^2",
    "-x^2+3*x",
]


def test_parse_structure():
    assert parse("sin(x)+x^3") == Add(Call("sin", X), Pow(X, 3))


def test_precedence():
    assert parse("-x^2") == Neg(Pow(X, 2))
    assert parse("1-2-3") == Sub(Sub(Num(1.0), Num(2.0)), Num(3.0))
    assert parse("2*x/3") == Div(Mul(Num(2.0), X), Num(3.0))


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("2*(x")
    assert exc.value.offset == 4
    assert exc.value.as_dict()["code"] == "SyntaxError"


@pytest.mark.parametrize("src", ["", "   ", "x+", "3x", "y", "x^1.5", "sin x"])
def test_malformed(src):
    with pytest.raises((ExprSyntaxError, ValueError)):
        parse(src)


def test_unknown_function():
    with pytest.raises(UnknownFunction):
        parse("foo(x)")


@pytest.mark.parametrize("src", CORPUS)
def test_round_trip_corpus(src):
    e = parse(src)
    assert parse(to_string(e)) == e


_leaf = st.one_of(st.just(X), st.integers(0, 9).map(lambda v: Num(float(v))),
                  st.sampled_from([0.5, 0.25, 1.5]).map(Num))


def _grow(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: Add(*t)),
        st.tuples(children, children).map(lambda t: Sub(*t)),
        st.tuples(children, children).map(lambda t: Mul(*t)),
        st.tuples(children, children).map(lambda t: Div(*t)),
        children.map(Neg),
        st.tuples(children, st.integers(-3, 4)).map(lambda t: Pow(*t)),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "atan", "abs"]), children).map(lambda t: Call(*t)),
    )


@settings(max_examples=300)
@given(st.recursive(_leaf, _grow, max_leaves=12))
def test_round_trip_random(e):
    assert parse(to_string(e)) == e


def test_derivative_examples():
    assert to_string(differentiate(parse("sin(x)"), 1)) == "cos(x)"
    e = parse("x^3+1")
    assert differentiate(e, 0) == e
    assert to_string(differentiate(parse("x^3"), 2)) == "6*x"
    d = differentiate(parse("sin(x)"), 1)
    h = 1e-5
    fd = (math.sin(0.7 + h) - math.sin(0.7 - h)) / (2 * h)
    assert evaluate(d, 0.7) == pytest.approx(fd, rel=1e-8)


def test_abs_not_differentiable():
    with pytest.raises(NonDifferentiable):
        differentiate(parse("abs(x)+x"), 1)
    assert evaluate(differentiate(parse("abs(x)"), 0), -2.0) == 2.0


def _fd(e, x, h=1e-3):
    f = lambda t: evaluate(e, t)
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


@pytest.mark.parametrize("src", CORPUS)
def test_derivatives_vs_finite_differences(src):
    rng = np.random.default_rng(7)
    xs = rng.uniform(-3, 3, 25)
    lower = parse(src)
    for order in (1, 2, 3):
        d = differentiate(parse(src), order)
        exact = evaluate(d, xs)
        fd = _fd(lower, xs)
        scale = max(1.0, float(np.max(np.abs(exact))))
        np.testing.assert_allclose(fd, exact, rtol=1e-7, atol=1e-7 * scale)
        lower = d


@pytest.mark.parametrize("src", CORPUS)
def test_derivatives_vs_sympy(src):
    x = sp.Symbol("x")
    ref = sp.sympify(src.replace("^", "**"), locals={"log1p": lambda a: sp.log(1 + a)})
    xs = np.linspace(-2.9, 2.9, 13)
    for order in (1, 2, 3):
        fn = sp.lambdify(x, sp.diff(ref, x, order), "numpy")
        expect = np.broadcast_to(np.asarray(fn(xs), dtype=float), xs.shape)
        np.testing.assert_allclose(evaluate(differentiate(parse(src), order), xs), expect, rtol=1e-11, atol=1e-11)


def test_constant_folding():
    assert differentiate(parse("3*x^2+x"), 3) == Num(0.0)
    assert to_string(differentiate(parse("2*x"), 1)) == "2"


def test_domain_error():
    with pytest.raises(ExprDomainError):
        evaluate(parse("sqrt(x)"), -1.0)
    assert math.isnan(evaluate(parse("sqrt(x)"), -1.0, strict=False))


def test_derivative_functions():
    fs = derivative_functions(parse("x^3"), 3)
    assert [f(2.0) for f in fs] == [8.0, 12.0, 12.0, 6.0]


def test_callable_vectorized():
    e = parse("x^2")
    np.testing.assert_array_equal(e(np.array([1.0, 2.0])), [1.0, 4.0])
