import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weightapprox.bestapprox import Poly
from weightapprox.errors import HypothesisFail, NotReached
from weightapprox.expr import parse
from weightapprox.monotone import (
    OperatorL, apply_L, check_hypothesis, monotone_approx, parse_operator, recheck,
)

from conftest import FREUD2

D1 = OperatorL.derivative(1)
GRID = np.linspace(-6, 6, 2001)


def test_apply_examples(basis2):
    sq = Poly.from_values(basis2.quad.nodes**2, basis2, 2)
    assert apply_L(D1, sq, 3.0) == pytest.approx(6.0, rel=1e-10)
    ident = OperatorL.derivative(0)
    assert apply_L(ident, parse("sin(x)"), 0.3) == pytest.approx(math.sin(0.3))
    op = parse_operator("2*d0 + x*d1")
    assert apply_L(op, parse("x"), 1.0) == pytest.approx(3.0)


def test_parse_operator():
    op = parse_operator("(1+x^2)*d0 + d2 + -3*d1")
    assert [t.j for t in op.terms] == [0, 2, 1]
    assert op.k_min == 0 and op.l_max == 2
    with pytest.raises(ValueError):
        parse_operator("x*y1")


def test_hypothesis_checks():
    assert check_hypothesis(D1, parse("x"), 1.0, GRID)["passed"]
    assert not check_hypothesis(D1, parse("x"), 1.5, GRID)["passed"]
    rep = check_hypothesis(D1, parse("x+sin(x)/2"), 0.4, GRID)
    assert rep["passed"] and rep["min"] == pytest.approx(0.5, abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(a=st.lists(st.floats(-3, 3), min_size=6, max_size=6), b=st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_linearity(basis2, a, b):
    P, Q = Poly(np.array(a), basis2), Poly(np.array(b), basis2)
    op = parse_operator("(1+x^2)*d0 + cos(x)*d1 + d2")
    xs = np.linspace(-2, 2, 41)
    lhs = apply_L(op, P + Q, xs)
    rhs = apply_L(op, P, xs) + apply_L(op, Q, xs)
    scale = max(1.0, float(np.max(np.abs(lhs))))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * scale)


def test_linear_target():
    cert = monotone_approx("x", D1, 1.0, 2.0, FREUD2, 10)
    assert cert.verdict == "pass" and cert.min_LP >= 0.5


def test_polynomial_reproduced_at_its_degree():
    cert = monotone_approx("x+x^3", D1, 1.0, 2.0, FREUD2, 10, n_min=3)
    assert cert.n_star == 3
    assert cert.min_LP == pytest.approx(1.0, abs=1e-8)


def test_sin_case_certificate():
    cert = monotone_approx("x+sin(x)/2", D1, 0.4, 2.0, FREUD2, 30)
    assert cert.min_LP >= 0.2
    assert recheck(cert, D1) >= 0.2 - 1e-6


def test_trend_to_min_lf():
    cert = monotone_approx("x+sin(x)/2", D1, 0.4, 2.0, FREUD2, 20, sweep=True)
    last = cert.table[-1]["min_LP"]
    assert abs(last - cert.details["min_Lf"]) <= 0.1 * 0.4
    assert cert.details["min_Lf"] == pytest.approx(1 + math.cos(2) / 2, abs=1e-9)
    assert cert.n_sufficient is not None


def test_hypothesis_failure():
    with pytest.raises(HypothesisFail):
        monotone_approx("x", D1, 1.5, 2.0, FREUD2, 10)


def test_not_reached_carries_certificate():
    # f' = 1 + 0.9 cos(2x) >= 0.1, but P_n' dips below 0.05 on [-2, 2] for n = 3..6
    with pytest.raises(NotReached) as exc:
        monotone_approx("x+0.45*sin(2*x)", D1, 0.1, 2.0, FREUD2, 6, n_min=3)
    cert = exc.value.certificate
    assert cert is not None and cert.verdict == "fail" and cert.table
