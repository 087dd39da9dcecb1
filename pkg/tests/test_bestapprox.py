import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize

from weightapprox import build_basis
from weightapprox.bestapprox import (
    Poly, best_approx, best_l1, best_l2, best_linf, best_lp, equioscillation_ok, fine_norm,
    poly_derivative, split_norm,
)
from weightapprox.errors import DegreeOutOfRange
from weightapprox.weights import eval_w

from conftest import FREUD2

P_VALUES = [1.0, 1.5, 2.0, 4.0, math.inf]


def p_k(basis, k):
    return lambda x: basis.eval_p(k, x)


def test_remez_linear_oracle(basis2):
    res = best_linf(lambda x: x, basis2, 0)
    assert res.error == pytest.approx((2 * math.e) ** -0.5, abs=1e-6)
    xs = sorted(x for x, _ in res.alternation)
    assert xs[0] == pytest.approx(-(2**-0.5), abs=1e-4)
    assert xs[-1] == pytest.approx(2**-0.5, abs=1e-4)
    assert equioscillation_ok(res)


def test_remez_reproduces_polynomials(basis2):
    assert best_linf(p_k(basis2, 2), basis2, 2).error <= 1e-10
    assert best_linf(lambda x: 1 - 3 * x**3, basis2, 5).error <= 1e-10


def test_even_function_odd_degree(basis2):
    e0 = best_linf(np.cos, basis2, 0)
    e1 = best_linf(np.cos, basis2, 1)
    assert e1.error == pytest.approx(e0.error, rel=1e-8)
    assert abs(e1.poly.coeffs[1]) <= 1e-8


@pytest.mark.parametrize("f", [np.sin, np.cos, np.arctan, lambda x: x * np.exp(-x**2 / 4) + x])
@pytest.mark.parametrize("n", [1, 2, 5, 8, 12])
def test_equioscillation(basis2, f, n):
    res = best_linf(f, basis2, n)
    if res.diagnostics.get("exact"):
        return
    assert len(res.alternation) >= n + 2
    assert equioscillation_ok(res, rtol=1e-6)


def _dense_sup(f, mono, grid, w):
    return np.max(np.abs(w * (f(grid) - np.polynomial.polynomial.polyval(grid, mono))))


@pytest.mark.parametrize("name,f", [("x", lambda x: x), ("x3", lambda x: x**3), ("sin", np.sin)])
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_nelder_mead_cannot_improve(basis2, name, f, n):
    res = best_linf(f, basis2, n)
    if res.error <= 1e-10:
        return
    grid = np.linspace(-basis2.X, basis2.X, 40001)
    w = np.asarray(eval_w(FREUD2, grid))
    start = np.zeros(n + 1)
    mono = res.poly.to_monomial()
    start[: mono.size] = mono[: n + 1]
    base = _dense_sup(f, start, grid, w)
    opt = minimize(lambda c: _dense_sup(f, c, grid, w), start, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    assert opt.fun >= base * (1 - 1e-6)


def test_l2_parseval(basis2):
    assert best_l2(p_k(basis2, 3), basis2, 3).error <= 1e-12
    assert best_l2(p_k(basis2, 3), basis2, 2).error == pytest.approx(1.0, abs=1e-8)
    f = lambda x: 2 * basis2.eval_p(1, x) + 3 * basis2.eval_p(5, x)
    assert best_l2(f, basis2, 2).error == pytest.approx(3.0, abs=1e-8)


def test_lp_consistency_with_l2(basis2):
    a = best_lp(np.sin, basis2, 5, 2.0)
    b = best_l2(np.sin, basis2, 5)
    np.testing.assert_allclose(a.poly.coeffs, b.poly.coeffs, atol=1e-8)


def test_lp_odd_forces_zero_constant(basis2):
    res = best_lp(lambda x: x, basis2, 0, 4.0)
    assert abs(res.poly.coeffs[0]) <= 1e-8
    # 1-D scan over the constant
    cs = np.linspace(-0.5, 0.5, 201)
    vals = [quad(lambda x, c=c: abs((x - c) * math.exp(-x * x)) ** 4, -8, 8)[0] for c in cs]
    assert abs(cs[int(np.argmin(vals))]) <= 0.005


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
def test_lp_reproduces_polynomials(basis2, p):
    res = best_approx(lambda x: 2 - x + 0.5 * x**3, basis2, 3, p)
    assert res.error <= 1e-8


def test_l1_zero(basis2):
    res = best_l1(lambda x: 0 * x, basis2, 3)
    assert res.error == 0.0
    assert res.poly.degree == -1


def test_l1_ramp_scan_oracle(basis2):
    res = best_l1(np.arctan, basis2, 0)
    cs = np.linspace(-0.2, 0.2, 401)
    vals = [quad(lambda x, c=c: abs(math.atan(x) - c) * math.exp(-x * x), -8, 8, points=[math.tan(c)])[0]
            for c in cs]
    c_star = cs[int(np.argmin(vals))]
    assert res.poly(0.0) == pytest.approx(c_star, abs=1e-4)
    assert res.error == pytest.approx(min(vals), rel=1e-4)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
def test_split_norm_matches_refined_quadrature(basis2, p):
    res = best_approx(np.abs, basis2, 4, p)
    assert split_norm(np.abs, res.poly, basis2, p) == pytest.approx(fine_norm(np.abs, res.poly, basis2, p), rel=1e-4)


@pytest.mark.parametrize("p", P_VALUES)
def test_monotone_in_degree(basis2, p):
    f = lambda x: np.arctan(x) + 0.3 * np.cos(x)
    top = 20 if p in (2.0, math.inf) else 12
    errs = [best_approx(f, basis2, n, p).error for n in range(top + 1)]
    for a, b in zip(errs, errs[1:]):
        assert b <= a * (1 + 1e-9) + 1e-15


def test_exact_polynomial_unit_error(basis2):
    assert best_l2(p_k(basis2, 5), basis2, 4).error == pytest.approx(1.0, abs=1e-10)


def test_sin_improves(basis2):
    assert best_linf(np.sin, basis2, 10).error < best_linf(np.sin, basis2, 2).error


@pytest.mark.parametrize("p", P_VALUES)
def test_parity_preserved(basis2, p):
    even = best_approx(np.cos, basis2, 6, p).poly.coeffs
    odd = best_approx(np.sin, basis2, 7, p).poly.coeffs
    assert np.max(np.abs(even[1::2])) <= 1e-8
    assert np.max(np.abs(odd[0::2])) <= 1e-8


def test_poly_derivatives(basis2):
    assert poly_derivative(Poly(np.eye(1)[0], basis2), basis2, 1).degree == -1
    x = basis2.quad.nodes
    sq = Poly.from_values(x**2, basis2, 2)
    d2 = sq.derivative(2)
    np.testing.assert_allclose(d2(np.linspace(-2, 2, 5)), 2.0, atol=1e-10)
    cubic = Poly.from_values(x**3 - x, basis2, 3)
    assert cubic.derivative(1).degree == 2
    with pytest.raises(DegreeOutOfRange):
        poly_derivative(sq, basis2, 4)


def test_to_monomial(basis2):
    x = basis2.quad.nodes
    P = Poly.from_values(1 - 2 * x + 0.25 * x**4, basis2, 4)
    np.testing.assert_allclose(P.to_monomial(), [1, -2, 0, 0, 0.25], atol=1e-10)


def test_result_serialization(basis2):
    d = best_linf(lambda x: x, basis2, 0).to_dict()
    assert d["p"] == "inf" and d["degree"] == 0 and len(d["alternation"]) == 2


def test_erdos_weight_remez(erdos):
    b = build_basis(erdos, 14)
    for n in (2, 6, 10):
        res = best_linf(np.sin, b, n)
        assert equioscillation_ok(res)
