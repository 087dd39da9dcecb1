import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weightapprox import MrsSolver, build_basis
from weightapprox.errors import NormDiverges, PreconditionFail
from weightapprox.modulus import (
    bv_integral, jackson_check, main_term, omega, omega_vanishes_check, tail_objective, tail_term,
)
from weightapprox.weights import eval_w

from conftest import ERDOS, FREUD2

DYADIC = [0.0625, 0.125, 0.25, 0.5]
FUNCS = {
    "sin": np.sin,
    "atan": np.arctan,
    "1+atan": lambda x: 1 + np.arctan(x),
    "2+sin/2": lambda x: 2 + np.sin(x) / 2,
    "x": lambda x: x,
}
SOLVERS = {"freud": MrsSolver(FREUD2), "erdos": MrsSolver(ERDOS)}


def test_constant_has_zero_modulus(solver2):
    for p in (1.0, 2.0, math.inf):
        assert omega(lambda x: 7.0 + 0 * x, solver2, p, 0.3).omega == 0.0


def test_main_term_brute_force(solver2):
    t = 0.5
    val, _ = main_term(lambda x: x, solver2, math.inf, t)
    # independent (h, x) grid: for f = x the difference is h Phi_t(x)
    s2 = solver2.sigma(2 * t)
    xs = np.linspace(-s2, s2, 20001)
    hs = np.geomspace(t / 100, t, 200)
    phi = solver2.phi(t, xs)
    brute = max(np.max(h * phi * np.exp(-xs**2)) for h in hs)
    assert val == pytest.approx(brute, abs=1e-4)


def test_bv_integral():
    assert bv_integral(lambda x: 1.0 + 0 * x, FREUD2) == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert bv_integral(np.sign, FREUD2) == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert bv_integral(lambda x: 0 * x, FREUD2) == 0.0
    with pytest.raises(NormDiverges):
        bv_integral(lambda x: np.exp(x**2), FREUD2)


@pytest.mark.parametrize("solver", SOLVERS.values(), ids=SOLVERS.keys())
@pytest.mark.parametrize("name", FUNCS)
@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_monotone_in_t(solver, name, p):
    vals = [omega(FUNCS[name], solver, p, t).omega for t in DYADIC]
    assert np.all(np.diff(vals) >= -1e-9)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), t=st.sampled_from(DYADIC), p=st.sampled_from([1.0, 2.0, math.inf]))
def test_subadditive(a, b, t, p):
    solver = SOLVERS["freud"]
    f = lambda x: a * np.sin(x)
    g = lambda x: b * np.arctan(x) + 0.5
    both = omega(lambda x: f(x) + g(x), solver, p, t).omega
    assert both <= omega(f, solver, p, t).omega + omega(g, solver, p, t).omega + 1e-9


@pytest.mark.parametrize("name", ["sin", "atan", "x", "2+sin/2"])
@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
@pytest.mark.parametrize("solver", SOLVERS.values(), ids=SOLVERS.keys())
def test_tail_golden_matches_scan(solver, name, p):
    t = 0.25
    norm, lo, hi = tail_objective(FUNCS[name], solver, p, t)
    val, _ = tail_term(FUNCS[name], solver, p, t)
    cs = np.linspace(lo, hi, 1001)
    scan = np.array([norm(c) for c in cs])
    assert val == pytest.approx(scan.min(), abs=1e-6)
    # unimodal: decreasing then increasing on the scan
    k = int(np.argmin(scan))
    assert np.all(np.diff(scan[: k + 1]) <= 1e-12) and np.all(np.diff(scan[k:]) >= -1e-12)


def test_bv_bound_constant_stable(solver2):
    # omega_1(f, w, t) <= C t int w |f'| for the ramp atan
    bv = bv_integral(lambda x: 1 / (1 + x**2), FREUD2)
    ratios = [omega(np.arctan, solver2, 1.0, t).omega / (t * bv) for t in DYADIC]
    assert max(ratios) / min(ratios) < 4


def test_omega_vanishes_for_sin(solver2):
    rep = omega_vanishes_check(np.sin, solver2, [0.5 * 2.0**-j for j in range(7)])
    assert rep["passed"]
    assert all(b <= a + 1e-12 for a, b in zip(rep["omega"], rep["omega"][1:]))
    zero = omega_vanishes_check(lambda x: 3 + 0 * x, solver2, [0.5, 0.25])
    assert zero["omega"] == [0.0, 0.0]


def test_omega_vanishes_precondition(solver2):
    with pytest.raises(PreconditionFail):
        omega_vanishes_check(lambda x: np.exp(x**2), solver2, [0.5, 0.25])


def test_jackson_polynomial_rows_vanish(basis2, solver2):
    rep = jackson_check(lambda x: 1 + x - x**3, basis2, solver2, math.inf, [4, 8], 1, lambda x: 1 - 3 * x**2)
    assert all(r.E <= 1e-10 and r.ratio2 <= 1e-9 for r in rep["rows"])


def test_rejects_p_below_one(solver2):
    with pytest.raises(ValueError):
        omega(np.sin, solver2, 0.5, 0.25)


def test_weight_override(solver2):
    # norm weight w_{1/4} = 2^{1/4} w for Q = x^2
    a = omega(np.sin, solver2, math.inf, 0.25).omega
    b = omega(np.sin, solver2, math.inf, 0.25, spec=FREUD2.with_t(0.25)).omega
    assert b == pytest.approx(2**0.25 * a, rel=1e-9)
