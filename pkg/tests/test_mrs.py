import math

import numpy as np
import pytest

from weightapprox import MrsSolver
from weightapprox.errors import OutOfRange
from weightapprox.mrs import mrs_sanity

from conftest import ERDOS, FREUD2, FREUD4

XS = [0.5, 1, 2, 4, 16, 100]


@pytest.mark.parametrize("x", XS)
def test_closed_forms(x):
    assert MrsSolver(FREUD2).mrs_number(x) == pytest.approx(math.sqrt(x), rel=1e-8)
    assert MrsSolver(FREUD4).mrs_number(x) == pytest.approx((2 * x / 3) ** 0.25, rel=1e-8)


def test_sigma_closed_forms():
    s2 = MrsSolver(FREUD2)
    assert s2.sigma(0.5) == pytest.approx(2.0, rel=1e-8)
    assert s2.sigma(0.1) == pytest.approx(10.0, rel=1e-8)
    t = (2 / 3) ** 0.25
    assert MrsSolver(FREUD4).sigma(t) == pytest.approx(t, rel=1e-8)


def test_sigma_out_of_range():
    with pytest.raises(OutOfRange):
        MrsSolver(FREUD2).sigma(1e3)


def test_phi_values():
    s = MrsSolver(FREUD2)
    assert s.phi(0.5, 0.0) == pytest.approx(1 + 2**-0.5, rel=1e-10)
    assert s.phi(0.5, 2.0) == pytest.approx(2**-0.5, rel=1e-10)
    xs = np.linspace(0, 3, 7)
    np.testing.assert_array_equal(s.phi(0.5, xs), s.phi(0.5, -xs))


@pytest.mark.parametrize("spec", [FREUD2, ERDOS], ids=lambda s: s.label())
def test_monotone_and_residual(spec):
    s = MrsSolver(spec)
    xs = np.geomspace(0.1, 1e3, 64)
    a = np.array([s.mrs_number(x) for x in xs])
    assert np.all(np.diff(a) > 0)
    for x, ax in s.cached():
        assert abs(s.G(ax) - x) / x <= 1e-8


@pytest.mark.parametrize("t", [0.9, 0.5, 0.2, 0.05])
def test_sigma_round_trip(t):
    s = MrsSolver(ERDOS)
    u = s.sigma_parameter(t)
    assert s.mrs_number(u) / u == pytest.approx(t, rel=1e-8)


def test_sanity_freud():
    rep = mrs_sanity(MrsSolver(FREUD2), np.arange(2, 65))
    rel = rep["relations"]
    assert rel["Q(a_x) sqrt T / x"]["spread"] == pytest.approx(1.0, abs=1e-8)
    assert rel["a_2x/a_x"]["min"] == pytest.approx(math.sqrt(2), rel=1e-8)
    assert rel["a_2x/a_x"]["max"] == pytest.approx(math.sqrt(2), rel=1e-8)


def test_sanity_erdos():
    assert mrs_sanity(MrsSolver(ERDOS), np.arange(2, 65))["passed"]
