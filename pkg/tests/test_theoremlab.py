import math

import numpy as np
import pytest

from weightapprox.errors import HypothesisFail
from weightapprox.theoremlab import (
    bernstein_check, verify_cor24, verify_cor25, verify_lemma36, verify_lemma37, verify_thm23,
    verify_thm41,
)

from conftest import ERDOS, FREUD2

N_SHORT = [6, 10, 14]
EPS = np.finfo(float).eps


def row_rtol(rhs, rtol=1e-6):
    # a weighted sup error E is only known to about 64 eps (|f w| ~ 1) in absolute terms
    return max(rtol, 64 * EPS / rhs)


def test_polynomial_rows_vanish():
    table = verify_thm23("x^3-2*x", 2, FREUD2, N_SHORT)
    assert table.max_lhs() <= 1e-8
    assert table.verdict == "pass"


def test_k0_ratio_is_weight_factor():
    # T = 2, so E_n(w) / E_n(w_{1/4}) = 2^{-1/4}
    table = verify_thm23("sin(x)", 1, FREUD2, N_SHORT)
    for row in table.rows:
        if row["k"] == 0 and not row["at_noise"]:
            assert row["ratio"] == pytest.approx(2**-0.25, rel=row_rtol(row["rhs"]))


def test_derivative_table_sin_stable():
    table = verify_thm23("sin(x)", 2, FREUD2, N_SHORT)
    assert table.finite and table.stable
    assert table.chain_ok
    assert all(math.isfinite(r["ratio"]) for r in table.rows)


def test_r0_is_plain_error():
    from weightapprox.bestapprox import best_linf
    from weightapprox.theoremlab import basis_for

    table = verify_cor24("sin(x)", 0, FREUD2, [4, 8])
    assert {r["k"] for r in table.rows} == {0}
    b = basis_for(FREUD2, 9)
    for row in table.rows:
        assert row["lhs"] == pytest.approx(best_linf(np.sin, b, row["n"]).error, rel=1e-12)


def test_weight_collapse_freud():
    table = verify_thm23("sin(x)", 1, FREUD2, N_SHORT, plain_rhs=True)
    for row in table.rows:
        if not row["at_noise"]:
            assert row["rhs"] / row["rhs_plain"] == pytest.approx(2**0.25, rel=row_rtol(row["rhs_plain"]))


def test_erdos_reports_plain_rhs():
    table = verify_thm23("sin(x)", 1, ERDOS, [6, 10])
    assert all("rhs_plain" in r for r in table.rows)


def test_sup_variants_agree_for_freud():
    t1 = verify_cor24("sin(x)", 1, FREUD2, N_SHORT, variant=1)
    t2 = verify_cor24("sin(x)", 1, FREUD2, N_SHORT, variant=2)
    for a, b in zip(t1.rows, t2.rows):
        if not a["at_noise"]:
            assert a["ratio"] == pytest.approx(b["ratio"], rel=row_rtol(min(a["rhs"], b["rhs"])))


def test_sup_variant_erdos_stable():
    table = verify_cor24("sin(x)", 1, ERDOS, [6, 10, 14, 18, 22], variant=1)
    assert table.finite and table.stable


def test_shifted_weight_table_stable():
    table = verify_cor25("sin(x)", 1, FREUD2, N_SHORT)
    assert table.finite and table.stable


def test_lp_table_reduces_at_infinity():
    a = verify_thm41("sin(x)", 1, FREUD2, N_SHORT, math.inf)
    b = verify_thm23("sin(x)", 1, FREUD2, N_SHORT)
    for ra, rb in zip(a.rows, b.rows):
        for key in ("lhs", "rhs", "rhs2"):
            assert ra[key] == pytest.approx(rb[key], rel=1e-6, abs=1e-300)


def test_lp_table_l2():
    table = verify_thm41("sin(x)", 1, FREUD2, N_SHORT, 2.0)
    assert table.finite and table.stable
    assert math.isfinite(table.details["q_prime_ratio"])
    poly = verify_thm41("1+x^2", 1, FREUD2, N_SHORT, 2.0)
    assert poly.max_lhs() <= 1e-8


def test_hypothesis_violation():
    with pytest.raises(HypothesisFail):
        verify_thm23("exp(x^2)", 1, FREUD2, N_SHORT)


@pytest.mark.parametrize("n_list", [[10, 6], [2, 6]])
def test_bad_n_list(n_list):
    with pytest.raises(ValueError):
        verify_thm23("sin(x)", 2, FREUD2, n_list)


def test_antiderivative_remainder():
    poly = verify_lemma36("x^4-x", FREUD2, 4)
    assert poly["lhs"] <= 1e-8 and poly["orthogonality"] <= 1e-8
    for n in (4, 8, 16):
        rep = verify_lemma36("sin(x)", FREUD2, n)
        assert math.isfinite(rep["ratio"]) and rep["orthogonality"] <= 1e-8


@pytest.mark.parametrize("spec", [FREUD2, ERDOS], ids=lambda s: s.label())
def test_constructed_pair(spec):
    poly = verify_lemma37("1+x^3", spec, 4)
    assert poly["err_F"] <= 1e-8
    for n in (6, 12):
        rep = verify_lemma37("sin(x)", spec, n)
        assert math.isfinite(rep["ratio_F"]) and math.isfinite(rep["ratio_S"])
        assert rep["degree_S"] <= 2 * n


def test_bernstein_small():
    rep = bernstein_check(FREUD2, (8, 16), (1,), samples=10, seed=3)
    assert rep["passed"]
    again = bernstein_check(FREUD2, (8, 16), (1,), samples=10, seed=3)
    assert rep["constants"] == again["constants"]


def test_csv_rows_shape():
    header, rows = verify_thm23("sin(x)", 1, FREUD2, [6, 10]).csv_rows()
    assert header[:10] == ["n", "k", "p", "lhs", "rhs", "rhs2", "ratio", "ratio2", "chain_ok", "at_noise"]
    assert len(rows) == 4 and all(len(r) == len(header) for r in rows)
