"""Approximation that keeps a linear differential operator positive.

``L(g; x) = sum_j a_j(x) g^{(j)}(x)``. Given ``L(f) >= delta`` on the line,
the weighted minimax approximants ``P_n`` for ``w_{-1/4} = T^{-1/4} w`` satisfy
``L(P_n) >= delta/2`` on ``[-M, M]`` once ``n`` is large enough; the
search below finds such an ``n`` and records the evidence.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .bestapprox import Poly, best_linf, poly_derivative
from .errors import HypothesisFail, NonDifferentiable, NotReached, OrderUnavailable
from .expr import Expr, differentiate, evaluate, parse, to_string
from .norms import golden_min
from .theoremlab import basis_for, check_vanishing, solver_for, x_grid
from .weights import eval_T, eval_w

MIN_GRID = 1001


@dataclass(frozen=True)
class Term:
    j: int
    coeff: Expr


@dataclass(frozen=True)
class OperatorL:
    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValueError("operator needs at least one term")
        if any(t.j < 0 for t in self.terms):
            raise ValueError("derivative orders must be >= 0")

    @property
    def k_min(self):
        return min(t.j for t in self.terms)

    @property
    def l_max(self):
        return max(t.j for t in self.terms)

    @classmethod
    def derivative(cls, j=1):
        return cls((Term(int(j), parse("1")),))

    def coefficient_sups(self, grid):
        """``sup |a_j|`` over ``grid`` per term; must be finite."""
        sups = [float(np.max(np.abs(evaluate(t.coeff, np.asarray(grid, dtype=float), strict=False))))
                for t in self.terms]
        if not all(math.isfinite(s) for s in sups):
            raise ValueError("operator coefficients are unbounded on the grid")
        return sups

    def __str__(self):
        return " + ".join(f"({to_string(t.coeff)})*d{t.j}" for t in self.terms)


_TERM = re.compile(r"^(?:(.*)\*)?\s*d(\d+)\s*$", re.S)


def _split_top(src, sep="+"):
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(src):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0 and i > start and src[start:i].strip():
            parts.append(src[start:i])
            start = i + 1
    parts.append(src[start:])
    return [p.strip() for p in parts]


def parse_operator(src):
    """Parse ``"c0(x)*d0 + c1(x)*d1 + ..."``; a bare ``dJ`` has coefficient 1.

    Terms are split at top-level ``+``; coefficients are expressions of the
    expression language.
    """
    terms = []
    for piece in _split_top(src):
        m = _TERM.match(piece)
        if m is None:
            raise ValueError(f"operator term {piece!r} must end in '*dJ'")
        coeff = m.group(1)
        if coeff is None or not coeff.strip():
            expr = parse("-1") if piece.startswith("-") else parse("1")
        elif coeff.strip() == "-":
            expr = parse("-1")
        else:
            expr = parse(coeff)
        terms.append(Term(int(m.group(2)), expr))
    return OperatorL(tuple(terms))


def _derivatives_of(target, l_max):
    """Callables for ``target^{(j)}``, ``j = 0..l_max``."""
    if isinstance(target, Poly):
        out, cur = [], target
        for j in range(l_max + 1):
            out.append(cur)
            if j < l_max:
                cur = poly_derivative(cur, cur.basis, 1) if cur.degree >= 0 else cur
        return out
    if isinstance(target, Expr):
        out, cur = [], target
        try:
            for j in range(l_max + 1):
                out.append(lambda x, e=cur: evaluate(e, x, strict=False))
                if j < l_max:
                    cur = differentiate(cur, 1)
        except NonDifferentiable as exc:
            raise OrderUnavailable(str(exc)) from exc
        return out
    derivs = list(target)
    if len(derivs) < l_max + 1:
        raise OrderUnavailable(f"need derivatives up to order {l_max}, got {len(derivs) - 1}")
    return derivs


def apply_L(op, target, x):
    """``L(target; x)`` for a :class:`Poly`, an :class:`Expr` or a list of
    derivative callables ``[g, g', ...]``."""
    derivs = _derivatives_of(target, op.l_max)
    xa = np.asarray(x, dtype=float)
    total = np.zeros(xa.shape)
    for t in op.terms:
        a = evaluate(t.coeff, xa, strict=False)
        total = total + a * np.asarray(derivs[t.j](xa), dtype=float)
    return float(total) if total.ndim == 0 else total


def check_hypothesis(op, f, delta, grid):
    """Pass iff ``min_grid L(f) >= delta``."""
    vals = apply_L(op, f, np.asarray(grid, dtype=float))
    m = float(np.min(vals))
    return {"passed": bool(m >= delta), "min": m, "argmin": float(np.asarray(grid)[int(np.argmin(vals))])}


def min_on_interval(fun, M, npts=MIN_GRID):
    """Min of ``fun`` on a uniform grid over ``[-M, M]``, refined by golden
    section around the grid argmin."""
    grid = np.linspace(-M, M, npts)
    vals = np.asarray(fun(grid))
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, npts - 1)]
    x, v = golden_min(lambda t: float(fun(np.array([t]))[0]), lo, hi, xtol=1e-12)
    if v < vals[i]:
        return float(v), float(x)
    return float(vals[i]), float(grid[i])


@dataclass
class MonotoneCertificate:
    n_star: int | None
    min_LP: float
    delta: float
    M: float
    table: list
    n_sufficient: int | None = None
    derivative_rows: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    poly: Poly | None = None

    @property
    def verdict(self):
        return "pass" if self.n_star is not None and self.min_LP >= self.delta / 2 else "fail"

    def to_dict(self):
        return {
            "n_star": self.n_star,
            "min_LP": self.min_LP,
            "delta": self.delta,
            "M": self.M,
            "verdict": self.verdict,
            "n_sufficient": self.n_sufficient,
            "table": self.table,
            "derivative_rows": self.derivative_rows,
            **self.details,
        }


def recheck(cert, op, factor=10):
    """Min of ``L(P_{n*})`` on a uniform grid ``factor`` times finer than the search grid."""
    if cert.poly is None:
        raise ValueError("certificate carries no polynomial")
    grid = np.linspace(-cert.M, cert.M, factor * (MIN_GRID - 1) + 1)
    return float(np.min(apply_L(op, cert.poly, grid)))


def monotone_approx(f, op, delta, M, spec, n_max, n_min=1, r=None, sweep=False):
    """Smallest ``n`` in ``[n_min, n_max]`` with ``min_{|x|<=M} L(P_n) >= delta/2``.

    ``P_n`` is the weighted minimax approximant for ``w_{-1/4}``. For every
    computed ``n`` the derivative-error rows ``||(f^{(j)} - P^{(j)}) w
    T^{-(2j+1)/4}||`` versus ``(a_n/n)^{r-j} E_{n-r}(w, f^{(r)})`` are recorded;
    their largest ratios feed the sufficient degree ``n_sufficient`` of the
    constructive argument. With ``sweep`` every ``n`` is computed; otherwise
    the search stops at the first passing degree.
    """
    if isinstance(f, str):
        f = parse(f)
    l = op.l_max
    r = l if r is None else int(r)
    if r < l:
        raise ValueError("r must be at least the operator order")
    spec = spec.base()
    derivs = _derivatives_of(f, r)
    nmax = n_max + 1
    basis_w = basis_for(spec, nmax)
    basis = basis_for(spec.with_t(-0.25), nmax)
    solver = solver_for(spec)
    X = basis.X

    hyp_grid = x_grid(solver, nmax, X)
    hyp = check_hypothesis(op, derivs, delta, hyp_grid)
    if not hyp["passed"]:
        raise HypothesisFail(f"min L(f) = {hyp['min']:.6g} < delta = {delta}")
    if check_vanishing(derivs[r], spec, X, hyp_grid) > 1e-6:
        raise HypothesisFail("w f^{(r)} does not vanish at the truncation boundary")
    sups = op.coefficient_sups(hyp_grid)
    minf, _ = min_on_interval(lambda x: apply_L(op, derivs, x), M)

    table, rows = [], []
    n_star, best, best_poly = None, None, None
    for n in range(max(int(n_min), r), int(n_max) + 1):
        res = best_linf(derivs[0], basis, n)
        P = res.poly
        m, xm = min_on_interval(lambda x: apply_L(op, P, x), M)
        table.append({"n": n, "min_LP": m, "argmin": xm, "error": res.error})
        rows.extend(_derivative_error_rows(derivs, P, basis_w, solver, spec, n, r, l))
        if best is None or m > best[1]:
            best = (n, m)
        if m >= delta / 2 and n_star is None:
            n_star, best_poly = n, P
            if not sweep:
                break
    n_suff = _sufficient_degree(rows, sups, op, spec, M, delta, r, l)
    details = {"min_Lf": minf, "hypothesis_min": hyp["min"], "r": r, "weight": spec.with_t(-0.25).label()}
    if n_star is None:
        cert = MonotoneCertificate(None, best[1], delta, M, table, n_suff, rows, details)
        raise NotReached(f"no n <= {n_max} reached min L(P_n) >= {delta / 2} (best {best[1]:.6g} at n={best[0]})",
                         certificate=cert)
    m = next(row["min_LP"] for row in table if row["n"] == n_star)
    return MonotoneCertificate(n_star, m, delta, M, table, n_suff, rows, details, best_poly)


def _derivative_error_rows(derivs, P, basis_w, solver, spec, n, r, l):
    grid = x_grid(solver, n, basis_w.X)
    w = np.asarray(eval_w(spec, grid))
    T = np.asarray(eval_T(spec, grid))
    t = solver.mrs_number(n) / n
    E = best_linf(derivs[r], basis_w, n - r).error if n >= r else math.nan
    rows = []
    for j in range(l + 1):
        Pj = poly_derivative(P, P.basis, j) if j <= P.degree + 1 else Poly.zero(P.basis)
        with np.errstate(all="ignore"):
            v = (np.asarray(derivs[j](grid), dtype=float) - Pj(grid)) * w * T ** (-(2 * j + 1) / 4)
        lhs = float(np.max(np.abs(np.where(w == 0.0, 0.0, v))))
        rhs = t ** (r - j) * E
        rows.append({"n": n, "j": j, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else math.nan})
    return rows


def _sufficient_degree(rows, sups, op, spec, M, delta, r, l):
    """First tabulated ``n`` where the bound from the derivative-error rows
    guarantees ``|L(f) - L(P_n)| <= delta/2`` on ``[-M, M]``."""
    if not rows:
        return None
    C = {}
    for row in rows:
        if math.isfinite(row["ratio"]):
            C[row["j"]] = max(C.get(row["j"], 0.0), row["ratio"])
    C_kl = sum(s * C.get(t.j, math.inf) for s, t in zip(sups, op.terms))
    xs = np.linspace(-M, M, MIN_GRID)
    with np.errstate(all="ignore"):
        growth = float(np.max(np.asarray(eval_T(spec, xs)) ** ((2 * l + 1) / 4) / np.asarray(eval_w(spec, xs))))
    for row in rows:
        if row["j"] == l and row["rhs"] == 0.0:
            return int(row["n"])
        if row["j"] == l and C_kl * growth * row["rhs"] <= delta / 2:
            return int(row["n"])
    return None
