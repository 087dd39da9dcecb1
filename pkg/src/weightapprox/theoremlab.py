"""Ratio tables for simultaneous approximation of derivatives.

Every check computes both sides of an inequality ``lhs <= C rhs`` over a
lattice of degrees ``n`` and derivative orders ``k`` and reports the empirical
constants ``lhs / rhs``. A table passes when all ratios are finite and, for
each ``k``, ``max / min`` over ``n`` stays below a threshold (10 by default).
That threshold is a harness policy; it is stored with every table.

Derivatives of ``f`` always come from symbolic differentiation (an
:class:`~weightapprox.expr.Expr` or a list of callables ``[f, f', ...]``).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .bestapprox import Poly, best_approx, best_linf, poly_derivative
from .errors import HypothesisFail
from .mrs import MrsSolver
from .norms import cosine_grid, lp_norm, sup_norm
from .orthopoly import build_basis, fourier_coeffs, vp_coefficients
from .weights import eval_Q, eval_T, eval_w

INF = math.inf
STABILITY_THRESHOLD = 10.0
# an rhs this small relative to the size of f^(k) w is rounding noise
NOISE_RTOL = 1e-13
HYPOTHESIS_RTOL = 1e-6
# below this (relative) level sup-norm rows are recomputed in extended precision
HIPREC_RTOL = 1e-8

TABLE_COLUMNS = ["n", "k", "p", "lhs", "rhs", "rhs2", "ratio", "ratio2", "chain_ok", "at_noise", "precision"]


@functools.lru_cache(maxsize=None)
def solver_for(spec):
    return MrsSolver(spec.base())


@functools.lru_cache(maxsize=64)
def basis_for(spec, nmax):
    """Orthonormal basis for ``spec`` (cached; bases are immutable)."""
    return build_basis(spec, nmax, solver=solver_for(spec.base()))


def derivative_list(f, r):
    """``[f, f', ..., f^{(r)}]`` as vectorised callables."""
    from .expr import Expr, derivative_functions, parse

    if isinstance(f, str):
        f = parse(f)
    if isinstance(f, Expr):
        return derivative_functions(f, r)
    derivs = list(f)
    if len(derivs) < r + 1:
        raise ValueError(f"need f and its first {r} derivatives, got {len(derivs)} callables")
    return derivs


def _vals(g, x):
    with np.errstate(all="ignore"):
        return np.broadcast_to(np.asarray(g(x), dtype=float), np.shape(x)).astype(float)


def weighted(g, spec):
    """``x -> g(x) w(x)`` with zero wherever ``w`` underflows."""
    def h(x):
        w = np.asarray(eval_w(spec, x))
        with np.errstate(all="ignore"):
            v = w * _vals(g, x)
        return np.where(w == 0.0, 0.0, v)
    return h


def x_grid(solver, n, X, n_inner=2001, n_outer=64):
    """Cosine-graded points on ``[-a_{2n}, a_{2n}]`` plus ``n_outer`` points per
    side out to ``X``."""
    a = min(solver.mrs_number(2 * n), X)
    core = cosine_grid(-a, a, n_inner)
    if X <= a:
        return core
    tail = np.linspace(a, X, n_outer + 1)[1:]
    return np.concatenate([-tail[::-1], core, tail])


def check_vanishing(g, spec, X, grid):
    """Ratio of ``|g w|`` at ``+-X`` to its maximum over ``grid``."""
    h = weighted(g, spec)
    edge = float(np.max(np.abs(h(np.array([-X, X])))))
    peak = float(np.max(np.abs(h(grid))))
    return edge / peak if peak > 0 else 0.0


@dataclass
class RatioTable:
    rows: list
    threshold: float = STABILITY_THRESHOLD
    details: dict = field(default_factory=dict)

    def _live(self):
        return [r for r in self.rows if not r["at_noise"]]

    @property
    def empirical_C(self):
        vals = [r["ratio"] for r in self._live()]
        return float(max(vals)) if vals else 0.0

    @property
    def finite(self):
        return all(math.isfinite(r["ratio"]) for r in self._live())

    def spreads(self):
        """Per ``k``: max/min of the ratio over ``n`` (noise rows excluded)."""
        out = {}
        for k in sorted({r["k"] for r in self.rows}):
            vals = np.array([r["ratio"] for r in self._live() if r["k"] == k])
            vals = vals[vals > 0]
            out[k] = float(vals.max() / vals.min()) if vals.size else math.nan
        return out

    @property
    def stable(self):
        return all(not (s >= self.threshold) for s in self.spreads().values())

    @property
    def chain_ok(self):
        """Chain inequality on the resolved (non-noise) rows."""
        return all(r["chain_ok"] for r in self._live())

    @property
    def chain_ok_all(self):
        return all(r["chain_ok"] for r in self.rows)

    @property
    def verdict(self):
        return "pass" if self.finite and self.stable else "fail"

    def max_lhs(self):
        return float(max(r["lhs"] for r in self.rows)) if self.rows else 0.0

    def csv_rows(self):
        extra = [c for c in self.rows[0] if c not in TABLE_COLUMNS] if self.rows else []
        header = TABLE_COLUMNS + extra
        return header, [[r[c] for c in header] for r in self.rows]

    def summary(self):
        return {
            "empirical_C": self.empirical_C,
            "verdict": self.verdict,
            "threshold": self.threshold,
            "spreads": {str(k): v for k, v in self.spreads().items()},
            "chain_ok": self.chain_ok,
            "chain_ok_all_rows": self.chain_ok_all,
            "max_lhs": self.max_lhs(),
            **self.details,
        }


def _norm(fun, p, grid, basis):
    if math.isinf(p):
        return sup_norm(fun, grid)
    return lp_norm(fun(basis.quad.nodes), p, basis.quad.weights)


def _check_n_list(n_list, r):
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    if n_list[0] <= r:
        raise ValueError(f"n_list entries must exceed r={r}")
    return n_list


def derivative_table(derivs, r, n_list, p, approx_spec, lhs_spec, rhs_spec, spec,
                     plain_rhs=False, threshold=STABILITY_THRESHOLD, hiprec=True):
    """Shared engine of the simultaneous-approximation checks.

    ``approx_spec(k)``, ``lhs_spec(k)`` and ``rhs_spec(k)`` give the weights of
    the approximant, the left-hand norm and the right-hand degree of
    approximation for derivative order ``k``. With ``plain_rhs`` the rhs is
    also computed under the unmodified weight (column ``rhs_plain``).

    In the sup norm, when the derivatives are expressions and a row's
    quantities fall below ``HIPREC_RTOL`` times the size of the weighted
    function, the row is recomputed in extended precision (column
    ``precision``). Rows that are exact in double precision are kept.
    """
    p = float(p)
    exprs = [getattr(d, "expr", None) for d in derivs]
    use_mp = hiprec and math.isinf(p) and all(e is not None for e in exprs)
    n_list = _check_n_list(n_list, r)
    nmax = n_list[-1] + 1
    solver = solver_for(spec.base())
    base_basis = basis_for(spec.base(), nmax)
    X = base_basis.X
    rows = []
    e_cache, mp_cache = {}, {}

    def best(wspec, k, m):
        key = (wspec, k, m)
        if key not in e_cache:
            e_cache[key] = best_approx(derivs[k], basis_for(wspec, nmax), m, p)
        return e_cache[key]

    def E(wspec, k, m):
        return best(wspec, k, m).error

    def best_mp(wspec, k, m):
        from .hiprec import best_linf_mp

        key = (wspec, k, m)
        if key not in mp_cache:
            start = [x for x, _ in best(wspec, k, m).alternation]
            mp_cache[key] = best_linf_mp(exprs[k], basis_for(wspec, nmax), m, start=start)
        return mp_cache[key]

    for n in n_list:
        grid = x_grid(solver, n, X)
        t = solver.mrs_number(n) / n
        results = {}
        for k in range(r + 1):
            aspec = approx_spec(k)
            if aspec not in results:
                results[aspec] = best(aspec, 0, n)
            res = results[aspec]
            basis = res.poly.basis
            Pk = poly_derivative(res.poly, basis, k)
            lw = lhs_spec(k)

            def err(x, k=k, Pk=Pk, lw=lw):
                w = np.asarray(eval_w(lw, x))
                with np.errstate(all="ignore"):
                    v = w * (_vals(derivs[k], x) - Pk(x))
                return np.where(w == 0.0, 0.0, v)

            lhs = _norm(err, p, grid, basis)
            rspec = rhs_spec(k)
            rhs = E(rspec, k, n - k)
            rhs2 = t ** (r - k) * E(rhs_spec(r), r, n - r)
            scale = _norm(weighted(derivs[k], rspec), p, grid, basis_for(rspec, nmax))
            at_noise = bool(rhs <= NOISE_RTOL * scale)
            precision = "double"
            scale0 = _norm(weighted(derivs[0], aspec), p, grid, basis)
            small = [(rhs, scale), (res.error, scale0), (E(rhs_spec(r), r, n - r), scale)]
            if use_mp and all(v > 0 for v, _ in small) and any(v <= HIPREC_RTOL * s for v, s in small):
                lhs, rhs, rhs2, at_noise = _row_mp(
                    exprs, r, k, n, t, nmax, best_mp, aspec, lw, rspec, rhs_spec(r), grid, scale)
                precision = "mp"
            row = {
                "n": n, "k": k, "p": p, "lhs": lhs, "rhs": rhs, "rhs2": rhs2,
                "ratio": lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else INF),
                "ratio2": lhs / rhs2 if rhs2 > 0 else (0.0 if lhs == 0 else INF),
                "chain_ok": bool(rhs <= rhs2 * (1 + 1e-6)),
                "at_noise": at_noise,
                "precision": precision,
            }
            if plain_rhs:
                row["rhs_plain"] = E(spec.base(), k, n - k)
            rows.append(row)
    return RatioTable(rows, threshold)


def _row_mp(exprs, r, k, n, t, nmax, best_mp, aspec, lw, rspec, rspec_r, grid, scale):
    """``(lhs, rhs, rhs2, at_noise)`` of a sup-norm row in extended precision."""
    from .hiprec import DPS, sup_error_mp

    coeffs, _, _ = best_mp(aspec, 0, n)
    lhs = sup_error_mp(exprs[k], coeffs, basis_for(aspec, nmax), k, lw, grid)
    rhs = best_mp(rspec, k, n - k)[1]
    rhs2 = t ** (r - k) * best_mp(rspec_r, r, n - r)[1]
    at_noise = bool(rhs <= 10.0 ** (-(DPS - 8)) * scale)
    return float(lhs), float(rhs), float(rhs2), at_noise


def verify_thm23(f, r, spec, n_list, threshold=STABILITY_THRESHOLD, plain_rhs=None):
    """Pointwise derivative errors of the weighted minimax approximant.

    lhs: ``sup |(f^{(k)} - P_n^{(k)}) w| / T^{k/2}`` with ``P_n`` best in
    ``L_inf(w)``; rhs: ``E_{n-k}(w_{1/4}, f^{(k)})``; rhs2:
    ``(a_n/n)^{r-k} E_{n-r}(w_{1/4}, f^{(r)})``. For Erdos-type weights the
    rhs under plain ``w`` is reported too (``rhs_plain``).
    """
    derivs = derivative_list(f, r)
    spec = spec.base()
    _require_vanishing(derivs[r], spec.with_t(0.25), spec, n_list, "T^{1/4} f^{(r)} w")
    if plain_rhs is None:
        plain_rhs = not spec.is_freud_type
    table = derivative_table(
        derivs, r, n_list, INF,
        approx_spec=lambda k: spec,
        lhs_spec=lambda k: spec.with_t(-k / 2),
        rhs_spec=lambda k: spec.with_t(0.25),
        spec=spec, plain_rhs=plain_rhs, threshold=threshold,
    )
    table.details["check"] = "thm23"
    return table


def verify_cor24(f, r, spec, n_list, variant=1, threshold=STABILITY_THRESHOLD):
    """Sup-norm derivative bounds.

    Variant 1: ``||(f^{(k)} - P^{(k)}_{n;f,w}) w_{-k/2}||`` against
    ``E_{n-k}(w_{1/4}, f^{(k)})``. Variant 2: approximant best for
    ``w_{-1/4}``, lhs weight ``w_{-(2k+1)/4}``, rhs ``E_{n-k}(w, f^{(k)})``.
    """
    derivs = derivative_list(f, r)
    spec = spec.base()
    if variant == 1:
        _require_vanishing(derivs[r], spec.with_t(0.25), spec, n_list, "T^{1/4} f^{(r)} w")
        table = derivative_table(
            derivs, r, n_list, INF,
            approx_spec=lambda k: spec,
            lhs_spec=lambda k: spec.with_t(-k / 2),
            rhs_spec=lambda k: spec.with_t(0.25),
            spec=spec, threshold=threshold,
        )
    elif variant == 2:
        _require_vanishing(derivs[r], spec, spec, n_list, "f^{(r)} w")
        table = derivative_table(
            derivs, r, n_list, INF,
            approx_spec=lambda k: spec.with_t(-0.25),
            lhs_spec=lambda k: spec.with_t(-(2 * k + 1) / 4),
            rhs_spec=lambda k: spec,
            spec=spec, threshold=threshold,
        )
    else:
        raise ValueError("variant must be 1 or 2")
    table.details["check"] = f"cor24.{variant}"
    return table


def verify_cor25(f, r, spec, n_list, threshold=STABILITY_THRESHOLD):
    """Approximant best for ``w_{k/2}``; lhs ``||(f^{(k)} - P^{(k)}) w||``
    against ``E_{n-k}(w_{(2k+1)/4}, f^{(k)})``."""
    derivs = derivative_list(f, r)
    spec = spec.base()
    _require_vanishing(derivs[r], spec.with_t((2 * r + 1) / 4), spec, n_list, "w_{(2r+1)/4} f^{(r)}")
    table = derivative_table(
        derivs, r, n_list, INF,
        approx_spec=lambda k: spec.with_t(k / 2),
        lhs_spec=lambda k: spec,
        rhs_spec=lambda k: spec.with_t((2 * k + 1) / 4),
        spec=spec, threshold=threshold,
    )
    table.details["check"] = "cor25"
    return table


def verify_thm41(f, r, spec, n_list, p, beta=1.5, threshold=STABILITY_THRESHOLD):
    """``L_p`` version: approximant best in ``L_p(w)``, lhs weight
    ``T^{-k/2} w_sharp`` and rhs ``E_{p,n-k}(w_{1/4}, f^{(k)})``.

    Also reports the ratio ``||Q' w g||_p / ||w g'||_p`` for
    ``g = f - f(0)`` (``details["q_prime_ratio"]``).
    """
    p = float(p)
    if not (p >= 1):
        raise ValueError("p must be >= 1")
    derivs = derivative_list(f, r)
    spec = spec.base()
    _require_vanishing(derivs[r], spec.with_t(0.25), spec, n_list, "T^{1/4} f^{(r)} w")
    sharp = spec.with_lp(p, beta, "sharp")
    table = derivative_table(
        derivs, r, n_list, p,
        approx_spec=lambda k: spec,
        lhs_spec=lambda k: sharp.with_t(-k / 2),
        rhs_spec=lambda k: spec.with_t(0.25),
        spec=spec, threshold=threshold,
    )
    table.details["check"] = "thm41"
    table.details["beta"] = beta
    table.details["q_prime_ratio"] = q_prime_ratio(derivs, spec, p, n_list[-1] + 1)
    return table


def q_prime_ratio(derivs, spec, p, nmax):
    """``||Q' w (f - f(0))||_p / ||w f'||_p`` on the basis truncation."""
    basis = basis_for(spec, nmax)
    f0 = float(_vals(derivs[0], np.array([0.0]))[0])

    def lhs(x):
        q1 = np.asarray(eval_Q(spec, x, 1))
        w = np.asarray(eval_w(spec, x))
        with np.errstate(all="ignore"):
            v = q1 * w * (_vals(derivs[0], x) - f0)
        return np.where(w == 0.0, 0.0, v)

    grid = x_grid(solver_for(spec), nmax, basis.X)
    num = _norm(lhs, p, grid, basis)
    den = _norm(weighted(derivs[1], spec), p, grid, basis)
    return num / den if den > 0 else (0.0 if num == 0 else INF)


def _require_vanishing(g, wspec, spec, n_list, label):
    nmax = max(int(n) for n in n_list) + 1
    basis = basis_for(spec.base(), nmax)
    grid = x_grid(solver_for(spec.base()), nmax, basis.X)
    ratio = check_vanishing(g, wspec, basis.X, grid)
    if not ratio <= HYPOTHESIS_RTOL:
        raise HypothesisFail(f"{label} does not vanish at the truncation boundary (ratio {ratio:.3g})")


def _antiderivative_on_grid(g, grid, nodes=16):
    """``int_0^x g`` at every point of a sorted grid by Gauss-Legendre on
    consecutive intervals, accumulated outward from 0."""
    pts = np.unique(np.concatenate([grid, [0.0]]))
    u, wu = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * (pts[1:] + pts[:-1])
    half = 0.5 * np.diff(pts)
    x = mid[:, None] + half[:, None] * u[None, :]
    pieces = (_vals(g, x.ravel()).reshape(x.shape) * wu[None, :]).sum(axis=1) * half
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    cum -= cum[np.searchsorted(pts, 0.0)]
    return np.interp(grid, pts, cum)


def verify_lemma36(f, spec, n, nmax=None):
    """Antiderivative of ``g = f' - v_n(f')`` against ``(a_n/n) E_n(w_{1/4}, f')``.

    Returns lhs, rhs, ratio, the plain-``w`` rhs and the orthogonality residual
    ``max_{j<=n} |int g p_j w^2|``.
    """
    derivs = derivative_list(f, 1)
    spec = spec.base()
    n = int(n)
    nmax = nmax or 2 * n + 1
    basis = basis_for(spec, nmax)
    solver = solver_for(spec)
    state = fourier_coeffs(basis, derivs[1], n)
    vp = Poly(vp_coefficients(state, n), basis)

    def g(x):
        return _vals(derivs[1], x) - vp(x)

    grid = x_grid(solver, n, basis.X)
    anti = _antiderivative_on_grid(g, grid)
    lhs = float(np.max(np.abs(np.asarray(eval_w(spec, grid)) * anti)))
    nodes = basis.quad.nodes
    gvals = np.where(basis.measure == 0, 0.0, g(nodes))
    orth = float(np.max(np.abs(basis.node_values()[:, : n + 1].T @ (basis.measure * gvals))))
    t = solver.mrs_number(n) / n
    rhs = t * best_linf(derivs[1], basis_for(spec.with_t(0.25), nmax), n).error
    rhs_plain = t * best_linf(derivs[1], basis, n).error
    return {
        "n": n, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else INF),
        "rhs_plain": rhs_plain, "orthogonality": orth,
    }


def verify_lemma37(f, spec, n, nmax=None):
    """Construct ``F = f - int_0^x q_{n-1}`` and ``S_{2n} = f(0) + int_0^x v_n(f' - q_{n-1})``
    and compare ``||w (F - S_{2n})||`` and ``||w S_{2n}'||`` with their bounds."""
    derivs = derivative_list(f, 1)
    spec = spec.base()
    n = int(n)
    nmax = nmax or 2 * n + 1
    basis = basis_for(spec, nmax)
    solver = solver_for(spec)
    q = best_linf(derivs[1], basis, n - 1).poly
    Q_int = q.antiderivative()
    state = fourier_coeffs(basis, lambda x: _vals(derivs[1], x) - q(x), n)
    vp = Poly(vp_coefficients(state, n), basis)
    f0 = float(_vals(derivs[0], np.array([0.0]))[0])
    const = np.zeros(1)
    const[0] = f0 * math.sqrt(basis.beta_rec[0])
    S = Poly(const, basis) + vp.antiderivative()

    grid = x_grid(solver, n, basis.X)
    w = np.asarray(eval_w(spec, grid))
    S1 = poly_derivative(S, basis, 1)
    err_F = sup_norm(lambda x: np.asarray(eval_w(spec, x)) * (_vals(derivs[0], x) - Q_int(x) - S(x)), grid)
    err_S = sup_norm(lambda x: np.asarray(eval_w(spec, x)) * S1(x), grid)
    t = solver.mrs_number(n) / n
    b14 = basis_for(spec.with_t(0.25), nmax)
    bound_F = t * best_linf(derivs[1], b14, n).error
    bound_S = best_linf(derivs[1], b14, n - 1).error
    return {
        "n": n, "err_F": err_F, "bound_F": bound_F, "err_S": err_S, "bound_S": bound_S,
        "ratio_F": err_F / bound_F if bound_F > 0 else (0.0 if err_F == 0 else INF),
        "ratio_S": err_S / bound_S if bound_S > 0 else (0.0 if err_S == 0 else INF),
        "degree_S": S.degree,
    }


def bernstein_check(spec, n_list=(8, 16, 32), k_list=(1, 2), samples=50, seed=0, p=INF):
    """Empirical constants of ``||P^{(k)} w||_p <= C (n/a_n)^k ||T^{k/2} P w||_p``.

    ``samples`` random polynomials per degree (standard normal coordinates in
    the orthonormal basis). Returns per-``(n, k)`` maxima and, per ``k``, the
    spread max/min over ``n``.
    """
    spec = spec.base()
    rng = np.random.default_rng(seed)
    nmax = max(n_list) + 1
    basis = basis_for(spec, nmax)
    solver = solver_for(spec)
    table = {}
    for n in n_list:
        grid = x_grid(solver, n, basis.X)
        scale = n / solver.mrs_number(n)
        w = np.asarray(eval_w(spec, grid))
        T = np.asarray(eval_T(spec, grid))
        for k in k_list:
            best = 0.0
            for _ in range(samples):
                P = Poly(rng.standard_normal(n + 1), basis)
                Pk = poly_derivative(P, basis, k)
                pv = P(grid)
                if math.isinf(p):
                    num = lp_norm(Pk(grid) * w, p)
                    den = lp_norm(T ** (k / 2) * pv * w, p)
                else:
                    nodes = basis.quad.nodes
                    wn = np.asarray(eval_w(spec, nodes))
                    num = lp_norm(Pk(nodes) * wn, p, basis.quad.weights)
                    den = lp_norm(np.asarray(eval_T(spec, nodes)) ** (k / 2) * P(nodes) * wn, p, basis.quad.weights)
                best = max(best, num / (scale**k * den))
            table[(int(n), int(k))] = best
    spreads = {}
    for k in k_list:
        vals = np.array([table[(int(n), int(k))] for n in n_list])
        spreads[int(k)] = float(vals.max() / vals.min())
    return {"constants": table, "spreads": spreads,
            "passed": all(s < 4.0 for s in spreads.values())}
