"""Extended-precision weighted sup-norm quantities.

Double precision resolves a weighted error ``w (f - P)`` only down to about
``eps * max|w f|``; once the degree of approximation drops towards that level
the computed values are rounding noise. The routines here redo the weighted
minimax approximation, derivatives of the approximant and weighted sup norms
with ``mpmath`` at ``DPS`` significant digits. Sample points stay in double
precision (an extremum located to ``1e-16`` perturbs the extreme value only to
second order); every function value is carried in ``mpf``.

Inputs are expressions of the expression language, weights are bare
``T^mu`` modifications of ``w = exp(-Q)`` (the sup-norm setting).
"""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np
import sympy as sp

from .bestapprox import _alternating_extrema, _initial_reference, _select, search_grid
from .errors import NonConvergence
from .expr import Add, Call, Div, Mul, Neg, Num, Pow, Sub, Var
from .norms import golden_max
from .weights import _q_expr, t_at_zero

DPS = 40
mp = mpmath.mp

_MP_FUNCS = {
    "sin": mpmath.sin, "cos": mpmath.cos, "exp": mpmath.exp, "sqrt": mpmath.sqrt,
    "abs": mpmath.fabs, "atan": mpmath.atan, "log1p": mpmath.log1p,
}


def _obj(x):
    return np.array([mp.mpf(float(v)) for v in np.ravel(x)], dtype=object).reshape(np.shape(x))


def to_float(a):
    return np.array([float(v) for v in np.ravel(a)]).reshape(np.shape(a))


def eval_expr(e, x):
    """Evaluate an expression at double points; returns an object array of ``mpf``."""
    xs = _obj(np.asarray(x, dtype=float))

    def ev(node):
        if isinstance(node, Num):
            return np.full(xs.shape, mp.mpf(node.value), dtype=object)
        if isinstance(node, Var):
            return xs
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Add):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Sub):
            return ev(node.left) - ev(node.right)
        if isinstance(node, Mul):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Div):
            return ev(node.left) / ev(node.right)
        if isinstance(node, Pow):
            b = ev(node.base)
            return np.array([v ** node.exponent for v in b.ravel()], dtype=object).reshape(b.shape)
        if isinstance(node, Call):
            a = ev(node.arg)
            fn = _MP_FUNCS[node.fn]
            return np.array([fn(v) for v in a.ravel()], dtype=object).reshape(a.shape)
        raise TypeError(f"cannot evaluate {node!r}")

    return ev(e)


@lru_cache(maxsize=None)
def _q_funcs(key):
    x, q = _q_expr(key)
    mods = [{"expm1": mpmath.expm1, "log1p": mpmath.log1p}, "mpmath"]
    return sp.lambdify(x, q, mods), sp.lambdify(x, sp.diff(q, x), mods)


def eval_weight(spec, x):
    """``T^mu exp(-Q)`` at double points, in ``mpf``."""
    lf = spec.lp_flavor
    if lf is not None and not math.isinf(lf.p):
        raise ValueError("extended precision covers the sup-norm weights only")
    q_fn, q1_fn = _q_funcs(spec.q_key)
    mu = spec.t_exponent
    t0 = mp.mpf(t_at_zero(spec))
    out = []
    for v in np.ravel(np.asarray(x, dtype=float)):
        ax = mp.mpf(abs(float(v)))
        if ax == 0:
            out.append(t0**mu if mu else mp.mpf(1))
            continue
        q = q_fn(ax)
        w = mp.exp(-q)
        if mu:
            w *= (ax * q1_fn(ax) / q) ** mu
        out.append(w)
    return np.array(out, dtype=object).reshape(np.shape(x))


class MpBasis:
    """The recurrence of an :class:`OrthoBasis` evaluated in ``mpf``.

    The recurrence coefficients are taken as exact; the polynomials they
    define span the same spaces, which is all the approximation needs.
    """

    def __init__(self, basis):
        self.basis = basis
        self.spec = basis.spec
        self.alpha = [mp.mpf(float(a)) for a in basis.alpha_rec]
        self.sb = [mp.sqrt(mp.mpf(float(b))) for b in basis.beta_rec]

    def values(self, x, kmax, order=0):
        """Object array ``(len(x), kmax + 1)`` of ``p_k^{(order)}(x)``."""
        xs = _obj(np.asarray(x, dtype=float).ravel())
        m = xs.size
        # prev[j], cur[j]: j-th derivatives of p_{k-1}, p_k
        zero = np.full(m, mp.mpf(0), dtype=object)
        cur = [np.full(m, 1 / self.sb[0], dtype=object)] + [zero.copy() for _ in range(order)]
        prev = [zero.copy() for _ in range(order + 1)]
        out = np.empty((m, kmax + 1), dtype=object)
        out[:, 0] = cur[order]
        for k in range(kmax):
            shifted = xs - self.alpha[k]
            nxt = []
            for j in range(order + 1):
                v = shifted * cur[j] - (self.sb[k] * prev[j] if k > 0 else 0)
                if j:
                    v = v + j * cur[j - 1]
                nxt.append(v / self.sb[k + 1])
            prev, cur = cur, nxt
            out[:, k + 1] = cur[order]
        return out


def _dot(V, c):
    return V.dot(np.asarray(c, dtype=object))


def best_linf_mp(expr, basis, n, start=None, npts=2001, tol=1e-12, max_iter=40):
    """Weighted minimax approximation in extended precision.

    ``start`` is an optional reference (``n + 2`` points), typically the
    double-precision alternation set. Returns ``(coeffs, error, reference)``
    with ``mpf`` coefficients in the basis recurrence.
    """
    with mpmath.workdps(DPS):
        mb = MpBasis(basis)
        grid = search_grid(basis, n, npts)
        wg = eval_weight(basis.spec, grid)
        fg = eval_expr(expr, grid)
        Vg = mb.values(grid, n)
        wf = wg * fg
        scale = max(abs(v) for v in wf)
        if scale == 0:
            return [mp.mpf(0)] * (n + 1), mp.mpf(0), np.array([])

        # exact reproduction: least squares on a subsample leaves nothing on the grid
        sub = np.unique(np.linspace(0, grid.size - 1, 4 * (n + 1)).round().astype(int))
        A_ls = mpmath.matrix((wg[sub, None] * Vg[sub]).tolist())
        c_ls = mpmath.qr_solve(A_ls, mpmath.matrix(wf[sub].tolist()))[0]
        c_ls = [c_ls[i] for i in range(n + 1)]
        r_ls = wf - wg * _dot(Vg, c_ls)
        err_ls = max(abs(v) for v in r_ls)
        if err_ls <= mp.mpf(10) ** (-(DPS - 8)) * scale:
            return c_ls, err_ls, np.array([])

        ref = np.sort(np.asarray(start, dtype=float)) if start is not None and len(start) == n + 2 \
            else _initial_reference(basis, grid, n)
        signs = [(-1) ** i for i in range(n + 2)]

        def resid(x, c):
            x = np.asarray(x, dtype=float)
            return eval_weight(basis.spec, x) * (eval_expr(expr, x) - _dot(mb.values(x, n), c))

        for _ in range(max_iter):
            wr = eval_weight(basis.spec, ref)
            Vr = mb.values(ref, n)
            rows = [[wr[i] * Vr[i, k] for k in range(n + 1)] + [signs[i]] for i in range(n + 2)]
            rhs = wr * eval_expr(expr, ref)
            sol = mpmath.lu_solve(mpmath.matrix(rows), mpmath.matrix(rhs.tolist()))
            c = [sol[i] for i in range(n + 1)]
            level = abs(sol[n + 1])

            r = wf - wg * _dot(Vg, c)
            rf = to_float(r)
            idx = _alternating_extrema(rf)
            lo = grid[np.maximum(idx - 1, 0)]
            hi = grid[np.minimum(idx + 1, grid.size - 1)]
            sgn = np.sign(rf[idx])
            xs = golden_max(lambda x: sgn * resid(x, c), lo, hi)
            rs = resid(xs, c)
            better = np.array([abs(a) > abs(b) for a, b in zip(rs, r[idx])])
            xs = np.where(better, xs, grid[idx])
            rs = np.where(better, rs, r[idx])
            err = max(max(abs(v) for v in r), max(abs(v) for v in rs))
            if len(xs) < n + 2:
                raise NonConvergence(f"extended-precision Remez lost alternation at degree {n}")
            keep = _select(np.arange(len(xs)), to_float(rs), n + 2)
            if err - level <= tol * err:
                return c, err, xs[keep]
            ref = xs[keep]
        raise NonConvergence(f"extended-precision Remez did not converge at degree {n}")


def sup_error_mp(expr_k, coeffs, basis, k, weight_spec, grid, keep=0.5):
    """``sup |w (g - P^{(k)})|`` over ``grid`` with golden refinement of the
    peaks, where ``P`` has recurrence coefficients ``coeffs``."""
    with mpmath.workdps(DPS):
        mb = MpBasis(basis)
        n = len(coeffs) - 1

        def fun(x):
            x = np.asarray(x, dtype=float)
            vals = eval_expr(expr_k, x)
            if k <= n:
                vals = vals - _dot(mb.values(x, n, order=k), coeffs)
            return eval_weight(weight_spec, x) * vals

        grid = np.asarray(grid, dtype=float)
        v = np.array([abs(a) for a in fun(grid)], dtype=object)
        top = max(v)
        if top == 0 or v.size < 3:
            return top
        vf = to_float(v)
        inner = np.arange(1, v.size - 1)
        peaks = inner[(vf[inner] >= vf[inner - 1]) & (vf[inner] >= vf[inner + 1]) & (vf[inner] >= keep * float(top))]
        if peaks.size:
            absfun = lambda x: np.array([abs(a) for a in fun(x)], dtype=object)
            xs = golden_max(absfun, grid[peaks - 1], grid[peaks + 1])
            top = max(top, max(absfun(xs)))
        return top
