"""Weighted best polynomial approximation on the truncated line.

For a basis built on the weight ``w`` the routines here minimise
``||(f - P) w||_p`` over polynomials of degree ``<= n``:

* ``p = inf``: weighted Remez exchange (second algorithm) on a
  cosine-graded grid, extrema polished by vectorised golden-section search;
* ``p = 2``: orthogonal projection (the partial sum ``s_{n+1}``);
* ``1 < p < inf``: Newton-type iteratively reweighted least squares;
* ``p = 1``: IRLS on the smoothed objective ``sum sqrt(r^2 + eps^2)``.

Polynomials are stored as coordinates in the ``p_k`` basis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegreeOutOfRange, IrlsNonConvergence, PreconditionFail, RemezStall
from .norms import cosine_grid, gauss_on_edges, golden_max, lp_norm
from .orthopoly import composite_gauss

log = logging.getLogger(__name__)

INF = math.inf
# relative size of a weighted residual that counts as exact reproduction
EXACT_TOL = 1e-14


class Poly:
    """A polynomial given by its coordinates in the ``p_k`` basis of ``basis``."""

    def __init__(self, coeffs, basis):
        c = np.zeros(basis.nmax + 1)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.size > basis.nmax + 1 and np.any(coeffs[basis.nmax + 1:] != 0):
            raise DegreeOutOfRange(f"degree exceeds basis nmax={basis.nmax}")
        c[: min(coeffs.size, basis.nmax + 1)] = coeffs[: basis.nmax + 1]
        self.coeffs = c
        self.basis = basis

    @classmethod
    def zero(cls, basis):
        return cls(np.zeros(1), basis)

    @classmethod
    def from_values(cls, values_at_nodes, basis, degree):
        """Projection of nodal data onto degree ``<= degree``."""
        return cls(basis.project(values_at_nodes, degree), basis)

    @property
    def degree(self):
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else -1

    def __call__(self, x):
        d = max(self.degree, 0)
        v = self.basis.values(x, d) @ self.coeffs[: d + 1]
        return float(v) if np.ndim(v) == 0 else v

    def __add__(self, other):
        return Poly(self.coeffs + other.coeffs, self.basis)

    def __sub__(self, other):
        return Poly(self.coeffs - other.coeffs, self.basis)

    def __neg__(self):
        return Poly(-self.coeffs, self.basis)

    def __mul__(self, s):
        return Poly(self.coeffs * float(s), self.basis)

    __rmul__ = __mul__

    def derivative(self, k=1):
        return poly_derivative(self, self.basis, k)

    def antiderivative(self):
        """``x -> int_0^x P``."""
        if self.degree >= self.basis.nmax:
            raise DegreeOutOfRange("antiderivative would exceed the basis degree")
        if self.degree < 0:
            return Poly.zero(self.basis)
        return Poly(self.basis.integration_matrix() @ self.coeffs, self.basis)

    def to_monomial(self):
        """Power-basis coefficients, lowest degree first."""
        from numpy.polynomial import Polynomial

        b = self.basis
        sb = np.sqrt(b.beta_rec)
        prev, cur = Polynomial([0.0]), Polynomial([1.0 / sb[0]])
        total = cur * self.coeffs[0]
        for k in range(max(self.degree, 0)):
            nxt = Polynomial([-b.alpha_rec[k], 1.0]) * cur
            if k > 0:
                nxt = nxt - sb[k] * prev
            nxt = nxt / sb[k + 1]
            prev, cur = cur, nxt
            total = total + cur * self.coeffs[k + 1]
        return total.coef

    def __repr__(self):
        return f"Poly(degree={self.degree}, basis={self.basis!r})"


def poly_derivative(P, basis, k=1):
    """Coordinates of ``P^{(k)}`` through the cached differentiation matrix."""
    k = int(k)
    if k < 0 or k > P.degree + 1:
        raise DegreeOutOfRange(f"derivative order {k} exceeds degree {P.degree} + 1")
    if k == 0:
        return Poly(P.coeffs.copy(), basis)
    D = basis.diff_matrix()
    c = P.coeffs
    for _ in range(k):
        c = D @ c
    out = Poly(c, basis)
    # D is strictly upper triangular, so only rounding could leave the top entries
    top = max(P.degree - k, -1)
    out.coeffs[top + 1:] = 0.0
    return out


@dataclass
class ApproxResult:
    poly: Poly
    error: float
    p: float
    n: int
    diagnostics: dict = field(default_factory=dict)
    truncation: tuple = (0.0, 0.0)

    @property
    def alternation(self):
        return self.diagnostics.get("alternation", [])

    def to_dict(self):
        return {
            "degree": self.n,
            "exact_degree": self.poly.degree,
            "basis_coeffs": self.poly.coeffs[: self.n + 1].tolist(),
            "error": self.error,
            "p": "inf" if math.isinf(self.p) else self.p,
            "alternation": [[float(x), float(r)] for x, r in self.alternation],
        }


def _f_values(f, x):
    with np.errstate(all="ignore"):
        v = np.asarray(f(x), dtype=float)
    return np.broadcast_to(v, np.shape(x)).astype(float)


def _check_degree(basis, n):
    if n < 0 or n > basis.nmax:
        raise DegreeOutOfRange(f"degree {n} outside 0..{basis.nmax}")


def search_grid(basis, n, npts=2001):
    """Reference grid for the exchange: cosine points over ``[-X, X]`` merged
    with cosine points over the restricted range ``[-b, b]``."""
    X = basis.X
    b = min(X, 1.5 * basis.solver.mrs_number(max(n, 1) + 1))
    return np.unique(np.concatenate([cosine_grid(-X, X, npts), cosine_grid(-b, b, npts)]))


def _alternating_extrema(r):
    """Index of the largest ``|r|`` in every maximal run of constant sign."""
    s = np.sign(r)
    nz = np.flatnonzero(s != 0)
    if nz.size == 0:
        return np.array([], dtype=int)
    idx = []
    start = nz[0]
    cur = s[start]
    best = start
    for i in nz[1:]:
        if s[i] != cur:
            idx.append(best)
            cur, best = s[i], i
        elif abs(r[i]) > abs(r[best]):
            best = i
    idx.append(best)
    return np.asarray(idx, dtype=int)


def _golden_polish(fun, lo, hi, iters=60):
    return golden_max(fun, lo, hi, iters)


class _Residual:
    """Weighted residual ``w (f - P)`` for a fixed basis and degree."""

    def __init__(self, f, basis, n):
        self.f = f
        self.basis = basis
        self.n = n

    def __call__(self, x, c):
        w = np.asarray(self.basis.weight(x))
        fx = _f_values(self.f, x)
        px = self.basis.values(x, self.n) @ c
        with np.errstate(all="ignore"):
            r = w * (fx - px)
        return np.where(w == 0.0, 0.0, r)


def _select(idx, r, count):
    """Drop the smaller end until ``count`` alternating points remain."""
    idx = list(idx)
    while len(idx) > count:
        if abs(r[idx[0]]) < abs(r[idx[-1]]):
            idx.pop(0)
        else:
            idx.pop()
    return np.asarray(idx, dtype=int)


def _initial_reference(basis, grid, n):
    g = np.asarray(basis.weight(grid)) * basis.values(grid, n + 1)[:, n + 1]
    idx = _alternating_extrema(g)
    if idx.size >= n + 2:
        return grid[_select(idx, g, n + 2)]
    a = basis.solver.mrs_number(n + 1)
    return np.sort(a * np.cos(math.pi * (np.arange(n + 2) + 0.5) / (n + 2)))


def best_linf(f, basis, n, npts=2001, tol=1e-10, max_iter=60, raise_on_stall=False,
              check_precondition=True):
    """Weighted minimax approximation of degree ``n`` on ``[-X, X]``.

    Returns an :class:`ApproxResult` whose diagnostics carry the alternation
    set ``[(x_i, r_i)]`` of the weighted error ``r = w (f - P)``.
    """
    n = int(n)
    _check_degree(basis, n)
    grid = search_grid(basis, n, npts)
    resid = _Residual(f, basis, n)
    wg = np.asarray(basis.weight(grid))
    fg = _f_values(f, grid)
    scale = float(np.max(np.abs(np.where(wg == 0, 0.0, wg * fg))))
    truncation = (-basis.X, basis.X)

    # exact reproduction: the projection already matches f to rounding
    nodes = basis.quad.nodes
    c_l2 = basis.project(np.where(basis.measure == 0, 0.0, _f_values(f, nodes)), n)
    r0 = resid(grid, c_l2)
    if scale == 0.0 or np.max(np.abs(r0)) <= EXACT_TOL * scale:
        err = float(np.max(np.abs(r0))) if scale else 0.0
        return ApproxResult(Poly(c_l2, basis), err, INF, n,
                            {"exact": True, "alternation": [], "iterations": 0, "stalled": False}, truncation)

    # rounding level of the residual evaluation
    noise = 8 * np.finfo(float).eps * scale
    ref = _initial_reference(basis, grid, n)
    signs = (-1.0) ** np.arange(n + 2)
    best = None
    history = []
    stalled = False
    for it in range(1, max_iter + 1):
        w_ref = np.asarray(basis.weight(ref))
        A = np.empty((n + 2, n + 2))
        A[:, : n + 1] = w_ref[:, None] * basis.values(ref, n)
        A[:, n + 1] = signs
        rhs = w_ref * _f_values(f, ref)
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
        c, level = sol[: n + 1], abs(sol[n + 1])

        r = resid(grid, c)
        idx = _alternating_extrema(r)
        # polish every run maximum between its grid neighbours
        lo = grid[np.maximum(idx - 1, 0)]
        hi = grid[np.minimum(idx + 1, grid.size - 1)]
        sgn = np.sign(r[idx])
        xs = _golden_polish(lambda x: sgn * resid(x, c), lo, hi)
        rs = resid(xs, c)
        better = np.abs(rs) > np.abs(r[idx])
        xs = np.where(better, xs, grid[idx])
        rs = np.where(better, rs, r[idx])
        err = float(max(np.max(np.abs(r)), np.max(np.abs(rs))))
        history.append(err)
        if best is None or err < best[1]:
            best = (c.copy(), err, xs, rs)
        if len(xs) < n + 2:
            stalled = True
            break
        keep = _select(np.arange(len(xs)), rs, n + 2)
        ref_new, r_new = xs[keep], rs[keep]
        if err - level <= max(tol * err, noise):
            best = (c.copy(), err, ref_new, r_new)
            break
        if it > 8 and err >= min(history[:-4]) * (1 - 1e-12):
            # no progress; only a stall if the error is above rounding level
            stalled = err > 1e3 * noise
            break
        ref = ref_new
    else:
        stalled = True

    c, err, ref_x, ref_r = best
    diagnostics = {
        "exact": False,
        "alternation": list(zip(ref_x.tolist(), ref_r.tolist())),
        "iterations": len(history),
        "history": history,
        "stalled": stalled,
        "grid_size": int(grid.size),
        "noise_level": noise,
    }
    if stalled:
        msg = f"Remez stalled at degree {n} after {len(history)} iterations (error {err:.3g})"
        if raise_on_stall:
            raise RemezStall(msg)
        log.warning(msg)
    result = ApproxResult(Poly(c, basis), err, INF, n, diagnostics, truncation)
    if check_precondition:
        edge = np.array([-basis.X, basis.X])
        tail = float(np.max(np.abs(np.asarray(basis.weight(edge)) * _f_values(f, edge))))
        diagnostics["boundary_fw"] = tail
        if not tail <= 1e-3 * err:
            raise PreconditionFail(
                f"|f w| at the truncation boundary ({tail:.3g}) is not below 1e-3 x error ({err:.3g})"
            )
    return result


def equioscillation_ok(result, rtol=1e-6):
    """True when the alternation set has ``>= n + 2`` sign-alternating points
    with magnitudes within ``rtol`` of the error.

    The magnitude band is never narrower than the rounding level at which the
    residual is evaluated (``diagnostics["noise_level"]``).
    """
    alt = result.alternation
    if len(alt) < result.n + 2:
        return False
    r = np.array([v for _, v in alt])
    alternates = np.all(np.sign(r[1:]) == -np.sign(r[:-1]))
    band = max(rtol * result.error, result.diagnostics.get("noise_level", 0.0))
    return bool(alternates and np.all(np.abs(np.abs(r) - result.error) <= band))


def _design(f, basis, n):
    x = basis.quad.nodes
    w = np.asarray(basis.weight(x))
    fx = np.where(w == 0.0, 0.0, _f_values(f, x))
    A = w[:, None] * basis.values(x, n)
    return A, w * fx, basis.quad.weights


def fine_norm(f, poly, basis, p, factor=10):
    """``||(f - P) w||_p`` on a quadrature rule with ``factor`` times the panels."""
    panels = basis.quad.nodes.size // 32
    quad = composite_gauss(basis.X, panels * factor, 32)
    w = np.asarray(basis.weight(quad.nodes))
    r = np.where(w == 0, 0.0, w * (_f_values(f, quad.nodes) - poly(quad.nodes)))
    return lp_norm(r, p, quad.weights)


def _residual_fn(f, poly, basis):
    def resid(x):
        w = np.asarray(basis.weight(x))
        with np.errstate(all="ignore"):
            r = w * (_f_values(f, x) - poly(x))
        return np.where(w == 0.0, 0.0, r)

    return resid


def residual_roots(f, poly, basis):
    """Sign changes of ``w (f - P)`` on ``[-X, X]``, located by Brent's method.

    Returns ``(edges, roots)`` where ``edges`` are the base panel edges.
    """
    panels = basis.quad.nodes.size // 32
    edges = cosine_grid(-basis.X, basis.X, panels + 1)
    resid = _residual_fn(f, poly, basis)

    def scalar(t):
        return float(resid(np.array([t]))[0])

    x = np.unique(np.concatenate([edges, basis.quad.nodes]))
    r = resid(x)
    roots = []
    for i in np.flatnonzero(r[:-1] * r[1:] < 0):
        # flips at rounding level may not survive a second evaluation
        if scalar(x[i]) * scalar(x[i + 1]) < 0:
            roots.append(brentq(scalar, x[i], x[i + 1], xtol=1e-15))
    return edges, np.array(roots)


def split_norm(f, poly, basis, p):
    """``||(f - P) w||_p`` with quadrature panels split at the sign changes of
    the residual, where ``|r|^p`` is not smooth."""
    edges, roots = residual_roots(f, poly, basis)
    nodes, weights = gauss_on_edges(np.unique(np.concatenate([edges, roots])), 32)
    return lp_norm(_residual_fn(f, poly, basis)(nodes), p, weights)


def _l1_polish(f, basis, n, c, max_iter=30, tol=1e-13):
    """Newton iteration on the continuous objective ``int |w (f - P)|``.

    The gradient ``-int sign(r) w p_j`` is integrated exactly between the
    residual's roots ``z``; the Hessian is ``sum_z 2 w p p^T / |(f - P)'|``.
    Removes the non-uniqueness of the L1 problem restricted to the nodes.
    """
    def state(coeffs):
        P = Poly(coeffs, basis)
        edges, roots = residual_roots(f, P, basis)
        nodes, weights = gauss_on_edges(np.unique(np.concatenate([edges, roots])), 32)
        r = _residual_fn(f, P, basis)(nodes)
        return P, roots, nodes, weights, r, float(np.dot(weights, np.abs(r)))

    P, roots, nodes, weights, r, obj = state(c)
    history = [obj]
    for _ in range(max_iter):
        if roots.size == 0:
            break
        w_nodes = np.asarray(basis.weight(nodes))
        grad = -basis.values(nodes, n).T @ (weights * np.sign(r) * w_nodes)
        h = 1e-6 * np.maximum(1.0, np.abs(roots))
        slope = np.abs((_f_values(f, roots + h) - P(roots + h) - _f_values(f, roots - h) + P(roots - h)) / (2 * h))
        V = basis.values(roots, n)
        H = (V * (2.0 * np.asarray(basis.weight(roots)) / np.maximum(slope, 1e-300))[:, None]).T @ V
        delta = np.linalg.lstsq(H, -grad, rcond=None)[0]
        step, improved = 1.0, False
        while step >= 1e-6:
            trial = state(c + step * delta)
            if trial[-1] <= obj:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        change = float(np.max(np.abs(step * delta)))
        c = c + step * delta
        P, roots, nodes, weights, r, obj = trial
        history.append(obj)
        if change <= tol * max(1.0, float(np.max(np.abs(c)))):
            break
    return c, obj, history


def best_l2(f, basis, n):
    """Best ``L_2`` approximation: the partial sum ``s_{n+1}(f)``."""
    n = int(n)
    _check_degree(basis, n)
    nodes = basis.quad.nodes
    fx = np.where(basis.measure == 0, 0.0, _f_values(f, nodes))
    coeffs = basis.project(fx, basis.nmax)
    P = Poly(coeffs[: n + 1], basis)
    r = np.sqrt(basis.measure) * (fx - P(nodes))
    err = float(math.sqrt(np.dot(r, r)))
    tail = float(math.sqrt(np.sum(coeffs[n + 1:] ** 2)))
    diagnostics = {"tail_coeff_norm": tail, "tail_truncated_at": basis.nmax}
    return ApproxResult(P, err, 2.0, n, diagnostics, (-basis.X, basis.X))


def _objective(r, u, p):
    return float(np.dot(u, np.abs(r) ** p))


def best_lp(f, basis, n, p, max_iter=200, tol=1e-9):
    """Best ``L_p`` approximation, ``1 < p < inf``, by Newton-type IRLS.

    The reweighted least-squares step scaled by ``1/(p-1)`` is the Newton step
    for ``sum omega |r|^p``; a backtracking line search keeps every step a
    descent step.
    """
    p = float(p)
    if not 1 < p < INF:
        raise ValueError("best_lp needs 1 < p < inf")
    n = int(n)
    _check_degree(basis, n)
    A, b, omega = _design(f, basis, n)
    c = best_l2(f, basis, n).poly.coeffs[: n + 1]
    if p == 2.0:
        P = Poly(c, basis)
        return ApproxResult(P, lp_norm(b - A @ c, 2.0, omega), 2.0, n, {"iterations": 0}, (-basis.X, basis.X))
    scale = max(float(np.max(np.abs(b))), 1e-300)
    r = b - A @ c
    obj = _objective(r / scale, omega, p)
    history = [obj]
    for it in range(1, max_iter + 1):
        mag = np.maximum(np.abs(r) / scale, 1e-10)
        u = omega * mag ** (p - 2.0)
        su = np.sqrt(u)
        delta = np.linalg.lstsq(su[:, None] * A, su * r, rcond=None)[0] / (p - 1.0)
        step = 1.0
        while True:
            c_try = c + step * delta
            r_try = b - A @ c_try
            obj_try = _objective(r_try / scale, omega, p)
            if obj_try <= obj or step < 1e-6:
                break
            step *= 0.5
        change = float(np.max(np.abs(step * delta)))
        c, r, obj = c_try, r_try, min(obj, obj_try)
        history.append(obj)
        if change < tol * max(1.0, float(np.max(np.abs(c)))):
            break
    else:
        raise IrlsNonConvergence(f"L_{p} IRLS did not converge in {max_iter} iterations")
    P = Poly(c, basis)
    err = split_norm(f, P, basis, p)
    diagnostics = {"iterations": it, "history": history, "grid_error": lp_norm(r, p, omega)}
    return ApproxResult(P, err, p, n, diagnostics, (-basis.X, basis.X))


def best_l1(f, basis, n, eps=1e-10, max_iter=200, tol=1e-9):
    """Best ``L_1`` approximation on the quadrature grid.

    The objective ``sum omega sqrt(r^2 + eps^2)`` is minimised by Newton
    steps, each a reweighted least-squares solve with weights
    ``omega eps^2 / (r^2 + eps^2)^(3/2)``; ``eps`` is lowered by factors of 10
    down to ``eps * max|f w|``. The node solution is then polished by Newton
    steps on the continuous objective (see :func:`_l1_polish`); the reported
    error integrates ``|r|`` with panels split at the sign changes of the
    residual.
    """
    n = int(n)
    _check_degree(basis, n)
    A, b, omega = _design(f, basis, n)
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        return ApproxResult(Poly.zero(basis), 0.0, 1.0, n, {"iterations": 0}, (-basis.X, basis.X))
    c = best_l2(f, basis, n).poly.coeffs[: n + 1]
    r = b - A @ c
    floor = eps * scale
    cur_eps = max(1e-2 * float(np.max(np.abs(r))), floor)

    def smoothed(res, e):
        return float(np.dot(omega, np.sqrt(res * res + e * e)))

    history = [lp_norm(r, 1.0, omega)]
    obj = smoothed(r, cur_eps)
    for it in range(1, max_iter + 1):
        s2 = r * r + cur_eps * cur_eps
        sq = np.sqrt(s2)
        h = omega * cur_eps * cur_eps / (s2 * sq)
        sh = np.sqrt(h)
        delta = np.linalg.lstsq(sh[:, None] * A, sh * (r * s2 / (cur_eps * cur_eps)), rcond=None)[0]
        step = 1.0
        while True:
            c_try = c + step * delta
            r_try = b - A @ c_try
            obj_try = smoothed(r_try, cur_eps)
            if obj_try <= obj or step < 1e-8:
                break
            step *= 0.5
        change = float(np.max(np.abs(step * delta)))
        decrease = obj - obj_try
        if obj_try <= obj:
            c, r, obj = c_try, r_try, obj_try
        history.append(lp_norm(r, 1.0, omega))
        done = change < tol * max(1.0, float(np.max(np.abs(c)))) or decrease <= 1e-14 * obj
        if done:
            if cur_eps <= floor:
                break
            cur_eps = max(cur_eps * 0.1, floor)
            obj = smoothed(r, cur_eps)
    else:
        raise IrlsNonConvergence(f"L_1 IRLS did not converge in {max_iter} iterations")
    grid_error = lp_norm(r, 1.0, omega)
    c, err, polish = _l1_polish(f, basis, n, c)
    P = Poly(c, basis)
    diagnostics = {"iterations": it, "history": history, "eps": cur_eps, "grid_error": grid_error,
                   "polish_history": polish}
    return ApproxResult(P, err, 1.0, n, diagnostics, (-basis.X, basis.X))


def best_approx(f, basis, n, p):
    """Dispatch on ``p`` to the matching best-approximation routine."""
    p = float(p)
    if math.isinf(p):
        return best_linf(f, basis, n)
    if p == 2.0:
        return best_l2(f, basis, n)
    if p == 1.0:
        return best_l1(f, basis, n)
    return best_lp(f, basis, n, p)


def E_value(f, basis, n, p):
    """Degree of approximation ``E_{p,n}(w, f)`` for the basis weight ``w``."""
    return best_approx(f, basis, n, p).error
