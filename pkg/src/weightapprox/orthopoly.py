"""Orthonormal polynomials for ``w^2``, Fourier-type sums and de la Vallee Poussin means.

The recurrence

    sqrt(b_{k+1}) p_{k+1}(x) = (x - a_k) p_k(x) - sqrt(b_k) p_{k-1}(x)

is obtained by the discretized Stieltjes procedure on a composite
Gauss-Legendre rule over the truncated line ``[-X, X]``. ``b_0`` is the
total mass of ``w^2``, so ``p_0 = b_0^{-1/2}``. All weights handled here are
even, hence every ``a_k`` is 0.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DegreeOutOfRange, LossOfOrthogonality
from .mrs import MrsSolver
from .norms import cosine_grid, gauss_on_edges, lp_norm, sup_grid
from .weights import WeightSpec, eval_T, eval_w, q_level_point

NMAX_CAP = 60
PAD = 1.05
# Q(X) is at least this, so w^2(X) < e^-160 whatever nmax is
MIN_TAIL_LEVEL = 80.0


@dataclass(frozen=True)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray
    X: float

    @property
    def domain(self):
        return (-self.X, self.X)


def composite_gauss(X, panels=40, per_panel=32):
    """Gauss-Legendre on ``panels`` cosine-graded panels of ``[-X, X]``."""
    nodes, weights = gauss_on_edges(cosine_grid(-X, X, panels + 1), per_panel)
    return QuadRule(nodes, weights, float(X))


def truncation_bound(spec, nmax, solver=None):
    solver = solver or MrsSolver(spec)
    return max(PAD * solver.mrs_number(4 * nmax), q_level_point(spec.base(), MIN_TAIL_LEVEL))


def _recurrence_values(x, alpha, sb, kmax):
    """Matrix ``[p_0(x), ..., p_kmax(x)]`` with ``sb = sqrt(beta)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (kmax + 1,))
    out[..., 0] = 1.0 / sb[0]
    if kmax >= 1:
        out[..., 1] = (x - alpha[0]) * out[..., 0] / sb[1]
    for k in range(1, kmax):
        out[..., k + 1] = ((x - alpha[k]) * out[..., k] - sb[k] * out[..., k - 1]) / sb[k + 1]
    return out


def _recurrence_derivatives(x, alpha, sb, kmax, order):
    """Matrix of ``p_k^{(order)}(x)`` obtained by differentiating the recurrence."""
    vals = _recurrence_values(x, alpha, sb, kmax)
    for d in range(1, order + 1):
        prev = vals
        cur = np.zeros_like(prev)
        for k in range(0, kmax):
            lower = cur[..., k - 1] if k >= 1 else 0.0
            cur[..., k + 1] = ((x - alpha[k]) * cur[..., k] + d * prev[..., k] - sb[k] * lower) / sb[k + 1]
        vals = cur
    return vals


class OrthoBasis:
    """Orthonormal system ``p_0..p_nmax`` for ``w^2`` with its quadrature rule."""

    def __init__(self, spec, nmax, alpha_rec, beta_rec, quad, gram_residual=math.nan):
        self.spec = spec
        self.nmax = int(nmax)
        self.alpha_rec = np.asarray(alpha_rec, dtype=float)
        self.beta_rec = np.asarray(beta_rec, dtype=float)
        self.quad = quad
        self.gram_residual = gram_residual
        self._sb = np.sqrt(self.beta_rec)
        self._w_nodes = np.asarray(eval_w(spec, quad.nodes))
        self.measure = quad.weights * self._w_nodes**2
        self._cache = {}
        self._lock = threading.Lock()

    @property
    def X(self):
        return self.quad.X

    @property
    def solver(self):
        """MRS solver for the underlying ``Q`` (created on first use)."""
        with self._lock:
            if "solver" not in self._cache:
                self._cache["solver"] = MrsSolver(self.spec)
            return self._cache["solver"]

    def __repr__(self):
        return f"OrthoBasis({self.spec.label()}, nmax={self.nmax}, X={self.X:.4g})"

    def _check(self, k):
        if k < 0 or k > self.nmax:
            raise DegreeOutOfRange(f"degree {k} outside 0..{self.nmax}")

    def weight(self, x):
        return eval_w(self.spec, x)

    def values(self, x, kmax=None):
        kmax = self.nmax if kmax is None else kmax
        self._check(kmax)
        return _recurrence_values(x, self.alpha_rec, self._sb, kmax)

    def derivative_values(self, x, kmax, order):
        self._check(kmax)
        if order == 0:
            return self.values(x, kmax)
        return _recurrence_derivatives(x, self.alpha_rec, self._sb, kmax, order)

    def eval_p(self, k, x):
        """``p_k(x)`` by forward recurrence."""
        self._check(k)
        v = self.values(x, k)[..., k]
        return float(v) if np.ndim(v) == 0 else v

    def node_values(self):
        """``p_k`` at the quadrature nodes (cached)."""
        with self._lock:
            v = self._cache.get("nodes")
            if v is None:
                v = self.values(self.quad.nodes)
                self._cache["nodes"] = v
        return v

    def gram(self, kmax=None):
        kmax = self.nmax if kmax is None else kmax
        P = self.node_values()[:, : kmax + 1]
        return P.T @ (self.measure[:, None] * P)

    def project(self, values, kmax=None):
        """Coefficients ``int g p_k w^2`` of nodal data ``values`` for ``k <= kmax``."""
        kmax = self.nmax if kmax is None else kmax
        self._check(kmax)
        return self.node_values()[:, : kmax + 1].T @ (self.measure * values)

    def diff_matrix(self):
        """``D`` with ``p_k' = sum_j D[j, k] p_j`` (cached, thread-safe)."""
        with self._lock:
            D = self._cache.get("D")
        if D is None:
            dvals = _recurrence_derivatives(self.quad.nodes, self.alpha_rec, self._sb, self.nmax, 1)
            D = self.node_values().T @ (self.measure[:, None] * dvals)
            D = np.triu(D, 1)
            with self._lock:
                self._cache["D"] = D
        return D

    def integration_matrix(self):
        """``J`` with ``int_0^x p_k = sum_j J[j, k] p_j`` for ``k < nmax`` (cached)."""
        with self._lock:
            J = self._cache.get("J")
        if J is None:
            x = self.quad.nodes
            u, wu = np.polynomial.legendre.leggauss(self.nmax // 2 + 2)
            # int_0^x g = (x/2) sum_i wu_i g(x (u_i + 1)/2)
            pts = 0.5 * x[:, None] * (u[None, :] + 1.0)
            vals = self.values(pts, self.nmax - 1)
            integ = 0.5 * x[:, None] * np.einsum("i,nik->nk", wu, vals)
            J = self.node_values().T @ (self.measure[:, None] * integ)
            # int_0^x p_k has degree k+1
            J = np.triu(J, -1)
            J = np.hstack([J, np.zeros((self.nmax + 1, 1))])
            with self._lock:
                self._cache["J"] = J
        return J

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "nmax": self.nmax,
            "alpha_rec": self.alpha_rec.tolist(),
            "beta_rec": self.beta_rec.tolist(),
            "domain": [-self.X, self.X],
            "panels": int(self.quad.nodes.size // 32),
        }

    @classmethod
    def from_dict(cls, d):
        spec = WeightSpec.from_dict(d["spec"])
        X = float(d["domain"][1])
        quad = composite_gauss(X, int(d.get("panels", 40)), 32)
        return cls(spec, d["nmax"], d["alpha_rec"], d["beta_rec"], quad)


def _stieltjes(x, lam, nmax):
    beta = np.empty(nmax + 1)
    alpha = np.zeros(nmax + 1)
    beta[0] = lam.sum()
    p_prev = np.zeros_like(x)
    p_cur = np.full_like(x, 1.0 / math.sqrt(beta[0]))
    for k in range(nmax):
        # even weight: the x p_k^2 moments vanish, keep alpha exactly 0
        v = x * p_cur - (math.sqrt(beta[k]) * p_prev if k > 0 else 0.0)
        b = float(np.dot(lam, v * v))
        if not b > 0:
            raise LossOfOrthogonality(f"beta_{k + 1} = {b} is not positive")
        beta[k + 1] = b
        p_prev, p_cur = p_cur, v / math.sqrt(b)
    return alpha, beta


def build_basis(spec, nmax, quad_panels=40, per_panel=32, solver=None, max_doublings=4):
    """Orthonormal basis for ``w^2`` up to degree ``nmax``.

    Panels are doubled until the mass of ``w^2`` is stable to 1e-12.
    """
    nmax = int(nmax)
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    if nmax > NMAX_CAP:
        raise LossOfOrthogonality(f"nmax={nmax} exceeds the double-precision cap {NMAX_CAP}")
    solver = solver or MrsSolver(spec)
    X = truncation_bound(spec, nmax, solver)
    panels = quad_panels
    quad = composite_gauss(X, panels, per_panel)
    mass = float(np.dot(quad.weights, np.asarray(eval_w(spec, quad.nodes)) ** 2))
    for _ in range(max_doublings):
        finer = composite_gauss(X, 2 * panels, per_panel)
        mass2 = float(np.dot(finer.weights, np.asarray(eval_w(spec, finer.nodes)) ** 2))
        if abs(mass2 - mass) <= 1e-12 * mass2:
            break
        panels, quad, mass = 2 * panels, finer, mass2
    lam = quad.weights * np.asarray(eval_w(spec, quad.nodes)) ** 2
    alpha, beta = _stieltjes(quad.nodes, lam, nmax)
    basis = OrthoBasis(spec, nmax, alpha, beta, quad)
    basis._cache["solver"] = solver
    resid = float(np.max(np.abs(basis.gram() - np.eye(nmax + 1))))
    basis.gram_residual = resid
    if resid > 1e-6:
        raise LossOfOrthogonality(f"Gram residual {resid:.3g} exceeds 1e-6")
    return basis


@dataclass
class FourierState:
    coeffs: np.ndarray
    n: int


def fourier_coeffs(basis, f, n):
    """``a_k(w^2, f) = int f p_k w^2`` for ``k = 0..2n`` by quadrature."""
    n = int(n)
    if 2 * n > basis.nmax:
        raise DegreeOutOfRange(f"need 2n <= nmax, got n={n}, nmax={basis.nmax}")
    with np.errstate(all="ignore"):
        fx = np.asarray(f(basis.quad.nodes), dtype=float) * np.ones_like(basis.quad.nodes)
    fx = np.where(basis.measure == 0.0, 0.0, fx)
    return FourierState(basis.project(fx, 2 * n), n)


def partial_sum_coefficients(state, m):
    if m < 0 or m - 1 > len(state.coeffs) - 1:
        raise DegreeOutOfRange(f"s_{m} needs coefficients up to {m - 1}")
    c = np.zeros(len(state.coeffs))
    c[:m] = state.coeffs[:m]
    return c


def partial_sum(state, basis, m, x):
    """``s_m(f, x) = sum_{k < m} a_k p_k(x)``."""
    c = partial_sum_coefficients(state, m)
    if m == 0:
        return np.zeros_like(np.asarray(x, dtype=float)) + 0.0
    return basis.values(x, m - 1) @ c[:m]


def vp_filter(n, length):
    """``tau_k``: 1 up to ``n``, then ``(2n - k)/n``, 0 from ``2n`` on."""
    k = np.arange(length)
    return np.clip((2 * n - k) / n, 0.0, 1.0)


def vp_coefficients(state, n):
    """Coordinates of ``v_n(f)`` in the ``p_k`` basis (degree ``2n - 1``)."""
    n = int(n)
    if n < 1 or 2 * n - 1 > len(state.coeffs) - 1:
        raise DegreeOutOfRange(f"v_{n} needs coefficients up to {2 * n - 1}")
    c = state.coeffs * vp_filter(n, len(state.coeffs))
    c[2 * n:] = 0.0
    return c


def vallee_poussin(state, basis, n, x):
    """``v_n(f, x) = (1/n) sum_{j=n+1}^{2n} s_j(f, x)``."""
    c = vp_coefficients(state, n)
    return basis.values(x, 2 * n - 1) @ c[: 2 * n]


def vp_boundedness_check(basis, f, n, p, basis_w14=None, grid=None):
    """Ratios for the two boundedness displays of the de la Vallee Poussin means.

    ``ratio_bound = ||v_n(f) w||_p / ||T^{1/4} w f||_p`` and
    ``ratio_error = ||(f - v_n f) w||_p / E_{p,n}(w_{1/4}, f)``.
    """
    from .bestapprox import E_value

    if basis_w14 is None:
        basis_w14 = build_basis(basis.spec.with_t(basis.spec.t_exponent + 0.25), basis.nmax)
    state = fourier_coeffs(basis, f, n)
    c = vp_coefficients(state, n)[: 2 * n]
    if math.isinf(p):
        x = grid if grid is not None else sup_grid(basis.X, basis.X, 4001, 0)
        wts = None
    else:
        x, wts = basis.quad.nodes, basis.quad.weights
    w = np.asarray(basis.weight(x))
    fx = np.asarray(f(x), dtype=float) * np.ones_like(x)
    vx = basis.values(x, 2 * n - 1) @ c
    T14 = np.asarray(eval_T(basis.spec, x)) ** 0.25
    lhs1 = lp_norm(vx * w, p, wts)
    rhs1 = lp_norm(T14 * w * fx, p, wts)
    lhs2 = lp_norm((fx - vx) * w, p, wts)
    rhs2 = E_value(f, basis_w14, n, p)
    return {
        "n": n,
        "p": p,
        "vn_norm": lhs1,
        "T14_norm": rhs1,
        "ratio_bound": lhs1 / rhs1 if rhs1 > 0 else math.nan,
        "vn_error": lhs2,
        "E_w14": rhs2,
        "ratio_error": lhs2 / rhs2 if rhs2 > 0 else math.nan,
    }
