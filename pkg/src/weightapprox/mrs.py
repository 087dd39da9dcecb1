"""Mhaskar-Rakhmanov-Saff numbers, the inverse map sigma and the band function.

``a_x`` is the positive root of ``G(a) = x`` where

    G(a) = (2/pi) * int_0^1 a u Q'(a u) / sqrt(1 - u^2) du
         = (2/pi) * int_0^{pi/2} a sin(th) Q'(a sin(th)) dth.

The second form has no endpoint singularity and is integrated with
Gauss-Legendre. ``G`` is strictly increasing, so the root is unique.
"""

from __future__ import annotations

import math
import threading

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure, NonConvergence, OutOfRange
from .weights import eval_Q, eval_T

U_MIN = 1e-3
U_MAX = 1e12


class MrsSolver:
    """Cached evaluator of ``a_x``, ``sigma(t)`` and ``Phi_t(x)`` for one weight.

    Only the exponent function ``Q`` of ``spec`` matters; transforms carried
    by ``spec`` are ignored.
    """

    def __init__(self, spec, quad_nodes=64, tol=1e-10, max_iter=200):
        self.spec = spec.base()
        self.quad_nodes = quad_nodes
        self.tol = tol
        self.max_iter = max_iter
        u, wts = np.polynomial.legendre.leggauss(quad_nodes)
        theta = (u + 1.0) * (math.pi / 4.0)
        self._sin = np.sin(theta)
        self._wts = wts * (math.pi / 4.0)
        self._cache = {}
        self._lock = threading.Lock()

    def G(self, a):
        """The defining integral; ``inf`` when ``Q'`` overflows."""
        xs = a * self._sin
        with np.errstate(all="ignore"):
            val = (2.0 / math.pi) * np.dot(self._wts, xs * np.asarray(eval_Q(self.spec, xs, 1)))
        return float(val) if np.isfinite(val) else math.inf

    def _log_residual(self, loga, x):
        g = self.G(math.exp(loga))
        if g == 0.0:
            return -1e300
        if math.isinf(g):
            return 1e300
        return math.log(g) - math.log(x)

    def _solve(self, x):
        limit = math.log(1e300)
        lo = hi = 0.0
        step = 1.0
        if self._log_residual(0.0, x) < 0:
            while self._log_residual(hi, x) < 0:
                lo, hi = hi, hi + step
                step *= 2.0
                if hi > limit:
                    raise BracketFailure(f"no bracket for a_x below 1e300 (x={x})")
        else:
            while self._log_residual(lo, x) > 0:
                hi, lo = lo, lo - step
                step *= 2.0
                if lo < -limit:
                    raise BracketFailure(f"no bracket for a_x above 1e-300 (x={x})")
        try:
            loga, info = brentq(
                self._log_residual, lo, hi, args=(x,), xtol=1e-15, rtol=1e-15,
                maxiter=self.max_iter, full_output=True,
            )
        except RuntimeError as exc:
            raise NonConvergence(str(exc)) from exc
        a = math.exp(loga)
        if abs(self.G(a) - x) > self.tol * x:
            raise NonConvergence(f"residual of G(a_x) - x too large at x={x}")
        return a

    def mrs_number(self, x):
        """``a_x`` for ``x > 0``."""
        x = float(x)
        if not x > 0:
            raise ValueError("MRS numbers need x > 0")
        a = self._cache.get(x)
        if a is None:
            a = self._solve(x)
            with self._lock:
                self._cache[x] = a
        return a

    def cached(self):
        """Sorted ``(x, a_x)`` pairs computed so far."""
        with self._lock:
            return sorted(self._cache.items())

    def ratio(self, u):
        return self.mrs_number(u) / u

    def sigma_parameter(self, t):
        """The ``u`` with ``a_u / u = t``."""
        t = float(t)
        if not t > 0:
            raise ValueError("sigma needs t > 0")
        hi_t, lo_t = self.ratio(U_MIN), self.ratio(U_MAX)
        if not lo_t <= t <= hi_t:
            raise OutOfRange(f"t={t} outside attainable range [{lo_t:.3g}, {hi_t:.3g}]")

        def h(logu):
            return math.log(self.ratio(math.exp(logu))) - math.log(t)

        logu = brentq(h, math.log(U_MIN), math.log(U_MAX), xtol=1e-14, rtol=1e-15, maxiter=self.max_iter)
        return math.exp(logu)

    def sigma(self, t):
        """``sigma(t) = a_u`` where ``a_u / u = t``."""
        return self.mrs_number(self.sigma_parameter(t))

    def phi(self, t, x):
        """``Phi_t(x) = sqrt|1 - |x|/sigma(t)| + T(sigma(t))^(-1/2)``."""
        s = self.sigma(t)
        xa = np.abs(np.asarray(x, dtype=float))
        val = np.sqrt(np.abs(1.0 - xa / s)) + eval_T(self.spec, s) ** -0.5
        return float(val) if val.ndim == 0 else val


def mrs_sanity(solver, xs, spread_bound=100.0):
    """Empirical ranges of the standard equivalences for MRS numbers.

    For each relation the ratio of both sides is tabulated over ``xs``; a
    relation passes when ``max/min`` of its ratio is below ``spread_bound``.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 1) or np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be increasing and > 1")
    spec = solver.spec
    a = np.array([solver.mrs_number(x) for x in xs])
    a2 = np.array([solver.mrs_number(2 * x) for x in xs])
    T = np.asarray(eval_T(spec, a))
    ratios = {
        "a_2x/a_x": a2 / a,
        "Q'(a_x) a_x / (x sqrt T)": np.abs(np.asarray(eval_Q(spec, a, 1))) * a / (xs * np.sqrt(T)),
        "Q(a_x) sqrt T / x": np.asarray(eval_Q(spec, a, 0)) * np.sqrt(T) / xs,
    }
    if not spec.is_freud_type:
        # a_t <= C(eta) t^eta, eta = 1/4
        ratios["a_x / x^0.25"] = a / xs**0.25
    report = {"xs": xs.tolist(), "a": a.tolist(), "relations": {}, "passed": True}
    for name, r in ratios.items():
        spread = float(r.max() / r.min())
        ok = bool(np.all(np.isfinite(r)) and r.min() > 0 and spread < spread_bound)
        report["relations"][name] = {"min": float(r.min()), "max": float(r.max()), "spread": spread, "passed": ok}
        report["passed"] &= ok
    return report
