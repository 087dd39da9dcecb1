"""Weighted modulus of smoothness and the bounded-variation functional.

``omega_p(f, w, t)`` is the sum of

* a main term: the sup over ``0 < h <= t`` of the ``L_p(|x| <= sigma(2t))``
  norm of ``w(x) {f(x + h Phi_t(x)/2) - f(x - h Phi_t(x)/2)}``;
* a tail term: ``inf_c ||w (f - c)||_{L_p(|x| >= sigma(4t))}``.

Since ``sigma`` decreases, ``sigma(4t) < sigma(2t)`` and the two regions
overlap on ``sigma(4t) <= |x| <= sigma(2t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .bestapprox import E_value
from .errors import NormDiverges, PreconditionFail
from .norms import cosine_grid, gauss_on_edges, golden_min, lp_norm, region_norm
from .weights import eval_T, eval_w, q_level_point

# Q at the outer end of every tail region; w is below e^-700 there
TAIL_LEVEL = 700.0


@dataclass
class ModulusReport:
    main_term: float
    tail_term: float
    t: float
    p: float
    details: dict = field(default_factory=dict)

    @property
    def omega(self):
        return self.main_term + self.tail_term

    def to_dict(self):
        p = "inf" if math.isinf(self.p) else self.p
        return {"main_term": self.main_term, "tail_term": self.tail_term, "omega": self.omega,
                "t": self.t, "p": p, **self.details}


def _values(f, x):
    with np.errstate(all="ignore"):
        return np.broadcast_to(np.asarray(f(x), dtype=float), np.shape(x))


def _weighted(f, spec):
    def g(x):
        w = np.asarray(eval_w(spec, x))
        with np.errstate(all="ignore"):
            v = w * _values(f, x)
        return np.where(w == 0.0, 0.0, v)
    return g


def h_grid(t, h_samples=32):
    """``h_samples`` geometric step sizes in ``(t/100, t]``, largest first."""
    return t * 100.0 ** (-np.arange(h_samples) / h_samples)


def main_term(f, solver, p, t, h_samples=32, spec=None):
    """Sup over ``h`` of the symmetric-difference norm on ``|x| <= sigma(2t)``;
    returns ``(value, argmax h)``."""
    spec = spec or solver.spec
    s1 = solver.sigma(t)
    s2 = solver.sigma(2 * t)
    tinv = eval_T(solver.spec, s1) ** -0.5
    best, best_h = 0.0, float(t)
    for h in h_grid(t, h_samples):
        def diff(x, h=h):
            phi = np.sqrt(np.abs(1.0 - np.abs(x) / s1)) + tinv
            d = 0.5 * h * phi
            w = np.asarray(eval_w(spec, x))
            with np.errstate(all="ignore"):
                v = w * (_values(f, x + d) - _values(f, x - d))
            return np.where(w == 0.0, 0.0, v)
        val = region_norm(diff, [(-s2, 0.0), (0.0, s2)], p)
        if val > best:
            best, best_h = val, float(h)
    return best, best_h


def tail_objective(f, solver, p, t, spec=None):
    """The tail's ``c -> ||w (f - c)||_p`` over ``|x| >= sigma(4t)`` with the
    bracket ``[min f, max f]`` that contains its minimiser.

    Returns ``(norm, lo, hi)``, or ``None`` when the tail region is empty.
    """
    spec = spec or solver.spec
    s4 = solver.sigma(4 * t)
    xt = q_level_point(solver.spec, TAIL_LEVEL)
    if xt <= s4:
        return None
    intervals = [(-xt, -s4), (s4, xt)]
    # sample f once on the region, then minimise over c cheaply
    if math.isinf(p):
        x = np.concatenate([cosine_grid(a, b, 4001) for a, b in intervals])
        wts = None
    else:
        parts = [gauss_on_edges(cosine_grid(a, b, 49), 32) for a, b in intervals]
        x = np.concatenate([n for n, _ in parts])
        wts = np.concatenate([w for _, w in parts])
    w = np.asarray(eval_w(spec, x))
    fx = _values(f, x)
    live = w > 0
    w, fx = w[live], fx[live]
    wts = None if wts is None else wts[live]
    if fx.size == 0:
        return None

    def norm(c):
        return lp_norm(w * (fx - c), p, wts)

    return norm, float(np.min(fx)), float(np.max(fx))


def tail_term(f, solver, p, t, spec=None):
    """``inf_c ||w (f - c)||_p`` over ``|x| >= sigma(4t)``; returns ``(value, c)``."""
    obj = tail_objective(f, solver, p, t, spec)
    if obj is None:
        return 0.0, 0.0
    norm, lo, hi = obj
    if hi - lo <= 1e-300:
        return norm(lo), lo
    c, val = golden_min(norm, lo, hi)
    return float(val), float(c)


def omega(f, solver, p, t, h_samples=32, spec=None):
    """Weighted modulus of smoothness ``omega_p(f, w, t)``.

    ``solver`` fixes ``Q`` (hence ``sigma`` and ``Phi_t``); the norm weight is
    ``spec`` when given, else ``w = exp(-Q)``.
    """
    p = float(p)
    if p < 1:
        raise ValueError("p < 1 is not supported")
    t = float(t)
    if not t > 0:
        raise ValueError("t must be positive")
    m, h_star = main_term(f, solver, p, t, h_samples, spec)
    tail, c_star = tail_term(f, solver, p, t, spec)
    details = {"h_argmax": h_star, "c_argmin": c_star, "sigma_2t": solver.sigma(2 * t),
               "sigma_4t": solver.sigma(4 * t)}
    return ModulusReport(float(m), float(tail), t, p, details)


def bv_integral(f_prime, spec):
    """``int w |f'|`` over the truncation domain ``|x| <= X`` with ``Q(X) = 700``."""
    spec = spec.base() if hasattr(spec, "base") else spec
    X = q_level_point(spec, TAIL_LEVEL)

    def integrand(x):
        return float(eval_w(spec, x)) * abs(float(_values(f_prime, np.float64(x))))

    edge = max(integrand(X), integrand(-X))
    total = 0.0
    for a, b in ((-X, 0.0), (0.0, X)):
        val, _ = quad(integrand, a, b, limit=500, epsabs=1e-14, epsrel=1e-12)
        total += val
    if not math.isfinite(total) or edge * X > 1e-10 * max(total, 1e-300):
        raise NormDiverges(f"w |f'| does not decay at the truncation boundary (value {edge:.3g})")
    return total


@dataclass
class JacksonRow:
    n: int
    a_n: float
    E: float
    omega: float
    bound: float

    @property
    def ratio1(self):
        return self.E / self.omega if self.omega > 0 else 0.0

    @property
    def ratio2(self):
        return self.E / self.bound if self.bound > 0 else 0.0

    def as_list(self):
        return [self.n, self.a_n, self.E, self.omega, self.bound, self.ratio1, self.ratio2]


JACKSON_COLUMNS = ["n", "a_n", "E", "omega", "bound", "ratio1", "ratio2"]


def jackson_check(f, basis, solver, p, n_list, k=1, f_k=None):
    """Degree of approximation against the modulus and the derivative bound.

    For each ``n``: ``E_{p,n}(w, f)``, ``omega_p(f, w, a_n/n)`` and
    ``(a_n/n)^k ||f^{(k)} w||_p`` with ``f_k = f^{(k)}``. Returns a dict with
    the rows, the ratio spreads and ``finite``.
    """
    p = float(p)
    spec = basis.spec
    rows = []
    for n in n_list:
        a_n = solver.mrs_number(n)
        t = a_n / n
        E = E_value(f, basis, n, p)
        om = omega(f, solver, p, t, spec=spec).omega
        if f_k is None:
            bound = math.nan
        else:
            norm = region_norm(_weighted(f_k, spec), [(-basis.X, 0.0), (0.0, basis.X)], p)
            bound = t**k * norm
        rows.append(JacksonRow(int(n), a_n, E, om, bound))
    r1 = np.array([r.ratio1 for r in rows])
    r2 = np.array([r.ratio2 for r in rows])
    finite = bool(np.all(np.isfinite(r1)) and (f_k is None or np.all(np.isfinite(r2))))
    return {"rows": rows, "finite": finite, "spread1": _spread(r1), "spread2": _spread(r2)}


def _spread(r):
    r = r[np.isfinite(r) & (r > 0)]
    return float(r.max() / r.min()) if r.size else math.nan


def omega_vanishes_check(f, solver, t_list, spec=None):
    """``omega_inf(f, w, t)`` along a decreasing ``t_list``.

    Requires ``sqrt(T) w f -> 0`` at the tail end (``PreconditionFail``
    otherwise); passes when the last value is below a tenth of the first.
    """
    t_list = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be decreasing")
    spec = spec or solver.spec
    xt = q_level_point(solver.spec, TAIL_LEVEL)
    probe = np.linspace(0.0, xt, 2001)[1:]
    with np.errstate(all="ignore"):
        g = np.sqrt(np.asarray(eval_T(solver.spec, probe))) * np.asarray(eval_w(spec, probe)) * np.abs(_values(f, probe))
        g = g + np.sqrt(np.asarray(eval_T(solver.spec, -probe))) * np.asarray(eval_w(spec, -probe)) * np.abs(_values(f, -probe))
    g = np.where(np.isfinite(g), g, np.inf)
    peak = float(np.max(g))
    if peak > 0 and not g[-1] <= 1e-6 * peak:
        raise PreconditionFail("sqrt(T) w f does not vanish at the end of the tail region")
    values = [omega(f, solver, math.inf, t, spec=spec).omega for t in t_list]
    first = values[0]
    passed = bool(first == 0.0 or values[-1] < first / 10.0)
    return {"t": t_list, "omega": values, "passed": passed}
