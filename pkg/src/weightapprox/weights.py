"""Exponential weights ``w = exp(-Q)`` on the real line.

Three families are supported:

* ``FreudPower``: ``Q(x) = c |x|^alpha`` with ``alpha > 1``.
* ``IterExp``: ``Q(x) = |x|^m (exp_l(|x|^alpha) - a~ exp_l(0))`` where
  ``exp_l`` is the ``l``-fold iterated exponential and ``a~ = 0`` iff
  ``alpha == 0``.
* ``PowerTower``: ``Q(x) = (1 + |x|)^(|x|^alpha) - 1`` with ``alpha > 1``.

A spec may additionally carry a power ``mu`` of ``T(x) = x Q'(x) / Q(x)``
(the weight becomes ``T^mu w``) and an L_p flavour that divides (sharp) or
multiplies (flat) by ``{(1 + |Q'|)(1 + |x|)^beta}^(1/p)``.

Everything is evaluated on ``|x|`` and mirrored, so ``Q``, ``w`` and ``T``
are bitwise even and odd derivatives bitwise odd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.optimize import brentq
from sympy.codegen.cfunctions import expm1, log1p

from .errors import DomainError, GridTooSmall, UnsupportedOrder

FREUD = "FreudPower"
ITEREXP = "IterExp"
TOWER = "PowerTower"
FAMILIES = (FREUD, ITEREXP, TOWER)

MAX_ORDER = 8
MAX_L = 3


@dataclass(frozen=True)
class LpFlavor:
    p: float
    beta: float
    sign: str = "sharp"

    def __post_init__(self):
        if not (1.0 <= self.p <= math.inf):
            raise ValueError(f"lp_flavor.p must lie in [1, inf], got {self.p}")
        if self.beta <= 0:
            raise ValueError("lp_flavor.beta must be positive")
        if self.sign not in ("sharp", "flat"):
            raise ValueError("lp_flavor.sign must be 'sharp' or 'flat'")

    def to_dict(self):
        p = "inf" if math.isinf(self.p) else self.p
        return {"p": p, "beta": self.beta, "sign": self.sign}

    @classmethod
    def from_dict(cls, d):
        return cls(p=float(d["p"]), beta=float(d["beta"]), sign=d.get("sign", "sharp"))


@dataclass(frozen=True)
class WeightSpec:
    """Parametric description of an exponential weight.

    Use the :meth:`freud`, :meth:`iterexp` and :meth:`power_tower`
    constructors rather than filling the fields by hand.
    """

    family: str
    alpha: float
    c: float = 1.0
    l: int = 1
    m: float = 0.0
    t_exponent: float = 0.0
    lp_flavor: LpFlavor | None = field(default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.family == FREUD:
            if not self.alpha > 1 or not self.c > 0:
                raise ValueError("FreudPower needs alpha > 1 and c > 0")
        elif self.family == ITEREXP:
            if int(self.l) != self.l or not 1 <= self.l <= MAX_L:
                raise ValueError(f"IterExp needs an integer 1 <= l <= {MAX_L}")
            if self.alpha < 0 or self.m < 0 or not self.alpha + self.m > 1:
                raise ValueError("IterExp needs alpha >= 0, m >= 0, alpha + m > 1")
        elif self.family == TOWER:
            if not self.alpha > 1:
                raise ValueError("PowerTower needs alpha > 1")

    @classmethod
    def freud(cls, alpha, c=1.0):
        return cls(FREUD, alpha=float(alpha), c=float(c))

    @classmethod
    def iterexp(cls, l, alpha, m=0.0):
        return cls(ITEREXP, alpha=float(alpha), l=int(l), m=float(m))

    @classmethod
    def power_tower(cls, alpha):
        return cls(TOWER, alpha=float(alpha))

    def with_t(self, mu):
        """Same ``Q`` with the ``T^mu`` factor set to ``mu``."""
        return replace(self, t_exponent=float(mu))

    def with_lp(self, p, beta, sign="sharp"):
        return replace(self, lp_flavor=LpFlavor(float(p), float(beta), sign))

    def base(self):
        """The bare weight ``exp(-Q)`` with no transforms."""
        return replace(self, t_exponent=0.0, lp_flavor=None)

    @property
    def q_key(self):
        return (self.family, self.alpha, self.c, self.l, self.m)

    @property
    def params(self):
        if self.family == FREUD:
            return {"alpha": self.alpha, "c": self.c}
        if self.family == ITEREXP:
            return {"l": self.l, "alpha": self.alpha, "m": self.m}
        return {"alpha": self.alpha}

    @property
    def is_freud_type(self):
        """True when T is bounded (Freud-type weight)."""
        return self.family == FREUD or (self.family == ITEREXP and self.alpha == 0)

    @property
    def smooth_at_zero(self):
        return _smooth_at_zero(self.q_key)

    def to_dict(self):
        return {
            "family": self.family,
            "params": self.params,
            "t_exponent": self.t_exponent,
            "lp_flavor": None if self.lp_flavor is None else self.lp_flavor.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        params = dict(d.get("params", {}))
        family = d["family"]
        if family == FREUD:
            spec = cls.freud(params["alpha"], params.get("c", 1.0))
        elif family == ITEREXP:
            spec = cls.iterexp(params.get("l", 1), params["alpha"], params.get("m", 0.0))
        elif family == TOWER:
            spec = cls.power_tower(params["alpha"])
        else:
            raise ValueError(f"unknown weight family {family!r}")
        spec = spec.with_t(d.get("t_exponent", 0.0) or 0.0)
        lp = d.get("lp_flavor")
        if lp:
            spec = replace(spec, lp_flavor=LpFlavor.from_dict(lp))
        return spec

    def label(self):
        p = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        s = f"{self.family}({p})"
        if self.t_exponent:
            s += f"*T^{self.t_exponent:g}"
        if self.lp_flavor is not None:
            lf = self.lp_flavor
            s += f"[{lf.sign},p={lf.p:g},beta={lf.beta:g}]"
        return s


def _sym_number(v):
    v = float(v)
    return sp.Integer(int(v)) if v.is_integer() else sp.Float(v)


def _is_even_int(v):
    return float(v).is_integer() and int(v) % 2 == 0


@lru_cache(maxsize=None)
def _smooth_at_zero(key):
    family, alpha, _c, _l, m = key
    if family == FREUD:
        return _is_even_int(alpha)
    if family == ITEREXP:
        return (alpha == 0 or _is_even_int(alpha)) and _is_even_int(m)
    return False


@lru_cache(maxsize=None)
def _q_expr(key):
    """Symbolic Q on the positive half-line."""
    family, alpha, c, l, m = key
    x = sp.Symbol("x", positive=True)
    a = _sym_number(alpha)
    if family == FREUD:
        return x, _sym_number(c) * x**a
    if family == ITEREXP:
        if alpha == 0:
            inner = sp.Integer(1)
            for _ in range(l):
                inner = sp.exp(inner)
            return x, x ** _sym_number(m) * inner
        # exp_l(u) - exp_l(0) built from expm1 so it stays accurate near 0
        d = expm1(x**a)
        e0 = sp.Integer(1)
        for _ in range(1, l):
            e0 = sp.exp(e0)
            d = e0 * expm1(d)
        return x, x ** _sym_number(m) * d
    return x, expm1(x**a * log1p(x))


@lru_cache(maxsize=None)
def _q_derivative(key, order):
    x, q = _q_expr(key)
    expr = sp.diff(q, x, order) if order else q
    return sp.lambdify(x, expr, "numpy")


def t_at_zero(spec):
    """lim_{x -> 0} T(x), computed from the family's leading power."""
    if spec.family == FREUD:
        return spec.alpha
    if spec.family == ITEREXP:
        return spec.m if spec.alpha == 0 else spec.alpha + spec.m
    return spec.alpha + 1.0


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _finish(vals, scalar):
    return float(vals) if scalar else vals


def eval_Q(spec, x, order=0):
    """``Q^{(order)}(x)``; vectorised over ``x``."""
    order = int(order)
    if order < 0 or order > MAX_ORDER:
        raise UnsupportedOrder(f"derivative order {order} not in 0..{MAX_ORDER}")
    arr, scalar = _as_array(x)
    ax = np.abs(arr)
    at_zero = ax == 0.0
    if order >= 2 and at_zero.any() and not spec.smooth_at_zero:
        raise DomainError(f"Q^({order}) is undefined at x = 0 for {spec.label()}")
    fn = _q_derivative(spec.q_key, order)
    with np.errstate(all="ignore"):
        safe = np.where(at_zero, 1.0, ax)
        vals = np.broadcast_to(np.asarray(fn(safe), dtype=float), ax.shape).copy()
        if at_zero.any():
            if order <= 1:
                vals[at_zero] = 0.0
            else:
                vals[at_zero] = float(fn(0.0))
    if order % 2 == 1:
        vals = np.where(arr < 0, -vals, vals)
    return _finish(vals, scalar)


def eval_T(spec, x):
    """``T(x) = x Q'(x) / Q(x)`` with ``T(0)`` set to its limit."""
    arr, scalar = _as_array(x)
    ax = np.abs(arr)
    q = np.asarray(eval_Q(spec, ax, 0), dtype=float)
    q1 = np.asarray(eval_Q(spec, ax, 1), dtype=float)
    with np.errstate(all="ignore"):
        t = ax * q1 / q
    t = np.where(q == 0.0, t_at_zero(spec), t)
    # beyond the float range of Q the ratio is inf/inf; T grows there
    t = np.where(np.isnan(t), np.inf, t)
    return _finish(t, scalar)


def log_w(spec, x):
    """Natural log of the weight; ``-inf`` where it underflows."""
    arr, scalar = _as_array(x)
    ax = np.abs(arr)
    q = np.asarray(eval_Q(spec, ax, 0), dtype=float)
    out = -q
    with np.errstate(all="ignore"):
        if spec.t_exponent:
            out = out + spec.t_exponent * np.log(eval_T(spec, ax))
        lf = spec.lp_flavor
        if lf is not None and not math.isinf(lf.p):
            q1 = np.abs(np.asarray(eval_Q(spec, ax, 1), dtype=float))
            extra = (np.log1p(q1) + lf.beta * np.log1p(ax)) / lf.p
            out = out - extra if lf.sign == "sharp" else out + extra
    out = np.where(np.isnan(out) | ~np.isfinite(q), -np.inf, out)
    return _finish(out, scalar)


def eval_w(spec, x):
    """The weight value, clamped to exact 0 on underflow."""
    lw = log_w(spec, x)
    with np.errstate(under="ignore"):
        return np.exp(lw) if not isinstance(lw, float) else math.exp(lw)


def weight_fn(spec):
    """Vectorised callable ``x -> w(x)`` for the spec."""
    return lambda x: eval_w(spec, x)


def q_level_point(spec, level=700.0):
    """Positive x with ``Q(x) = level``."""
    hi = 1.0
    while eval_Q(spec, hi) < level:
        hi *= 2.0
        if hi > 1e150:
            raise DomainError("Q never reaches the requested level")
    return brentq(lambda t: eval_Q(spec, t) - level, 0.0, hi, xtol=1e-14, rtol=1e-14)


def standard_grid(spec, npts=128, xmin=1e-2, level=700.0):
    """Symmetric sample grid excluding 0, out to where ``Q`` hits ``level``."""
    xmax = q_level_point(spec, level)
    pos = np.geomspace(min(xmin, xmax / 10), xmax, npts)
    return np.concatenate([-pos[::-1], pos])


@dataclass
class WeightClassReport:
    condition_flags: dict
    lambda_hat: float
    T_min: float
    C_qi: float
    K: float
    grid: np.ndarray
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.condition_flags.values())


def _eventually_nonincreasing(vals, frac=0.25, rtol=1e-9):
    tail = vals[int(len(vals) * (1 - frac)):]
    if len(tail) < 2:
        return True
    return bool(np.all(np.diff(tail) <= rtol * np.abs(tail[:-1]) + 1e-300))


def check_class(spec, grid, r=2, lam=1.0, K=1.0, qi_bound=10.0, sim_bound=100.0):
    """Check the class conditions on a sample grid.

    Conditions (a)-(e) of the base class are evaluated on the positive part
    of ``grid``; the higher-order ratio conditions are evaluated for
    ``|x| >= K``. A condition whose derivatives vanish identically on the
    sampled range (e.g. ``Q''' = 0`` for ``Q = x^2``) is recorded as
    vacuously satisfied.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 16:
        raise GridTooSmall(f"grid has {grid.size} points; at least 16 are needed")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if not np.allclose(grid, -grid[::-1], rtol=1e-12, atol=1e-300):
        raise ValueError("grid must be symmetric about 0")
    spec = spec.base()
    pos = grid[grid > 0]
    derivs = [np.asarray(eval_Q(spec, pos, j), dtype=float) for j in range(r + 3)]
    finite = np.all([np.isfinite(d) for d in derivs], axis=0)
    pos = pos[finite]
    derivs = [d[finite] for d in derivs]
    q, q1, q2 = derivs[0], derivs[1], derivs[2]
    flags = {}
    details = {}

    flags["a"] = bool(eval_Q(spec, 0.0) == 0.0 and eval_Q(spec, 0.0, 1) == 0.0)
    flags["b"] = bool(np.all(q2 > 0))
    flags["c"] = bool(np.all(np.diff(q) > 0) and q[-1] > q[0])

    T = np.asarray(eval_T(spec, pos))
    T_min = float(T.min())
    running = np.maximum.accumulate(T)
    C_qi = float(np.max(running / T))
    flags["d"] = bool(T_min > 1.0 and C_qi <= qi_bound)

    e_ratio = q2 * q / q1**2
    outside = pos >= K
    details["e_upper"] = float(e_ratio.max())
    details["e_lower"] = float(e_ratio[outside].min()) if outside.any() else math.nan
    flags["e"] = bool(np.isfinite(details["e_upper"]) and details["e_lower"] > 0)

    flags["lambda_range"] = bool(0 < lam < (r + 2) / (r + 1))
    lam_ratio = np.abs(q1[outside]) / q[outside] ** lam
    lambda_hat = float(lam_ratio.max()) if outside.any() else math.nan
    flags["q1_over_q_lambda"] = bool(np.isfinite(lambda_hat) and _eventually_nonincreasing(lam_ratio))

    def vanishes(j):
        return bool(np.all(derivs[j][outside] == 0.0))

    base_ratio = np.abs(q2[outside] / q1[outside])
    for k in range(2, r + 1):
        name = f"ratio_k{k}"
        if vanishes(k) or vanishes(k + 1):
            flags[name] = True
            details[name] = "vacuous"
            continue
        rho = np.abs(derivs[k + 1][outside] / derivs[k][outside]) / base_ratio
        spread = float(rho.max() / rho.min()) if rho.min() > 0 else math.inf
        details[name] = spread
        flags[name] = bool(np.isfinite(spread) and spread < sim_bound)

    if vanishes(r) or vanishes(r + 1):
        flags["ratio_top"] = True
        details["ratio_top"] = "vacuous"
    else:
        top = np.abs(derivs[r + 2][outside] * derivs[r][outside]) / derivs[r + 1][outside] ** 2
        details["ratio_top"] = float(top.max())
        flags["ratio_top"] = bool(np.isfinite(top.max()) and top.max() < sim_bound)

    return WeightClassReport(
        condition_flags=flags,
        lambda_hat=lambda_hat,
        T_min=T_min,
        C_qi=C_qi,
        K=K,
        grid=grid,
        details=details,
    )
