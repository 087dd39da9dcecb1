"""Polynomial approximation on the real line under exponential-type weights."""

from .bestapprox import ApproxResult, Poly, best_approx, best_l1, best_l2, best_linf, best_lp
from .errors import WeightApproxError
from .expr import differentiate, parse
from .modulus import ModulusReport, omega
from .monotone import monotone_approx, parse_operator
from .mrs import MrsSolver
from .orthopoly import OrthoBasis, build_basis
from .weights import WeightSpec, check_class, eval_Q, eval_T, eval_w

__all__ = [
    "ApproxResult", "ModulusReport", "MrsSolver", "OrthoBasis", "Poly", "WeightApproxError", "WeightSpec",
    "best_approx", "best_l1", "best_l2", "best_linf", "best_lp", "build_basis", "check_class",
    "differentiate", "eval_Q", "eval_T", "eval_w", "monotone_approx", "omega", "parse", "parse_operator",
]
