"""Generalized (Lie-Baecklund) symmetries, ansatz reductions and invariance of
solution families, checked symbolically with a numeric fallback."""

from .detcheck import Status, Verdict, check_lbs, check_lbs_multifield, decide_zero
from .invariance import PointField, SolutionWithConstants, check_inherited, defect, find_invariant_combo
from .jet import GeneralizedField, Manifold, commutator, prolong_apply, total_derivative
from .reduce import Ansatz, ReducedSystem, SolutionFamily, apply_ansatz, verify_reduced_system, verify_solution
from .runner import CaseResult, RunConfig, run_case, run_cases

__all__ = [
    "Status",
    "Verdict",
    "check_lbs",
    "check_lbs_multifield",
    "decide_zero",
    "PointField",
    "SolutionWithConstants",
    "check_inherited",
    "defect",
    "find_invariant_combo",
    "GeneralizedField",
    "Manifold",
    "commutator",
    "prolong_apply",
    "total_derivative",
    "Ansatz",
    "ReducedSystem",
    "SolutionFamily",
    "apply_ansatz",
    "verify_reduced_system",
    "verify_solution",
    "CaseResult",
    "RunConfig",
    "run_case",
    "run_cases",
]

__version__ = "0.1.0"
