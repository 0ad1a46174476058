"""Lie–Bäcklund symmetry checks: ``X^(k) H`` restricted to the manifold.

The residual is first brought to the rational normal form; if that does not
decide, it is sampled at seeded random points with a two-threshold verdict.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .expr import normalize
from .jet import GeneralizedField, Manifold, prolong_apply
from .sampling import N_SAMPLES, TOL_FAIL, TOL_PASS, Domain, numeric_zero_test

__all__ = [
    "Status",
    "Verdict",
    "decide_zero",
    "check_lbs",
    "check_lbs_multifield",
]


class Status(str, enum.Enum):
    PASS_SYMBOLIC = "PASS_SYMBOLIC"
    PASS_NUMERIC = "PASS_NUMERIC"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self) -> str:
        return self.value


@dataclass
class Verdict:
    status: Status
    residual: sp.Expr = sp.S.Zero
    numeric_max_residual: float = 0.0
    samples_used: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status in (Status.PASS_SYMBOLIC, Status.PASS_NUMERIC)

    @property
    def stage(self) -> str:
        if self.status is Status.PASS_SYMBOLIC:
            return "symbolic"
        return "numeric" if self.samples_used else "symbolic"

    @property
    def outcome(self) -> str:
        """Coarse outcome used for expectations: PASS, FAIL or INCONCLUSIVE."""
        if self.passed:
            return "PASS"
        return "FAIL" if self.status is Status.FAIL else "INCONCLUSIVE"


def combine(verdicts: list[Verdict], notes: list[str] | None = None) -> Verdict:
    """Conjunction of several verdicts: worst status wins."""
    if not verdicts:
        return Verdict(Status.INCONCLUSIVE, notes=["nothing checked"])
    order = [Status.FAIL, Status.INCONCLUSIVE, Status.PASS_NUMERIC, Status.PASS_SYMBOLIC]
    status = min((v.status for v in verdicts), key=order.index)
    out = Verdict(
        status,
        residual=next((v.residual for v in verdicts if v.status is status), sp.S.Zero),
        numeric_max_residual=max(v.numeric_max_residual for v in verdicts),
        samples_used=sum(v.samples_used for v in verdicts),
        notes=list(notes or []),
    )
    for v in verdicts:
        out.notes.extend(n for n in v.notes if n not in out.notes)
    return out


def decide_zero(
    residual: sp.Expr,
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    mode: str = "both",
    samples: int = N_SAMPLES,
    tol_pass: float = TOL_PASS,
    tol_fail: float = TOL_FAIL,
    fixed=None,
    instantiations=None,
    anti_base=None,
) -> Verdict:
    """Two-stage zero test of ``residual``."""
    if mode not in ("symbolic", "numeric", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    residual = sp.sympify(residual)
    nf = residual
    if mode in ("symbolic", "both"):
        nf = normalize(residual)
        if nf == 0:
            return Verdict(Status.PASS_SYMBOLIC, sp.S.Zero)
        if mode == "symbolic":
            return Verdict(Status.INCONCLUSIVE, nf, notes=["normal form is nonzero; numeric stage not run"])
    domain = domain or Domain()
    rng = rng if rng is not None else np.random.default_rng(0)
    out = numeric_zero_test(
        residual, domain, rng, samples, tol_pass, tol_fail,
        fixed=fixed, instantiations=instantiations, anti_base=anti_base,
    )
    status = {"pass": Status.PASS_NUMERIC, "fail": Status.FAIL, "inconclusive": Status.INCONCLUSIVE}[out.status]
    return Verdict(status, nf, out.max_rel, out.samples, out.notes)


def check_lbs(
    m: Manifold,
    X: GeneralizedField,
    H: sp.Expr,
    mode: str = "both",
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    samples: int = N_SAMPLES,
    tol_pass: float = TOL_PASS,
    tol_fail: float = TOL_FAIL,
) -> Verdict:
    """Is ``X`` a Lie–Bäcklund symmetry of ``H = 0`` on the manifold ``m``?"""
    residual = prolong_apply(X, H, m)
    return decide_zero(residual, domain, rng, mode, samples, tol_pass, tol_fail)


def check_lbs_multifield(
    m: Manifold,
    X: GeneralizedField,
    H: sp.Expr,
    mode: str = "both",
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    samples: int = N_SAMPLES,
    tol_pass: float = TOL_PASS,
    tol_fail: float = TOL_FAIL,
) -> Verdict:
    """As :func:`check_lbs` for manifolds over several fields.

    The prolongation acts on jets of ``X.field`` only; jets of the other
    (parametric) fields are rewritten by their own rules.
    """
    if X.field not in m.fields:
        raise ValueError(f"manifold has no rule for the field {X.field!r}")
    return check_lbs(m, X, H, mode, domain, rng, samples, tol_pass, tol_fail)
