"""Coverage manifest: which bundled records verify which subject.

Each entry names a subject in plain words and lists the record ids that
must be present in the bundled catalog for that subject to count as
covered.  ``missing`` reports the gaps.
"""

from __future__ import annotations

from typing import Iterable

from .schema import CaseRecord

__all__ = ["COVERAGE", "missing"]

COVERAGE: dict[str, tuple[str, ...]] = {
    "u_xx = 2u/x^2: generalized symmetries": ("eq2-q1", "eq2-q2-corrected", "eq2-q3"),
    "u_xx = 2u/x^2: reduction and solution": ("eq4-reduction", "eq4-reduction-signflip", "eq5-solution"),
    "airy-type ODE: symmetry controls": ("airy-neg-q1", "airy-neg-q2", "airy-q3-corrected", "airy-q4"),
    "airy-type ODE: commutator": ("airy-commutator", "airy-commutator-computed"),
    "second airy-type ODE: Y0 to Y3": ("eq7-y0", "eq7-y1", "eq7-y2", "eq7-y3-u", "eq7-y3-eta1"),
    "second airy-type ODE: exponential ansatz": ("eq7-reduction",),
    "hyperbolic equations": ("hyp-q1", "hyp-q2", "hyp-solution", "hyp2-q1-corrected",
                             "hyp2-q2-corrected", "hyp2-solution"),
    "first-order ODE for psi with two fields": ("psi-q-corrected", "psi-corrupt-vt"),
    "KdV-related ODE and implicit ansatz": ("kdv-x", "kdv-q1", "kdv-q2", "kdv-combination",
                                            "kdv-reduction", "kdv-reduction-control"),
    "generalized symmetries of u_xx = V": tuple(f"prop1-{c}" for c in "abcdefghijk"),
    "opaque-source reductions": ("case-i-reduction", "case-i-reduction-minus", "case-ii-reduction",
                                 "case-iii-reduction", "case-iv-reduction", "case-v-reduction",
                                 "case-vi-reduction"),
    "time-independent algebraic reduction": ("case-i-algebraic",),
    "a1..a5 equation: reduction": ("a1a5-reduction", "a1a5-from-sources", "first-integrals"),
    "a1..a5 equation: closed-form families": ("family-1", "family-2", "family-3", "family-4-corrected",
                                              "family-5-corrected"),
    "a1..a5 equation: point symmetries": ("a1a5-y1", "a1a5-y2-a4a5", "a1a5-y2-a4", "a1a5-y2-a5", "a1a5-y3"),
    "a1..a5 equation: invariance of the families": ("family-1-not-invariant", "family-2-not-invariant",
                                                    "family-3-not-invariant", "family-4-not-invariant",
                                                    "family-5-not-invariant", "family-1-three-dim-invariant"),
    "a1..a5 equation: invariant comparison forms": ("invariant-form-a3", "invariant-form-a4",
                                                    "invariant-form-a5"),
    "a6..a8 equation: reduction": ("a6a8-reduction", "a6a8-from-sources"),
    "a6..a8 equation: invariance criterion": ("a6a8-criterion-split", "a6a8-criterion-on-system",
                                              "a6a8-dividing-step"),
    "a6..a8 equation: inherited symmetries": ("a6a8-q1", "a6a8-q2", "a6a8-inherited-q1",
                                              "a6a8-inherited-q2", "a6a8-ode-q2"),
    "a6..a8 equation: quadrature of the reduced system": ("a6a8-ratio", "a6a8-transformed",
                                                          "a6a8-conserved-drift"),
    "a6..a8 equation: closed form at a8 = -beta": ("a6a8-beta-solution", "a6a8-beta-not-invariant"),
    "u_t = (e^(beta x)/u)_xx: symmetries and family": ("exp-x1", "exp-x2", "exp-x3", "exp-reduction",
                                                       "exp-solution"),
    "u_t = (e^(beta x)/u)_xx: invariance": ("exp-three-dim-invariant", "exp-x1-x3-not-invariant",
                                            "exp-q1-minus-beta-q2", "exp-span-x1", "exp-span-x2",
                                            "exp-span-x3", "exp-span-q1", "exp-commutator"),
}


def missing(records: Iterable[CaseRecord]) -> dict[str, list[str]]:
    """Subjects with at least one absent record id, mapped to those ids."""
    ids = {r.id for r in records}
    out = {}
    for subject, wanted in COVERAGE.items():
        gaps = [i for i in wanted if i not in ids]
        if gaps:
            out[subject] = gaps
    return out
