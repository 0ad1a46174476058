from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from lbsym.detcheck import Status
from lbsym.expr import Jet, RFun, normalize
from lbsym.jet import Manifold
from lbsym.reduce import (
    Ansatz,
    ReducedSystem,
    ReductionError,
    SolutionFamily,
    apply_ansatz,
    check_first_integrals,
    check_identity,
    collect_reduced,
    extract_reduced_numeric,
    first_integral_drift,
    rk4_integrate,
    verify_reduced_system,
    verify_solution,
)

x, t, c, d = sp.symbols("x t c d")
u, ut, ux, uxx = Jet("u"), Jet("u", 0, 1), Jet("u", 1), Jet("u", 2)
p1, p2 = RFun("phi1"), RFun("phi2")
p1t, p2t = RFun("phi1", 1), RFun("phi2", 1)

HEAT = ut - uxx
QUADRATIC = Ansatz(U=p1 + x**2 * p2)


def test_explicit_ansatz_substitution():
    assert apply_ansatz(HEAT, QUADRATIC) == normalize(p1t + x**2 * p2t - 2 * p2)


def test_ansatz_without_enough_time_derivatives():
    with pytest.raises(ReductionError):
        apply_ansatz(Jet("u", 0, 2) - uxx, QUADRATIC)


def test_ansatz_validation():
    with pytest.raises(ValueError):
        Ansatz(kind="explicit")
    with pytest.raises(ValueError):
        Ansatz(kind="implicit", quadrature=u)


def test_collect_in_powers_of_x():
    residual = apply_ansatz(HEAT, QUADRATIC)
    coeffs = collect_reduced(residual, x)
    assert [normalize(k) for k in coeffs] == [normalize(p1t - 2 * p2), p2t]


def test_reduced_system_verdicts():
    good = ReducedSystem.from_solved({p1t: 2 * p2, p2t: sp.S.Zero})
    bad = ReducedSystem.from_solved({p1t: 3 * p2, p2t: sp.S.Zero})
    v = verify_reduced_system(HEAT, QUADRATIC, good)
    assert v.status is Status.PASS_SYMBOLIC
    assert v.numeric_max_residual < 1e-9
    assert verify_reduced_system(HEAT, QUADRATIC, bad).status is Status.FAIL


def test_numeric_extraction_recovers_the_reduced_system():
    phi, defect = extract_reduced_numeric(HEAT, QUADRATIC, 0.3, [1.2, 0.7])
    assert np.allclose(phi, [1.4, 0.0], atol=1e-10)
    assert defect < 1e-12


def test_degenerate_ansatz_is_reported():
    # phi1 and phi2 enter only through their sum
    with pytest.raises(ReductionError):
        extract_reduced_numeric(HEAT, Ansatz(U=p1 + p2), 0.3, [1.0, 1.0])


def test_solution_family():
    family = SolutionFamily(phi={"phi1": 2 * c * t + d, "phi2": c})
    assert verify_solution(HEAT, family, QUADRATIC).passed
    wrong = SolutionFamily(phi={"phi1": c * t + d, "phi2": c})
    assert verify_solution(HEAT, wrong, QUADRATIC).status is Status.FAIL


def test_solution_given_directly_in_u():
    v = verify_solution(HEAT, SolutionFamily(u=sp.exp(-c**2 * t) * sp.sin(c * x)))
    assert v.passed


def test_first_integrals_of_u_xx_equals_zero():
    m = Manifold([(uxx, sp.S.Zero)])
    a = Ansatz(U=p2 + x * p1)
    assert check_first_integrals([ux, u - x * ux], m, a).passed
    assert not check_first_integrals([u], m).passed


def test_identity_after_substituting_the_reduced_system():
    rs = ReducedSystem.from_solved({p1t: p2, p2t: -p1})
    assert check_identity(p1 * p1t + p2 * p2t, rs).passed
    assert check_identity(p1 * p1t - p2 * p2t, rs).status is Status.FAIL


def test_rk4_reaches_the_exponential():
    ts = np.linspace(0.0, 1.0, 5)
    y = rk4_integrate(lambda tt, y: y, [1.0], ts)
    assert np.allclose(y[:, 0], np.exp(ts), rtol=1e-9)


def test_conserved_quantity_does_not_drift():
    rs = ReducedSystem.from_solved({p1t: p2, p2t: -p1})
    drift = first_integral_drift(rs, p1**2 + p2**2, [p1, p2], {}, [1.0, 0.5], (0.0, 3.0))
    assert drift < 1e-8
    growing = ReducedSystem.from_solved({p1t: p1, p2t: p2})
    assert first_integral_drift(growing, p1**2 + p2**2, [p1, p2], {}, [1.0, 0.5], (0.0, 1.0)) > 1
