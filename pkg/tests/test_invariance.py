from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from lbsym.detcheck import Status
from lbsym.expr import Jet
from lbsym.invariance import (
    PointField,
    SolutionWithConstants,
    check_inherited,
    defect,
    find_invariant_combo,
    prolong_point,
    span_decompose,
)
from lbsym.jet import Manifold

x, t, c1, c2 = sp.symbols("x t c1 c2")
u, ux, uxx = Jet("u"), Jet("u", 1), Jet("u", 2)

LINEAR = SolutionWithConstants(c1 + c2 * x, (c1, c2))
D_X = PointField(0, 1, 0)
D_U = PointField(0, 0, 1)
X_D_U = PointField(0, 0, x)


def test_point_field_arithmetic():
    X = D_X + D_U.scaled(3)
    assert (X.xi_t, X.xi_x, X.eta) == (0, 1, 3)
    Y = PointField.combination([2, -1], [D_X, X_D_U])
    assert (Y.xi_x, Y.eta) == (2, -x)
    assert (D_X - D_X).xi_x == 0


def test_point_field_rejects_jets():
    with pytest.raises(ValueError):
        PointField(0, ux, 0)


def test_defect_of_translations():
    assert defect(D_X, LINEAR) == c2
    assert defect(D_U, LINEAR) == -1
    assert defect(PointField(0, 1, c2), LINEAR) == 0


def test_span_decomposition():
    mu, resid = span_decompose(defect(D_X, LINEAR), LINEAR, {c1: 0.4, c2: 1.5})
    assert np.allclose(mu, [1.5, 0.0])
    assert resid < 1e-12
    with pytest.raises(ValueError):
        span_decompose(sp.S.One, SolutionWithConstants(c1 + 0 * c2, (c1, c2)), {c1: 1.0, c2: 1.0})


def test_invariant_combination_is_found():
    r = find_invariant_combo([D_X, D_U], LINEAR, {c1: 0.4, c2: 1.5})
    assert r.invariant
    assert np.allclose(r.alpha, np.array([1.0, 1.5]) / np.hypot(1.0, 1.5))


def test_no_invariant_combination():
    r = find_invariant_combo([D_X, X_D_U], LINEAR, {c1: 0.4, c2: 1.5})
    assert r.status == "NONE"
    assert r.ratio > 1e-4


def test_too_few_evaluable_points():
    s = SolutionWithConstants(sp.sqrt(-1 - x**2) + c1, (c1,))
    r = find_invariant_combo([D_X], s, {c1: 1.0})
    assert r.status == "INCONCLUSIVE"


def test_first_prolongation():
    assert prolong_point(D_X, ux) == 0
    assert prolong_point(X_D_U, ux) == 1
    scaling = PointField(0, x, 0)
    assert prolong_point(scaling, ux) == -ux
    with pytest.raises(ValueError):
        prolong_point(D_X, uxx)


def test_inherited_action_on_first_integrals():
    # u_xx = 0 with first integrals I1 = u_x and I2 = u - x u_x
    m = Manifold([(uxx, sp.S.Zero)])
    I1, I2 = sp.symbols("I1 I2")
    integrals = [ux, u - x * ux]
    assert check_inherited(D_X, integrals, m, [0, -I1], 0).passed
    assert check_inherited(D_U, integrals, m, [0, 1], 0).passed
    bad = check_inherited(D_U, integrals, m, [0, 2], 0)
    assert bad.status is Status.FAIL
    with pytest.raises(ValueError):
        check_inherited(D_X, [u], m, [0], 0)
