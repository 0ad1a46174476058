from __future__ import annotations

import pytest
import sympy as sp
from hypothesis import given, settings

from exprgen import expr_texts
from lbsym.expr import Jet, RFun, normalize, parse
from lbsym.jet import (
    GeneralizedField,
    Manifold,
    ManifoldError,
    commutator,
    evolutionary_representative,
    jets_of,
    prolong_apply,
    total_derivative,
)

x, t = sp.symbols("x t")
u, ux, ut, uxx = Jet("u"), Jet("u", 1), Jet("u", 0, 1), Jet("u", 2)


def test_total_derivative_raises_jets_and_reduction_functions():
    assert total_derivative(ux * x, "x") == ux + x * uxx
    assert total_derivative(RFun("phi1") * x, "t") == RFun("phi1", 1) * x
    assert total_derivative(RFun("phi1") * x, "x") == RFun("phi1")


def test_manifold_consequences():
    m = Manifold([(uxx, 2 * u / x**2)])
    assert normalize(total_derivative(ux, "x", m) - 2 * u / x**2) == 0
    assert normalize(m.reduce(Jet("u", 4)) - (16 * u - 8 * x * ux) / x**4) == 0


def test_mixed_jet_on_a_time_dependent_manifold():
    # by hand: D_t(x u / (6(t+1))) = -x u/(6(t+1)^2) + x u_t/(6(t+1))
    m = Manifold([(uxx, x * u / (6 * (t + 1)))])
    expected = -x * u / (6 * (t + 1) ** 2) + x * ut / (6 * (t + 1))
    assert normalize(m.reduce(Jet("u", 2, 1)) - expected) == 0


def test_u_t_is_not_a_symmetry_of_the_time_dependent_ode():
    m = Manifold([(uxx, x * u / (6 * (t + 1)))])
    r = prolong_apply(GeneralizedField("u", ut), uxx - x * u / (6 * (t + 1)), m)
    assert normalize(r + x * u / (6 * (t + 1) ** 2)) == 0


def test_manifold_rejects_unsolved_and_inconsistent_rules():
    with pytest.raises(ManifoldError):
        Manifold([(ux, uxx)])
    with pytest.raises(ManifoldError):
        Manifold([(ux, u), (ut, x * u)])


def test_jets_of_filters_by_field():
    e = ux * u + Jet("v", 1)
    assert jets_of(e) == {u, ux, Jet("v", 1)}
    assert jets_of(e, "v") == {Jet("v", 1)}


@pytest.mark.parametrize(
    "xi_t, xi_x, eta, zero",
    [
        (2 * t, x, 0, True),  # scaling
        (0, 2 * t, -x * u, True),  # Galilean boost
        (0, 0, x * u, False),
    ],
)
def test_point_symmetries_of_the_heat_equation(xi_t, xi_x, eta, zero):
    m = Manifold([(ut, uxx)])
    X = evolutionary_representative(xi_t, xi_x, eta)
    r = normalize(prolong_apply(X, ut - uxx, m))
    assert (r == 0) is zero


def test_evolutionary_bracket():
    A = GeneralizedField("u", x * ux)
    B = GeneralizedField("u", ux)
    assert commutator(A, B).eta == ux
    assert commutator(B, A).eta == -ux
    assert commutator(A, A).eta == 0


def test_bracket_needs_one_field():
    with pytest.raises(ValueError):
        commutator(GeneralizedField("u", u), GeneralizedField("v", Jet("v")))


G = 1 + x**2 / 3 + sp.sin(x) / 5


@settings(max_examples=100, deadline=None)
@given(expr_texts(depth=3))
def test_total_derivative_is_the_chain_rule(text):
    e = parse(text)
    on_g = {u: G, ux: sp.diff(G, x), uxx: sp.diff(G, x, 2)}
    lhs = total_derivative(e, "x").xreplace(on_g)
    rhs = sp.diff(e.xreplace(on_g), x)
    point = {x: sp.Rational(7, 5), sp.Symbol("beta"): sp.Rational(3, 2)}
    assert abs(complex((lhs - rhs).xreplace(point).evalf(30))) < 1e-12
