from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from lbsym.detcheck import Status, Verdict, check_lbs, check_lbs_multifield, combine, decide_zero
from lbsym.expr import Jet, parse
from lbsym.jet import GeneralizedField, Manifold
from lbsym.sampling import Domain, Interval, case_rng, numeric_zero_test

x = sp.Symbol("x")
u, ux, uxx = Jet("u"), Jet("u", 1), Jet("u", 2)


def test_symbolic_zero_is_decided_without_sampling():
    v = decide_zero(parse("exp(2*x) - exp(x)^2"))
    assert v.status is Status.PASS_SYMBOLIC
    assert v.samples_used == 0


@pytest.mark.parametrize(
    "scale, status",
    [(1e-12, Status.PASS_NUMERIC), (1e-8, Status.INCONCLUSIVE), (1e-3, Status.FAIL)],
)
def test_two_threshold_numeric_verdict(scale, status):
    # the symbolic stage cannot help: the normal form of scale*x is nonzero
    v = decide_zero(scale * x, mode="both")
    assert v.status is status
    assert v.samples_used == 20


def test_symbolic_mode_never_samples():
    v = decide_zero(x - 1, mode="symbolic")
    assert v.status is Status.INCONCLUSIVE
    assert v.samples_used == 0
    assert v.residual == x - 1


def test_unknown_mode_is_rejected():
    with pytest.raises(ValueError):
        decide_zero(x, mode="fast")


def test_combine_takes_the_worst_status():
    a = Verdict(Status.PASS_SYMBOLIC)
    b = Verdict(Status.PASS_NUMERIC, numeric_max_residual=1e-12, samples_used=20)
    c = Verdict(Status.FAIL, x, 0.5, 20, ["bad"])
    assert combine([a, b]).status is Status.PASS_NUMERIC
    out = combine([a, b, c])
    assert out.status is Status.FAIL
    assert out.residual == x
    assert out.samples_used == 40
    assert out.notes == ["bad"]
    assert combine([]).status is Status.INCONCLUSIVE


def test_verdict_outcome_and_stage():
    assert Verdict(Status.PASS_NUMERIC, samples_used=3).outcome == "PASS"
    assert Verdict(Status.PASS_NUMERIC, samples_used=3).stage == "numeric"
    assert Verdict(Status.INCONCLUSIVE).outcome == "INCONCLUSIVE"
    assert Verdict(Status.FAIL).outcome == "FAIL"


def test_lbs_check_on_u_xx_equals_2u_over_x2():
    # the equation is linear, so u itself is a characteristic and u^2 is not
    m = Manifold([(uxx, 2 * u / x**2)])
    H = uxx - 2 * u / x**2
    assert check_lbs(m, GeneralizedField("u", u), H).passed
    bad = check_lbs(m, GeneralizedField("u", u**2), H)
    assert bad.status is Status.FAIL


def test_multifield_check_requires_a_rule_for_the_field():
    m = Manifold([(Jet("v", 2), Jet("v"))])
    with pytest.raises(ValueError):
        check_lbs_multifield(m, GeneralizedField("u", u), uxx)


def test_case_rng_is_deterministic_and_case_dependent():
    a = case_rng(42, "case-a").random(4)
    assert np.array_equal(a, case_rng(42, "case-a").random(4))
    assert not np.array_equal(a, case_rng(42, "case-b").random(4))
    assert not np.array_equal(a, case_rng(7, "case-a").random(4))


def test_interval_exclusions_and_validation():
    iv = Interval(0.0, 1.0, (0.5,))
    s = iv.sample(np.random.default_rng(1), 2000)
    assert np.all(np.abs(s - 0.5) >= 1e-3)
    assert np.all((s >= 0) & (s <= 1))
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)


def test_domain_constraints_are_respected():
    d = Domain(ranges={"x": Interval(0.0, 1.0)}, constraints=[parse("x - 0.3")])
    vals = d.draw([x], 20, np.random.default_rng(3))
    assert np.all(vals[x] > 0.3)


def test_domain_defaults_by_symbol_kind():
    d = Domain()
    assert d.interval(u) == Interval(0.2, 2.0)
    assert d.interval(ux) == Interval(-1.0, 1.0)
    assert d.interval(x) == Interval(0.5, 3.0)
    assert d.interval(sp.Symbol("t")) == Interval(0.0, 2.0)
    assert d.interval(sp.Symbol("beta")) == Interval(0.5, 2.0)


def test_numeric_test_reports_unevaluable_points():
    # ln(x) is undefined on the whole interval, so nothing can be sampled
    d = Domain(ranges={"x": Interval(-2.0, -1.0)})
    out = numeric_zero_test(parse("ln(x)"), d, np.random.default_rng(0))
    assert out.status == "inconclusive"
