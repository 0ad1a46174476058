"""Acceptance criteria, one test (or pair of tests) per criterion.

The bundled catalog is run once with the default configuration; the
criteria then inspect the verdicts, residuals and sample counts of the
records that carry each claim, plus a few direct engine checks.  A one-line
pass/fail verdict per criterion is printed in the terminal summary.
"""

from __future__ import annotations

import random
import time

import numpy as np
import pytest
import sympy as sp

from exprgen import random_point, random_text
from lbsym.catalog import compile_case, load_bundled, select
from lbsym.detcheck import Status, check_lbs
from lbsym.expr import Jet, diff, eval_num, normalize, parse, to_text
from lbsym.jet import GeneralizedField, Manifold, commutator
from lbsym.runner import RunConfig, run_cases
from lbsym.sampling import case_rng

NAMES = {
    1: "generalized symmetries of u_xx = V (11 pairs and their mutations)",
    2: "positive and negative symmetry controls",
    3: "reduction suite",
    4: "solution suite",
    5: "first integrals, conserved quantity and ratio relation",
    6: "invariance suite",
    7: "commutators",
    8: "engine properties",
}
_PARTS: dict[int, dict[str, tuple[bool, str]]] = {}


def _record(n: int, part: str, ok: bool, detail: str) -> None:
    _PARTS.setdefault(n, {})[part] = (ok, detail)
    print(f"criterion {n} [{part}]: {'PASS' if ok else 'FAIL'} ({detail})")


def summary_lines() -> list[str]:
    out = []
    for n in sorted(_PARTS):
        parts = _PARTS[n]
        ok = all(v[0] for v in parts.values())
        failed = [f"{k}: {d}" for k, (o, d) in parts.items() if not o]
        detail = "; ".join(failed) if failed else "; ".join(d for _, d in parts.values())
        out.append(f"criterion {n} {'PASS' if ok else 'FAIL'}  {NAMES[n]}  [{detail}]")
    return out


@pytest.fixture(scope="module")
def full_run():
    records = load_bundled()
    t0 = time.perf_counter()
    results = run_cases(records, RunConfig())
    seconds = time.perf_counter() - t0
    return {r.id: r for r in results}, seconds


def _expect(results, ids, outcome):
    bad = [i for i in ids if results[i].verdict != outcome]
    return bad


# ------------------------------------------------------------------ 1


PROP1 = [f"prop1-{c}" for c in "abcdefghijk"]


def _mutations(cc):
    """Add one to the numerical coefficient of one term of V at a time.

    Terms carrying a free parameter found in no other term (and not in K)
    are skipped: changing their coefficient only moves along the family.
    """
    V, K = cc.defs["V"], cc.defs["K"]
    terms = sp.Add.make_args(V)
    params = {s for s in V.free_symbols | K.free_symbols if not isinstance(s, Jet) and s.name != "x"}
    out = []
    for i, term in enumerate(terms):
        others = [o for j, o in enumerate(terms) if j != i]
        free = [p for p in params & term.free_symbols
                if p not in K.free_symbols and all(p not in o.free_symbols for o in others)]
        if free:
            continue
        c, rest = term.as_coeff_Mul()
        out.append(V - term + (c + 1) * rest)
    return out


def test_criterion_1_prop1_suite(full_run):
    results, _ = full_run
    t0 = time.perf_counter()
    bad = []
    for i in PROP1:
        r = results[i]
        symbolic = r.status == "PASS_SYMBOLIC"
        numeric = r.status == "PASS_NUMERIC" and r.max_residual < 1e-9 and r.samples >= 20
        if not (symbolic or numeric):
            bad.append(i)
    pass_seconds = sum(results[i].seconds for i in PROP1)
    mutated = 0
    survivors = []
    for rec in select(load_bundled(), "prop1-*"):
        cc = compile_case(rec)
        X = cc.operators["X"]
        for k, Vm in enumerate(_mutations(cc)):
            m = Manifold([(Jet("u", 2), Vm)], check=False)
            v = check_lbs(m, X, Jet("u", 2) - Vm, mode="numeric", domain=cc.domain,
                          rng=case_rng(42, rec.id))
            mutated += 1
            if v.status is not Status.FAIL:
                survivors.append(f"{rec.id}#{k}")
    total = pass_seconds + time.perf_counter() - t0
    ok = not bad and not survivors and mutated >= len(PROP1) and total < 60
    _record(1, "prop1", ok, f"11 pairs PASS: {not bad}; {mutated} mutations, {len(survivors)} not FAIL; "
                             f"{total:.1f} s")
    assert not bad, bad
    assert not survivors, survivors
    assert total < 60


# ------------------------------------------------------------------ 2


def test_criterion_2_symmetry_controls(full_run):
    results, _ = full_run
    fail = ["airy-neg-q1", "airy-neg-q2", "airy-neg-q2-alt", "psi-corrupt-vt"]
    passing = ["airy-q3-corrected", "airy-q4", "eq7-y0", "eq7-y1", "eq7-y2", "kdv-x",
               "hyp-q1", "hyp-q2", "psi-q-corrected"]
    bad = _expect(results, fail, "FAIL") + _expect(results, passing, "PASS")
    y3 = [results[i] for i in ("eq7-y3-u", "eq7-y3-eta1")]
    flagged = all(r.expected == "REPORT-ONLY" and "typo-suspect" in r.notes[0] for r in y3)
    y3_text = ", ".join(f"{r.id} {r.verdict}" for r in y3)
    _record(2, "controls", not bad and flagged, f"{len(fail)} FAIL and {len(passing)} PASS as expected: "
                                                 f"{not bad}; Y3 reported with typo flag: {y3_text}")
    assert not bad, bad
    assert flagged


# ------------------------------------------------------------------ 3


REDUCTIONS = ["eq4-reduction", "eq7-reduction", "case-i-reduction", "case-i-reduction-minus",
              "case-ii-reduction", "case-iii-reduction", "case-iv-reduction", "case-v-reduction",
              "case-vi-reduction", "a1a5-reduction", "a6a8-reduction", "exp-reduction",
              "kdv-reduction", "case-i-algebraic"]
OPAQUE_CASES = [i for i in REDUCTIONS if i.startswith("case-")]


def test_criterion_3_reduction_suite(full_run):
    results, _ = full_run
    bad = _expect(results, REDUCTIONS, "PASS")
    loose = [i for i in REDUCTIONS if not results[i].max_residual < 1e-6]
    # twenty state points per opaque-function instantiation
    few = [i for i in OPAQUE_CASES if results[i].samples < 2 * 20]
    kdv = results["kdv-reduction"]
    kdv_ok = kdv.status == "PASS_NUMERIC" and kdv.samples >= 3 * 20
    ok = not bad and not loose and not few and kdv_ok
    _record(3, "reductions", ok, f"{len(REDUCTIONS)} systems PASS: {not bad}; worst numeric agreement "
                                 f"{max(results[i].max_residual for i in REDUCTIONS):.1e}; KdV over 3 (h1, h2)")
    assert not bad, bad
    assert not loose, loose
    assert not few, few
    assert kdv_ok


# ------------------------------------------------------------------ 4


SOLUTIONS = ["eq5-solution", "family-1", "family-2", "family-3", "family-4-corrected",
             "family-5-corrected", "a6a8-beta-solution", "exp-solution", "hyp-solution", "hyp2-solution"]
FAMILIES = ["family-1", "family-2", "family-3", "family-4-corrected", "family-5-corrected"]


def test_criterion_4_solution_suite(full_run):
    results, _ = full_run
    bad = _expect(results, SOLUTIONS, "PASS")
    loose = [i for i in SOLUTIONS if not results[i].max_residual < 1e-7]
    # ten draws on a 20 x 20 grid
    few = [i for i in FAMILIES if results[i].samples < 10 * 400]
    hyper = [i for i in ("hyp-solution", "hyp2-solution") if results[i].samples < 3 * 400]
    ok = not (bad or loose or few or hyper)
    _record(4, "solutions", ok, f"{len(SOLUTIONS)} solutions PASS: {not bad}; worst residual "
                                f"{max(results[i].max_residual for i in SOLUTIONS):.1e}")
    assert not bad, bad
    assert not loose, loose
    assert not few, few
    assert not hyper, hyper


# ------------------------------------------------------------------ 5


def test_criterion_5_first_integrals(full_run):
    results, _ = full_run
    fi = results["first-integrals"]
    drift = results["a6a8-conserved-drift"]
    ratio = results["a6a8-ratio"]
    ok = (fi.status == "PASS_SYMBOLIC" and drift.verdict == "PASS" and drift.max_residual < 1e-6
          and ratio.status == "PASS_SYMBOLIC")
    _record(5, "integrals", ok, f"I1, I2 {fi.status}; drift {drift.max_residual:.1e}; ratio {ratio.status}")
    assert fi.status == "PASS_SYMBOLIC"
    assert drift.verdict == "PASS" and drift.max_residual < 1e-6
    assert ratio.status == "PASS_SYMBOLIC"


# ------------------------------------------------------------------ 6


NOT_INVARIANT = ["family-1-not-invariant", "family-2-not-invariant", "family-3-not-invariant",
                 "family-4-not-invariant", "family-5-not-invariant", "family-4-a4-not-invariant",
                 "family-2-a3-not-invariant", "a6a8-beta-not-invariant"]


def test_criterion_6_invariance_suite(full_run):
    results, _ = full_run
    combo = results["exp-three-dim-invariant"]
    combo_ok = combo.verdict == "PASS" and combo.max_residual < 1e-8 and "10 draw(s): INVARIANT" in combo.notes
    pair = results["exp-x1-x3-not-invariant"]
    pair_ok = pair.verdict == "FAIL" and "10 draw(s): NONE" in pair.notes
    q = results["exp-q1-minus-beta-q2"]
    bad = _expect(results, NOT_INVARIANT, "FAIL")
    inherited = _expect(results, ["a6a8-inherited-q1", "a6a8-inherited-q2"], "PASS")
    inh_exact = all(results[i].status == "PASS_SYMBOLIC" for i in ("a6a8-inherited-q1", "a6a8-inherited-q2"))
    ok = combo_ok and pair_ok and q.status == "PASS_SYMBOLIC" and not bad and not inherited and inh_exact
    _record(6, "invariance", ok, f"combination over 10 draws, residual {combo.max_residual:.1e}; {{X1, X3}} NONE; "
                                 f"Q1 - beta Q2 defect {q.status}; {len(NOT_INVARIANT)} non-invariance claims; "
                                 f"inherited actions exact")
    assert combo_ok
    assert pair_ok
    assert q.status == "PASS_SYMBOLIC"
    assert not bad, bad
    assert not inherited and inh_exact


# ------------------------------------------------------------------ 7


def test_criterion_7_exponential_pair_commutes(full_run):
    results, _ = full_run
    r = results["exp-commutator"]
    ok = r.status == "PASS_SYMBOLIC"
    _record(7, "[Q1, Q2] = 0", ok, f"{r.status}")
    assert ok


@pytest.mark.xfail(strict=True, reason="[Q3, Q4] vanishes identically: Q3 is homogeneous of degree one in u")
def test_criterion_7_airy_bracket_equals_q3(full_run):
    results, _ = full_run
    cc = compile_case(next(r for r in load_bundled() if r.id == "airy-commutator"))
    Q3, Q4 = (GeneralizedField("u", cc.operators[k].eta) for k in ("Q3", "Q4"))
    eta = commutator(Q3, Q4, cc.manifold()).eta
    r = results["airy-commutator"]
    ok = r.verdict == "PASS"
    _record(7, "[Q3, Q4] = Q3", ok, f"computed bracket {to_text(normalize(eta))}")
    assert ok


# ------------------------------------------------------------------ 8


def _fd_agrees(text: str, rng: random.Random) -> bool:
    e = parse(text)
    d = diff(e, sp.Symbol("x"))
    p = random_point(rng)
    h = 1e-3

    def f(xv):
        return float(eval_num(e, {**p, "x": xv}))

    X = p["x"]
    fd = (-f(X + 2 * h) + 8 * f(X + h) - 8 * f(X - h) + f(X - 2 * h)) / (12 * h)
    dv = float(eval_num(d, p))
    return abs(dv - fd) <= 1e-5 * max(1.0, abs(dv), abs(f(X)))


def _round_trips(text: str) -> bool:
    e = parse(text)
    back = parse(to_text(e))
    return back == e or normalize(back - e) == 0


def _stable(r):
    d = r.to_dict()
    d.pop("seconds")
    return d


def test_criterion_8_engine_properties(full_run):
    results, seconds = full_run
    rng = random.Random(20240917)
    texts = [random_text(rng, 4) for _ in range(1000)]
    fd_bad = [t for t in texts if not _fd_agrees(t, rng)]
    rt_bad = [t for t in texts if not _round_trips(t)]
    records = load_bundled()
    sample = []
    for kind in sorted({r.kind for r in records}):
        sample += [r for r in records if r.kind == kind][:3]
    parallel = run_cases(sample, RunConfig(jobs=2))
    drift = [r.id for r in parallel if _stable(r) != _stable(results[r.id])]
    mismatched = sorted(i for i, r in results.items() if not r.matched)
    ok = not fd_bad and not rt_bad and not drift and not mismatched and seconds < 600
    _record(8, "engine", ok, f"FD {1000 - len(fd_bad)}/1000; round trip {1000 - len(rt_bad)}/1000; "
                             f"{len(sample)} cases identical in parallel; full catalog "
                             f"{len(results)} cases, {len(mismatched)} mismatches, {seconds:.0f} s")
    assert not fd_bad, fd_bad[:3]
    assert not rt_bad, rt_bad[:3]
    assert not drift, drift
    assert not mismatched, mismatched
    assert seconds < 600


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
