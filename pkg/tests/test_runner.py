from __future__ import annotations

import math

import pytest

from lbsym.catalog import load_bundled, parse_records, select
from lbsym.runner import RunConfig, matches, run_case, run_cases

RECORDS = load_bundled()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"tol_pass": 1e-5, "tol_fail": 1e-6},
        {"tol_pass": 0.0},
        {"mode": "fast"},
        {"samples": 0},
        {"jobs": 0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


@pytest.mark.parametrize(
    "outcome, expected, ok",
    [
        ("PASS", "PASS", True),
        ("FAIL", "PASS", False),
        ("INCONCLUSIVE", "FAIL", False),
        ("FAIL", "REPORT-ONLY", True),
        ("INCONCLUSIVE", "REPORT-ONLY", True),
    ],
)
def test_matches(outcome, expected, ok):
    assert matches(outcome, expected) is ok


def test_printed_and_corrected_variants():
    by_id = {r.id: run_case(r) for r in select(RECORDS, "eq2-q2-*")}
    printed, corrected = by_id["eq2-q2-printed"], by_id["eq2-q2-corrected"]
    assert corrected.status == "PASS_SYMBOLIC" and corrected.matched
    assert printed.verdict == "FAIL" and printed.expected == "REPORT-ONLY" and printed.matched
    assert printed.notes[0] == "flags: typo-suspect"


def test_engine_failures_become_error_results():
    text = """
[case]
id = broken
kind = reduction-check
equation = u_t - u_xx
[expect]
verdict = PASS
"""
    (rec,) = parse_records(text)
    r = run_case(rec)
    assert r.status == "ERROR" and r.verdict == "ERROR"
    assert not r.matched
    assert math.isnan(r.max_residual)


def _stable(results):
    return [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results]


def test_serial_and_parallel_runs_agree():
    chosen = select(RECORDS, "airy-*")
    serial = run_cases(chosen, RunConfig(jobs=1))
    parallel = run_cases(chosen, RunConfig(jobs=2))
    assert [r.id for r in serial] == [r.id for r in chosen]
    assert _stable(serial) == _stable(parallel)


def test_seed_changes_samples_but_not_verdicts():
    chosen = select(RECORDS, "airy-neg-*")
    a = run_cases(chosen, RunConfig(seed=1))
    b = run_cases(chosen, RunConfig(seed=2))
    assert [r.verdict for r in a] == [r.verdict for r in b]
    assert _stable(a) == _stable(run_cases(chosen, RunConfig(seed=1)))
