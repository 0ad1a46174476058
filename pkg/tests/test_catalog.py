from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lbsym.catalog import (
    KINDS,
    CatalogError,
    compile_case,
    dumps,
    load,
    load_bundled,
    parse_records,
    select,
    validate,
)
from lbsym.catalog.coverage import COVERAGE, missing

RECORDS = load_bundled()

MINIMAL = """
[case]
id = heat-scaling
kind = symmetry-check
equation = u_t - u_xx
[manifold]
rule: u_t = u_xx
[operator]
Q = 2*t*u_t + x*u_x
[expect]
verdict = PASS
"""


def test_bundled_catalog_size_and_kinds():
    assert len(RECORDS) == 136
    assert {r.kind for r in RECORDS} == set(KINDS)


def test_every_subject_is_covered():
    assert missing(RECORDS) == {}
    assert len(COVERAGE) == 24


def test_missing_reports_gaps():
    gaps = missing([r for r in RECORDS if r.id != "exp-x2"])
    assert gaps == {"u_t = (e^(beta x)/u)_xx: symmetries and family": ["exp-x2"]}


def test_typo_suspect_records_come_in_groups():
    groups = {}
    for r in RECORDS:
        if "typo-suspect" in r.flags:
            groups.setdefault(r.variant, []).append(r.verdict)
    assert groups
    for verdicts in groups.values():
        assert len(verdicts) >= 2
        assert "REPORT-ONLY" in verdicts


def test_minimal_record_compiles():
    (rec,) = parse_records(MINIMAL)
    validate([rec])
    cc = compile_case(rec)
    assert rec.verdict == "PASS"
    assert set(cc.operators) == {"Q"}


def test_empty_text_has_no_records():
    assert parse_records("") == []
    assert parse_records("# only a comment\n") == []
    assert dumps([]) == ""


@pytest.mark.parametrize(
    "text, message",
    [
        (MINIMAL.replace("2*t*u_t", "2*s*u_t"), "s"),
        (MINIMAL + MINIMAL, "duplicate id"),
        (MINIMAL.replace("kind = symmetry-check", "kind = guess"), "unknown kind"),
        (MINIMAL.replace("verdict = PASS", "verdict = MAYBE"), "expect.verdict"),
        (MINIMAL.replace("equation", "equation = u\nflags = typo-suspect\n#"), "variant group"),
        (MINIMAL.replace("[case]\nid", "[case]\nid = x\nid"), "duplicate [case] key"),
        (MINIMAL.replace("[expect]", "[extra]"), "unknown section"),
        ("verdict = PASS\n", "outside a [case] block"),
        (MINIMAL.replace("rule: u_t", "u_t"), "manifold lines"),
    ],
)
def test_validation_errors(text, message):
    with pytest.raises(CatalogError, match=message.replace("[", r"\[").replace("]", r"\]")):
        validate(parse_records(text))


def test_typo_suspect_group_needs_two_members():
    text = MINIMAL.replace("equation", "flags = typo-suspect\nvariant = lonely\nequation")
    with pytest.raises(CatalogError, match="one member"):
        validate(parse_records(text))


def test_missing_path(tmp_path):
    with pytest.raises(CatalogError):
        load(tmp_path / "absent.case")


def test_load_directory_and_file(tmp_path):
    (tmp_path / "a.case").write_text(MINIMAL, encoding="utf-8")
    assert [r.id for r in load(tmp_path)] == ["heat-scaling"]
    assert [r.id for r in load(tmp_path / "a.case")] == ["heat-scaling"]


def test_select_by_glob_and_kind():
    prop1 = select(RECORDS, "prop1-*")
    assert [r.id for r in prop1] == [f"prop1-{c}" for c in "abcdefghijk"]
    comm = select(RECORDS, kind="commutator-check")
    assert comm and all(r.kind == "commutator-check" for r in comm)
    assert select(RECORDS, "no-such-*") == []


def test_whole_catalog_round_trips():
    again = parse_records(dumps(RECORDS))
    assert again == RECORDS
    assert dumps(again) == dumps(RECORDS)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(RECORDS), min_size=0, max_size=5, unique_by=lambda r: r.id))
def test_round_trip_of_any_subset(records):
    text = dumps(records)
    back = parse_records(text)
    assert back == records
    assert dumps(back) == text
