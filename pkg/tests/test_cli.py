from __future__ import annotations

import json

import pytest

from lbsym.cli import main

CASE = """
[case]
id = heat-{name}
kind = symmetry-check
equation = u_t - u_xx
[manifold]
rule: u_t = u_xx
[operator]
Q = {q}
[expect]
verdict = {verdict}
"""


@pytest.fixture
def catalog(tmp_path):
    def make(*cases):
        p = tmp_path / "cases.case"
        p.write_text("".join(CASE.format(name=n, q=q, verdict=v) for n, q, v in cases), encoding="utf-8")
        return str(p)
    return make


def test_verify_exit_codes(catalog, capsys):
    good = catalog(("scaling", "2*t*u_t + x*u_x", "PASS"), ("xu", "x*u", "FAIL"))
    assert main(["verify", "--catalog", good]) == 0
    assert "2/2 cases met their expected verdict" in capsys.readouterr().out
    bad = catalog(("xu", "x*u", "PASS"))
    assert main(["verify", "--catalog", bad]) == 1
    broken = catalog(("typo", "x*w", "PASS"))
    assert main(["verify", "--catalog", broken]) == 2
    assert main(["verify", "--catalog", "/nonexistent/path.case"]) == 2


def test_report_only_never_fails_the_run(catalog):
    path = catalog(("xu", "x*u", "REPORT-ONLY"))
    assert main(["verify", "--catalog", path]) == 0


def test_empty_selection_is_success(catalog, capsys):
    path = catalog(("scaling", "2*t*u_t + x*u_x", "PASS"))
    assert main(["verify", "--catalog", path, "--filter", "nothing-*"]) == 0
    assert "0/0" in capsys.readouterr().out


def test_json_report_is_deterministic_apart_from_timings(catalog, capsys):
    path = catalog(("scaling", "2*t*u_t + x*u_x", "PASS"), ("xu", "x*u", "FAIL"))
    docs = []
    for _ in range(2):
        assert main(["verify", "--catalog", path, "--format", "json", "--mode", "numeric"]) == 0
        doc = json.loads(capsys.readouterr().out)
        for c in doc["cases"]:
            c.pop("seconds")
        docs.append(doc)
    assert docs[0] == docs[1]
    assert docs[0]["summary"] == {"errors": 0, "matched": 2, "total": 2,
                                  "verdicts": {"FAIL": 1, "PASS": 1}}
    assert docs[0]["config"]["seed"] == 42


def test_json_nan_becomes_null(tmp_path, capsys):
    # a reduction check without an ansatz loads but cannot be executed
    path = tmp_path / "broken.case"
    path.write_text("[case]\nid = broken\nkind = reduction-check\nequation = u_t - u_xx\n"
                    "[expect]\nverdict = PASS\n", encoding="utf-8")
    assert main(["verify", "--catalog", str(path), "--format", "json"]) == 2
    doc = json.loads(capsys.readouterr().out)
    assert doc["cases"][0]["max_residual"] is None
    assert doc["summary"]["errors"] == 1


def test_list_bundled(capsys):
    assert main(["list", "--filter", "prop1-*"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 11
    assert main(["list", "--kind", "commutator-check"]) == 0
    assert all("commutator-check" in line for line in capsys.readouterr().out.splitlines())


def test_show_and_explain(capsys):
    assert main(["show", "eq2-q1"]) == 0
    out = capsys.readouterr().out
    assert "id = eq2-q1" in out
    assert main(["explain", "eq2-q2-corrected"]) == 0
    assert "1/1 cases met their expected verdict" in capsys.readouterr().out
    assert main(["show", "no-such-case"]) == 2


def test_bad_arguments_exit_through_argparse():
    with pytest.raises(SystemExit):
        main(["verify", "--mode", "fast"])
