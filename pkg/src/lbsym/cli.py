"""Command-line driver: run case suites and print text or JSON reports.

Exit codes of ``verify``: 0 when every case meets its expected verdict
(REPORT-ONLY cases always do), 1 when some case does not, 2 when a case
could not be executed or the catalog could not be loaded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import Counter
from typing import Sequence

from .catalog import CatalogError, compile_case, dumps, load, load_bundled, select
from .expr import to_text
from .runner import CaseResult, RunConfig, explain, run_case, run_cases
from .sampling import N_SAMPLES, TOL_FAIL, TOL_PASS

__all__ = ["main", "build_parser", "report_json", "report_text"]

EXIT_OK, EXIT_MISMATCH, EXIT_ERROR = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog", action="append", metavar="PATH",
                   help="case file or directory (repeatable); default: the bundled catalog")
    p.add_argument("--filter", default=None, metavar="GLOB", help="select case ids by glob")
    p.add_argument("--kind", default=None, help="select cases of one kind")


def _engine(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol-pass", type=float, default=TOL_PASS)
    p.add_argument("--tol-fail", type=float, default=TOL_FAIL)
    p.add_argument("--samples", type=int, default=N_SAMPLES)
    p.add_argument("--mode", choices=("symbolic", "numeric", "both"), default="both")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lbsym", description="Verify symmetry, reduction and invariance cases.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the selected cases")
    _common(v)
    _engine(v)
    v.add_argument("--format", choices=("text", "json"), default="text")

    ls = sub.add_parser("list", help="list case ids")
    _common(ls)

    for name, text in (("show", "print a case and its intermediate expressions"),
                       ("explain", "run a case and print its residuals before and after reduction")):
        p = sub.add_parser(name, help=text)
        p.add_argument("id")
        p.add_argument("--catalog", action="append", metavar="PATH")
        _engine(p)
    return ap


def _config(args) -> RunConfig:
    return RunConfig(seed=args.seed, tol_pass=args.tol_pass, tol_fail=args.tol_fail,
                     samples=args.samples, mode=args.mode, jobs=args.jobs)


def _records(args):
    return load(args.catalog) if args.catalog else load_bundled()


def _finite(x):
    return x if isinstance(x, (int, str)) or (isinstance(x, float) and math.isfinite(x)) else None


def report_json(results: Sequence[CaseResult], cfg: RunConfig) -> str:
    """Machine-readable report; only the ``seconds`` fields vary between runs."""
    cases = []
    for r in results:
        d = r.to_dict()
        d["max_residual"] = _finite(d["max_residual"])
        cases.append(d)
    counts = Counter(r.verdict for r in results)
    doc = {
        "config": {"seed": cfg.seed, "tol_pass": cfg.tol_pass, "tol_fail": cfg.tol_fail,
                   "samples": cfg.samples, "mode": cfg.mode},
        "cases": cases,
        "summary": {"total": len(results), "matched": sum(r.matched for r in results),
                    "errors": sum(r.status == "ERROR" for r in results),
                    "verdicts": dict(sorted(counts.items()))},
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def report_text(results: Sequence[CaseResult]) -> str:
    lines = []
    width = max((len(r.id) for r in results), default=2)
    for r in results:
        mark = "ok" if r.matched else ("ERROR" if r.status == "ERROR" else "MISMATCH")
        res = f"{r.max_residual:.2e}" if math.isfinite(r.max_residual) else "-"
        lines.append(f"{r.id:<{width}}  {r.status:<14} expected {r.expected:<11} {mark:<8} "
                     f"residual {res:<9} {r.seconds:6.2f}s")
        for n in r.notes:
            lines.append(f"{'':<{width}}    {n}")
    matched = sum(r.matched for r in results)
    lines.append(f"{matched}/{len(results)} cases met their expected verdict")
    return "\n".join(lines)


def exit_code(results: Sequence[CaseResult]) -> int:
    if any(r.status == "ERROR" for r in results):
        return EXIT_ERROR
    return EXIT_OK if all(r.matched for r in results) else EXIT_MISMATCH


def _find(records, case_id):
    for r in records:
        if r.id == case_id:
            return r
    raise CatalogError(f"no case with id {case_id!r}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        records = _records(args)
        if args.command in ("verify", "list"):
            chosen = select(records, args.filter, args.kind)
        else:
            rec = _find(records, args.id)
        cfg = _config(args) if args.command != "list" else None
    except (CatalogError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if args.command == "list":
        for r in chosen:
            flags = f"  [{', '.join(r.flags)}]" if r.flags else ""
            print(f"{r.id}  {r.kind}  expect {r.verdict}  {r.title}{flags}")
        return EXIT_OK

    if args.command == "verify":
        results = run_cases(chosen, cfg)
        print(report_json(results, cfg) if args.format == "json" else report_text(results))
        return exit_code(results)

    cc = compile_case(rec)
    if args.command == "show":
        print(dumps([rec]).rstrip())
        print()
        for label, e in explain(cc):
            print(f"{label}:\n    {to_text(e, cc.ctx)}")
        return EXIT_OK

    for label, e in explain(cc):
        print(f"{label}:\n    {to_text(e, cc.ctx)}")
    result = run_case(rec, cfg)
    print(report_text([result]))
    return exit_code([result])


if __name__ == "__main__":
    raise SystemExit(main())
