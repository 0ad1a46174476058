"""Execute catalog cases and collect per-case results."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from .catalog import CaseRecord, CompiledCase, compile_case
from .detcheck import Status, Verdict, combine, decide_zero
from .expr import Jet, RFun, normalize, to_text
from .invariance import (
    PointField,
    SolutionWithConstants,
    check_criterion_split,
    check_inherited,
    defect,
    find_invariant_combo,
    span_decompose,
)
from .jet import GeneralizedField, commutator, evolutionary_representative, prolong_apply
from .reduce import (
    apply_ansatz,
    check_first_integrals,
    check_identity,
    first_integral_drift,
    solution_u,
    verify_reduced_system,
    verify_solution,
)
from .sampling import N_SAMPLES, TOL_FAIL, TOL_PASS, case_rng

__all__ = ["RunConfig", "CaseResult", "run_case", "run_cases", "matches", "EngineError"]

DRIFT_TOL = 1e-6
SPAN_TOL = 1e-8


class EngineError(RuntimeError):
    """A case could not be executed (as opposed to failing its check)."""


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    tol_pass: float = TOL_PASS
    tol_fail: float = TOL_FAIL
    samples: int = N_SAMPLES
    mode: str = "both"
    jobs: int = 1

    def __post_init__(self):
        if not (self.tol_pass > 0 and self.tol_fail > 0):
            raise ValueError("tolerances must be positive")
        if self.tol_pass > self.tol_fail:
            raise ValueError("pass tolerance must not exceed fail tolerance")
        if self.mode not in ("symbolic", "numeric", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.samples < 1 or self.jobs < 1:
            raise ValueError("samples and jobs must be positive")


@dataclass
class CaseResult:
    id: str
    kind: str
    status: str
    stage: str
    max_residual: float
    samples: int
    seconds: float
    notes: list[str] = field(default_factory=list)
    verdict: str = "INCONCLUSIVE"
    expected: str = ""
    matched: bool = False
    error: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_residual"] = float(self.max_residual)
        d["seconds"] = round(self.seconds, 3)
        return d


def matches(outcome: str, expected: str) -> bool:
    """Does an outcome (PASS/FAIL/INCONCLUSIVE) meet the expectation?"""
    if expected == "REPORT-ONLY":
        return True
    return outcome == expected


def run_case(rec: CaseRecord, cfg: RunConfig = RunConfig()) -> CaseResult:
    """Run one record; engine failures become an ``ERROR`` result."""
    t0 = time.perf_counter()
    try:
        cc = compile_case(rec)
        v = _dispatch(cc, cfg)
    except Exception as exc:  # reported per case, never aborts a suite
        return CaseResult(rec.id, rec.kind, "ERROR", "-", float("nan"), 0, time.perf_counter() - t0,
                          [f"{type(exc).__name__}: {exc}"], "ERROR", rec.verdict, False, str(exc))
    seconds = time.perf_counter() - t0
    notes = list(dict.fromkeys(v.notes))
    if any(f in rec.flags for f in ("typo-suspect", "interpreted")):
        notes.insert(0, f"flags: {', '.join(rec.flags)}")
    return CaseResult(rec.id, rec.kind, str(v.status), v.stage, float(v.numeric_max_residual),
                      v.samples_used, seconds, notes, v.outcome, rec.verdict, matches(v.outcome, rec.verdict))


def _run_one(args):
    rec, cfg = args
    return run_case(rec, cfg)


def run_cases(records: Sequence[CaseRecord], cfg: RunConfig = RunConfig()) -> list[CaseResult]:
    """Run records serially or in worker processes; results keep input order."""
    if cfg.jobs <= 1 or len(records) <= 1:
        return [run_case(r, cfg) for r in records]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(_run_one, [(r, cfg) for r in records]))


# ------------------------------------------------------------------ dispatch


def _dispatch(cc: CompiledCase, cfg: RunConfig) -> Verdict:
    handler = _HANDLERS.get((cc.record.kind, cc.record.task or "default"))
    if handler is None:
        raise EngineError(f"no handler for kind {cc.record.kind!r} with task {cc.record.task!r}")
    return handler(cc, cfg, case_rng(cfg.seed, cc.id))


def _floats(d) -> dict:
    return {k: float(v) for k, v in d.items()}


def _characteristic(op) -> GeneralizedField:
    if isinstance(op, PointField):
        return evolutionary_representative(op.xi_t, op.xi_x, op.eta, op.field)
    return op


def _targets(cc: CompiledCase) -> list:
    names = cc.record.target or tuple(cc.operators)
    return [cc.operators[n] for n in names]


def _need(value, what: str, cc: CompiledCase):
    if value is None:
        raise EngineError(f"case {cc.id} needs {what}")
    return value


def symmetry_residual(cc: CompiledCase) -> tuple[sp.Expr, sp.Expr]:
    """Prolonged equation before and after reduction to the manifold."""
    X = _characteristic(_targets(cc)[0])
    H = _need(cc.equation, "an equation", cc)
    return prolong_apply(X, H, None, cc.frame), prolong_apply(X, H, cc.manifold(), cc.frame)


def _symmetry(cc, cfg, rng) -> Verdict:
    X = _characteristic(_targets(cc)[0])
    m = cc.manifold()
    if m is not None and X.field not in m.fields and X.field not in {j.field for j, _ in m.rules}:
        raise EngineError(f"manifold has no rule for {X.field}")
    H = _need(cc.equation, "an equation", cc)
    residual = _substituted(cc, prolong_apply(X, H, m, cc.frame))
    return decide_zero(residual, cc.domain, rng, cfg.mode, cfg.samples, cfg.tol_pass, cfg.tol_fail,
                       fixed=_floats(cc.fixed), instantiations=cc.instantiations(), anti_base=cc.anti_base)


def _commutator(cc, cfg, rng) -> Verdict:
    ops = _targets(cc)
    if len(ops) != 2:
        raise EngineError("a commutator check names two operators")
    A, B = (_characteristic(o) for o in ops)
    m = cc.manifold()
    eta = commutator(A, B, m, cc.frame).eta
    expected = cc.parse(_need(cc.record.expect_value("result"), "an expected result", cc))
    if isinstance(expected, PointField):
        expected = _characteristic(expected).eta
    diff = eta - expected
    if m is not None:
        diff = m.reduce(diff)
    diff = _substituted(cc, diff)
    v = decide_zero(diff, cc.domain, rng, cfg.mode, cfg.samples, cfg.tol_pass, cfg.tol_fail,
                    fixed=_floats(cc.fixed), instantiations=cc.instantiations())
    v.notes.append(f"computed characteristic: {to_text(normalize(eta), cc.ctx)}")
    return v


def _instantiation_runs(cc: CompiledCase):
    """(instantiations, fixed) pairs: one per declared instance, else one default."""
    if cc.instances:
        return [([i.functions] if i.functions else None, {**_floats(cc.fixed), **i.values}) for i in cc.instances]
    return [(cc.instantiations(), _floats(cc.fixed))]


def _substituted(cc: CompiledCase, e):
    return e.xreplace(cc.fixed) if (e is not None and cc.fixed) else e


def _fixed_ansatz(cc: CompiledCase):
    a = _need(cc.ansatz, "an ansatz", cc)
    if not cc.fixed:
        return a
    from dataclasses import replace

    kw = {}
    for key in ("U", "quadrature", "rhs", "first_derivative"):
        val = getattr(a, key)
        if val is not None:
            kw[key] = val.xreplace(cc.fixed)
    if a.bracket is not None:
        kw["bracket"] = tuple(b.xreplace(cc.fixed) for b in a.bracket)
    return replace(a, **kw)


def _fixed_reduced(cc: CompiledCase):
    rs = _need(cc.reduced, "a reduced system", cc)
    if not cc.fixed:
        return rs
    from .reduce import ReducedSystem

    if rs.algebraic:
        return ReducedSystem.from_algebraic([e.xreplace(cc.fixed) for e in rs.equations])
    return ReducedSystem.from_solved({k: v.xreplace(cc.fixed) for k, v in rs.solved.items()})


def _reduced_system(cc, cfg, rng) -> Verdict:
    pde = _substituted(cc, _need(cc.equation, "an equation", cc))
    a, rs = _fixed_ansatz(cc), _fixed_reduced(cc)
    out = []
    for insts, _ in _instantiation_runs(cc):
        out.append(verify_reduced_system(pde, a, rs, cc.domain, rng, cfg.mode, cfg.samples,
                                         instantiations=insts))
    return combine(out)


def _first_integrals(cc, cfg, rng) -> Verdict:
    names = cc.record.target
    integrals = [cc.defs[n] for n in names]
    return check_first_integrals(integrals, _need(cc.manifold(), "a manifold", cc), cc.ansatz)


def _identity(cc, cfg, rng) -> Verdict:
    out = []
    for text in _need(cc.record.expect_values("identity") or None, "an identity", cc):
        out.append(check_identity(_substituted(cc, cc.parse(text)), _fixed_reduced(cc), cc.frame,
                                  cc.domain, rng, cfg.mode, cfg.samples, fixed=_floats(cc.fixed)))
    return combine(out)


def _state_params(cc: CompiledCase, exprs, exclude=()) -> list[sp.Symbol]:
    free = set().union(*(sp.sympify(e).free_symbols for e in exprs))
    skip = {cc.frame.x, cc.frame.t} | set(cc.fixed) | set(exclude)
    return sorted((s for s in free if not isinstance(s, (Jet, RFun)) and s not in skip), key=str)


def _draw_values(cc: CompiledCase, params, rng) -> dict:
    vals = {k: float(v[0]) for k, v in cc.domain.draw(params, 1, rng, _floats(cc.fixed)).items()
            if k in set(params)}
    return {**_floats(cc.fixed), **vals}


def _drift(cc, cfg, rng) -> Verdict:
    rs = _need(cc.reduced, "a reduced system", cc)
    q = cc.parse(_need(cc.record.expect_value("quantity"), "a conserved quantity", cc))
    y0 = _need(cc.solution_opts.get("initial"), "initial values", cc)
    span = cc.solution_opts.get("span", (0.0, 1.0))
    phis = [RFun(n) for n in cc.record.rfuncs]
    draws = int(cc.solution_opts.get("draws", 3))
    worst = 0.0
    for _ in range(draws):
        vals = _draw_values(cc, _state_params(cc, [q, *rs.solved.values()]), rng)
        worst = max(worst, first_integral_drift(rs, q, phis, vals, y0, span, frame=cc.frame))
    status = Status.PASS_NUMERIC if worst < DRIFT_TOL else Status.FAIL
    return Verdict(status, numeric_max_residual=worst, samples_used=draws,
                   notes=[f"maximum relative drift {worst:.3g} over {draws} parameter draws"])


def _solution(cc, cfg, rng) -> Verdict:
    pde = _need(cc.equation, "an equation", cc)
    sol = _need(cc.solution, "a solution", cc)
    draws = int(cc.solution_opts.get("draws", 10))
    grid = int(cc.solution_opts.get("grid", 20))
    out = []
    for insts, fixed in _instantiation_runs(cc):
        out.append(verify_solution(pde, sol, cc.ansatz, cc.domain, rng, draws, grid,
                                   instantiations=insts, fieldname=cc.acts_on, frame=cc.frame,
                                   anti_base=cc.anti_base, fixed=fixed))
    return combine(out)


def _solution_with_constants(cc: CompiledCase) -> SolutionWithConstants:
    sol = _need(cc.solution, "a solution", cc)
    return SolutionWithConstants(solution_u(cc.ansatz, sol), cc.solution_opts.get("constants", ()), cc.frame)


def _point_targets(cc: CompiledCase) -> list[PointField]:
    ops = _targets(cc)
    if not all(isinstance(o, PointField) for o in ops):
        raise EngineError("invariance checks need point fields")
    return ops


def _combo(cc, cfg, rng) -> Verdict:
    Xs = _point_targets(cc)
    s = _solution_with_constants(cc)
    exprs = [s.f] + [c for X in Xs for c in (X.xi_t, X.xi_x, X.eta)]
    params = _state_params(cc, exprs)
    draws = int(cc.solution_opts.get("draws", 1))
    results = []
    for _ in range(draws):
        vals = _draw_values(cc, params, rng)
        results.append(find_invariant_combo(Xs, s, vals, cc.domain, rng))
    statuses = {r.status for r in results}
    notes = [f"{draws} draw(s): " + ", ".join(sorted(statuses))]
    ratio = max(r.ratio for r in results)
    if statuses == {"INVARIANT"}:
        check = max(r.verification for r in results)
        notes.append(f"largest verification residual {check:.3g}")
        return Verdict(Status.PASS_NUMERIC, numeric_max_residual=check,
                       samples_used=sum(r.points for r in results), notes=notes)
    if statuses == {"NONE"}:
        notes.append(f"no invariant combination; smallest singular value ratio {min(r.ratio for r in results):.3g}")
        return Verdict(Status.FAIL, numeric_max_residual=ratio,
                       samples_used=sum(r.points for r in results), notes=notes)
    for r in results:
        notes.extend(r.notes)
    return Verdict(Status.INCONCLUSIVE, numeric_max_residual=ratio,
                   samples_used=sum(r.points for r in results), notes=notes)


def _defect(cc, cfg, rng) -> Verdict:
    X = _point_targets(cc)[0]
    s = _solution_with_constants(cc)
    expected = cc.parse(_need(cc.record.expect_value("result"), "an expected defect", cc))
    return decide_zero(_substituted(cc, defect(X, s) - expected), cc.domain, rng, cfg.mode, cfg.samples,
                       cfg.tol_pass, cfg.tol_fail, fixed=_floats(cc.fixed))


def _span(cc, cfg, rng) -> Verdict:
    X = _point_targets(cc)[0]
    s = _solution_with_constants(cc)
    text = _need(cc.record.expect_value("span"), "expected span coefficients", cc)
    from .catalog.schema import _split_top

    expected = [cc.parse(p) for p in _split_top(text)]
    d = defect(X, s)
    draws = int(cc.solution_opts.get("draws", 3))
    worst, used = 0.0, 0
    for _ in range(draws):
        vals = _draw_values(cc, _state_params(cc, [s.f, d, *expected]), rng)
        mu, resid = span_decompose(d, s, vals, cc.domain, rng)
        sub = {sp.Symbol(str(k)): v for k, v in vals.items()}
        want = np.array([float(e.xreplace(sub)) for e in expected])
        err = float(np.max(np.abs(mu - want) / (1.0 + np.abs(want))))
        worst = max(worst, err, resid)
        used += 1
    status = Status.PASS_NUMERIC if worst < SPAN_TOL else Status.FAIL
    return Verdict(status, numeric_max_residual=worst, samples_used=used,
                   notes=[f"span coefficients vs expected over {used} draw(s): {worst:.3g}"])


def _criterion_split(cc, cfg, rng) -> Verdict:
    X = _point_targets(cc)[0]
    a = _need(cc.ansatz, "an ansatz", cc)
    atom = _need(cc.ansatz_opts.get("collect"), "a collection atom", cc)
    criteria = [cc.parse(c) for c in cc.record.expect_values("criterion")]
    if not criteria:
        raise EngineError("criterion split needs criterion lines")
    return check_criterion_split(X, a.value, atom, criteria, cc.ansatz_opts.get("multiplier", sp.S.One),
                                 values=_floats(cc.fixed), domain=cc.domain, rng=rng)


def _inherited(cc, cfg, rng) -> Verdict:
    Q = _point_targets(cc)[0]
    names = _need(cc.record.expect_value("integrals"), "the first integrals", cc)
    integrals = [cc.defs[n.strip()] for n in names.split(",")]
    fs = [cc.parse(_need(cc.record.expect_value(f"f{i + 1}"), f"f{i + 1}", cc)) for i in range(len(integrals))]
    mt = cc.parse(_need(cc.record.expect_value("m"), "m", cc))
    return check_inherited(Q, integrals, _need(cc.manifold(), "a manifold", cc), fs, mt,
                           mode=cfg.mode, domain=cc.domain, rng=rng, samples=cfg.samples)


_HANDLERS = {
    ("symmetry-check", "default"): _symmetry,
    ("commutator-check", "default"): _commutator,
    ("reduction-check", "default"): _reduced_system,
    ("reduction-check", "first-integrals"): _first_integrals,
    ("reduction-check", "identity"): _identity,
    ("reduction-check", "drift"): _drift,
    ("solution-check", "default"): _solution,
    ("invariance-check", "default"): _combo,
    ("invariance-check", "defect"): _defect,
    ("invariance-check", "span"): _span,
    ("invariance-check", "criterion-split"): _criterion_split,
    ("inherited-check", "default"): _inherited,
}

TASKS = sorted({f"{k}:{t}" for k, t in _HANDLERS})


def explain(cc: CompiledCase) -> list[tuple[str, sp.Expr]]:
    """Intermediate expressions of a case, labelled, for debugging."""
    rec = cc.record
    out: list[tuple[str, sp.Expr]] = []
    if rec.kind == "symmetry-check":
        before, after = symmetry_residual(cc)
        out += [("prolonged equation", before), ("on the manifold", after),
                ("normal form", normalize(_substituted(cc, after)))]
    elif rec.kind == "commutator-check":
        A, B = (_characteristic(o) for o in _targets(cc))
        out.append(("commutator characteristic", commutator(A, B, cc.manifold(), cc.frame).eta))
    elif rec.kind == "reduction-check" and cc.ansatz is not None and cc.equation is not None \
            and cc.ansatz.kind == "explicit":
        res = apply_ansatz(cc.equation, cc.ansatz)
        out.append(("residual after the ansatz", res))
        if cc.reduced is not None and cc.reduced.solved:
            out.append(("with the reduced system", normalize(res.xreplace(cc.reduced.solved))))
    elif rec.kind == "solution-check" and cc.solution is not None:
        out.append(("u", solution_u(cc.ansatz, cc.solution)))
    elif rec.kind == "invariance-check" and cc.solution is not None:
        s = _solution_with_constants(cc)
        for name in rec.target:
            op = cc.operators[name]
            if isinstance(op, PointField):
                out.append((f"defect of {name}", defect(op, s)))
    return out
