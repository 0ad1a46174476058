"""Sampling domains, seeded RNG streams and the numeric zero test."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy as sp

from .expr import Jet, RFun
from .expr.calculus import instantiate, library_assignments, opaque_calls
from .expr.numeric import Bindings, EvalError, Program, UnboundAtomError

__all__ = [
    "Interval",
    "Domain",
    "case_rng",
    "NumericOutcome",
    "numeric_zero_test",
    "TOL_PASS",
    "TOL_FAIL",
    "N_SAMPLES",
]

TOL_PASS = 1e-9
TOL_FAIL = 1e-6
N_SAMPLES = 20
MAX_REDRAWS = 10


def case_rng(seed: int, case_id: str) -> np.random.Generator:
    """Independent RNG stream derived from the global seed and a case id."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(case_id.encode())]))


@dataclass(frozen=True)
class Interval:
    """Closed interval with optional excluded points (kept 1e-3 away)."""

    lo: float
    hi: float
    exclude: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = rng.uniform(self.lo, self.hi, n)
        for _ in range(100):
            bad = np.zeros(n, dtype=bool)
            for p in self.exclude:
                bad |= np.abs(out - p) < 1e-3
            if not bad.any():
                break
            out[bad] = rng.uniform(self.lo, self.hi, int(bad.sum()))
        return out

    def text(self) -> str:
        s = f"[{_num(self.lo)}, {_num(self.hi)}]"
        if self.exclude:
            s += " exclude {" + ", ".join(_num(p) for p in self.exclude) + "}"
        return s


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


DEFAULT_FIELD = Interval(0.2, 2.0)
DEFAULT_JET = Interval(-1.0, 1.0)
DEFAULT_X = Interval(0.5, 3.0)
DEFAULT_T = Interval(0.0, 2.0)
DEFAULT_PARAM = Interval(0.5, 2.0)
DEFAULT_RFUN = Interval(0.5, 2.0)


@dataclass
class Domain:
    """Per-symbol sampling intervals plus positivity constraints.

    Symbols without an explicit interval get defaults by kind: fields in
    [0.2, 2], higher jets in [-1, 1], the space variable in [0.5, 3], time in
    [0, 2], reduction functions and parameters in [0.5, 2].
    """

    ranges: dict[str, Interval] = field(default_factory=dict)
    constraints: list[sp.Expr] = field(default_factory=list)
    space: str = "x"
    time: str = "t"

    def interval(self, sym: sp.Symbol) -> Interval:
        name = str(sym)
        if name in self.ranges:
            return self.ranges[name]
        if isinstance(sym, Jet):
            return DEFAULT_FIELD if sym.order == 0 else DEFAULT_JET
        if isinstance(sym, RFun):
            return DEFAULT_RFUN if sym.order == 0 else DEFAULT_JET
        if name == self.space:
            return DEFAULT_X
        if name == self.time:
            return DEFAULT_T
        return DEFAULT_PARAM

    def draw(self, symbols: Iterable[sp.Symbol], n: int, rng: np.random.Generator,
             fixed: Mapping[sp.Symbol, object] | None = None) -> dict[sp.Symbol, np.ndarray]:
        """``n`` points satisfying every constraint (redrawn up to ten times)."""
        fixed = dict(fixed or {})
        symbols = sorted(set(symbols) | self._constraint_symbols(), key=str)
        symbols = [s for s in symbols if s not in fixed]
        vals = {s: self.interval(s).sample(rng, n) for s in symbols}
        if not self.constraints:
            return vals
        progs = Program(self.constraints)
        for _ in range(MAX_REDRAWS):
            ok = self._satisfied(progs, vals, fixed, n)
            if ok.all():
                return vals
            k = int((~ok).sum())
            for s in symbols:
                vals[s][~ok] = self.interval(s).sample(rng, k)
        ok = self._satisfied(progs, vals, fixed, n)
        if not ok.all():
            raise EvalError("could not satisfy the sampling constraints")
        return vals

    def _constraint_symbols(self) -> set[sp.Symbol]:
        out: set[sp.Symbol] = set()
        for c in self.constraints:
            out |= c.free_symbols
        return out

    def _satisfied(self, progs: Program, vals, fixed, n) -> np.ndarray:
        ok = np.ones(n, dtype=bool)
        b = Bindings({**fixed, **vals})
        for i in range(n):
            pt = Bindings({k: (v[i] if isinstance(v, np.ndarray) and v.shape == (n,) else v)
                           for k, v in b.values.items()})
            try:
                res = progs(pt)
            except EvalError:
                ok[i] = False
                continue
            ok[i] = all(r > 0 for r in res)
        return ok


@dataclass
class NumericOutcome:
    status: str  # "pass", "fail" or "inconclusive"
    max_rel: float
    samples: int
    notes: list[str]


def _terms(e: sp.Expr) -> list[sp.Expr]:
    return list(sp.Add.make_args(sp.sympify(e)))


def numeric_zero_test(
    expr: sp.Expr,
    domain: Domain,
    rng: np.random.Generator,
    n: int = N_SAMPLES,
    tol_pass: float = TOL_PASS,
    tol_fail: float = TOL_FAIL,
    fixed: Mapping[sp.Symbol, object] | None = None,
    instantiations: Sequence[Mapping[str, sp.Lambda]] | None = None,
    anti_base: Mapping[str, float] | None = None,
) -> NumericOutcome:
    """Probabilistic zero test at ``n`` seeded points.

    Each point's residual is scaled by ``1 + max |term|`` over the additive
    terms of ``expr``.  Opaque functions are replaced by at least two library
    instantiations and every instantiation is tested.
    """
    expr = sp.sympify(expr)
    names = opaque_calls(expr)
    if instantiations is None:
        instantiations = library_assignments(names, 2) if names else [{}]
    worst = 0.0
    used = 0
    notes: list[str] = []
    for inst in instantiations:
        concrete = instantiate(expr, inst) if inst else expr
        terms = _terms(concrete)
        prog = Program(terms)
        syms = set(concrete.free_symbols) - set(fixed or {})
        rel, count, note = _sample_rel(prog, syms, domain, rng, n, fixed, anti_base)
        if note:
            notes.append(note)
        used += count
        if count:
            worst = max(worst, float(np.max(rel)))
        if count < n:
            return NumericOutcome("inconclusive", worst, used, notes)
    if worst < tol_pass:
        status = "pass"
    elif worst > tol_fail:
        status = "fail"
    else:
        status = "inconclusive"
    return NumericOutcome(status, worst, used, notes)


def _sample_rel(prog: Program, syms, domain: Domain, rng, n, fixed, anti_base):
    fixed = dict(fixed or {})
    funcs = {}
    base = dict(anti_base or {})
    vals = domain.draw(syms, n, rng, fixed)
    try:
        out = prog.run(Bindings({**fixed, **vals}, funcs, base))
        arr = np.array([np.broadcast_to(np.asarray(o, dtype=float), (n,)) for o in out])
        return _rel(arr), n, ""
    except UnboundAtomError:
        raise
    except EvalError:
        pass
    good: list[float] = []
    failures = 0
    last = ""
    for _ in range(MAX_REDRAWS + 1):
        for i in range(n):
            if len(good) >= n:
                break
            pt = {k: float(v[i]) for k, v in vals.items()}
            try:
                out = prog.run(Bindings({**fixed, **pt}, funcs, base))
                good.append(float(_rel(np.array([[float(o)] for o in out]))[0]))
            except UnboundAtomError:
                raise
            except EvalError as exc:
                failures += 1
                last = str(exc)
        if len(good) >= n:
            break
        vals = domain.draw(syms, n, rng, fixed)
    note = f"{failures} sample(s) redrawn after evaluation errors (last: {last})" if failures else ""
    if len(good) < n:
        note = f"only {len(good)} of {n} samples evaluable; {note}"
    return np.array(good), len(good), note


def _rel(arr: np.ndarray) -> np.ndarray:
    total = np.abs(arr.sum(axis=0))
    scale = 1.0 + np.max(np.abs(arr), axis=0)
    return total / scale
