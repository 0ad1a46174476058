"""Case records: the line-oriented file format, validation and compilation.

A case file is UTF-8 text made of blocks that each start with ``[case]``.
Within a block, section headers (``[params]``, ``[defs]``, ``[manifold]``,
``[operator]``, ``[ansatz]``, ``[reduced]``, ``[solution]``, ``[expect]``)
introduce ``key = value`` lines.  ``#`` starts a comment line.

Parameter lines::

    beta in [0.5, 2] exclude {0}     sampling interval (declares beta)
    u_x in [0.3, 1]                  interval for a jet or variable
    lambda = 0                       fixed value (declares lambda)
    param k, c                       declaration with the default interval
    opaque A1(2)                     arbitrary smooth function of two arguments
    require x + gamma > 0            sampling constraint
    try h2(z) = z                    explicit instantiation of an opaque function
    anti_base x2 = 0                 base point of antiderivatives in x2

Manifold lines are ``rule: u_xx = <expr>``.  Operators are either a
characteristic ``Q = <expr>`` or a point field ``X = point(xi_t, xi_x, eta)``.
The total-derivative macros ``Dx(e)`` and ``Dt(e)`` are available everywhere.
"""

from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Iterable, Sequence

import sympy as sp

from ..expr import Context, Frame, Jet, ParseError, RFun, parse
from ..expr.atoms import ContextError
from ..jet import GeneralizedField, Manifold, total_derivative
from ..reduce import Ansatz, ReducedSystem, SolutionFamily
from ..sampling import Domain, Interval

__all__ = [
    "KINDS",
    "VERDICTS",
    "CatalogError",
    "CaseRecord",
    "CompiledCase",
    "Instance",
    "parse_records",
    "load",
    "load_bundled",
    "dumps",
    "dump",
    "select",
    "compile_case",
    "validate",
    "bundled_paths",
]

KINDS = (
    "symmetry-check",
    "reduction-check",
    "solution-check",
    "invariance-check",
    "inherited-check",
    "commutator-check",
)
VERDICTS = ("PASS", "FAIL", "REPORT-ONLY")
SECTIONS = ("case", "params", "defs", "manifold", "operator", "ansatz", "reduced", "solution", "expect")
CASE_KEYS = (
    "id", "kind", "task", "title", "topic", "fields", "frame", "rfuncs",
    "acts_on", "flags", "variant", "equation", "target",
)
FLAGS = ("typo-suspect", "interpreted", "control", "slow")
DATA_DIR = Path(__file__).with_name("data")


class CatalogError(ValueError):
    """Malformed case file or record, reported with its location."""


def _split_top(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside parentheses and brackets."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail or out:
        out.append(tail)
    return out


def _names(text: str) -> tuple[str, ...]:
    return tuple(s for s in (p.strip() for p in text.split(",")) if s)


@dataclass(frozen=True)
class CaseRecord:
    """One verification case, kept as raw text so it round-trips exactly."""

    id: str
    kind: str
    task: str = ""
    title: str = ""
    topic: str = ""
    fields: tuple[str, ...] = ("u",)
    frame: tuple[str, str] = ("x", "t")
    rfuncs: tuple[str, ...] = ("phi1", "phi2")
    acts_on: str = ""
    flags: tuple[str, ...] = ()
    variant: str = ""
    equation: str = ""
    target: tuple[str, ...] = ()
    params: tuple[str, ...] = ()
    defs: tuple[tuple[str, str], ...] = ()
    manifold: tuple[tuple[str, str], ...] = ()
    operator: tuple[tuple[str, str], ...] = ()
    ansatz: tuple[tuple[str, str], ...] = ()
    reduced: tuple[tuple[str, str], ...] = ()
    solution: tuple[tuple[str, str], ...] = ()
    expect: tuple[tuple[str, str], ...] = ()
    source: str = field(default="", compare=False)

    @property
    def verdict(self) -> str:
        return self.expect_value("verdict") or ""

    def expect_value(self, key: str) -> str | None:
        for k, v in self.expect:
            if k == key:
                return v
        return None

    def expect_values(self, key: str) -> list[str]:
        return [v for k, v in self.expect if k == key]

    def get(self, section: str, key: str) -> str | None:
        for k, v in getattr(self, section):
            if k == key:
                return v
        return None

    def get_all(self, section: str, key: str) -> list[str]:
        return [v for k, v in getattr(self, section) if k == key]


# ------------------------------------------------------------------ reading


def parse_records(text: str, source: str = "<string>") -> list[CaseRecord]:
    """Parse case blocks from ``text`` (no semantic validation)."""
    blocks: list[tuple[int, dict]] = []
    cur: dict | None = None
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise CatalogError(f"{where}: unknown section [{section}]")
            if section == "case":
                cur = {"_line": lineno, **{s: [] for s in SECTIONS}}
                blocks.append((lineno, cur))
            elif cur is None:
                raise CatalogError(f"{where}: section [{section}] before any [case]")
            continue
        if cur is None or section is None:
            raise CatalogError(f"{where}: content outside a [case] block")
        if section == "params":
            cur["params"].append(line)
            continue
        if section == "manifold":
            m = re.fullmatch(r"rule:\s*(\S+)\s*=\s*(.+)", line)
            if not m:
                raise CatalogError(f"{where}: manifold lines look like 'rule: u_xx = <expr>'")
            cur["manifold"].append((m.group(1), m.group(2).strip()))
            continue
        if section == "reduced":
            m = re.fullmatch(r"(\S+)\s*=\s*(.+)", line)
        else:
            m = re.fullmatch(r"([A-Za-z_][\w]*)\s*=\s*(.*)", line)
        if not m:
            raise CatalogError(f"{where}: expected 'key = value' in [{section}]")
        cur[section].append((m.group(1), m.group(2).strip()))

    records = []
    for lineno, b in blocks:
        records.append(_record_from_block(b, f"{source}:{lineno}"))
    return records


def _record_from_block(b: dict, where: str) -> CaseRecord:
    case = {}
    for k, v in b["case"]:
        if k not in CASE_KEYS:
            raise CatalogError(f"{where}: unknown [case] key {k!r}")
        if k in case:
            raise CatalogError(f"{where}: duplicate [case] key {k!r}")
        case[k] = v
    for req in ("id", "kind"):
        if req not in case:
            raise CatalogError(f"{where}: [case] needs {req!r}")
    kw = dict(
        id=case["id"],
        kind=case["kind"],
        task=case.get("task", ""),
        title=case.get("title", ""),
        topic=case.get("topic", ""),
        acts_on=case.get("acts_on", ""),
        variant=case.get("variant", ""),
        equation=case.get("equation", ""),
        source=where,
    )
    if "fields" in case:
        kw["fields"] = _names(case["fields"])
    if "frame" in case:
        fr = _names(case["frame"])
        if len(fr) != 2:
            raise CatalogError(f"{where}: frame needs two names")
        kw["frame"] = fr
    if "rfuncs" in case:
        kw["rfuncs"] = _names(case["rfuncs"])
    if "flags" in case:
        kw["flags"] = _names(case["flags"])
    if "target" in case:
        kw["target"] = _names(case["target"])
    for s in ("defs", "manifold", "operator", "ansatz", "reduced", "solution", "expect"):
        kw[s] = tuple(b[s])
    kw["params"] = tuple(b["params"])
    return CaseRecord(**kw)


def bundled_paths() -> list[Path]:
    return sorted(DATA_DIR.glob("*.case"))


def load(path: str | Path | Sequence[str | Path], check: bool = True) -> list[CaseRecord]:
    """Load and validate records from a file, a directory or several paths."""
    if isinstance(path, (str, Path)):
        paths = [Path(path)]
    else:
        paths = [Path(p) for p in path]
    files: list[Path] = []
    for p in paths:
        if p.is_dir():
            files.extend(sorted(p.glob("*.case")))
        elif p.exists():
            files.append(p)
        else:
            raise CatalogError(f"{p}: no such file or directory")
    records: list[CaseRecord] = []
    for f in files:
        records.extend(parse_records(f.read_text(encoding="utf-8"), str(f)))
    if check:
        validate(records)
    return records


def load_bundled(check: bool = True) -> list[CaseRecord]:
    return load(bundled_paths(), check=check)


def validate(records: Sequence[CaseRecord]) -> None:
    """Semantic checks: unique ids, known kinds and verdicts, variant groups,
    and every expression parses with only declared symbols."""
    seen: dict[str, str] = {}
    groups: dict[str, list[CaseRecord]] = {}
    for r in records:
        where = f"{r.source}: case {r.id}"
        if r.id in seen:
            raise CatalogError(f"{where}: duplicate id (first at {seen[r.id]})")
        seen[r.id] = r.source
        if not re.fullmatch(r"[A-Za-z0-9][\w.-]*", r.id):
            raise CatalogError(f"{where}: field id: malformed id")
        if r.kind not in KINDS:
            raise CatalogError(f"{where}: field kind: unknown kind {r.kind!r}")
        if r.verdict not in VERDICTS:
            raise CatalogError(f"{where}: field expect.verdict: must be one of {', '.join(VERDICTS)}")
        for fl in r.flags:
            if fl not in FLAGS:
                raise CatalogError(f"{where}: field flags: unknown flag {fl!r}")
        if r.variant:
            groups.setdefault(r.variant, []).append(r)
        elif "typo-suspect" in r.flags:
            raise CatalogError(f"{where}: field variant: typo-suspect records need a variant group")
        compile_case(r)
    for name, members in groups.items():
        if any("typo-suspect" in m.flags for m in members) and len(members) < 2:
            raise CatalogError(f"variant group {name!r} is marked typo-suspect but has one member")


def select(records: Iterable[CaseRecord], pattern: str | None = None, kind: str | None = None) -> list[CaseRecord]:
    """Records whose id matches the glob ``pattern`` and/or of the given kind, by id."""
    out = [
        r for r in records
        if (pattern is None or fnmatch.fnmatchcase(r.id, pattern))
        and (kind is None or r.kind == kind)
    ]
    return sorted(out, key=lambda r: r.id)


# ------------------------------------------------------------------ writing


def dumps(records: Iterable[CaseRecord]) -> str:
    """Serialize records to the case-file format."""
    chunks = []
    for r in records:
        lines = ["[case]", f"id = {r.id}", f"kind = {r.kind}"]
        defaults = {f.name: f.default for f in dc_fields(CaseRecord)}
        for key in CASE_KEYS[2:]:
            val = getattr(r, key)
            if val == defaults.get(key):
                continue
            if isinstance(val, tuple):
                val = ", ".join(val)
            lines.append(f"{key} = {val}")
        if r.params:
            lines.append("[params]")
            lines.extend(r.params)
        for section in SECTIONS[2:]:
            items = getattr(r, section)
            if not items:
                continue
            lines.append(f"[{section}]")
            for k, v in items:
                lines.append(f"rule: {k} = {v}" if section == "manifold" else f"{k} = {v}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")


def dump(records: Iterable[CaseRecord], path: str | Path) -> None:
    Path(path).write_text(dumps(records), encoding="utf-8")


# ------------------------------------------------------------------ compilation


@dataclass
class Instance:
    """Concrete opaque functions and fixed values for one verification run."""

    functions: dict[str, sp.Lambda] = field(default_factory=dict)
    values: dict[sp.Symbol, float] = field(default_factory=dict)


@dataclass
class CompiledCase:
    """Parsed form of a :class:`CaseRecord`."""

    record: CaseRecord
    ctx: Context
    frame: Frame
    domain: Domain
    fixed: dict[sp.Symbol, sp.Expr]
    tries: dict[str, sp.Lambda]
    anti_base: dict[str, float]
    defs: dict[str, sp.Expr]
    rules: list[tuple[Jet, sp.Expr]]
    operators: dict[str, object]
    equation: sp.Expr | None
    ansatz: Ansatz | None
    ansatz_opts: dict[str, object]
    reduced: ReducedSystem | None
    solution: SolutionFamily | None
    solution_opts: dict[str, object]
    instances: list[Instance]
    _manifold: Manifold | None = None

    @property
    def id(self) -> str:
        return self.record.id

    @property
    def acts_on(self) -> str:
        return self.record.acts_on or self.record.fields[0]

    def manifold(self) -> Manifold | None:
        if not self.rules:
            return None
        if self._manifold is None:
            self._manifold = Manifold(self.rules, self.frame)
        return self._manifold

    def parse(self, text: str) -> sp.Expr:
        """Parse an expression in this case's context (operator names allowed)."""
        text = text.strip()
        if text in self.operators and not isinstance(self.operators[text], tuple):
            op = self.operators[text]
            return op.eta if isinstance(op, GeneralizedField) else op
        return parse(text, self.ctx)

    def instantiations(self) -> list[dict[str, sp.Lambda]] | None:
        """Explicit ``try`` functions first, then two library instantiations.

        ``None`` (the library default downstream) when nothing is pinned.
        """
        if not self.tries:
            return None
        from ..expr.calculus import library_assignments

        libs = library_assignments(dict(self.ctx.opaques), 2)
        return [{**libs[0], **self.tries}] + libs


_RANGE = re.compile(r"(\w+)\s+in\s+\[([^,\]]+),([^\]]+)\](?:\s+exclude\s+\{([^}]*)\})?")
_OPAQUE = re.compile(r"opaque\s+(\w+)\((\d+)\)")
_REQUIRE = re.compile(r"require\s+(.+?)\s*(>|<)\s*(.+)")
_TRY = re.compile(r"try\s+(\w+)\(([\w\s,]+)\)\s*=\s*(.+)")
_ANTI = re.compile(r"anti_base\s+(\w+)\s*=\s*(.+)")
_PARAM = re.compile(r"param\s+(.+)")
_FIXED = re.compile(r"(\w+)\s*=\s*(.+)")
_POINT = re.compile(r"point\((.*)\)")


def _fail(r: CaseRecord, key: str, msg: str) -> CatalogError:
    return CatalogError(f"{r.source}: case {r.id}: field {key}: {msg}")


def _num(text: str, r: CaseRecord, key: str) -> float:
    try:
        return float(sp.sympify(text, rational=False).evalf())
    except (sp.SympifyError, TypeError) as exc:
        raise _fail(r, key, f"not a number: {text!r}") from exc


def compile_case(r: CaseRecord) -> CompiledCase:
    """Parse every expression of ``r``; raises :class:`CatalogError`."""
    frame = Frame(*r.frame)
    base_names = set(r.fields) | set(r.rfuncs) | set(r.frame)

    def is_state(name: str) -> bool:
        return name in base_names or name.split("_", 1)[0] in set(r.fields) | set(r.rfuncs)

    declared: list[str] = []
    opaques: dict[str, int] = {}
    for line in r.params:
        if m := _OPAQUE.fullmatch(line):
            opaques[m.group(1)] = int(m.group(2))
        elif m := _RANGE.fullmatch(line):
            if not is_state(m.group(1)):
                declared.append(m.group(1))
        elif m := _PARAM.fullmatch(line):
            declared.extend(_names(m.group(1)))
        elif _REQUIRE.fullmatch(line) or _TRY.fullmatch(line) or _ANTI.fullmatch(line):
            pass
        elif m := _FIXED.fullmatch(line):
            declared.append(m.group(1))
        else:
            raise _fail(r, "params", f"cannot read {line!r}")

    macros = {
        "Dx": lambda e: total_derivative(e, frame.x, None, frame),
        "Dt": lambda e: total_derivative(e, frame.t, None, frame),
    }
    try:
        ctx = Context(frame=frame, fields=r.fields, rfuncs=r.rfuncs, params=tuple(declared),
                      opaques=opaques, macros=macros)
    except ContextError as exc:
        raise _fail(r, "params", str(exc)) from exc

    def P(text: str, key: str, c: Context | None = None) -> sp.Expr:
        try:
            return parse(text, c or ctx)
        except (ParseError, ContextError, ValueError, TypeError) as exc:
            raise _fail(r, key, str(exc)) from exc

    # defs may refer to earlier defs
    defs: dict[str, sp.Expr] = {}
    for name, text in r.defs:
        defs[name] = P(text, f"defs.{name}")
        try:
            ctx = Context(frame=frame, fields=r.fields, rfuncs=r.rfuncs, params=tuple(declared),
                          opaques=opaques, defs=dict(defs), macros=macros)
        except ContextError as exc:
            raise _fail(r, f"defs.{name}", str(exc)) from exc

    ranges: dict[str, Interval] = {}
    constraints: list[sp.Expr] = []
    fixed: dict[sp.Symbol, sp.Expr] = {}
    tries: dict[str, sp.Lambda] = {}
    anti_base: dict[str, float] = {}
    for line in r.params:
        if _OPAQUE.fullmatch(line) or _PARAM.fullmatch(line):
            continue
        if m := _RANGE.fullmatch(line):
            sym = P(m.group(1), "params")
            lo, hi = _num(m.group(2), r, "params"), _num(m.group(3), r, "params")
            excl = tuple(_num(v, r, "params") for v in _names(m.group(4) or ""))
            try:
                ranges[str(sym)] = Interval(lo, hi, excl)
            except ValueError as exc:
                raise _fail(r, "params", str(exc)) from exc
        elif m := _REQUIRE.fullmatch(line):
            a, b = P(m.group(1), "params.require"), P(m.group(3), "params.require")
            constraints.append(a - b if m.group(2) == ">" else b - a)
        elif m := _TRY.fullmatch(line):
            name = m.group(1)
            if name not in opaques:
                raise _fail(r, "params.try", f"{name} is not a declared opaque function")
            args = _names(m.group(2))
            if len(args) != opaques[name]:
                raise _fail(r, "params.try", f"{name} takes {opaques[name]} argument(s)")
            if set(args) & base_names:
                raise _fail(r, "params.try", "argument names clash with fields or variables")
            local = Context(frame=frame, fields=(), rfuncs=(), params=tuple(declared) + tuple(args))
            body = P(m.group(3), "params.try", local)
            tries[name] = sp.Lambda(tuple(sp.Symbol(a) for a in args), body)
        elif m := _ANTI.fullmatch(line):
            anti_base[m.group(1)] = _num(m.group(2), r, "params.anti_base")
        elif m := _FIXED.fullmatch(line):
            value = P(m.group(2), f"params.{m.group(1)}")
            if not value.is_number:
                raise _fail(r, f"params.{m.group(1)}", f"not a number: {m.group(2)!r}")
            fixed[sp.Symbol(m.group(1))] = value

    domain = Domain(ranges, constraints, frame.space, frame.time)

    rules = []
    for lhs, rhs in r.manifold:
        j = P(lhs, "manifold")
        if not isinstance(j, (Jet,)):
            raise _fail(r, "manifold", f"left-hand side {lhs!r} is not a jet")
        rules.append((j, P(rhs, f"manifold.{lhs}")))

    operators: dict[str, object] = {}
    acts_on = r.acts_on or r.fields[0]
    for name, text in r.operator:
        if m := _POINT.fullmatch(text):
            parts = _split_top(m.group(1))
            if len(parts) != 3:
                raise _fail(r, f"operator.{name}", "point(...) takes three coefficients")
            from ..invariance import PointField

            try:
                operators[name] = PointField(*(P(p, f"operator.{name}") for p in parts), acts_on, frame)
            except ValueError as exc:
                raise _fail(r, f"operator.{name}", str(exc)) from exc
        else:
            operators[name] = GeneralizedField(acts_on, P(text, f"operator.{name}"))
    for t in r.target:
        if t not in operators and t not in defs:
            raise _fail(r, "target", f"unknown operator or definition {t!r}")

    equation = P(r.equation, "equation") if r.equation else None

    ansatz = None
    opts: dict[str, object] = {}
    if r.ansatz:
        a = dict(r.ansatz)
        kind = a.get("kind", "explicit")
        kw: dict[str, object] = dict(kind=kind, field=acts_on, rfuncs=r.rfuncs, frame=frame)
        if "u" in a:
            kw["U"] = P(a["u"], "ansatz.u")
        for key in ("quadrature", "rhs", "first_derivative"):
            if key in a:
                kw[key] = P(a[key], f"ansatz.{key}")
        if "bracket" in a:
            parts = _split_top(a["bracket"])
            if len(parts) != 2:
                raise _fail(r, "ansatz.bracket", "needs two expressions")
            kw["bracket"] = tuple(P(p, "ansatz.bracket") for p in parts)
        if "sign" in a:
            kw["sign"] = int(_num(a["sign"], r, "ansatz.sign"))
        if "max_t_order" in a:
            kw["max_t_order"] = int(_num(a["max_t_order"], r, "ansatz.max_t_order"))
        for key in ("collect", "multiplier"):
            if key in a:
                opts[key] = P(a[key], f"ansatz.{key}")
        unknown = set(a) - {"kind", "u", "quadrature", "rhs", "first_derivative", "bracket", "sign",
                            "max_t_order", "collect", "multiplier"}
        if unknown:
            raise _fail(r, "ansatz", f"unknown key(s) {sorted(unknown)}")
        try:
            ansatz = Ansatz(**kw)
        except ValueError as exc:
            raise _fail(r, "ansatz", str(exc)) from exc

    reduced = None
    if r.reduced:
        solved: dict[RFun, sp.Expr] = {}
        algebraic: list[sp.Expr] = []
        for lhs, rhs in r.reduced:
            if lhs == "0":
                algebraic.append(P(rhs, "reduced"))
                continue
            d = P(lhs, "reduced")
            if not isinstance(d, RFun) or d.order != 1:
                raise _fail(r, "reduced", f"left-hand side {lhs!r} must be a first derivative or 0")
            solved[d] = P(rhs, f"reduced.{lhs}")
        if solved and algebraic:
            raise _fail(r, "reduced", "mixes differential and algebraic equations")
        reduced = ReducedSystem.from_algebraic(algebraic) if algebraic else ReducedSystem.from_solved(solved)

    solution = None
    sopts: dict[str, object] = {}
    instances: list[Instance] = []
    if r.solution:
        phi: dict[str, sp.Expr] = {}
        u = None
        for key, text in r.solution:
            if key in r.rfuncs:
                phi[key] = P(text, f"solution.{key}")
            elif key == "u":
                u = P(text, "solution.u")
            elif key == "constants":
                sopts["constants"] = tuple(sp.Symbol(c) for c in _names(text))
                for c in _names(text):
                    if c not in declared:
                        raise _fail(r, "solution.constants", f"{c} is not a declared parameter")
            elif key in ("draws", "grid", "points"):
                sopts[key] = int(_num(text, r, f"solution.{key}"))
            elif key in ("initial", "span"):
                sopts[key] = tuple(_num(v, r, f"solution.{key}") for v in _split_top(text))
            elif key == "instance":
                instances.append(_instance(text, r, ctx, opaques, declared, base_names))
            else:
                raise _fail(r, "solution", f"unknown key {key!r}")
        solution = SolutionFamily(phi, u, list(constraints))

    if r.kind in ("symmetry-check", "commutator-check") and not r.target and len(operators) != 1:
        raise _fail(r, "target", "name the operator(s) to check")

    return CompiledCase(r, ctx, frame, domain, fixed, tries, anti_base, defs, rules, operators,
                        equation, ansatz, opts, reduced, solution, sopts, instances)


def _instance(text, r, ctx, opaques, declared, base_names) -> Instance:
    inst = Instance()
    for part in _split_top(text, ";"):
        m = re.fullmatch(r"(\w+)\(([\w\s,]+)\)\s*=\s*(.+)", part)
        if m:
            name, args = m.group(1), _names(m.group(2))
            if name not in opaques or len(args) != opaques[name]:
                raise _fail(r, "solution.instance", f"{name} is not a declared opaque function of {len(args)} argument(s)")
            local = Context(frame=ctx.frame, fields=(), rfuncs=(), params=tuple(declared) + tuple(args))
            try:
                body = parse(m.group(3), local)
            except (ParseError, ContextError) as exc:
                raise _fail(r, "solution.instance", str(exc)) from exc
            inst.functions[name] = sp.Lambda(tuple(sp.Symbol(a) for a in args), body)
            continue
        m = re.fullmatch(r"(\w+)\s*=\s*(.+)", part)
        if m and m.group(1) in declared:
            inst.values[sp.Symbol(m.group(1))] = _num(m.group(2), r, "solution.instance")
            continue
        raise _fail(r, "solution.instance", f"cannot read {part!r}")
    return inst
