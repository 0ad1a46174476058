"""Precedence-climbing parser for the case-file expression grammar."""

from __future__ import annotations

import re
from dataclasses import dataclass

import sympy as sp

from .atoms import DEFAULT_CONTEXT, Anti, Context, Jet, RFun, integral, opaque

__all__ = ["ParseError", "parse", "parse_suffix"]

FUNCTIONS = {
    "exp": sp.exp,
    "ln": sp.log,
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)?)"
    r"|(?P<op>[-+*/^(),;])"
    r")"
)


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text[:pos]}‸{text[pos:]}")
        self.text = text
        self.pos = pos


@dataclass
class _Tok:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


def parse_suffix(suffix: str, names: tuple[str, ...]) -> list[str] | None:
    """Split a jet suffix such as ``xxt`` or ``x1x2`` into independent-variable names."""
    out: list[str] = []
    ordered = sorted(names, key=len, reverse=True)
    i = 0
    while i < len(suffix):
        for nm in ordered:
            if suffix.startswith(nm, i):
                out.append(nm)
                i += len(nm)
                break
        else:
            return None
    return out


class _Parser:
    def __init__(self, text: str, ctx: Context):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.ctx = ctx

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, value: str) -> bool:
        if self.tok.kind == "op" and self.tok.value == value:
            self.i += 1
            return True
        return False

    def expect(self, value: str) -> None:
        if not self.accept(value):
            self.error(f"expected {value!r}")

    def error(self, msg: str, pos: int | None = None):
        raise ParseError(msg, self.text, self.tok.pos if pos is None else pos)

    # grammar
    def parse(self) -> sp.Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.error("unexpected trailing input")
        return e

    def expr(self) -> sp.Expr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = e + self.term()
            elif self.accept("-"):
                e = e - self.term()
            else:
                return e

    def term(self) -> sp.Expr:
        e = self.unary()
        while True:
            if self.accept("*"):
                e = e * self.unary()
            elif self.accept("/"):
                e = e / self.unary()
            else:
                return e

    def unary(self) -> sp.Expr:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> sp.Expr:
        base = self.atom()
        if self.accept("^"):
            return sp.Pow(base, self.unary())
        return base

    def atom(self) -> sp.Expr:
        tok = self.tok
        if tok.kind == "num":
            self.next()
            return sp.Rational(tok.value)
        if tok.kind == "op" and tok.value == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            self.next()
            return self.name(tok)
        self.error("expected an expression")

    def args(self) -> list[sp.Expr]:
        self.expect("(")
        out = [self.expr()]
        while self.accept(","):
            out.append(self.expr())
        self.expect(")")
        return out

    def name(self, tok: _Tok) -> sp.Expr:
        name = tok.value
        is_call = self.tok.kind == "op" and self.tok.value == "("
        if is_call:
            if name in FUNCTIONS:
                a = self.args()
                if len(a) != 1:
                    self.error(f"{name} takes one argument", tok.pos)
                return FUNCTIONS[name](a[0])
            if name == "Int":
                return self.integral(tok)
            if name == "Anti":
                return self.anti(tok)
            if name == "D":
                return self.dform(tok)
            if name == "d" and self.ctx.kind_of("d") is None:
                return self.partial(tok)
            if name in self.ctx.macros:
                return self.ctx.macros[name](*self.args())
            if name in self.ctx.opaques:
                a = self.args()
                arity = self.ctx.opaques[name]
                if len(a) != arity:
                    self.error(f"{name} expects {arity} arguments, got {len(a)}", tok.pos)
                return opaque(name, arity)(*a)
        return self.identifier(tok)

    def identifier(self, tok: _Tok) -> sp.Expr:
        name = tok.value
        ctx = self.ctx
        if "_" in name:
            base, suffix = name.split("_", 1)
            kind = ctx.kind_of(base)
            if kind == "field":
                parts = parse_suffix(suffix, ctx.independents)
                if parts is None:
                    self.error(f"bad jet suffix {suffix!r}", tok.pos)
                return Jet(base, parts.count(ctx.frame.space), parts.count(ctx.frame.time))
            if kind == "rfunc":
                parts = parse_suffix(suffix, ctx.independents)
                if parts is None or any(p != ctx.frame.time for p in parts):
                    self.error(f"reduction function {base} depends only on {ctx.frame.time}", tok.pos)
                return RFun(base, len(parts))
            self.error(f"unknown identifier {name!r}", tok.pos)
        kind = ctx.kind_of(name)
        if kind == "field":
            return Jet(name)
        if kind == "rfunc":
            return RFun(name)
        if kind in ("independent", "parameter", "dummy"):
            return sp.Symbol(name)
        if kind == "def":
            return ctx.defs[name]
        if kind == "opaque":
            self.error(f"opaque function {name} used without arguments", tok.pos)
        self.error(f"unknown identifier {name!r}", tok.pos)

    def integral(self, tok: _Tok) -> sp.Expr:
        self.expect("(")
        dtok = self.next()
        if dtok.kind != "name":
            self.error("Int expects a dummy variable name", dtok.pos)
        dname = dtok.value
        if self.ctx.kind_of(dname) not in (None, "dummy"):
            self.error(f"dummy {dname!r} shadows a declared identifier", dtok.pos)
        self.expect(",")
        lo = self.expr()
        self.expect(",")
        hi = self.expr()
        self.expect(",")
        outer = self.ctx
        self.ctx = outer.with_dummy(dname)
        try:
            body = self.expr()
        finally:
            self.ctx = outer
        self.expect(")")
        return integral(sp.Symbol(dname), lo, hi, body)

    def anti(self, tok: _Tok) -> sp.Expr:
        self.expect("(")
        body = self.expr()
        self.expect(",")
        vtok = self.next()
        if vtok.kind != "name" or self.ctx.kind_of(vtok.value) != "independent":
            self.error("Anti expects an independent variable", vtok.pos)
        self.expect(")")
        return Anti(body, sp.Symbol(vtok.value))

    def dform(self, tok: _Tok) -> sp.Expr:
        # D(u;x,2;t,1)
        self.expect("(")
        ftok = self.next()
        if ftok.kind != "name" or self.ctx.kind_of(ftok.value) != "field":
            self.error("D expects a dependent field", ftok.pos)
        orders = {self.ctx.frame.space: 0, self.ctx.frame.time: 0}
        while self.accept(";"):
            vtok = self.next()
            if vtok.value not in orders:
                self.error(f"{vtok.value!r} is not an independent variable", vtok.pos)
            self.expect(",")
            ntok = self.next()
            if ntok.kind != "num" or not ntok.value.isdigit():
                self.error("derivative order must be a non-negative integer", ntok.pos)
            orders[vtok.value] += int(ntok.value)
        self.expect(")")
        return Jet(ftok.value, orders[self.ctx.frame.space], orders[self.ctx.frame.time])

    def partial(self, tok: _Tok) -> sp.Expr:
        # d(A1,1)(e1,e2)
        self.expect("(")
        ntok = self.next()
        if ntok.kind != "name" or ntok.value not in self.ctx.opaques:
            self.error("d( expects an opaque function name", ntok.pos)
        idx: list[int] = []
        while self.accept(","):
            itok = self.next()
            if itok.kind != "num" or not itok.value.isdigit():
                self.error("partial index must be a positive integer", itok.pos)
            idx.append(int(itok.value))
        self.expect(")")
        arity = self.ctx.opaques[ntok.value]
        a = self.args()
        if len(a) != arity:
            self.error(f"{ntok.value} expects {arity} arguments", tok.pos)
        try:
            cls = opaque(ntok.value, arity, tuple(idx))
        except ValueError as exc:
            self.error(str(exc), ntok.pos)
        return cls(*a)


def parse(text: str, ctx: Context | None = None) -> sp.Expr:
    """Parse ``text`` into an expression under the declarations of ``ctx``."""
    return _Parser(text, ctx or DEFAULT_CONTEXT).parse()
