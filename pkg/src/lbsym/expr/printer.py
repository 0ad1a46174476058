"""Printer emitting the case-file grammar (the inverse of :func:`parse`)."""

from __future__ import annotations

import sympy as sp
from sympy.printing.precedence import PRECEDENCE, precedence
from sympy.printing.str import StrPrinter

from .atoms import DEFAULT_FRAME, Anti, Frame, Jet, OpaqueFunction, RFun

__all__ = ["to_text"]


class _GrammarPrinter(StrPrinter):
    def __init__(self, frame: Frame):
        super().__init__({"order": None})
        self.frame = frame

    def _print_Jet(self, e: Jet) -> str:
        if e.ox == e.ot == 0:
            return e.field
        return f"{e.field}_{self.frame.space * e.ox}{self.frame.time * e.ot}"

    def _print_RFun(self, e: RFun) -> str:
        if e.order == 0:
            return e.fname
        return f"{e.fname}_{self.frame.time * e.order}"

    def _print_Symbol(self, e) -> str:
        return e.name

    def _print_Rational(self, e) -> str:
        return f"({e.p}/{e.q})"

    def _print_Half(self, e) -> str:
        return "(1/2)"

    def _print_Exp1(self, e) -> str:
        return "exp(1)"

    def _print_Pi(self, e) -> str:  # pragma: no cover - not produced by the grammar
        raise ValueError("pi is not part of the expression grammar")

    def _print_exp(self, e) -> str:
        return f"exp({self._print(e.args[0])})"

    def _print_log(self, e) -> str:
        return f"ln({self._print(e.args[0])})"

    def _print_Pow(self, e, rational=False) -> str:
        b, x = e.args
        if x == sp.S.Half:
            return f"sqrt({self._print(b)})"
        if x == -sp.S.Half:
            return f"1/sqrt({self._print(b)})"
        if x == -1:
            return f"1/{self.parenthesize(b, PRECEDENCE['Pow'])}"
        base = self.parenthesize(b, PRECEDENCE["Pow"])
        if isinstance(b, (sp.Rational, sp.Integer)) and not isinstance(b, sp.Integer):
            base = self._print(b)
        return f"{base}^({self._print(x)})"

    def _print_Mul(self, e) -> str:
        num, den = [], []
        for f in e.as_ordered_factors():
            if f.is_Pow and f.exp.is_Rational and f.exp.is_negative and f.exp != -1:
                den.append(sp.Pow(f.base, -f.exp, evaluate=False))
            elif f.is_Pow and f.exp == -1:
                den.append(f.base)
            elif isinstance(f, sp.Rational) and not isinstance(f, sp.Integer):
                if f.p != 1:
                    num.append(sp.Integer(f.p))
                den.append(sp.Integer(f.q))
            else:
                num.append(f)
        sign = ""
        if num and num[0] == -1:
            sign = "-"
            num = num[1:]
        elif num and isinstance(num[0], sp.Integer) and num[0] < 0:
            sign = "-"
            num = [sp.Integer(-num[0])] + num[1:]
        ns = "*".join(self.parenthesize(f, PRECEDENCE["Mul"]) for f in num) or "1"
        if not den:
            return sign + ns
        ds = "*".join(self.parenthesize(f, PRECEDENCE["Mul"]) for f in den)
        if len(den) > 1:
            ds = f"({ds})"
        return f"{sign}{ns}/{ds}"

    def _print_Add(self, e, order=None) -> str:
        terms = e.as_ordered_terms()
        out = []
        for i, t in enumerate(terms):
            s = self._print(t)
            if i == 0:
                out.append(s)
            elif s.startswith("-"):
                out.append(" - " + s[1:])
            else:
                out.append(" + " + s)
        return "".join(out)

    def parenthesize(self, item, level, strict=False):
        s = self._print(item)
        if precedence(item) <= level or (isinstance(item, sp.Rational) and not isinstance(item, sp.Integer)):
            if isinstance(item, (sp.Rational,)) and s.startswith("("):
                return s
            return f"({s})"
        if s.startswith("-"):
            return f"({s})"
        return s

    def _print_Integral(self, e: sp.Integral) -> str:
        (dummy, lo, hi), = e.limits
        return f"Int({dummy.name}, {self._print(lo)}, {self._print(hi)}, {self._print(e.function)})"

    def _print_Anti(self, e: Anti) -> str:
        return f"Anti({self._print(e.args[0])}, {self._print(e.args[1])})"

    def _print_Function(self, e) -> str:
        if isinstance(e, OpaqueFunction):
            args = ", ".join(self._print(a) for a in e.args)
            if e.partials:
                return f"d({e.opaque_name},{','.join(map(str, e.partials))})({args})"
            return f"{e.opaque_name}({args})"
        return super()._print_Function(e)


def to_text(e: sp.Expr, frame=DEFAULT_FRAME) -> str:
    """Render ``e`` in the case-file grammar; ``parse`` reads it back.

    ``frame`` may also be a parsing context, whose frame is then used.
    """
    frame = getattr(frame, "frame", frame)
    return _GrammarPrinter(frame).doprint(sp.sympify(e))
