"""Atom types layered on top of sympy.

Jets and reduction functions are ``Symbol`` subclasses so that sympy's
differentiation, substitution and polynomial machinery treat them as plain
coordinates.  Opaque functions carry formal partials generated on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import sympy as sp

__all__ = [
    "Jet",
    "RFun",
    "Frame",
    "DEFAULT_FRAME",
    "OpaqueFunction",
    "opaque",
    "Anti",
    "integral",
    "Context",
    "ContextError",
]


class ContextError(ValueError):
    """Raised for undeclared or conflicting identifiers."""


class Jet(sp.Symbol):
    """Jet coordinate ``field`` differentiated ``ox`` times in space, ``ot`` in time."""

    def __new__(cls, field_name: str, ox: int = 0, ot: int = 0):
        if ox < 0 or ot < 0:
            raise ValueError("jet orders must be non-negative")
        name = field_name if ox == ot == 0 else f"{field_name}_{'x' * ox}{'t' * ot}"
        obj = super().__new__(cls, name)
        obj.field = field_name
        obj.ox = int(ox)
        obj.ot = int(ot)
        return obj

    def __getnewargs_ex__(self):
        return ((self.field, self.ox, self.ot), {})

    def __reduce_ex__(self, protocol):
        return (Jet, (self.field, self.ox, self.ot))

    def raised(self, dx: int = 0, dt: int = 0) -> "Jet":
        return Jet(self.field, self.ox + dx, self.ot + dt)

    @property
    def order(self) -> int:
        return self.ox + self.ot


class RFun(sp.Symbol):
    """Reduction function (phi1, phi2, ...) of the time-like variable, with derivative order."""

    def __new__(cls, fname: str, order: int = 0):
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        obj = super().__new__(cls, fname + "'" * order)
        obj.fname = fname
        obj.order = int(order)
        return obj

    def __getnewargs_ex__(self):
        return ((self.fname, self.order), {})

    def __reduce_ex__(self, protocol):
        return (RFun, (self.fname, self.order))

    def raised(self, k: int = 1) -> "RFun":
        return RFun(self.fname, self.order + k)


@dataclass(frozen=True)
class Frame:
    """Names of the space-like and time-like independent variables."""

    space: str = "x"
    time: str = "t"

    @property
    def x(self) -> sp.Symbol:
        return sp.Symbol(self.space)

    @property
    def t(self) -> sp.Symbol:
        return sp.Symbol(self.time)

    def role(self, var: sp.Symbol | str) -> str:
        name = str(var)
        if name == self.space:
            return "x"
        if name == self.time:
            return "t"
        raise ValueError(f"{name!r} is not an independent variable of {self}")


DEFAULT_FRAME = Frame()


class OpaqueFunction(sp.Function):
    """Base class of opaque (arbitrary smooth) functions and their formal partials."""

    opaque_name: str = ""
    partials: tuple[int, ...] = ()

    def fdiff(self, argindex=1):
        return opaque(self.opaque_name, len(self.args), self.partials + (argindex,))(*self.args)

    def __reduce_ex__(self, protocol):
        return (_rebuild_opaque, (self.opaque_name, len(self.args), self.partials, self.args))

    @classmethod
    def key(cls) -> tuple[str, tuple[int, ...]]:
        return cls.opaque_name, cls.partials


def _rebuild_opaque(name, arity, partials, args):
    return opaque(name, arity, partials)(*args)


@lru_cache(maxsize=None)
def opaque(name: str, arity: int, partials: tuple[int, ...] = ()) -> type[OpaqueFunction]:
    """Return the (cached) sympy function class for ``name`` or one of its partials."""
    partials = tuple(sorted(partials))
    if any(not 1 <= p <= arity for p in partials):
        raise ValueError(f"partial index out of range for {name}/{arity}: {partials}")
    cls_name = name if not partials else f"d({name},{','.join(map(str, partials))})"
    return type(
        cls_name,
        (OpaqueFunction,),
        {"nargs": arity, "opaque_name": name, "partials": partials},
    )


class Anti(sp.Function):
    """Antiderivative ``∫ f d var`` with an unspecified base point."""

    nargs = 2

    @classmethod
    def eval(cls, integrand, var):
        if integrand == 0:
            return sp.S.Zero
        return None

    @property
    def integrand(self):
        return self.args[0]

    @property
    def var(self):
        return self.args[1]

    def _eval_derivative(self, s):
        f, v = self.args
        if s == v:
            return f
        return Anti(sp.diff(f, s), v)

    @property
    def free_symbols(self):
        return self.args[0].free_symbols | {self.args[1]}


def integral(dummy: sp.Symbol, lo, hi, integrand) -> sp.Integral:
    """Definite integral atom ``∫_lo^hi integrand d(dummy)``."""
    return sp.Integral(integrand, (dummy, lo, hi))


PARAMETER_NAMES = (
    "beta lambda alpha gamma delta k c c0 c1 c2 c3 s1 s2 C h "
    "a1 a2 a3 a4 a5 a6 a7 a8 k1 k2 k3 k4 alpha1 alpha2 alpha3 mu"
).split()


@dataclass
class Context:
    """Declarations that give meaning to identifiers in a case."""

    frame: Frame = DEFAULT_FRAME
    fields: tuple[str, ...] = ("u",)
    rfuncs: tuple[str, ...] = ("phi1", "phi2")
    params: tuple[str, ...] = tuple(PARAMETER_NAMES)
    opaques: dict[str, int] = field(default_factory=dict)
    defs: dict[str, sp.Expr] = field(default_factory=dict)
    dummies: tuple[str, ...] = ()
    macros: dict[str, Callable[..., sp.Expr]] = field(default_factory=dict)

    def __post_init__(self):
        seen: dict[str, str] = {}
        for kind, names in (
            ("independent", (self.frame.space, self.frame.time)),
            ("field", self.fields),
            ("rfunc", self.rfuncs),
            ("parameter", self.params),
            ("opaque", tuple(self.opaques)),
            ("macro", tuple(self.macros)),
        ):
            for n in names:
                if n in seen and seen[n] != kind:
                    raise ContextError(f"{n!r} declared both as {seen[n]} and {kind}")
                seen[n] = kind
        self._kinds = seen

    def kind_of(self, name: str) -> str | None:
        if name in self.dummies:
            return "dummy"
        if name in self.defs:
            return "def"
        return self._kinds.get(name)

    def with_dummy(self, name: str) -> "Context":
        ctx = Context(
            frame=self.frame,
            fields=self.fields,
            rfuncs=self.rfuncs,
            params=self.params,
            opaques=self.opaques,
            defs=self.defs,
            dummies=self.dummies + (name,),
            macros=self.macros,
        )
        return ctx

    def extended(self, *, params: Iterable[str] = (), opaques: dict[str, int] | None = None) -> "Context":
        return Context(
            frame=self.frame,
            fields=self.fields,
            rfuncs=self.rfuncs,
            params=tuple(dict.fromkeys(self.params + tuple(params))),
            opaques={**self.opaques, **(opaques or {})},
            defs=dict(self.defs),
            dummies=self.dummies,
            macros=self.macros,
        )

    @property
    def independents(self) -> tuple[str, str]:
        return self.frame.space, self.frame.time


DEFAULT_CONTEXT = Context()
