"""Numeric evaluation of expressions.

Expressions are compiled once into a flat program (common subexpressions
shared) and evaluated on scalars or numpy arrays.  Integral atoms are
evaluated by adaptive quadrature, antiderivatives as definite integrals from
a per-variable base point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import sympy as sp
from scipy import integrate

from .atoms import Anti, OpaqueFunction
from .printer import to_text

__all__ = [
    "Bindings",
    "EvalError",
    "UnboundAtomError",
    "DomainError",
    "QuadratureError",
    "Program",
    "compile_exprs",
    "eval_num",
    "QUAD_TOL",
]

QUAD_TOL = 1e-12


class EvalError(ArithmeticError):
    """Numeric evaluation failed; ``subterm`` names the offending node."""

    def __init__(self, message: str, subterm: sp.Expr | None = None):
        text = message if subterm is None else f"{message}: {to_text(subterm)}"
        super().__init__(text)
        self.subterm = subterm


class UnboundAtomError(EvalError):
    pass


class DomainError(EvalError):
    pass


class QuadratureError(EvalError):
    pass


@dataclass
class Bindings:
    """Numeric values for atoms and callables for opaque functions.

    ``values`` maps symbols (or their names) to numbers or arrays.
    ``functions`` maps an opaque name, or ``(name, partials)``, to a
    vectorised callable.  ``anti_base`` holds the base point of
    antiderivatives per integration variable (default 0).
    """

    values: Mapping[Any, Any] = field(default_factory=dict)
    functions: Mapping[Any, Callable] = field(default_factory=dict)
    anti_base: Mapping[str, float] = field(default_factory=dict)

    def value(self, sym: sp.Symbol):
        if sym in self.values:
            return self.values[sym]
        name = str(sym)
        if name in self.values:
            return self.values[name]
        raise UnboundAtomError("unbound atom", sym)

    def function(self, name: str, partials: tuple[int, ...]):
        key = (name, partials)
        if key in self.functions:
            return self.functions[key]
        if not partials and name in self.functions:
            return self.functions[name]
        label = name if not partials else f"d({name},{','.join(map(str, partials))})"
        if label in self.functions:
            return self.functions[label]
        return None

    def with_values(self, extra: Mapping[Any, Any]) -> "Bindings":
        merged = dict(self.values)
        merged.update(extra)
        return Bindings(merged, self.functions, self.anti_base)


_UNARY = {
    sp.exp: np.exp,
    sp.sin: np.sin,
    sp.cos: np.cos,
    sp.sinh: np.sinh,
    sp.cosh: np.cosh,
    sp.tanh: np.tanh,
}


class Program:
    """Flat evaluation program for one or more expressions."""

    def __init__(self, exprs: Sequence[sp.Expr], bound: Sequence[sp.Symbol] = ()):
        self.exprs = [sp.sympify(e) for e in exprs]
        self.nodes: list[tuple] = []
        self.index: dict[sp.Expr, int] = {}
        self.bound = tuple(bound)
        self.outputs = [self._emit(e) for e in self.exprs]

    def _emit(self, e: sp.Expr) -> int:
        idx = self.index.get(e)
        if idx is not None:
            return idx
        node = self._node(e)
        self.nodes.append(node)
        idx = self.index[e] = len(self.nodes) - 1
        return idx

    def _node(self, e: sp.Expr) -> tuple:
        if isinstance(e, sp.Symbol):
            return ("sym", e)
        if e.is_Number or e.is_NumberSymbol:
            return ("const", float(e))
        if e.is_Add:
            return ("add", [self._emit(a) for a in e.args], e)
        if e.is_Mul:
            return ("mul", [self._emit(a) for a in e.args], e)
        if e.is_Pow:
            b, x = e.args
            if b is sp.E:
                return ("fn", np.exp, self._emit(x), e)
            return ("pow", self._emit(b), self._emit(x), e)
        if isinstance(e, sp.log):
            return ("log", self._emit(e.args[0]), e)
        if type(e) in _UNARY:
            return ("fn", _UNARY[type(e)], self._emit(e.args[0]), e)
        if isinstance(e, OpaqueFunction):
            return ("opq", e.opaque_name, e.partials, [self._emit(a) for a in e.args], e)
        if isinstance(e, sp.Integral):
            if len(e.limits) != 1 or len(e.limits[0]) != 3:
                raise EvalError("only single definite integrals are supported", e)
            s, lo, hi = e.limits[0]
            outer = sorted(e.function.free_symbols - {s}, key=str)
            body = _ScalarBody(e.function, s, outer)
            return ("int", body, s, self._emit(lo), self._emit(hi), [self._emit(v) for v in outer], outer, e)
        if isinstance(e, Anti):
            f, v = e.args
            outer = sorted(f.free_symbols - {v}, key=str)
            body = _ScalarBody(f, v, outer)
            return ("anti", body, v, self._emit(v), [self._emit(w) for w in outer], outer, e)
        raise EvalError("cannot evaluate node", e)

    def run(self, b: Bindings, local: Mapping[sp.Symbol, Any] | None = None) -> list:
        vals: list[Any] = [None] * len(self.nodes)
        with np.errstate(all="ignore"):
            for i, node in enumerate(self.nodes):
                vals[i] = self._step(node, vals, b, local)
        return [vals[i] for i in self.outputs]

    def _step(self, node, vals, b: Bindings, local):
        kind = node[0]
        if kind == "const":
            return node[1]
        if kind == "sym":
            if local is not None and node[1] in local:
                return local[node[1]]
            return b.value(node[1])
        if kind == "add":
            acc = vals[node[1][0]]
            for j in node[1][1:]:
                acc = acc + vals[j]
            return acc
        if kind == "mul":
            acc = vals[node[1][0]]
            for j in node[1][1:]:
                acc = acc * vals[j]
            return acc
        if kind == "pow":
            base, ex = vals[node[1]], vals[node[2]]
            e = node[3]
            xb = np.asarray(base, dtype=float)
            xe = np.asarray(ex, dtype=float)
            integral_exp = bool(np.all(xe == np.round(xe)))
            if not integral_exp and np.any(xb < 0):
                raise DomainError("negative base under a fractional power", e)
            if np.any((xb == 0) & (xe < 0)):
                raise DomainError("division by zero", e)
            out = np.power(xb, xe)
            return _check(out, e)
        if kind == "fn":
            return _check(node[1](np.asarray(vals[node[2]], dtype=float)), node[3])
        if kind == "log":
            arg = np.asarray(vals[node[1]], dtype=float)
            if np.any(arg <= 0):
                raise DomainError("non-positive logarithm argument", node[2])
            return np.log(arg)
        if kind == "opq":
            _, name, partials, args, e = node
            fn = b.function(name, partials)
            if fn is None:
                raise UnboundAtomError("unbound opaque function", e)
            return _check(np.asarray(fn(*[vals[j] for j in args]), dtype=float), e)
        if kind == "int":
            return self._integral(node, vals, b, local)
        if kind == "anti":
            return self._anti(node, vals, b, local)
        raise EvalError(f"unknown node kind {kind}")

    def _integral(self, node, vals, b, local):
        _, body, s, ilo, ihi, iouter, outer, e = node
        arrays = [vals[ilo], vals[ihi]] + [vals[j] for j in iouter]
        return _pointwise_quad(body, s, arrays, outer, b, local, e)

    def _anti(self, node, vals, b, local):
        _, body, v, iv, iouter, outer, e = node
        base = float(b.anti_base.get(str(v), 0.0))
        arrays = [base, vals[iv]] + [vals[j] for j in iouter]
        return _pointwise_quad(body, v, arrays, outer, b, local, e)

    def __call__(self, b: Bindings | Mapping) -> list:
        if not isinstance(b, Bindings):
            b = Bindings(values=b)
        return [_unwrap(v) for v in self.run(b)]


class _ScalarBody:
    """Integrand compiled to a scalar function of (dummy, *outer).

    Plain arithmetic and elementary functions go through ``lambdify`` on the
    ``math`` module; anything else (opaque calls, nested integrals) falls back
    to the program interpreter.
    """

    def __init__(self, f: sp.Expr, s: sp.Symbol, outer: Sequence[sp.Symbol]):
        self.f = f
        self.s = s
        self.outer = list(outer)
        self.program: Program | None = None
        self.fast = None
        if not any(isinstance(n, (OpaqueFunction, sp.Integral, Anti)) for n in sp.preorder_traversal(f)):
            self.fast = sp.lambdify([s] + self.outer, f, modules="math")
        else:
            self.program = Program([f])

    def make(self, b: "Bindings", env: dict):
        if self.fast is not None:
            args = [env[o] for o in self.outer]
            fast = self.fast

            def g(z):
                try:
                    return fast(z, *args)
                except (ValueError, ZeroDivisionError, OverflowError) as exc:
                    raise DomainError(f"integrand not evaluable at {self.s}={z:.6g} ({exc})", self.f) from None
            return g
        program = self.program

        def h(z):
            env[self.s] = z
            return float(program.run(b, env)[0])
        return h


def _pointwise_quad(body: _ScalarBody, s, arrays, outer, b, local, e):
    bc = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in arrays])
    shape = bc[0].shape
    out = np.empty(shape)
    for idx in np.ndindex(shape) if shape else [()]:
        lo, hi = float(bc[0][idx]), float(bc[1][idx])
        env = dict(local or {})
        for sym, arr in zip(outer, bc[2:]):
            env[sym] = float(arr[idx])
        f = body.make(b, env)

        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise QuadratureError("non-finite integration bound", e)
        y, err, *rest = integrate.quad(f, lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200, full_output=1)
        if len(rest) > 1 and err > 1e-9 * (1.0 + abs(y)):
            raise QuadratureError(f"quadrature did not converge (error estimate {err:.3g})", e)
        out[idx] = y
    return out if shape else float(out)


def _check(out, e):
    if not np.all(np.isfinite(out)):
        raise DomainError("non-finite value", e)
    return out


def _unwrap(v):
    a = np.asarray(v, dtype=float)
    return float(a) if a.ndim == 0 else a


def compile_exprs(exprs: Sequence[sp.Expr]) -> Program:
    return Program(exprs)


def eval_num(e: sp.Expr, b: Bindings | Mapping):
    """Evaluate ``e`` numerically; arrays in the bindings broadcast."""
    return Program([e])(b)[0]
