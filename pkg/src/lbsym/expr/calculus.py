"""Partial differentiation, substitution and opaque-function instantiation."""

from __future__ import annotations

from typing import Mapping, Sequence

import sympy as sp

from .atoms import OpaqueFunction
from .normal import normalize

__all__ = [
    "bound_dummies",
    "diff",
    "substitute",
    "opaque_calls",
    "OPAQUE_LIBRARY",
    "instantiate",
    "library_assignments",
    "instantiate_all",
]


def bound_dummies(e: sp.Expr) -> set[sp.Symbol]:
    """Integration dummies of every integral atom inside ``e``."""
    out: set[sp.Symbol] = set()
    for node in sp.preorder_traversal(e):
        if isinstance(node, sp.Integral):
            out.update(lim[0] for lim in node.limits)
    return out


def diff(e: sp.Expr, atom: sp.Symbol) -> sp.Expr:
    """Partial derivative of ``e`` in ``atom``, all other atoms held fixed.

    Integral atoms follow the Leibniz rule: boundary terms plus the integral of
    the differentiated integrand.
    """
    if atom in bound_dummies(e):
        raise ValueError(f"cannot differentiate with respect to the bound dummy {atom}")
    return sp.diff(e, atom)


def substitute(e: sp.Expr, rules: Mapping[sp.Symbol, sp.Expr]) -> sp.Expr:
    """Simultaneous substitution followed by normalization."""
    dummies = bound_dummies(e)
    for lhs in rules:
        if lhs in dummies:
            raise ValueError(f"cannot substitute the bound dummy {lhs}")
    return normalize(sp.sympify(e).xreplace(dict(rules)))


def opaque_calls(e: sp.Expr) -> dict[str, int]:
    """Names and arities of the opaque functions occurring in ``e``."""
    out: dict[str, int] = {}
    for node in sp.preorder_traversal(e):
        if isinstance(node, OpaqueFunction):
            out[node.opaque_name] = len(node.args)
    return out


_z = sp.symbols("z1:4")

# Concrete smooth functions used in place of opaque ones: a low-degree
# polynomial, an exponentially scaled function and a trigonometric one.
OPAQUE_LIBRARY: dict[int, tuple[sp.Lambda, ...]] = {
    1: (
        sp.Lambda((_z[0],), sp.Rational(1, 2) + _z[0] / 3 + _z[0] ** 2 / 5),
        sp.Lambda((_z[0],), sp.exp(_z[0] / 4) / 2),
        sp.Lambda((_z[0],), sp.sin(_z[0]) + sp.Rational(3, 2)),
    ),
    2: (
        sp.Lambda(_z[:2], sp.Rational(1, 3) + _z[0] / 2 - _z[1] / 5 + _z[0] * _z[1] / 7 + _z[1] ** 2 / 9),
        sp.Lambda(_z[:2], sp.exp((_z[0] - _z[1]) / 5) / 3),
        sp.Lambda(_z[:2], sp.cos(_z[0]) / 2 + sp.sin(_z[1]) / 3),
    ),
    3: (
        sp.Lambda(_z, 1 + _z[0] / 2 - _z[1] / 3 + _z[2] / 4 + _z[0] * _z[2] / 5),
        sp.Lambda(_z, sp.exp((_z[0] + _z[1] - _z[2]) / 6) / 2),
        sp.Lambda(_z, sp.sin(_z[0]) / 2 + sp.cos(_z[1] - _z[2]) / 3),
    ),
}


def library_assignments(names: Mapping[str, int], count: int = 2) -> list[dict[str, sp.Lambda]]:
    """``count`` assignments of library functions to the given opaque names.

    Distinct names get distinct library entries within one assignment where
    the library allows it, so that e.g. ``A1`` and ``A2`` differ.
    """
    out = []
    for i in range(count):
        assignment = {}
        for j, (name, arity) in enumerate(sorted(names.items())):
            lib = OPAQUE_LIBRARY[arity]
            assignment[name] = lib[(i + j) % len(lib)]
        out.append(assignment)
    return out


def instantiate(e: sp.Expr, assignment: Mapping[str, sp.Lambda | sp.Expr]) -> sp.Expr:
    """Replace opaque calls (and their formal partials) by concrete functions."""
    assignment = {k: v for k, v in assignment.items()}

    def concrete(node: OpaqueFunction) -> sp.Expr:
        fn = assignment.get(node.opaque_name)
        if fn is None:
            return node
        vars_ = fn.variables
        body = fn.expr
        for p in node.partials:
            body = sp.diff(body, vars_[p - 1])
        return body.xreplace(dict(zip(vars_, node.args)))

    def walk(node):
        if isinstance(node, OpaqueFunction):
            new_args = [walk(a) for a in node.args]
            return concrete(node.func(*new_args))
        if not node.args or isinstance(node, sp.Symbol):
            return node
        new_args = [walk(a) for a in node.args]
        if all(a is b for a, b in zip(new_args, node.args)):
            return node
        return node.func(*new_args)

    return walk(sp.sympify(e))


def instantiate_all(exprs: Sequence[sp.Expr], assignment) -> list[sp.Expr]:
    return [instantiate(e, assignment) for e in exprs]

