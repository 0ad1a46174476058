"""Total derivatives, manifolds of differential consequences, prolongation.

A :class:`Manifold` is a list of solved-form rules ``jet -> expression``
together with every differential consequence, generated lazily and memoized.
Generalized (evolutionary) vector fields ``eta * d/du`` act on expressions by
prolongation ``sum_J (d e / d u_J) * D_J eta``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
import sympy as sp

from .expr import DEFAULT_FRAME, Anti, Frame, Jet, RFun, normalize
from .expr.numeric import EvalError, eval_num

__all__ = [
    "ManifoldError",
    "Manifold",
    "GeneralizedField",
    "total_derivative",
    "total_derivative_multi",
    "reduce_to_manifold",
    "prolong_apply",
    "commutator",
    "evolutionary_representative",
    "jets_of",
]


class ManifoldError(ValueError):
    """Malformed manifold: a rule is not in solved form or closure is inconsistent."""


def jets_of(e: sp.Expr, field: str | None = None) -> set[Jet]:
    out = {s for s in sp.sympify(e).free_symbols if isinstance(s, Jet)}
    if field is not None:
        out = {j for j in out if j.field == field}
    return out


def _rfuns_of(e: sp.Expr) -> set[RFun]:
    return {s for s in sp.sympify(e).free_symbols if isinstance(s, RFun)}


def _top_antis(e: sp.Expr) -> list[Anti]:
    found: list[Anti] = []

    def walk(node):
        if isinstance(node, Anti):
            found.append(node)
            return
        for a in node.args:
            walk(a)

    walk(e)
    return list(dict.fromkeys(found))


def total_derivative(
    e: sp.Expr,
    var: sp.Symbol | str,
    m: "Manifold | None" = None,
    frame: Frame | None = None,
) -> sp.Expr:
    """Total derivative ``D_var e``.

    Jets are raised by one order in ``var``; reduction functions (functions of
    the time-like variable) gain one derivative order when ``var`` is time.
    With a manifold the result is reduced to it.
    """
    frame = frame or (m.frame if m is not None else DEFAULT_FRAME)
    var = sp.Symbol(str(var))
    role = frame.role(var)
    e = sp.sympify(e)

    antis = _top_antis(e)
    holders = [sp.Dummy(f"anti{i}") for i in range(len(antis))]
    body = e.xreplace(dict(zip(antis, holders))) if antis else e

    out = sp.diff(body, var)
    for j in sorted(jets_of(body), key=sp.default_sort_key):
        d = sp.diff(body, j)
        if d != 0:
            out += d * (j.raised(1, 0) if role == "x" else j.raised(0, 1))
    if role == "t":
        for f in sorted(_rfuns_of(body), key=sp.default_sort_key):
            d = sp.diff(body, f)
            if d != 0:
                out += d * f.raised()
    for a, h in zip(antis, holders):
        d = sp.diff(body, h)
        if d == 0:
            continue
        integrand, v = a.args
        da = integrand if v == var else Anti(total_derivative(integrand, var, None, frame), v)
        out += d * da
    if antis:
        out = out.xreplace(dict(zip(holders, antis)))
    if m is not None:
        out = m.reduce(out)
    return out


def total_derivative_multi(e, orders: tuple[int, int], m=None, frame=None) -> sp.Expr:
    """Apply ``D_x`` ``orders[0]`` times and ``D_t`` ``orders[1]`` times."""
    frame = frame or (m.frame if m is not None else DEFAULT_FRAME)
    for _ in range(orders[0]):
        e = total_derivative(e, frame.x, m, frame)
    for _ in range(orders[1]):
        e = total_derivative(e, frame.t, m, frame)
    return e


def _dominates(j: Jet, lhs: Jet) -> bool:
    return j.field == lhs.field and j.ox >= lhs.ox and j.ot >= lhs.ot


class Manifold:
    """Solved-form rules and their differential consequences.

    ``rules`` is a sequence of ``(Jet, Expr)`` pairs.  Consequences are
    generated on demand and memoized behind a lock, so a manifold may be
    shared between threads.  ``simplify`` is applied to every memoized rule.
    """

    def __init__(
        self,
        rules: Iterable[tuple[Jet, sp.Expr]] = (),
        frame: Frame = DEFAULT_FRAME,
        simplify: Callable[[sp.Expr], sp.Expr] | None = normalize,
        check: bool = True,
    ):
        self.rules: tuple[tuple[Jet, sp.Expr], ...] = tuple((lhs, sp.sympify(rhs)) for lhs, rhs in rules)
        self.frame = frame
        self._simplify = simplify or (lambda e: e)
        self._lock = threading.RLock()
        self._memo: dict[Jet, sp.Expr] = {}
        self._active: set[Jet] = set()
        self._validate()
        if check:
            self.check_consistency()

    # construction
    def _validate(self) -> None:
        seen = set()
        for lhs, rhs in self.rules:
            if not isinstance(lhs, Jet):
                raise ManifoldError(f"rule left-hand side must be a jet, got {lhs}")
            if lhs in seen:
                raise ManifoldError(f"duplicate rule for {lhs}")
            seen.add(lhs)
            for j in jets_of(rhs, lhs.field):
                if _dominates(j, lhs):
                    raise ManifoldError(f"rule for {lhs} is not in solved form: right-hand side contains {j}")

    def check_consistency(self, samples: int = 6, seed: int = 0) -> None:
        """Check that cross derivatives computed along different paths agree."""
        fx, ft = self.frame.x, self.frame.t
        pairs = []
        for lhs, rhs in self.rules:
            a = total_derivative(total_derivative(rhs, fx, self), ft, self)
            b = total_derivative(total_derivative(rhs, ft, self), fx, self)
            pairs.append((lhs.raised(1, 1), a, b))
        for i, (l1, r1) in enumerate(self.rules):
            for l2, r2 in self.rules[i + 1:]:
                if l1.field != l2.field:
                    continue
                top = Jet(l1.field, max(l1.ox, l2.ox), max(l1.ot, l2.ot))
                a = total_derivative_multi(r1, (top.ox - l1.ox, top.ot - l1.ot), self)
                b = total_derivative_multi(r2, (top.ox - l2.ox, top.ot - l2.ot), self)
                pairs.append((top, a, b))
        rng = np.random.default_rng(seed)
        for top, a, b in pairs:
            diff = normalize(a - b)
            if diff == 0:
                continue
            syms = sorted(diff.free_symbols, key=str)
            vals = {s: rng.uniform(0.3, 1.5, samples) for s in syms}
            try:
                r = np.max(np.abs(eval_num(diff, vals)))
            except EvalError:
                continue
            if r > 1e-8:
                raise ManifoldError(f"inconsistent closure at {top}: path difference {diff}")

    # queries
    def rule_for(self, j: Jet) -> tuple[Jet, sp.Expr] | None:
        for lhs, rhs in self.rules:
            if _dominates(j, lhs):
                return lhs, rhs
        return None

    def is_reducible(self, j: sp.Symbol) -> bool:
        return isinstance(j, Jet) and self.rule_for(j) is not None

    def reduced_jet(self, j: Jet) -> sp.Expr:
        """The jet ``j`` expressed through jets that no rule rewrites."""
        with self._lock:
            hit = self._memo.get(j)
            if hit is not None:
                return hit
            found = self.rule_for(j)
            if found is None:
                return j
            if j in self._active:
                raise ManifoldError(f"non-terminating reduction at {j}")
            self._active.add(j)
            try:
                lhs, rhs = found
                if j == lhs:
                    val = self.reduce(rhs)
                elif j.ox > lhs.ox:
                    val = total_derivative(self.reduced_jet(j.raised(-1, 0)), self.frame.x, self, self.frame)
                else:
                    val = total_derivative(self.reduced_jet(j.raised(0, -1)), self.frame.t, self, self.frame)
                val = self._simplify(val)
            finally:
                self._active.discard(j)
            self._memo[j] = val
            return val

    def reduce(self, e: sp.Expr) -> sp.Expr:
        """Rewrite every reducible jet of ``e``; idempotent."""
        e = sp.sympify(e)
        todo = [j for j in jets_of(e) if self.is_reducible(j)]
        if not todo:
            return e
        todo.sort(key=lambda j: (-j.order, j.name))
        return e.xreplace({j: self.reduced_jet(j) for j in todo})

    @property
    def fields(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(lhs.field for lhs, _ in self.rules))

    def __repr__(self) -> str:
        body = ", ".join(f"{lhs} = {rhs}" for lhs, rhs in self.rules)
        return f"Manifold({body})"


def reduce_to_manifold(e: sp.Expr, m: Manifold) -> sp.Expr:
    return m.reduce(e)


@dataclass(frozen=True)
class GeneralizedField:
    """Evolutionary vector field ``eta * d/d(field)``."""

    field: str
    eta: sp.Expr

    def __post_init__(self):
        object.__setattr__(self, "eta", sp.sympify(self.eta))


def evolutionary_representative(xi_t, xi_x, eta, field: str = "u") -> GeneralizedField:
    """Characteristic ``eta - xi_t u_t - xi_x u_x`` of a point field."""
    return GeneralizedField(field, sp.sympify(eta) - xi_t * Jet(field, 0, 1) - xi_x * Jet(field, 1, 0))


def prolong_apply(
    X: GeneralizedField,
    e: sp.Expr,
    m: Manifold | None = None,
    frame: Frame | None = None,
) -> sp.Expr:
    """``X^(k) e`` restricted to ``m``: ``sum_J (de/du_J) D_J eta``, reduced."""
    frame = frame or (m.frame if m is not None else DEFAULT_FRAME)
    e = sp.sympify(e)
    jets = sorted(jets_of(e, X.field), key=lambda j: (j.ox, j.ot))
    cache: dict[tuple[int, int], sp.Expr] = {(0, 0): m.reduce(X.eta) if m is not None else X.eta}

    def D(ox: int, ot: int) -> sp.Expr:
        if (ox, ot) in cache:
            return cache[(ox, ot)]
        if ox > 0:
            val = total_derivative(D(ox - 1, ot), frame.x, m, frame)
        else:
            val = total_derivative(D(ox, ot - 1), frame.t, m, frame)
        cache[(ox, ot)] = val
        return val

    out = sp.S.Zero
    for j in jets:
        coeff = sp.diff(e, j)
        if coeff != 0:
            out += coeff * D(j.ox, j.ot)
    if m is not None:
        out = m.reduce(out)
    return out


def commutator(
    X1: GeneralizedField,
    X2: GeneralizedField,
    m: Manifold | None = None,
    frame: Frame | None = None,
    simplify: Callable[[sp.Expr], sp.Expr] | None = normalize,
) -> GeneralizedField:
    """Evolutionary bracket: characteristic ``X1(eta2) - X2(eta1)``."""
    if X1.field != X2.field:
        raise ValueError("commutator needs fields acting on the same dependent variable")
    eta = prolong_apply(X1, X2.eta, m, frame) - prolong_apply(X2, X1.eta, m, frame)
    if simplify is not None:
        eta = simplify(eta)
    return GeneralizedField(X1.field, eta)

