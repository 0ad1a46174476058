"""Rational normal form over transcendental and radical atoms.

``normalize`` maps an expression to a rational function over generators:
ordinary symbols and jets, one generator per exponential monomial, one
radical generator per irreducible radicand (reduced modulo ``r**L = f``),
one generator per symbolic power and per remaining function application.
Radicands and logarithm arguments are assumed positive, which is how every
sampling domain in the catalog is chosen.
"""

from __future__ import annotations

from functools import lru_cache
from math import gcd

import sympy as sp
from sympy.core.sorting import default_sort_key
from sympy.polys.fields import FracField

from .atoms import Anti, OpaqueFunction

__all__ = ["normalize", "is_zero_symbolic", "rational_parts"]

_MAX_FACTOR_TERMS = 40


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


@lru_cache(maxsize=4096)
def _canonical_exponent(E: sp.Expr) -> sp.Expr:
    if not any(n.is_Pow and n.exp.is_negative for n in sp.preorder_traversal(E)):
        return sp.expand(E)
    return sp.expand(normalize(E))


def _split_exponent(E: sp.Expr) -> list[tuple[sp.Rational, sp.Expr]]:
    """Write an exponent as ``sum k_i * m_i`` with rational ``k_i`` and unit monomials."""
    out: dict[sp.Expr, sp.Rational] = {}
    for term in sp.Add.make_args(_canonical_exponent(sp.sympify(E))):
        k, m = term.as_coeff_Mul(rational=True)
        if not k.is_Rational:
            k, m = sp.S.One, term
        out[m] = out.get(m, sp.S.Zero) + k
    return [(k, m) for m, k in out.items() if k != 0]


def _hyperbolic_as_exp(e):
    z = e.args[0]
    if isinstance(e, sp.sinh):
        return (sp.exp(z) - sp.exp(-z)) / 2
    if isinstance(e, sp.cosh):
        return (sp.exp(z) + sp.exp(-z)) / 2
    return (sp.exp(2 * z) - 1) / (sp.exp(2 * z) + 1)


class _Atomizer:
    def __init__(self, expr: sp.Expr):
        self.back: dict[sp.Symbol, sp.Expr] = {}
        self.atom_gens: dict[sp.Expr, sp.Symbol] = {}
        self.exp_gens: dict[sp.Expr, tuple[int, sp.Symbol]] = {}
        self.pow_gens: dict[tuple, tuple[int, sp.Symbol]] = {}
        self.rad_gens: dict[sp.Expr, tuple[int, sp.Symbol]] = {}
        self.relations: dict[sp.Symbol, tuple[int, sp.Expr]] = {}
        self.renames: dict[sp.Symbol, sp.Expr] = {}
        self.order: list[sp.Symbol] = []
        self._exp_den: dict[sp.Expr, int] = {}
        self._prescan(expr)

    # -- generator bookkeeping -------------------------------------------------
    def _new(self, back: sp.Expr) -> sp.Symbol:
        g = sp.Dummy("g")
        self.back[g] = back
        self.order.append(g)
        return g

    def _prescan(self, expr):
        for node in sp.preorder_traversal(expr):
            if isinstance(node, sp.exp):
                args = [node.args[0]]
            elif isinstance(node, (sp.sinh, sp.cosh)):
                args = [node.args[0]]
            elif isinstance(node, sp.tanh):
                args = [2 * node.args[0]]
            else:
                continue
            for a in args:
                for k, m in _split_exponent(a):
                    q = int(sp.Rational(k).q)
                    self._exp_den[m] = _lcm(self._exp_den.get(m, 1), q)

    def atom(self, e: sp.Expr) -> sp.Symbol:
        g = self.atom_gens.get(e)
        if g is None:
            g = self.atom_gens[e] = self._new(e)
        return g

    def exp_power(self, m: sp.Expr, k: sp.Rational) -> sp.Expr:
        L = self._exp_den.get(m, 1)
        L = _lcm(L, int(sp.Rational(k).q))
        entry = self.exp_gens.get(m)
        if entry is None:
            g = self._new(sp.exp(m / L))
            self.exp_gens[m] = (L, g)
        elif L % entry[0] != 0 or L != entry[0]:
            L = _lcm(L, entry[0])
            g = self._new(sp.exp(m / L))
            self.renames[entry[1]] = g ** (L // entry[0])
            self.exp_gens[m] = (L, g)
        else:
            g = entry[1]
        return g ** int(k * L)

    def radical(self, f: sp.Expr, k: sp.Rational) -> sp.Expr:
        """``f**k`` for a polynomial factor ``f`` in generators and rational ``k``."""
        if k.is_Integer:
            return f ** int(k)
        q = int(k.q)
        entry = self.rad_gens.get(f)
        if entry is None:
            L = q
            g = self._new(sp.Pow(self._back_expr(f), sp.Rational(1, L)))
            self.rad_gens[f] = (L, g)
            self.relations[g] = (L, f)
        else:
            L0, g0 = entry
            L = _lcm(L0, q)
            if L != L0:
                g = self._new(sp.Pow(self._back_expr(f), sp.Rational(1, L)))
                self.renames[g0] = g ** (L // L0)
                self.relations.pop(g0, None)
                self.relations[g] = (L, f)
                self.rad_gens[f] = (L, g)
            else:
                g = g0
        whole = int(sp.floor(k))
        frac = k - whole
        return f**whole * g ** int(frac * L)

    def sym_power(self, f: sp.Expr, m: sp.Expr, k: sp.Rational) -> sp.Expr:
        key = (f, m)
        L = int(sp.Rational(k).q)
        entry = self.pow_gens.get(key)
        if entry is None:
            g = self._new(sp.Pow(self._back_expr(f), m / L))
            self.pow_gens[key] = (L, g)
        else:
            L0, g0 = entry
            L = _lcm(L, L0)
            if L != L0:
                g = self._new(sp.Pow(self._back_expr(f), m / L))
                self.renames[g0] = g ** (L // L0)
                self.pow_gens[key] = (L, g)
            else:
                g = g0
        return g ** int(k * L)

    # -- conversion ------------------------------------------------------------
    def conv(self, e: sp.Expr) -> sp.Expr:
        if e.is_Rational:
            return e
        if isinstance(e, sp.Symbol):
            return e
        if e is sp.E:
            return self.exp_power(sp.S.One, sp.S.One)
        if e.is_Number or e.is_NumberSymbol or e is sp.I:
            return self.atom(e)
        if e.is_Add:
            return sp.Add(*[self.conv(a) for a in e.args])
        if e.is_Mul:
            return sp.Mul(*[self.conv(a) for a in e.args])
        if e.is_Pow:
            return self.conv_pow(e.base, e.exp)
        if isinstance(e, sp.exp):
            return sp.Mul(*[self.exp_power(m, k) for k, m in _split_exponent(e.args[0])])
        if isinstance(e, (sp.sinh, sp.cosh, sp.tanh)):
            return self.conv(_hyperbolic_as_exp(e))
        if isinstance(e, sp.log):
            return self.conv_log(e.args[0])
        if isinstance(e, sp.Integral):
            (s, lo, hi), = e.limits
            return self.atom(sp.Integral(normalize(e.function), (s, normalize(lo), normalize(hi))))
        if isinstance(e, Anti):
            return self.atom(Anti(normalize(e.args[0]), e.args[1]))
        if isinstance(e, (sp.Function, OpaqueFunction)):
            return self.atom(e.func(*[normalize(a) for a in e.args]))
        return self.atom(e)

    def _factors(self, B: sp.Expr):
        """Content and irreducible factors (with multiplicity) of a rational expression."""
        num, den = sp.fraction(sp.cancel(sp.together(B)))
        out: list[tuple[sp.Expr, int]] = []
        content = sp.S.One
        for part, sign in ((num, 1), (den, -1)):
            if part.is_Number:
                content *= part**sign
                continue
            if len(sp.Add.make_args(sp.expand(part))) > _MAX_FACTOR_TERMS:
                c, prim = sp.expand(part).as_content_primitive()
                content *= c**sign
                out.append((prim, sign))
                continue
            c, facs = sp.factor_list(part)
            content *= c**sign
            out.extend((f, sign * m) for f, m in facs)
        return content, out

    def conv_pow(self, b: sp.Expr, x: sp.Expr) -> sp.Expr:
        if b is sp.E:
            return self.conv(sp.exp(x))
        if x.is_Integer:
            return self.conv(b) ** x
        if b.is_Rational and x.is_Rational:
            return self._num_radical(b, x)
        if x.is_Rational:
            content, facs = self._factors(self.conv(b))
            if content < 0:
                for i, (f, m) in enumerate(facs):
                    if m % 2:
                        facs[i] = (sp.expand(-f), m)
                        content = -content
                        break
                else:
                    return self.atom(sp.Pow(normalize(b), x))
            out = self._num_radical(content, x) if content != 1 else sp.S.One
            for f, m in facs:
                out *= self.radical(sp.expand(f), m * x)
            return out
        # symbolic exponent
        parts = _split_exponent(x)
        content, facs = self._factors(self.conv(b))
        if content < 0:
            return self.atom(sp.Pow(normalize(b), normalize(x)))
        out = sp.S.One
        for k, m in parts:
            if m == 1:
                out *= self.conv_pow(b, k)
                continue
            if content != 1:
                out *= self.sym_power(content, m, k)
            for f, mult in facs:
                out *= self.sym_power(sp.expand(f), m, k * mult)
        return out

    def _num_radical(self, b: sp.Rational, x: sp.Rational) -> sp.Expr:
        b = sp.Rational(b)
        if b < 0:
            return self.atom(sp.Pow(b, x))
        out = sp.S.One
        for base, sign in ((b.p, 1), (b.q, -1)):
            for prime, mult in sp.factorint(base).items():
                out *= self.radical(sp.Integer(prime), sign * mult * x)
        return out

    def conv_log(self, a: sp.Expr) -> sp.Expr:
        if isinstance(a, sp.exp):
            return self.conv(a.args[0])
        if a.is_Rational:
            if a == 1:
                return sp.S.Zero
            out = sp.S.Zero
            for base, sign in ((a.p, 1), (a.q, -1)):
                for prime, mult in sp.factorint(abs(base)).items():
                    out += sign * mult * self.atom(sp.log(sp.Integer(prime)))
            return out
        content, facs = self._factors(normalize(a))
        out = sp.S.Zero
        if content != 1:
            out += self.conv_log(content) if content > 0 else self.atom(sp.log(content))
        for f, m in facs:
            back = self._back_expr(f)
            if isinstance(back, sp.exp):
                out += m * self.conv(back.args[0])
            else:
                out += m * self.atom(sp.log(back))
        return out

    # -- back substitution -----------------------------------------------------
    def resolve_renames(self, e: sp.Expr) -> sp.Expr:
        for _ in range(len(self.renames) + 1):
            new = e.xreplace(self.renames)
            if new == e:
                return e
            e = new
        return e

    def _back_expr(self, e: sp.Expr) -> sp.Expr:
        return e.xreplace(self.back)


def _reduce_radicals(p, ring, rels):
    """Reduce a PolyElement modulo ``g**L - f`` for each radical generator."""
    for idx, L, f in rels:
        if p == 0 or max((m[idx] for m in p.monoms()), default=0) < L:
            continue
        out = ring.zero
        for monom, coeff in p.terms():
            n = monom[idx]
            if n < L:
                out += ring({monom: coeff})
                continue
            q, r = divmod(n, L)
            mono = list(monom)
            mono[idx] = r
            out += ring({tuple(mono): coeff}) * f**q
        p = out
    return p


def rational_parts(e: sp.Expr):
    """Return ``(numer, denom, atomizer, ring)`` of the normal form of ``e``.

    ``numer`` and ``denom`` are ring elements (or rationals when ``e`` is
    constant); the denominator is monic in the canonical generator order.
    """
    e = sp.sympify(e)
    at = _Atomizer(e)
    conv = at.resolve_renames(at.conv(e))
    rel_items = [(g, L, at.resolve_renames(f)) for g, (L, f) in at.relations.items()]
    free = set(conv.free_symbols)
    for g, _, f in rel_items:
        free |= f.free_symbols | {g}
    if not free:
        return sp.Rational(conv), sp.S.One, at, None
    gens = sorted(free, key=lambda g: default_sort_key(at.back.get(g, g)))
    try:
        fld = FracField(gens, sp.QQ)
        frac = fld.from_expr(conv)
    except Exception:
        fld = FracField(gens, sp.EX)
        frac = fld.from_expr(conv)
    ring = fld.ring
    num, den = frac.numer, frac.denom
    rels = [
        (gens.index(g), L, ring.from_expr(f) if f.free_symbols else ring(f))
        for g, L, f in sorted(rel_items, key=lambda r: -at.order.index(r[0]))
    ]
    for _ in range(len(rels) + 1):
        num2 = _reduce_radicals(num, ring, rels)
        den2 = _reduce_radicals(den, ring, rels)
        if num2 == num and den2 == den:
            break
        num, den = num2, den2
    if num == 0:
        return ring.zero, ring.one, at, ring
    num, den = num.cancel(den)
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return num, den, at, ring


def normalize(e: sp.Expr) -> sp.Expr:
    """Canonical rational form; ``normalize(e) == 0`` implies ``e`` vanishes identically."""
    e = sp.sympify(e)
    if e.is_Rational:
        return e
    num, den, at, ring = rational_parts(e)
    if ring is None:
        return num
    sub = {g: at.back[g] for g in ring.symbols if g in at.back}
    n = num.as_expr().xreplace(sub)
    d = den.as_expr().xreplace(sub)
    return n / d if d != 1 else n


def is_zero_symbolic(e: sp.Expr) -> bool:
    """True when the normal form of ``e`` is the zero constant."""
    num, _, _, _ = rational_parts(e)
    return num == 0
