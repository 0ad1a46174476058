"""Ansatz substitution, reduced systems and solution verification.

An explicit ansatz ``u = U(x, t; phi1, phi2)`` is substituted symbolically;
an implicit one ``Q(u; phi) = x + phi2`` is handled numerically by root
finding and quadrature, with the x-jets supplied by a first-order rule
``u_x = R(u, phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy as sp
from scipy import optimize

from .detcheck import Status, Verdict, combine, decide_zero
from .expr import DEFAULT_FRAME, Frame, Jet, RFun, normalize
from .expr.calculus import instantiate, library_assignments, opaque_calls
from .expr.numeric import Bindings, EvalError, Program
from .jet import Manifold, jets_of, total_derivative, total_derivative_multi
from .sampling import N_SAMPLES, Domain

__all__ = [
    "ReductionError",
    "Ansatz",
    "ReducedSystem",
    "SolutionFamily",
    "apply_ansatz",
    "implicit_residual",
    "collect_reduced",
    "extract_reduced_numeric",
    "verify_reduced_system",
    "verify_solution",
    "eval_implicit",
    "check_first_integrals",
    "check_identity",
    "rk4_integrate",
    "first_integral_drift",
    "REDUCED_TOL",
    "SOLUTION_TOL",
    "DEFECT_TOL",
]

REDUCED_TOL = 1e-6
SOLUTION_TOL = 1e-7
DEFECT_TOL = 1e-7
RANK_TOL = 1e-10
N_X = 16


class ReductionError(ValueError):
    """The ansatz cannot express a jet, or the extraction is degenerate."""


@dataclass
class Ansatz:
    """Solution template ``u = U(x, t; phi1, phi2)`` (explicit) or implicit.

    For the implicit kind ``quadrature`` holds ``Q(u; phi)`` with the field
    symbol ``u`` as upper bound, ``rhs`` the right-hand side (e.g.
    ``x + phi2``), ``first_derivative`` the relation ``u_x = R(u, phi)`` and
    ``bracket`` a root-finding interval in terms of the phi.
    """

    kind: str = "explicit"
    U: sp.Expr | None = None
    field: str = "u"
    rfuncs: tuple[str, ...] = ("phi1", "phi2")
    quadrature: sp.Expr | None = None
    rhs: sp.Expr | None = None
    first_derivative: sp.Expr | None = None
    bracket: tuple[sp.Expr, sp.Expr] | None = None
    max_t_order: int = 1
    sign: int = 1
    frame: Frame = DEFAULT_FRAME
    _program: Program | None = dc_field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("explicit", "implicit"):
            raise ValueError(f"unknown ansatz kind {self.kind!r}")
        if self.kind == "explicit" and self.U is None:
            raise ValueError("explicit ansatz needs U")
        if self.kind == "implicit" and (self.quadrature is None or self.rhs is None or self.first_derivative is None):
            raise ValueError("implicit ansatz needs quadrature, rhs and first_derivative")

    @property
    def phis(self) -> list[RFun]:
        return [RFun(n) for n in self.rfuncs]

    def implicit_program(self) -> Program:
        """Compiled ``Q(u; phi) - rhs`` (built once per ansatz)."""
        if self._program is None:
            self._program = Program([self.quadrature - self.rhs])
        return self._program

    @property
    def value(self) -> sp.Expr:
        return self.sign * self.U

    def partials(self) -> list[sp.Expr]:
        """``dU/dphi_i`` (implicit: by implicit differentiation, in terms of ``u``)."""
        if self.kind == "explicit":
            return [sp.diff(self.value, p) for p in self.phis]
        F = self.quadrature - self.rhs
        u = Jet(self.field)
        Fu = sp.diff(F, u)
        return [-sp.diff(F, p) / Fu for p in self.phis]


@dataclass
class ReducedSystem:
    """Reduced equations; ``solved`` maps ``phi_i'`` to ``G_i(t, phi)``.

    For an algebraic system (time-independent case) ``equations`` are the
    expressions ``E_i(phi) = 0`` and ``solved`` is empty.
    """

    equations: list[sp.Expr]
    solved: dict[RFun, sp.Expr] = dc_field(default_factory=dict)
    algebraic: bool = False

    @classmethod
    def from_solved(cls, solved: Mapping[RFun, sp.Expr]) -> "ReducedSystem":
        solved = dict(solved)
        return cls([k - v for k, v in solved.items()], solved)

    @classmethod
    def from_algebraic(cls, equations: Sequence[sp.Expr]) -> "ReducedSystem":
        return cls(list(equations), {}, True)


@dataclass
class SolutionFamily:
    """Closed-form reduction functions (``phi``) or a direct ``u`` formula."""

    phi: dict[str, sp.Expr] = dc_field(default_factory=dict)
    u: sp.Expr | None = None
    constraints: list[sp.Expr] = dc_field(default_factory=list)


# ---------------------------------------------------------------- substitution


def _check_jets(pde: sp.Expr, a: Ansatz) -> list[Jet]:
    jets = sorted(jets_of(pde, a.field), key=lambda j: (j.ot, j.ox))
    for j in jets:
        if j.ot > a.max_t_order:
            raise ReductionError(f"the ansatz provides t-derivatives up to order {a.max_t_order}, cannot express {j}")
    return jets


def apply_ansatz(pde: sp.Expr, a: Ansatz, normal: bool = True) -> sp.Expr:
    """Residual of ``pde`` under the explicit ansatz, in (x, t, phi, phi')."""
    if a.kind != "explicit":
        raise ReductionError("symbolic substitution needs an explicit ansatz")
    jets = _check_jets(pde, a)
    rules = {j: total_derivative_multi(a.value, (j.ox, j.ot), None, a.frame) for j in jets}
    out = sp.sympify(pde).xreplace(rules)
    return normalize(out) if normal else out


def implicit_residual(pde: sp.Expr, a: Ansatz) -> sp.Expr:
    """Residual under an implicit ansatz, in (x, u, phi, phi').

    Jets in x follow from ``u_x = R``; ``u_t = sum_i (du/dphi_i) phi_i'``.
    """
    u = Jet(a.field)
    m = Manifold([(u.raised(1, 0), a.first_derivative)], frame=a.frame, check=False, simplify=None)
    jets = _check_jets(pde, a)
    ut = sum((d * p.raised() for d, p in zip(a.partials(), a.phis)), sp.S.Zero)
    rules = {}
    for j in jets:
        if j.ot == 0:
            rules[j] = m.reduced_jet(j) if j.ox else j
        elif j.ot == 1:
            rules[j] = total_derivative_multi(ut, (j.ox, 0), m, a.frame)
        else:
            raise ReductionError(f"cannot express {j} through the implicit ansatz")
    return sp.sympify(pde).xreplace(rules)


def collect_reduced(residual: sp.Expr, atom: sp.Expr, multiplier: sp.Expr = sp.S.One,
                    frame: Frame = DEFAULT_FRAME, keep_zeros: bool = False) -> list[sp.Expr]:
    """Coefficients of the cleared residual as a polynomial in ``atom``.

    ``atom`` is a function ``w(x)`` (e.g. ``exp(beta*x)``, ``x``, ``ln(x)``);
    ``x`` is eliminated in favour of ``w`` before collecting.  Coefficients
    are listed by ascending power; zero ones are dropped unless ``keep_zeros``.
    """
    x = frame.x
    w = sp.Dummy("w")
    sols = sp.solve(sp.Eq(atom, w), x)
    if not sols:
        raise ReductionError(f"cannot invert the collection atom {atom}")
    cleared = normalize(residual * multiplier)
    num, den = sp.fraction(sp.together(cleared))
    expr = normalize(num.xreplace({x: sols[0]}))
    num, den = sp.fraction(sp.together(expr))
    try:
        poly = sp.Poly(sp.expand(num), w)
    except sp.PolynomialError as exc:
        raise ReductionError(f"cleared residual is not polynomial in {atom}") from exc
    if x in sp.sympify(num).free_symbols:
        raise ReductionError(f"cleared residual still depends on {x} after collecting in {atom}")
    coeffs = [normalize(c) for c in reversed(poly.all_coeffs())]
    return coeffs if keep_zeros else [c for c in coeffs if c != 0]


# ---------------------------------------------------------------- numerics


def _xs(domain: Domain, frame: Frame, n: int = N_X) -> np.ndarray:
    iv = domain.interval(frame.x)
    if iv.lo > 0:
        return np.geomspace(iv.lo, iv.hi, n)
    return np.linspace(iv.lo, iv.hi, n)


@dataclass
class _Extractor:
    """Compiled columns ``dR/dphi_i'`` and constant term of an affine residual."""

    terms: Program
    columns: Program
    primes: list[RFun]

    @classmethod
    def build(cls, residual: sp.Expr, primes: list[RFun]) -> "_Extractor":
        zero = {p: 0 for p in primes}
        cols = [sp.diff(residual, p) for p in primes]
        for c in cols:
            if any(p in c.free_symbols for p in primes):
                raise ReductionError("residual is not affine in the phi derivatives")
        b = sp.sympify(residual).xreplace(zero)
        return cls(Program(list(sp.Add.make_args(b))), Program(cols), primes)

    def solve(self, b: Bindings, n: int) -> tuple[np.ndarray, float]:
        terms = np.array([np.broadcast_to(np.asarray(v, float), (n,)) for v in self.terms.run(b)])
        rhs = -terms.sum(axis=0)
        A = np.array([np.broadcast_to(np.asarray(v, float), (n,)) for v in self.columns.run(b)]).T
        norms = np.linalg.norm(A, axis=0)
        if np.any(norms == 0):
            raise ReductionError("ansatz degenerate: a column vanishes at the sample points")
        An = A / norms
        s = np.linalg.svd(An, compute_uv=False)
        if s[-1] <= RANK_TOL * s[0]:
            raise ReductionError(f"rank deficiency (singular value ratio {s[-1] / s[0]:.3g})")
        Q, R = np.linalg.qr(An)
        p = np.linalg.solve(R, Q.T @ rhs) / norms
        fit = A @ p - rhs
        scale = 1.0 + np.maximum(np.max(np.abs(terms), axis=0), np.abs(A @ p))
        return p, float(np.max(np.abs(fit) / scale))


def _values(bindings: Mapping | None) -> dict:
    return dict(bindings or {})


def extract_reduced_numeric(
    pde: sp.Expr,
    a: Ansatz,
    t: float,
    phi: Sequence[float],
    xs: Sequence[float] | None = None,
    params: Mapping | None = None,
    instantiation: Mapping | None = None,
    domain: Domain | None = None,
) -> tuple[np.ndarray, float]:
    """Least-squares estimate of ``phi'`` at one state point, and the fit defect."""
    domain = domain or Domain()
    pde = instantiate(pde, instantiation) if instantiation else pde
    primes = [p.raised() for p in a.phis]
    values = _values(params)
    values.update({p: v for p, v in zip(a.phis, phi)})
    values[a.frame.t] = t
    if a.kind == "explicit":
        residual = apply_ansatz(pde, a, normal=False)
        ex = _Extractor.build(residual, primes)
        xs = np.asarray(_xs(domain, a.frame) if xs is None else xs, dtype=float)
        values[a.frame.x] = xs
        return ex.solve(Bindings(values), len(xs))
    residual = implicit_residual(pde, a)
    ex = _Extractor.build(residual, primes)
    if xs is None:
        xs = implicit_xs(a, values)
    xs = np.asarray(xs, dtype=float)
    us = np.array([eval_implicit(a, values, float(x)) for x in xs])
    values[a.frame.x] = xs
    values[Jet(a.field)] = us
    return ex.solve(Bindings(values), len(xs))


def _quad_value(a: Ansatz, values: Mapping, u: float) -> float:
    b = Bindings({**values, Jet(a.field): u})
    return float(a.implicit_program().run(b)[0])


def implicit_xs(a: Ansatz, values: Mapping, n: int = N_X) -> np.ndarray:
    """Sample points in x whose implicit equation has a root inside the bracket.

    Requires ``rhs = x + c``: then ``Q(u) - rhs`` at ``x = 0`` bounds the
    admissible x-range by its values at the bracket ends.
    """
    x = a.frame.x
    if sp.diff(a.rhs, x) != 1:
        raise ReductionError("implicit sampling needs a right-hand side of the form x + c")
    lo, hi = _bracket(a, values)
    base = {**values, x: 0.0}
    x_lo, x_hi = sorted((_quad_value(a, base, lo), _quad_value(a, base, hi)))
    span = x_hi - x_lo
    return np.linspace(x_lo + 0.05 * span, x_hi - 0.05 * span, n)


def _bracket(a: Ansatz, values: Mapping) -> tuple[float, float]:
    if a.bracket is None:
        raise ReductionError("implicit ansatz without a bracketing interval")
    prog = Program(list(a.bracket))
    lo, hi = prog(Bindings(values))
    return float(lo), float(hi)


def eval_implicit(a: Ansatz, values: Mapping, x: float) -> float:
    """Solve the implicit ansatz for ``u`` at ``x`` (safeguarded Brent, 1e-12)."""
    vals = {**values, a.frame.x: x}
    lo, hi = _bracket(a, vals)

    def F(u):
        return _quad_value(a, vals, u)

    flo, fhi = F(lo), F(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ReductionError(f"no sign change of the implicit equation on [{lo:.6g}, {hi:.6g}] at x={x:.6g}")
    root = optimize.brentq(F, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    width = hi - lo
    if min(root - lo, hi - root) < 1e-9 * max(1.0, width):
        raise ReductionError(f"root at the edge of the bracket at x={x:.6g}")
    return float(root)


# ---------------------------------------------------------------- verification


def _instantiations(exprs: Sequence[sp.Expr], given=None, count: int = 2):
    names: dict[str, int] = {}
    for e in exprs:
        names.update(opaque_calls(e))
    if given:
        return list(given)
    return library_assignments(names, count) if names else [{}]


def verify_reduced_system(
    pde: sp.Expr,
    a: Ansatz,
    rs: ReducedSystem,
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    mode: str = "both",
    samples: int = N_SAMPLES,
    tol: float = REDUCED_TOL,
    instantiations=None,
) -> Verdict:
    """Symbolic substitution check plus numeric extraction cross-check."""
    domain = domain or Domain()
    rng = rng if rng is not None else np.random.default_rng(0)
    pde, solved = _effective(pde, a, rs)
    verdicts = []
    if mode in ("symbolic", "both") and a.kind == "explicit":
        residual = apply_ansatz(pde, a, normal=False).xreplace(solved)
        sym = decide_zero(residual, mode="symbolic")
        if sym.status is not Status.PASS_SYMBOLIC:
            sym = Verdict(Status.INCONCLUSIVE, sym.residual, notes=["symbolic substitution left a nonzero normal form"])
        verdicts.append(sym)
    if mode in ("numeric", "both"):
        verdicts.append(_numeric_reduced(pde, a, solved, domain, rng, samples, tol, instantiations))
    if not verdicts:
        return Verdict(Status.INCONCLUSIVE, notes=["implicit ansatz has no symbolic path"])
    if len(verdicts) == 2:
        sym, num = verdicts
        if sym.status is Status.PASS_SYMBOLIC and num.passed:
            return Verdict(Status.PASS_SYMBOLIC, sp.S.Zero, num.numeric_max_residual, num.samples_used, num.notes)
        if sym.status is Status.PASS_SYMBOLIC:
            return Verdict(Status.INCONCLUSIVE, sp.S.Zero, num.numeric_max_residual, num.samples_used,
                           ["symbolic stage passed but the numeric cross-check disagrees"] + num.notes)
        num.residual = sym.residual
        return num
    return verdicts[0]


def _effective(pde: sp.Expr, a: Ansatz, rs: ReducedSystem):
    """Algebraic systems are checked as the evolution equation ``u_t = pde``."""
    if not rs.algebraic:
        return pde, dict(rs.solved)
    ut = Jet(a.field, 0, 1)
    solved = {p.raised(): -e for p, e in zip(a.phis, rs.equations)}
    return ut - pde, solved


def _numeric_reduced(pde, a, solved, domain, rng, samples, tol, instantiations) -> Verdict:
    primes = [p.raised() for p in a.phis]
    G = [solved[p] for p in primes]
    insts = _instantiations([pde] + G, instantiations)
    worst = 0.0
    used = 0
    notes: list[str] = []
    for inst in insts:
        pde_i = instantiate(pde, inst) if inst else pde
        G_i = [instantiate(g, inst) if inst else g for g in G]
        if a.kind == "explicit":
            residual = apply_ansatz(pde_i, a, normal=False)
        else:
            residual = implicit_residual(pde_i, a)
        ex = _Extractor.build(residual, primes)
        gprog = Program(G_i)
        free = set().union(*(e.free_symbols for e in [residual] + G_i))
        free -= {a.frame.x, Jet(a.field)} | set(primes)
        free |= set(a.phis) | {a.frame.t}
        pts = domain.draw(free, samples, rng)
        for i in range(samples):
            vals = {s: float(v[i]) for s, v in pts.items()}
            try:
                if a.kind == "explicit":
                    xs = _xs(domain, a.frame)
                    vals_x = {**vals, a.frame.x: xs}
                else:
                    xs = implicit_xs(a, vals)
                    us = np.array([eval_implicit(a, vals, float(x)) for x in xs])
                    vals_x = {**vals, a.frame.x: xs, Jet(a.field): us}
                p, defect = ex.solve(Bindings(vals_x), len(xs))
                g = np.array([float(v) for v in gprog(Bindings(vals))])
            except (EvalError, ReductionError) as exc:
                notes.append(f"sample skipped: {exc}")
                continue
            err = float(np.max(np.abs(p - g) / (1.0 + np.abs(g))))
            worst = max(worst, err, defect)
            used += 1
    if used < samples * len(insts) // 2:
        return Verdict(Status.INCONCLUSIVE, numeric_max_residual=worst, samples_used=used,
                       notes=notes[:3] + ["too few evaluable state points"])
    status = Status.PASS_NUMERIC if worst < tol else Status.FAIL
    return Verdict(status, numeric_max_residual=worst, samples_used=used, notes=notes[:3])


def _jet_values(u_expr: sp.Expr, pde: sp.Expr, fieldname: str, frame: Frame) -> dict:
    out = {}
    for j in jets_of(pde, fieldname):
        d = u_expr
        for _ in range(j.ox):
            d = total_derivative(d, frame.x, None, frame)
        for _ in range(j.ot):
            d = total_derivative(d, frame.t, None, frame)
        out[j] = d
    return out


def solution_u(a: Ansatz | None, sol: SolutionFamily) -> sp.Expr:
    if sol.u is not None:
        return sol.u
    if a is None or a.kind != "explicit":
        raise ReductionError("closed-form reduction functions need an explicit ansatz")
    return a.value.xreplace({RFun(k): v for k, v in sol.phi.items()})


def verify_solution(
    pde: sp.Expr,
    sol: SolutionFamily,
    a: Ansatz | None = None,
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    draws: int = 10,
    grid: int = 20,
    tol: float = SOLUTION_TOL,
    instantiations=None,
    fieldname: str = "u",
    frame: Frame = DEFAULT_FRAME,
    anti_base: Mapping[str, float] | None = None,
    fixed: Mapping | None = None,
) -> Verdict:
    """PDE residual of a solution family on a ``grid x grid`` (x, t) mesh.

    Each parameter draw satisfies the family's constraints on the whole grid.
    The residual is scaled by ``1 + max |term|`` pointwise.
    """
    domain = domain or Domain(space=frame.space, time=frame.time)
    rng = rng if rng is not None else np.random.default_rng(0)
    frame = a.frame if a is not None else frame
    u_expr = solution_u(a, sol)
    residual = sp.sympify(pde).xreplace(_jet_values(u_expr, pde, fieldname, frame))
    on_solution = {RFun(k): v for k, v in sol.phi.items()}
    on_solution[Jet(fieldname)] = u_expr
    constraints = [sp.sympify(c).xreplace(on_solution) for c in sol.constraints]
    for c in constraints:
        left = [s for s in c.free_symbols if isinstance(s, (Jet, RFun))]
        if left:
            raise ReductionError(f"constraint {c} is not determined by the solution ({left[0]})")
    insts = _instantiations([residual], instantiations, count=max(2, draws and 2))
    x, t = frame.x, frame.t
    xi, ti = domain.interval(x), domain.interval(t)
    X, T = np.meshgrid(np.linspace(xi.lo, xi.hi, grid), np.linspace(ti.lo, ti.hi, grid))
    X, T = X.ravel(), T.ravel()
    fixed = dict(fixed or {})
    worst = 0.0
    used = 0
    notes: list[str] = []
    for inst in insts:
        res_i = instantiate(residual, inst) if inst else residual
        cons_i = [instantiate(c, inst) if inst else c for c in constraints]
        prog = Program(list(sp.Add.make_args(res_i)))
        cprog = Program(cons_i) if cons_i else None
        params = sorted((res_i.free_symbols | set().union(*(c.free_symbols for c in cons_i)))
                        - {x, t} - set(fixed), key=str)
        for d in range(draws if params else 1):
            vals = _draw_admissible(params, domain, rng, cprog, X, T, x, t, fixed, anti_base)
            if vals is None:
                return Verdict(Status.INCONCLUSIVE, residual, worst, used,
                               notes + ["no admissible parameter draw found"])
            b = Bindings({**fixed, **vals, x: X, t: T}, anti_base=dict(anti_base or {}))
            try:
                terms = np.array([np.broadcast_to(np.asarray(v, float), X.shape) for v in prog.run(b)])
            except EvalError as exc:
                return Verdict(Status.INCONCLUSIVE, residual, worst, used, notes + [str(exc)])
            rel = np.abs(terms.sum(axis=0)) / (1.0 + np.max(np.abs(terms), axis=0))
            worst = max(worst, float(np.max(rel)))
            used += X.size
    status = Status.PASS_NUMERIC if worst < tol else Status.FAIL
    return Verdict(status, residual, worst, used, notes)


def _draw_admissible(params, domain, rng, cprog, X, T, x, t, fixed, anti_base, attempts: int = 2000):
    for _ in range(attempts):
        vals = {p: float(domain.interval(p).sample(rng, 1)[0]) for p in params}
        if cprog is None:
            return vals
        b = Bindings({**fixed, **vals, x: X, t: T}, anti_base=dict(anti_base or {}))
        try:
            out = cprog.run(b)
        except EvalError:
            continue
        if all(np.all(np.asarray(c) > 0) for c in out):
            return vals
    return None


# ---------------------------------------------------------------- first integrals


def check_first_integrals(
    integrals: Sequence[sp.Expr],
    m: Manifold,
    a: Ansatz | None = None,
) -> Verdict:
    """``D_x I_j`` vanishes on ``m``; under the ansatz ``I_j`` equals ``phi_j``."""
    verdicts = []
    for j, I in enumerate(integrals):
        dI = total_derivative(I, m.frame.x, m)
        v = decide_zero(dI, mode="symbolic")
        v.notes = [f"D_x I{j + 1} on the manifold: {'zero' if v.passed else 'nonzero'}"]
        verdicts.append(v)
        if a is not None:
            sub = sp.sympify(I).xreplace(_jet_values(a.value, I, a.field, a.frame))
            v2 = decide_zero(sub - a.phis[j], mode="symbolic")
            v2.notes = [f"I{j + 1} under the ansatz {'equals' if v2.passed else 'differs from'} {a.phis[j]}"]
            verdicts.append(v2)
    return combine(verdicts)


def check_identity(
    expr: sp.Expr,
    rs: ReducedSystem,
    frame: Frame = DEFAULT_FRAME,
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    mode: str = "both",
    samples: int = N_SAMPLES,
    fixed=None,
) -> Verdict:
    """Zero test of ``expr`` (which may contain ``phi'``) after substituting ``rs``."""
    return decide_zero(sp.sympify(expr).xreplace(rs.solved), domain, rng, mode, samples, fixed=fixed)


# ---------------------------------------------------------------- trajectories


def rk4_integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    ts: Sequence[float],
    tol: float = 1e-9,
    max_level: int = 18,
) -> np.ndarray:
    """Classic RK4 on the output grid ``ts``, halving the step until two
    successive refinements differ by less than ``tol`` (relative)."""
    ts = np.asarray(ts, dtype=float)
    y0 = np.asarray(y0, dtype=float)

    def run(steps: int) -> np.ndarray:
        out = np.empty((len(ts), len(y0)))
        out[0] = y = y0.copy()
        for k in range(1, len(ts)):
            t = ts[k - 1]
            h = (ts[k] - t) / steps
            for _ in range(steps):
                k1 = f(t, y)
                k2 = f(t + h / 2, y + h / 2 * k1)
                k3 = f(t + h / 2, y + h / 2 * k2)
                k4 = f(t + h, y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t += h
            out[k] = y
        return out

    steps = 4
    prev = run(steps)
    for _ in range(max_level):
        steps *= 2
        cur = run(steps)
        if np.all(np.abs(cur - prev) <= tol * (1.0 + np.abs(cur))):
            return cur
        prev = cur
    raise ReductionError("RK4 refinement did not converge")


def first_integral_drift(
    rs: ReducedSystem,
    quantity: sp.Expr,
    phis: Sequence[RFun],
    params: Mapping,
    y0: Sequence[float],
    t_span: tuple[float, float],
    points: int = 21,
    frame: Frame = DEFAULT_FRAME,
) -> float:
    """Maximum relative drift of ``quantity`` along an RK4 trajectory."""
    t = frame.t
    rhs = Program([rs.solved[p.raised()] for p in phis])
    qprog = Program([quantity])

    def f(tt, y):
        vals = {**params, t: tt, **{p: yy for p, yy in zip(phis, y)}}
        return np.array(rhs(Bindings(vals)), dtype=float)

    ts = np.linspace(t_span[0], t_span[1], points)
    traj = rk4_integrate(f, y0, ts)
    q = np.array([qprog(Bindings({**params, t: tt, **{p: yy for p, yy in zip(phis, y)}}))[0]
                  for tt, y in zip(ts, traj)])
    return float(np.max(np.abs(q - q[0])) / abs(q[0]))
