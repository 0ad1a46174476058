"""Invariance of solution families under point-symmetry generators.

A point field ``X = xi_t d_t + xi_x d_x + eta d_u`` leaves the solution
``u = f(x, t)`` invariant when the defect ``xi_t f_t + xi_x f_x - eta`` (at
``u = f``) vanishes identically.  Invariance under some combination of several
generators is decided from the singular values of sampled defects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from .detcheck import Status, Verdict, combine, decide_zero
from .expr import DEFAULT_FRAME, Frame, Jet, RFun, normalize
from .expr.numeric import Bindings, EvalError, Program
from .jet import Manifold, jets_of, total_derivative
from .reduce import collect_reduced
from .sampling import N_SAMPLES, Domain

__all__ = [
    "PointField",
    "SolutionWithConstants",
    "InvarianceResult",
    "defect",
    "defect_terms",
    "span_decompose",
    "find_invariant_combo",
    "prolong_point",
    "check_inherited",
    "check_criterion_split",
    "ACCEPT_RATIO",
    "REJECT_RATIO",
]

ACCEPT_RATIO = 1e-8
REJECT_RATIO = 1e-4
VERIFY_TOL = 1e-8
RANK_TOL = 1e-10
GRID = 5
N_RANDOM = 12


@dataclass(frozen=True)
class PointField:
    """Point field ``xi_t d_t + xi_x d_x + eta d_u`` with coefficients in (t, x, u)."""

    xi_t: sp.Expr
    xi_x: sp.Expr
    eta: sp.Expr
    field: str = "u"
    frame: Frame = DEFAULT_FRAME

    def __post_init__(self):
        for name in ("xi_t", "xi_x", "eta"):
            value = sp.sympify(getattr(self, name))
            object.__setattr__(self, name, value)
            bad = [j for j in jets_of(value) if j.order > 0]
            if bad:
                raise ValueError(f"point field coefficient {name} contains the jet {bad[0]}")

    def scaled(self, c) -> "PointField":
        return PointField(c * self.xi_t, c * self.xi_x, c * self.eta, self.field, self.frame)

    def __add__(self, other: "PointField") -> "PointField":
        if other.field != self.field:
            raise ValueError("cannot add point fields acting on different variables")
        return PointField(self.xi_t + other.xi_t, self.xi_x + other.xi_x, self.eta + other.eta,
                          self.field, self.frame)

    def __sub__(self, other: "PointField") -> "PointField":
        return self + other.scaled(-1)

    @staticmethod
    def combination(alphas: Sequence, fields: Sequence["PointField"]) -> "PointField":
        out = fields[0].scaled(alphas[0])
        for a, X in zip(alphas[1:], fields[1:]):
            out = out + X.scaled(a)
        return out


@dataclass(frozen=True)
class SolutionWithConstants:
    """Explicit solution ``u = f(x, t)`` depending on integration constants."""

    f: sp.Expr
    constants: tuple[sp.Symbol, ...] = ()
    frame: Frame = DEFAULT_FRAME

    def __post_init__(self):
        object.__setattr__(self, "f", sp.sympify(self.f))
        object.__setattr__(self, "constants", tuple(sp.Symbol(str(c)) for c in self.constants))

    def basis(self) -> list[sp.Expr]:
        """Partial derivatives of ``f`` in the constants."""
        return [sp.diff(self.f, c) for c in self.constants]


@dataclass
class InvarianceResult:
    """Outcome of :func:`find_invariant_combo`.

    ``status`` is ``INVARIANT`` (``alpha`` holds a unit-norm combination),
    ``NONE`` or ``INCONCLUSIVE``.
    """

    status: str
    alpha: np.ndarray | None = None
    ratio: float = float("nan")
    verification: float = float("nan")
    points: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def invariant(self) -> bool:
        return self.status == "INVARIANT"


def defect_terms(X: PointField, s: SolutionWithConstants) -> list[sp.Expr]:
    """The three terms ``xi_t f_t``, ``xi_x f_x`` and ``-eta`` at ``u = f``."""
    if X.frame != s.frame:
        raise ValueError("point field and solution use different frames")
    frame = s.frame
    at = {Jet(X.field): s.f}
    ft = total_derivative(s.f, frame.t, None, frame)
    fx = total_derivative(s.f, frame.x, None, frame)
    return [X.xi_t.xreplace(at) * ft, X.xi_x.xreplace(at) * fx, -X.eta.xreplace(at)]


def defect(X: PointField, s: SolutionWithConstants) -> sp.Expr:
    """``xi_t f_t + xi_x f_x - eta(t, x, f)``, normalized."""
    return normalize(sp.Add(*defect_terms(X, s)))


# ------------------------------------------------------------ sampling grids


def _grid_points(domain: Domain, frame: Frame, rng: np.random.Generator,
                 n_grid: int, n_random: int) -> dict[sp.Symbol, np.ndarray]:
    x, t = frame.x, frame.t
    ix, it = domain.interval(x), domain.interval(t)
    gx = np.linspace(ix.lo, ix.hi, n_grid)
    gt = np.linspace(it.lo, it.hi, n_grid)
    X, T = np.meshgrid(gx, gt, indexing="ij")
    xs = np.concatenate([X.ravel(), ix.sample(rng, n_random)])
    ts = np.concatenate([T.ravel(), it.sample(rng, n_random)])
    return {x: xs, t: ts}


def _evaluate(exprs: Sequence[sp.Expr], points: Mapping[sp.Symbol, np.ndarray],
              values: Mapping) -> tuple[np.ndarray, np.ndarray]:
    """Rows of values per point; points where evaluation fails are dropped.

    Returns ``(matrix, mask)`` with ``matrix`` of shape (kept points, exprs).
    """
    prog = Program(list(exprs))
    n = len(next(iter(points.values())))
    try:
        out = prog.run(Bindings({**values, **points}))
        arr = np.array([np.broadcast_to(np.asarray(o, dtype=float), (n,)) for o in out]).T
        return arr, np.ones(n, dtype=bool)
    except EvalError:
        pass
    rows, mask = [], np.zeros(n, dtype=bool)
    for i in range(n):
        pt = {k: float(v[i]) for k, v in points.items()}
        try:
            rows.append([float(o) for o in prog.run(Bindings({**values, **pt}))])
            mask[i] = True
        except EvalError:
            continue
    return np.array(rows).reshape(-1, len(exprs)), mask


# ------------------------------------------------------------ span membership


def span_decompose(
    d: sp.Expr,
    s: SolutionWithConstants,
    values: Mapping,
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    n_grid: int = GRID,
    n_random: int = N_RANDOM,
) -> tuple[np.ndarray, float]:
    """Least-squares coefficients ``mu`` with ``d = sum mu_i df/dc_i``.

    The fit residual is ``max |d - B mu| / (1 + max |d|)`` over the sampled
    points.  Raises ``ValueError`` when the basis is rank deficient.
    """
    domain = domain or Domain(space=s.frame.x.name, time=s.frame.t.name)
    rng = rng if rng is not None else np.random.default_rng(0)
    points = _grid_points(domain, s.frame, rng, n_grid, n_random)
    basis = s.basis()
    if not basis:
        raise ValueError("solution has no constants to span with")
    M, mask = _evaluate([*basis, d], points, values)
    if M.shape[0] < 8:
        raise ValueError(f"only {M.shape[0]} evaluable sample points; need at least 8")
    B, rhs = M[:, :-1], M[:, -1]
    norms = np.linalg.norm(B, axis=0)
    if np.any(norms == 0):
        raise ValueError("rank-deficient basis: a constant does not enter the solution")
    sv = np.linalg.svd(B / norms, compute_uv=False)
    if sv[-1] / sv[0] < RANK_TOL:
        raise ValueError(f"rank-deficient basis (singular value ratio {sv[-1] / sv[0]:.3g})")
    mu, *_ = np.linalg.lstsq(B, rhs, rcond=None)
    resid = float(np.max(np.abs(B @ mu - rhs)) / (1.0 + np.max(np.abs(rhs))))
    return mu, resid


# ------------------------------------------------------------ combinations


def _defect_matrix(Xs, s, values, points):
    """Sampled defects (columns) and per-point term magnitudes (columns)."""
    exprs = []
    for X in Xs:
        exprs.extend(defect_terms(X, s))
    M, mask = _evaluate(exprs, points, values)
    k = len(Xs)
    terms = M.reshape(M.shape[0], k, 3)
    return terms.sum(axis=2), np.abs(terms).sum(axis=2), M.shape[0]


def _nullspace(D, T):
    """Smallest-singular-value direction of term-scaled defect columns."""
    scale = np.linalg.norm(T, axis=0)
    scale[scale == 0] = 1.0
    N = D / scale
    _, sv, vt = np.linalg.svd(N, full_matrices=False)
    ratio = float(sv[-1] / max(sv[0], 1.0))
    alpha = vt[-1] / scale
    alpha /= np.linalg.norm(alpha)
    i = int(np.argmax(np.abs(alpha) > 1e-12))
    if alpha[i] < 0:
        alpha = -alpha
    return ratio, alpha


def find_invariant_combo(
    Xs: Sequence[PointField],
    s: SolutionWithConstants,
    values: Mapping,
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    accept: float = ACCEPT_RATIO,
    reject: float = REJECT_RATIO,
    verify_tol: float = VERIFY_TOL,
) -> InvarianceResult:
    """Look for ``alpha != 0`` with ``sum alpha_i defect_i = 0`` identically.

    Defects are sampled on a 5x5 (x, t) grid plus 12 random points, each
    column scaled by the size of its terms.  The smallest singular value
    relative to the largest (at least 1) decides: below ``accept`` the
    corresponding vector is verified on a fresh grid; above ``reject`` no
    combination exists; in between the sampling is refined fourfold once.
    """
    if not Xs:
        raise ValueError("need at least one point field")
    domain = domain or Domain(space=s.frame.x.name, time=s.frame.t.name)
    rng = rng if rng is not None else np.random.default_rng(0)
    notes: list[str] = []
    n_grid, n_random = GRID, N_RANDOM
    for attempt in range(2):
        points = _grid_points(domain, s.frame, rng, n_grid, n_random)
        D, T, n = _defect_matrix(Xs, s, values, points)
        if n < max(8, len(Xs) + 2):
            return InvarianceResult("INCONCLUSIVE", points=n, notes=[f"only {n} evaluable sample points"])
        ratio, alpha = _nullspace(D, T)
        if ratio > reject:
            return InvarianceResult("NONE", None, ratio, points=n, notes=notes)
        if ratio < accept:
            fresh = _grid_points(domain, s.frame, rng, n_grid + 1, n_random)
            D2, T2, n2 = _defect_matrix(Xs, s, values, fresh)
            combo = np.abs(D2 @ alpha) / (1.0 + np.abs(T2) @ np.abs(alpha))
            check = float(np.max(combo)) if n2 else float("inf")
            if check < verify_tol:
                return InvarianceResult("INVARIANT", alpha, ratio, check, n + n2, notes)
            notes.append(f"candidate combination failed verification ({check:.3g})")
            return InvarianceResult("INCONCLUSIVE", alpha, ratio, check, n + n2, notes)
        notes.append(f"singular value ratio {ratio:.3g} between thresholds; refining sampling")
        n_grid, n_random = 2 * n_grid, 4 * n_random
    return InvarianceResult("INCONCLUSIVE", alpha, ratio, points=n, notes=notes)


# ------------------------------------------------------------ inherited symmetries


def prolong_point(X: PointField, e: sp.Expr, m: Manifold | None = None) -> sp.Expr:
    """First prolongation of ``X`` applied to ``e(t, x, u, u_t, u_x)``."""
    frame = X.frame
    u = Jet(X.field)
    ux, ut = Jet(X.field, 1, 0), Jet(X.field, 0, 1)
    e = sp.sympify(e)

    def D(g, var):
        return total_derivative(g, var, None, frame)

    out = (X.xi_t * sp.diff(e, frame.t) + X.xi_x * sp.diff(e, frame.x) + X.eta * sp.diff(e, u))
    for j, var in ((ux, frame.x), (ut, frame.t)):
        c = sp.diff(e, j)
        if c != 0:
            eta_j = D(X.eta, var) - ux * D(X.xi_x, var) - ut * D(X.xi_t, var)
            out += c * eta_j
    higher = [j for j in jets_of(e, X.field) if j.order > 1]
    if higher:
        raise ValueError(f"first prolongation cannot act on {higher[0]}")
    return m.reduce(out) if m is not None else out


def check_inherited(
    Q: PointField,
    integrals: Sequence[sp.Expr],
    m: Manifold,
    expected_f: Sequence[sp.Expr],
    expected_m: sp.Expr,
    names: Sequence[sp.Symbol] | None = None,
    mode: str = "both",
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    samples: int = N_SAMPLES,
) -> Verdict:
    """Does ``Q`` induce ``m(t) d_t + sum f_j(I) d_{phi_j}`` on the reduced system?

    Checks ``Q^(1) I_j = f_j(I_1, I_2)`` on the manifold (``f_j`` written in the
    symbols ``names``, default ``I1, I2, ...``) and ``Q t = m(t)``.  The
    integrals must be first integrals of the manifold.
    """
    frame = Q.frame
    names = list(names) if names is not None else [sp.Symbol(f"I{i + 1}") for i in range(len(integrals))]
    if len(names) != len(integrals) or len(expected_f) != len(integrals):
        raise ValueError("need one expected function and one name per first integral")
    subs = dict(zip(names, integrals))
    for I in integrals:
        pre = decide_zero(total_derivative(I, frame.x, m, frame), domain, rng, mode, samples)
        if pre.status is Status.FAIL:
            raise ValueError(f"{I} is not a first integral of the manifold")
    parts = []
    for I, f in zip(integrals, expected_f):
        r = prolong_point(Q, I, m) - sp.sympify(f).xreplace(subs)
        parts.append(decide_zero(m.reduce(r), domain, rng, mode, samples))
    parts.append(decide_zero(Q.xi_t - sp.sympify(expected_m), domain, rng, mode, samples))
    return combine(parts)


# ------------------------------------------------------------ criterion splitting


def check_criterion_split(
    X: PointField,
    u: sp.Expr,
    atom: sp.Expr,
    criteria: Sequence[sp.Expr],
    multiplier: sp.Expr = sp.S.One,
    values: Mapping | None = None,
    domain: Domain | None = None,
    rng: np.random.Generator | None = None,
    samples: int = 10,
) -> Verdict:
    """Is ``defect(X, u) = 0`` equivalent to the split ``criteria = 0``?

    ``u`` is an ansatz in reduction functions ``phi_i(t)``.  Symbolically the
    cleared defect, collected in powers of ``atom``, must be proportional to
    the criteria.  Numerically, at random states the defect vanishes on an
    x grid when the derivatives ``phi_i'`` solve the criteria, and does not
    when they are drawn at random.
    """
    frame = X.frame
    s = SolutionWithConstants(u, (), frame)
    d = defect(X, s)
    criteria = [sp.sympify(c) for c in criteria]
    coeffs = [c for c in collect_reduced(d, atom, multiplier, frame, keep_zeros=True)]
    notes = []
    symbolic = Status.FAIL
    if len(coeffs) == len(criteria) and any(c != 0 for c in coeffs):
        # criteria may be listed by ascending or descending power of the atom
        if _proportional(coeffs, criteria) or _proportional(coeffs[::-1], criteria):
            symbolic = Status.PASS_SYMBOLIC
        else:
            notes.append("defect coefficients are not proportional to the criteria")
    else:
        notes.append(f"defect splits into {len(coeffs)} coefficient(s), expected {len(criteria)}")

    domain = domain or Domain(space=frame.x.name, time=frame.t.name)
    rng = rng if rng is not None else np.random.default_rng(0)
    primes = sorted({f for f in d.free_symbols if isinstance(f, RFun) and f.order == 1}, key=str)
    solved = sp.solve(criteria, primes, dict=True)
    if len(solved) != 1:
        return Verdict(Status.INCONCLUSIVE, d, notes=notes + ["criteria are not solvable for the derivatives"])
    solved = solved[0]
    state = sorted((d.free_symbols | set().union(*(c.free_symbols for c in criteria)))
                   - {frame.x} - set(primes) - set(values or {}), key=str)
    xs = np.linspace(domain.interval(frame.x).lo, domain.interval(frame.x).hi, 9)
    base = dict(values or {})
    worst_on, worst_off, used = 0.0, float("inf"), 0
    terms = list(sp.Add.make_args(sp.expand(d)))
    for _ in range(samples):
        pt = {k: float(v[0]) for k, v in domain.draw(state, 1, rng, base).items()}
        env = {**base, **pt}
        on = {p: float(solved[p].xreplace(_subs(env))) for p in primes}
        off = {p: float(domain.interval(p).sample(rng, 1)[0]) for p in primes}
        try:
            r_on = _relative(terms, {**env, **on}, frame.x, xs)
            r_off = _relative(terms, {**env, **off}, frame.x, xs)
        except EvalError:
            continue
        used += 1
        worst_on = max(worst_on, r_on)
        worst_off = min(worst_off, r_off)
    if not used:
        return Verdict(Status.INCONCLUSIVE, d, notes=notes + ["no evaluable samples"])
    numeric = Status.PASS_NUMERIC if worst_on < 1e-9 and worst_off > 1e-6 else Status.FAIL
    notes.append(f"defect with criteria imposed {worst_on:.3g}; with random derivatives {worst_off:.3g}")
    status = Status.FAIL if Status.FAIL in (symbolic, numeric) else symbolic
    return Verdict(status, d if status is Status.FAIL else sp.S.Zero, worst_on, used, notes)


def _proportional(a: Sequence[sp.Expr], b: Sequence[sp.Expr]) -> bool:
    return all(normalize(a[i] * b[j] - a[j] * b[i]) == 0
               for i in range(len(a)) for j in range(i + 1, len(a)))


def _subs(env: Mapping) -> dict:
    return {(k if isinstance(k, sp.Symbol) else sp.Symbol(str(k))): v for k, v in env.items()}


def _relative(terms, env, x, xs) -> float:
    prog = Program(terms)
    out = prog.run(Bindings({**env, x: xs}))
    arr = np.array([np.broadcast_to(np.asarray(o, dtype=float), xs.shape) for o in out])
    return float(np.max(np.abs(arr.sum(axis=0)) / (1.0 + np.max(np.abs(arr), axis=0))))
