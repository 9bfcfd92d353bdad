"""Formal generic submanifolds in normal coordinates.

The ambient ring of a manifold with CR dimension ``n`` and codimension ``d``
has ``2N = 2(n + d)`` variables laid out as ``(z, w, chi, tau)``.  The
normal form series ``Q`` lives in ``(z, chi, tau)``.  Its conjugate is used
with slots ``(chi, z, w)``, which is how ``bar Q(chi, z, w)`` is formed.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import linalg
from .coeffs import I, ONE, ZERO, ComplexRational, cq
from .ideal import CurveWitness, StaircaseReport, find_monomial_curve, staircase_codim
from .series import (
    RankResult,
    SeriesTuple,
    TruncatedSeries,
    generic_rank,
    grlex_key,
    implicit_solve,
    monomials,
    series_matrix_inverse,
)


@dataclass
class GenericSubmanifoldNF:
    n: int
    d: int
    Q: SeriesTuple
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.Q, SeriesTuple):
            self.Q = SeriesTuple(self.Q)
        if len(self.Q) != self.d:
            raise ValueError(f"expected {self.d} components of Q, got {len(self.Q)}")
        if self.Q.nvars != 2 * self.n + self.d:
            raise ValueError("Q must live in (z, chi, tau)")

    @property
    def N(self) -> int:
        return self.n + self.d

    @property
    def precision(self) -> int:
        return self.Q.precision

    # ambient index helpers
    @property
    def z_idx(self) -> list[int]:
        return list(range(self.n))

    @property
    def w_idx(self) -> list[int]:
        return list(range(self.n, self.N))

    @property
    def chi_idx(self) -> list[int]:
        return list(range(self.N, self.N + self.n))

    @property
    def tau_idx(self) -> list[int]:
        return list(range(self.N + self.n, 2 * self.N))

    def ambient_var(self, i: int) -> TruncatedSeries:
        return TruncatedSeries.variable(i, 2 * self.N, self.precision)

    def q_bar(self) -> SeriesTuple:
        """Conjugate series, still in slot order (first, second, third block)."""
        return SeriesTuple(q.bar_conjugate() for q in self.Q)

    def q_ambient(self) -> SeriesTuple:
        """``Q(z, chi, tau)`` as series in the ambient ring."""
        pos = self.z_idx + self.chi_idx + self.tau_idx
        return SeriesTuple(q.embed(2 * self.N, pos) for q in self.Q)

    def q_bar_ambient(self) -> SeriesTuple:
        """``bar Q(chi, z, w)`` as series in the ambient ring."""
        pos = self.chi_idx + self.z_idx + self.w_idx
        return SeriesTuple(q.embed(2 * self.N, pos) for q in self.q_bar())

    def with_precision(self, precision: int) -> "GenericSubmanifoldNF":
        return GenericSubmanifoldNF(
            self.n, self.d, SeriesTuple(q.with_precision(precision) for q in self.Q), self.name
        )

    def normality_defects(self) -> list[str]:
        out = []
        n, d = self.n, self.d
        for j, q in enumerate(self.Q):
            tau = TruncatedSeries.variable(2 * n + j, 2 * n + d, q.precision)
            for label, block in (("z", range(n)), ("chi", range(n, 2 * n))):
                r = q.set_zero(block) - tau
                if not r.is_zero():
                    e, c = r.sorted_terms()[0]
                    out.append(f"Q_{j + 1} with {label}=0 differs from tau_{j + 1} at exponent {list(e)} (coefficient {c})")
        return out

    def reality_defects(self) -> list[str]:
        out = []
        for j, g in enumerate(ideal_generators(self, "antiholo")):
            r = reduce_mod_M(g, self)
            if not r.is_zero():
                e, c = r.sorted_terms()[0]
                out.append(f"conjugate generator {j + 1} leaves residue {c} at exponent {list(e)}")
        return out

    def validate(self) -> None:
        problems = self.normality_defects() + self.reality_defects()
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class DefiningData:
    """Real defining series ``rho(Z, zeta)`` in ``(Z_1..Z_N, zeta_1..zeta_N)``."""

    N: int
    d: int
    rho: SeriesTuple
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.rho, SeriesTuple):
            self.rho = SeriesTuple(self.rho)
        if self.rho.nvars != 2 * self.N or len(self.rho) != self.d:
            raise ValueError("rho must be d series in 2N variables")

    @property
    def n(self) -> int:
        return self.N - self.d

    @property
    def precision(self) -> int:
        return self.rho.precision

    def swap(self) -> list[int]:
        return list(range(self.N, 2 * self.N)) + list(range(self.N))

    def reality_defects(self) -> list[str]:
        out = []
        for j, r in enumerate(self.rho):
            diff = r - r.bar_conjugate(self.swap())
            if not diff.is_zero():
                e, c = diff.sorted_terms()[0]
                out.append(f"rho_{j + 1} is not real: mismatch {c} at exponent {list(e)}")
        return out

    def differential(self) -> list[list[ComplexRational]]:
        return [[r.derive(i).constant_term() for i in range(self.N)] for r in self.rho]

    def is_generic(self) -> bool:
        rank, _, _ = linalg.rank_profile(self.differential())
        return rank == self.d

    def validate(self) -> None:
        problems = self.reality_defects()
        if not self.is_generic():
            problems.append("holomorphic differentials of rho are dependent at 0")
        if any(not r.constant_term().is_zero() for r in self.rho):
            problems.append("rho must vanish at the origin")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class FormalVectorField:
    """``sum coeffs[i] d/dx_i`` over the ambient ``(Z, zeta)`` ring."""

    coeffs: list
    kind: str = "0,1"

    def apply(self, f: TruncatedSeries) -> TruncatedSeries:
        out = TruncatedSeries.zero(f.nvars, f.precision - 1)
        for i, c in enumerate(self.coeffs):
            if c is None or c.is_zero():
                continue
            out = out + c * f.derive(i)
        return out

    def type_consistent(self, N: int) -> bool:
        holo = all(c is None or c.is_zero() for c in self.coeffs[:N])
        anti = all(c is None or c.is_zero() for c in self.coeffs[N:])
        return holo if self.kind == "0,1" else anti


# -- generators and reduction ---------------------------------------------------


def ideal_generators(M: GenericSubmanifoldNF, form: str = "holo") -> SeriesTuple:
    """``w_j - Q_j(z, chi, tau)`` or ``tau_j - bar Q_j(chi, z, w)``."""
    if form == "holo":
        q = M.q_ambient()
        return SeriesTuple(M.ambient_var(M.w_idx[j]) - q[j] for j in range(M.d))
    if form == "antiholo":
        qb = M.q_bar_ambient()
        return SeriesTuple(M.ambient_var(M.tau_idx[j]) - qb[j] for j in range(M.d))
    raise ValueError(f"unknown generator form {form!r}")


def reduce_mod_M(f: TruncatedSeries, M: GenericSubmanifoldNF) -> TruncatedSeries:
    """Normal form modulo I(M): substitute ``w = Q(z, chi, tau)``; result in ``(z, chi, tau)``."""
    n, d = M.n, M.d
    m = 2 * n + d
    p = M.precision
    z = [TruncatedSeries.variable(i, m, p) for i in range(n)]
    chi = [TruncatedSeries.variable(n + i, m, p) for i in range(n)]
    tau = [TruncatedSeries.variable(2 * n + i, m, p) for i in range(d)]
    return f.compose(z + list(M.Q) + chi + tau)


def lift_reduced(f: TruncatedSeries, M: GenericSubmanifoldNF) -> TruncatedSeries:
    """Embed a ``(z, chi, tau)`` series into the ambient ring."""
    return f.embed(2 * M.N, M.z_idx + M.chi_idx + M.tau_idx)


# -- vector fields --------------------------------------------------------------


def cr_basis(M: GenericSubmanifoldNF) -> list[FormalVectorField]:
    qb = M.q_bar_ambient()
    fields = []
    for j in range(M.n):
        coeffs: list = [None] * (2 * M.N)
        chi = M.chi_idx[j]
        coeffs[chi] = TruncatedSeries.constant(ONE, 2 * M.N, M.precision)
        for l in range(M.d):
            coeffs[M.tau_idx[l]] = qb[l].derive(chi)
        fields.append(FormalVectorField(coeffs, "0,1"))
    return fields


def tangential_frame(defining: DefiningData) -> list[FormalVectorField]:
    """``S_j = d/dZ_j - rho_{Z_j} (rho_tau)^{-1} d/dtau`` for each holomorphic coordinate."""
    return tangential_frame_for(list(defining.rho), defining.N, defining.d)


def tangential_frame_for(rho: list, N: int, d: int) -> list[FormalVectorField]:
    """The same frame for any generators whose ``tau`` block is invertible at 0.

    The fields annihilate every generator exactly, so they are tangent to
    the ideal the generators span.
    """
    tau = list(range(2 * N - d, 2 * N))
    A = [[r.derive(t) for t in tau] for r in rho]
    if linalg.inverse([[a.constant_term() for a in row] for row in A]) is None:
        raise ValueError("the tau block of rho is singular at the origin")
    Ainv = series_matrix_inverse(A)
    p = min(r.precision for r in rho)
    out = []
    for j in range(N):
        coeffs: list = [None] * (2 * N)
        coeffs[j] = TruncatedSeries.constant(ONE, 2 * N, p)
        rz = [r.derive(j) for r in rho]
        for m, t in enumerate(tau):
            acc = TruncatedSeries.zero(2 * N, p - 1)
            for l in range(d):
                acc = acc - Ainv[m][l] * rz[l]
            coeffs[t] = acc
        out.append(FormalVectorField(coeffs, "1,0"))
    return out


def cr_basis_from_defining(defining: DefiningData) -> list[FormalVectorField]:
    """``L_j = d/dchi_j - rho_{chi_j} (rho_tau)^{-1} d/dtau``."""
    N, d, n = defining.N, defining.d, defining.n
    tau = list(range(2 * N - d, 2 * N))
    A = [[r.derive(t) for t in tau] for r in defining.rho]
    Ainv = series_matrix_inverse(A)
    p = defining.precision
    out = []
    for j in range(n):
        chi = N + j
        coeffs: list = [None] * (2 * N)
        coeffs[chi] = TruncatedSeries.constant(ONE, 2 * N, p)
        rc = [r.derive(chi) for r in defining.rho]
        for m, t in enumerate(tau):
            acc = TruncatedSeries.zero(2 * N, p - 1)
            for l in range(d):
                acc = acc - Ainv[m][l] * rc[l]
            coeffs[t] = acc
        out.append(FormalVectorField(coeffs, "0,1"))
    return out


# -- Segre maps -----------------------------------------------------------------


def _segre(Q: SeriesTuple, n: int, d: int, k: int, conj: bool, nvars: int, first_block: int, p: int) -> list:
    """``v^k`` (or its conjugate) over blocks ``first_block ..`` of an ``nvars`` ring."""
    if k == 0:
        return [TruncatedSeries.zero(nvars, p) for _ in range(n + d)]
    x = [TruncatedSeries.variable(first_block * n + i, nvars, p) for i in range(n)]
    inner = _segre(Q, n, d, k - 1, not conj, nvars, first_block + 1, p)
    qs = [q.bar_conjugate() for q in Q] if conj else list(Q)
    return x + [q.compose(x + inner) for q in qs]


def segre_map(M: GenericSubmanifoldNF, k: int) -> SeriesTuple:
    """The ``k``-th Segre map ``v^k`` as ``N`` series in ``k n`` variables."""
    if k == 0:
        return SeriesTuple(TruncatedSeries.zero(0, M.precision) for _ in range(M.N))
    return SeriesTuple(_segre(M.Q, M.n, M.d, k, False, k * M.n, 0, M.precision))


def segre_map_bar(M: GenericSubmanifoldNF, k: int) -> SeriesTuple:
    return SeriesTuple(_segre(M.Q, M.n, M.d, k, True, k * M.n, 0, M.precision))


def segre_substitution(M: GenericSubmanifoldNF, k: int) -> list:
    """``(Z, zeta) = (v^{k+1}(z, xi), bar v^k(xi))`` over ``(k+1) n`` variables."""
    nv = (k + 1) * M.n
    p = M.precision
    Z = _segre(M.Q, M.n, M.d, k + 1, False, nv, 0, p)
    zeta = _segre(M.Q, M.n, M.d, k, True, nv, 1, p)
    return Z + zeta


def verify_segre_identity(M: GenericSubmanifoldNF, k: int) -> bool:
    subs = segre_substitution(M, k)
    for form in ("holo", "antiholo"):
        for g in ideal_generators(M, form):
            if not g.compose(subs).is_zero():
                return False
    return True


# -- finite type ----------------------------------------------------------------


@dataclass
class RankPoint:
    point: tuple
    k: int
    rank: int


@dataclass
class TypeReport:
    status: str  # "yes", "no_up_to", "inconclusive"
    k1: int | None
    ranks: dict
    certificates: dict
    k_max: int
    rank_point: RankPoint | None = None
    rank_point_note: str = ""

    @property
    def finite_type(self) -> bool:
        return self.status == "yes"


def finite_type_test(M: GenericSubmanifoldNF, k_max: int | None = None, seed: int = 17) -> TypeReport:
    k_max = 2 * (M.d + 1) if k_max is None else k_max
    ranks: dict[int, int] = {}
    certs: dict[int, RankResult] = {}
    k1 = None
    for k in range(1, k_max + 1):
        res = generic_rank(segre_map(M, k), mode="sample", seed=seed + k)
        ranks[k] = res.rank
        certs[k] = res
        if res.rank == M.N:
            k1 = k
            break
    # reported ranks must be nondecreasing
    for k in sorted(ranks):
        if k - 1 in ranks and ranks[k] < ranks[k - 1]:
            ranks[k] = ranks[k - 1]
    if k1 is not None:
        report = TypeReport("yes", k1, ranks, certs, k_max)
        pt = find_rank_point(M, k1, seed=seed)
        if pt is None:
            report.rank_point_note = "no exact rank point found among sampled collapse points"
        else:
            report.rank_point = pt
        return report
    certified = True
    for k in range(1, min(M.d + 1, k_max) + 1):
        res = generic_rank(segre_map(M, k), mode="symbolic", seed=seed + k)
        certs[k] = res
        if not (res.exact and res.rank < M.N):
            certified = False
    return TypeReport("no_up_to" if certified else "inconclusive", None, ranks, certs, k_max)


def _eval_jet(f: TruncatedSeries, args: list) -> tuple:
    """Value and gradient of ``f`` at first-order jets ``args = [(value, gradient)]``."""
    m = len(args[0][1]) if args else 0
    val = ZERO
    grad = [ZERO] * m
    for e, c in f.terms.items():
        tv = c
        tg = [ZERO] * m
        for i, k in enumerate(e):
            if not k:
                continue
            av, ag = args[i]
            pk = av ** k
            dk = av ** (k - 1) * k if k else ZERO
            tg = [a * pk + tv * dk * b for a, b in zip(tg, ag)]
            tv = tv * pk
        val = val + tv
        grad = [a + b for a, b in zip(grad, tg)]
    return val, grad


def segre_jet(M: GenericSubmanifoldNF, k: int, point: Sequence) -> tuple[list, list]:
    """Exact value and Jacobian of ``v^k`` at a point, evaluating ``Q`` itself.

    Evaluating ``Q`` (rather than the truncated composite) keeps the answer
    exact for polynomial normal forms.
    """
    n = M.n
    m = k * n
    pts = [ComplexRational.coerce(x) for x in point]

    def var(i):
        g = [ZERO] * m
        g[i] = ONE
        return (pts[i], g)

    def rec(kk: int, conj: bool, block: int):
        if kk == 0:
            return [(ZERO, [ZERO] * m) for _ in range(M.N)]
        x = [var(block * n + i) for i in range(n)]
        inner = rec(kk - 1, not conj, block + 1)
        qs = [q.bar_conjugate() for q in M.Q] if conj else list(M.Q)
        return x + [_eval_jet(q, x + inner) for q in qs]

    out = rec(k, False, 0)
    return [v for v, _ in out], [g for _, g in out]


def find_rank_point(M: GenericSubmanifoldNF, k1: int, seed: int = 17, tries: int = 24) -> RankPoint | None:
    """Search ``v^{2 k1}(z0, xi0) = 0`` with Jacobian rank ``N`` on collapse points.

    Candidates put ``z = 0`` and every ``chi^j`` equal, with free ``z^j``;
    reality then forces the Segre chain back to the origin.  Every candidate
    is checked exactly.
    """
    k = 2 * k1
    n = M.n
    rng = random.Random(seed)
    for _ in range(tries):
        c = [cq(Fraction(rng.randint(1, 3), rng.randint(1, 2))) for _ in range(n)]
        pt = []
        for b in range(k):
            if b == 0:
                pt.extend([ZERO] * n)
            elif b % 2 == 1:
                pt.extend(c)
            else:
                pt.extend(cq(Fraction(rng.randint(-3, 3), rng.randint(1, 2))) for _ in range(n))
        val, jac = segre_jet(M, k, pt)
        if any(not v.is_zero() for v in val):
            continue
        r, _, _ = linalg.rank_profile(jac)
        if r == M.N:
            return RankPoint(tuple(pt), k, r)
    return None


# -- essential finiteness -------------------------------------------------------


def split_by_block(f: TruncatedSeries, block: Sequence[int]) -> dict:
    """``{alpha: coefficient series of block^alpha}``; coefficient precision drops by ``|alpha|``."""
    keep = [i for i in range(f.nvars) if i not in set(block)]
    groups: dict = {}
    for e, c in f.terms.items():
        alpha = tuple(e[i] for i in block)
        groups.setdefault(alpha, {})[tuple(e[i] for i in keep)] = c
    return {
        a: TruncatedSeries(len(keep), f.precision - sum(a), t)
        for a, t in sorted(groups.items(), key=lambda kv: grlex_key(kv[0]))
    }


@dataclass
class EssentialGenerator:
    j: int
    alpha: tuple
    series: TruncatedSeries


def essential_generators(M: GenericSubmanifoldNF, alpha_bound: int | None = None) -> list[EssentialGenerator]:
    """``bar q_{j alpha}(z, 0)``: coefficients of ``chi^alpha`` in ``bar Q_j(chi, z, 0)``."""
    n = M.n
    bound = (2 * M.precision) // 3 if alpha_bound is None else alpha_bound
    out = []
    for j, qb in enumerate(M.q_bar()):
        at0 = qb.set_zero(range(2 * n, 2 * n + M.d)).restrict(list(range(2 * n)))
        for alpha, coeff in split_by_block(at0, range(n)).items():
            if sum(alpha) == 0 or sum(alpha) > bound:
                continue
            out.append(EssentialGenerator(j, alpha, coeff))
    return out


def essential_generators_general(defining: DefiningData, alpha_bound: int) -> list[EssentialGenerator]:
    """``c_{l alpha}(Z) = X^alpha rho_l |_{zeta = 0}`` with ``X_j`` the CR basis frozen at ``Z = 0``."""
    N = defining.N
    L = cr_basis_from_defining(defining)
    holo = list(range(N))
    X = []
    for field_ in L:
        coeffs = [None if c is None else c.set_zero(holo) for c in field_.coeffs]
        X.append(FormalVectorField(coeffs, "0,1"))
    out = []
    for l, rho in enumerate(defining.rho):
        for t in range(alpha_bound + 1):
            for alpha in monomials(defining.n, t):
                s = rho
                for j, a in enumerate(alpha):
                    for _ in range(a):
                        s = X[j].apply(s)
                c = s.set_zero(range(N, 2 * N)).restrict(holo)
                out.append(EssentialGenerator(l, alpha, c))
    return out


@dataclass
class EssFinReport:
    staircase: StaircaseReport
    generators: list
    curve: CurveWitness | None = None

    @property
    def status(self) -> str:
        return self.staircase.status

    @property
    def essentially_finite(self) -> bool:
        return self.staircase.finite


def essential_finiteness_test(
    M: GenericSubmanifoldNF, alpha_bound: int | None = None, degree_bound: int | None = None
) -> EssFinReport:
    gens = essential_generators(M, alpha_bound)
    nonzero = [g.series for g in gens if not g.series.is_zero()]
    bound = M.precision if degree_bound is None else degree_bound
    if not nonzero:
        z = TruncatedSeries.zero(M.n, M.precision)
        return EssFinReport(StaircaseReport(False, bound), gens, _curve_or_none([z]))
    bound = min([bound] + [g.precision for g in nonzero])
    stair = staircase_codim(nonzero, bound)
    report = EssFinReport(stair, gens)
    if not stair.finite:
        report.curve = _curve_or_none([g.truncate(bound) for g in nonzero])
    return report


def _curve_or_none(gens: list) -> CurveWitness | None:
    return find_monomial_curve(gens, exponent_bound=3, breadth=6)


# -- defining data and normalization --------------------------------------------


def defining_from_normal_form(M: GenericSubmanifoldNF) -> DefiningData:
    """Real defining series ``(w - Q - tau + bar Q(chi, z, w)) / 4i``."""
    q, qb = M.q_ambient(), M.q_bar_ambient()
    scale = cq(0, 4).inverse()
    rho = []
    for j in range(M.d):
        w = M.ambient_var(M.w_idx[j])
        tau = M.ambient_var(M.tau_idx[j])
        rho.append((w - q[j] - tau + qb[j]).scale(scale))
    return DefiningData(M.N, M.d, SeriesTuple(rho), M.name)


@dataclass
class CoordinateChange:
    permutation: list
    straighten: list | None
    w_map: SeriesTuple


def normalize(defining: DefiningData) -> tuple[GenericSubmanifoldNF, CoordinateChange]:
    """Normal coordinates for a real defining system.

    Steps: permute ``Z`` so the last ``d`` coordinates can be solved for;
    solve ``rho = 0`` for ``w``; straighten ``w`` so that the reduced series
    restricts to ``tau`` on ``z = chi = 0``; re-coordinate ``w`` by the
    inverse of ``w -> Qt(z, 0, w)``.  Normality and reality are checked at
    the end.
    """
    defining.validate()
    N, d, n = defining.N, defining.d, defining.n
    p = defining.precision
    D0 = defining.differential()
    perm = None
    for cols in itertools.combinations(range(N), d):
        sub = [[row[c] for c in cols] for row in D0]
        if linalg.det(sub) != ZERO:
            if list(cols) == list(range(n, N)):
                perm = list(range(N))
                break
            if perm is None:
                rest = [i for i in range(N) if i not in cols]
                perm = rest + list(cols)
    order = perm + [N + i for i in perm]
    rho = [r.embed(2 * N, [order.index(i) for i in range(2 * N)]) for r in defining.rho]
    # ring (z, w, chi, tau); solve for w
    w_vars = list(range(n, N))
    sol = implicit_solve(rho, w_vars)  # series in (z, chi, tau)
    Qt = list(sol)
    m = 2 * n + d

    straighten = None
    q0 = [q.set_zero(range(2 * n)) for q in Qt]
    taus = [TruncatedSeries.variable(2 * n + j, m, p) for j in range(d)]
    if any(not (a - b).is_zero() for a, b in zip(q0, taus)):
        Qt, straighten = _straighten(Qt, n, d, p)

    # psi: inverse of w' -> Qt(z, 0, w') in (z, y)
    ring = n + 2 * d  # (z, y, w')
    subs = [TruncatedSeries.variable(i, ring, p) for i in range(n)]
    subs += [TruncatedSeries.zero(ring, p) for _ in range(n)]
    subs += [TruncatedSeries.variable(n + d + j, ring, p) for j in range(d)]
    eqs = [TruncatedSeries.variable(n + j, ring, p) - Qt[j].compose(subs) for j in range(d)]
    psi = list(implicit_solve(eqs, list(range(n + d, n + 2 * d))))  # in (z, y)
    Qtb = [q.bar_conjugate() for q in Qt]
    zvar = [TruncatedSeries.variable(i, m, p) for i in range(n)]
    chivar = [TruncatedSeries.variable(n + i, m, p) for i in range(n)]
    zeros = [TruncatedSeries.zero(m, p) for _ in range(n)]
    # tau_old = bar Qt(chi, 0, tau')
    tau_old = [q.compose(chivar + zeros + taus) for q in Qtb]
    inner = [q.compose(zvar + chivar + tau_old) for q in Qt]
    Q = [s.compose(zvar + inner) for s in psi]
    M = GenericSubmanifoldNF(n, d, SeriesTuple(Q), defining.name)
    M.validate()
    return M, CoordinateChange(perm, straighten, SeriesTuple(psi))


def _straighten(Qt: list, n: int, d: int, p: int) -> tuple[list, list]:
    """Replace ``w`` by ``theta(w) = A w + bar A qbar(w)`` so that ``Qt(0, 0, tau) = tau``.

    Here ``q(tau) = Qt(0, 0, tau)`` and ``qbar`` is its conjugate series,
    which is the inverse of ``q`` by reality.  ``A`` runs over ``c I`` for a
    few unit scalars ``c`` until ``theta`` is invertible.
    """
    m = 2 * n + d
    taus = [TruncatedSeries.variable(2 * n + j, m, p) for j in range(d)]
    q = [s.set_zero(range(2 * n)).restrict(list(range(2 * n, m))) for s in Qt]  # in tau
    qbar = [s.bar_conjugate() for s in q]
    for c in (ONE, I, cq(1, 1), cq(1, -1), cq(2, 1)):
        theta = [qbar[j].scale(c.conjugate()) + TruncatedSeries.variable(j, d, p).scale(c) for j in range(d)]
        lin = [[t.derive(i).constant_term() for i in range(d)] for t in theta]
        if linalg.inverse(lin) is None:
            continue
        thetab = [t.bar_conjugate() for t in theta]
        # inverse of bar theta, then new Q = theta(Qt(z, chi, bar theta^{-1}(tau')))
        ring = 2 * d
        eqs = [
            TruncatedSeries.variable(j, ring, p)
            - thetab[j].compose([TruncatedSeries.variable(d + i, ring, p) for i in range(d)])
            for j in range(d)
        ]
        inv = list(implicit_solve(eqs, list(range(d, 2 * d))))  # in y
        tau_old = [s.compose(taus) for s in inv]
        zc = [TruncatedSeries.variable(i, m, p) for i in range(2 * n)]
        newQ = [t.compose([s.compose(zc + tau_old) for s in Qt]) for t in theta]
        return newQ, [str(c)]
    raise ArithmeticError("could not straighten the transversal coordinate")
