"""Formal holomorphic maps between manifolds in normal coordinates."""

from __future__ import annotations

from dataclasses import dataclass

from . import linalg
from .coeffs import ONE
from .geometry import FormalVectorField, GenericSubmanifoldNF, essential_finiteness_test, reduce_mod_M
from .ideal import CurveWitness, StaircaseReport, find_monomial_curve, staircase_codim
from .series import (
    SeriesTuple,
    TruncatedSeries,
    generic_rank,
    monomials_upto,
    series_det,
)


@dataclass
class FormalMapNF:
    """``H = (F, G)`` with ``F`` the ``n'`` and ``G`` the ``d'`` components, all in ``(z, w)``."""

    F: SeriesTuple
    G: SeriesTuple
    source: tuple
    target: tuple
    name: str = ""

    def __post_init__(self):
        self.F = self.F if isinstance(self.F, SeriesTuple) else SeriesTuple(self.F)
        self.G = self.G if isinstance(self.G, SeriesTuple) else SeriesTuple(self.G)
        n, d = self.source
        if len(self.F) != self.target[0] or len(self.G) != self.target[1]:
            raise ValueError("component counts do not match the target dimensions")
        for c in self.components:
            if c.nvars != n + d:
                raise ValueError("map components must live in the source (z, w) variables")
            if not c.constant_term().is_zero():
                raise ValueError("map components must vanish at the origin")

    @property
    def components(self) -> list:
        return list(self.F) + list(self.G)

    @property
    def precision(self) -> int:
        return min(c.precision for c in self.components)

    def jet(self, beta) -> list:
        """``d^beta H(0)`` for every component."""
        return [c.derive_multi(beta).constant_term() for c in self.components]

    def with_precision(self, precision: int) -> "FormalMapNF":
        return FormalMapNF(
            SeriesTuple(c.with_precision(precision) for c in self.F),
            SeriesTuple(c.with_precision(precision) for c in self.G),
            self.source, self.target, self.name,
        )

    def truncate(self, precision: int) -> "FormalMapNF":
        return FormalMapNF(self.F.truncate(precision), self.G.truncate(precision), self.source, self.target, self.name)


def identity_map(n: int, d: int, precision: int) -> FormalMapNF:
    N = n + d
    v = [TruncatedSeries.variable(i, N, precision) for i in range(N)]
    return FormalMapNF(SeriesTuple(v[:n]), SeriesTuple(v[n:]), (n, d), (n, d), "identity")


def compose_maps(first: FormalMapNF, second: FormalMapNF) -> FormalMapNF:
    """``second o first``."""
    if first.target != second.source:
        raise ValueError("maps are not composable")
    subs = first.components
    F = SeriesTuple(c.compose(subs) for c in second.F)
    G = SeriesTuple(c.compose(subs) for c in second.G)
    return FormalMapNF(F, G, first.source, second.target)


def _check_dims(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF):
    if H.source != (M.n, M.d) or H.target != (Mp.n, Mp.d):
        raise ValueError(
            f"dimension mismatch: map {H.source}->{H.target}, manifolds {(M.n, M.d)}->{(Mp.n, Mp.d)}"
        )


def ambient_map(M: GenericSubmanifoldNF, H: FormalMapNF) -> tuple[list, list]:
    """``H(Z)`` and ``bar H(zeta)`` as series in the ambient ring of ``M``."""
    N = M.N
    Zpos = list(range(N))
    zpos = list(range(N, 2 * N))
    hz = [c.embed(2 * N, Zpos) for c in H.components]
    hzeta = [c.bar_conjugate().embed(2 * N, zpos) for c in H.components]
    return hz, hzeta


@dataclass
class MapCheckReport:
    sends: bool
    order: int
    residuals: list

    def first_defect(self):
        for j, r in enumerate(self.residuals):
            if not r.is_zero():
                return j, r.sorted_terms()[0]
        return None


def sends_residuals(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF) -> list:
    """``bar G(chi, tau) - bar Q'(bar F, F, G)`` reduced modulo I(M)."""
    _check_dims(M, Mp, H)
    hz, hzeta = ambient_map(M, H)
    npr, dpr = H.target
    F, G = hz[:npr], hz[npr:]
    Fb, Gb = hzeta[:npr], hzeta[npr:]
    out = []
    for j, qb in enumerate(Mp.q_bar()):
        value = qb.compose(Fb + F + G)
        out.append(reduce_mod_M(Gb[j] - value, M))
    return out


def check_sends(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF) -> MapCheckReport:
    res = sends_residuals(M, Mp, H)
    order = min([r.precision for r in res] + [H.precision, M.precision])
    return MapCheckReport(all(r.is_zero(order) for r in res), order, res)


# -- Segre homomorphism ---------------------------------------------------------


def segre_restriction(H: FormalMapNF) -> SeriesTuple:
    """``z -> F(z, 0)``."""
    n, d = H.source
    return SeriesTuple(c.set_zero(range(n, n + d)).restrict(list(range(n))) for c in H.F)


@dataclass
class SegreHomReport:
    status: str  # "injective", "not_injective", "inconclusive"
    evidence: str
    relation: TruncatedSeries | None = None
    order: int | None = None


def find_relation(f: SeriesTuple, degree_bound: int) -> TruncatedSeries | None:
    """Lowest-degree ``h`` with ``h(f) = 0`` through the precision of ``f``.

    The first kernel vector at the first degree with a nontrivial kernel is
    returned, scaled so that its lowest-degree term that comes first
    lexicographically has coefficient 1.
    """
    m = len(f)
    D = f.precision
    nv = f.nvars
    cache: dict = {}

    def power(mu):
        if mu not in cache:
            acc = TruncatedSeries.constant(ONE, nv, D)
            for c, k in zip(f, mu):
                if k:
                    acc = acc * (c ** k)
            cache[mu] = acc
        return cache[mu]

    for t in range(1, degree_bound + 1):
        cols = monomials_upto(m, t, start=1)
        rows: dict = {}
        for mu in cols:
            for e, c in power(mu).terms.items():
                rows.setdefault(e, {})[mu] = c
        ker = linalg.kernel(list(rows.values()), cols)
        if ker:
            vec = ker[0]
            lead = min(vec, key=lambda mu: (sum(mu), tuple(-a for a in mu)))
            scale = vec[lead].inverse()
            return TruncatedSeries(m, D, {mu: c * scale for mu, c in vec.items()})
    return None


def segre_injectivity_test(
    M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF, degree_bound: int = 4, seed: int = 17
) -> SegreHomReport:
    _check_dims(M, Mp, H)
    f = segre_restriction(H)
    rank = generic_rank(f, seed=seed)
    if rank.rank == len(f):
        return SegreHomReport("injective", f"generic rank {rank.rank} equals target CR dimension")
    fin = finite_map_test(f, f.precision)
    if fin.finite:
        return SegreHomReport("injective", f"z -> F(z,0) is finite of codimension {fin.staircase.codim}")
    h = find_relation(f, degree_bound)
    if h is not None:
        check = h.compose(list(f))
        if not check.is_zero():
            raise ArithmeticError("relation failed re-verification")
        return SegreHomReport("not_injective", "relation found", h, check.precision)
    return SegreHomReport("inconclusive", f"no relation of degree <= {degree_bound}, rank {rank.rank}")


@dataclass
class FiniteMapReport:
    staircase: StaircaseReport
    curve: CurveWitness | None = None

    @property
    def finite(self) -> bool:
        return self.staircase.finite


def finite_map_test(K: SeriesTuple, degree_bound: int) -> FiniteMapReport:
    comps = list(K)
    stair = staircase_codim(comps, degree_bound)
    report = FiniteMapReport(stair)
    if not stair.finite:
        report.curve = find_monomial_curve(comps, exponent_bound=3, breadth=6)
    return report


@dataclass
class DegeneracyReport:
    degenerate: bool
    determinant: TruncatedSeries


def total_degeneracy_test(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF) -> DegeneracyReport:
    if M.n != Mp.n:
        raise ValueError("total degeneracy needs equal CR dimensions")
    f = segre_restriction(H)
    jac = [[c.derive(j) for j in range(M.n)] for c in f]
    det = series_det(jac)
    return DegeneracyReport(det.is_zero(), det)


def kernel_vector_field(F: SeriesTuple, max_degree: int | None = None) -> FormalVectorField | None:
    """Lowest-degree nonzero ``X = sum a_i d/dx_i`` with ``X F_j = 0`` through ``D - 1``."""
    m = F.nvars
    D = F.precision
    bound = D // 2 if max_degree is None else max_degree
    partials = [[c.derive(i) for i in range(m)] for c in F]
    for t in range(bound + 1):
        cols = [(mu, i) for mu in monomials_upto(m, t) for i in range(m)]
        rows: dict = {}
        for j, comp in enumerate(F):
            for mu, i in cols:
                dp = partials[j][i]
                for e, c in dp.terms.items():
                    ne = tuple(a + b for a, b in zip(e, mu))
                    if sum(ne) <= D - 1:
                        rows.setdefault((j, ne), {})[(mu, i)] = c
        ker = linalg.kernel(list(rows.values()), cols)
        if ker:
            coeffs = [dict() for _ in range(m)]
            for (mu, i), c in ker[0].items():
                coeffs[i][mu] = c
            field_ = FormalVectorField([TruncatedSeries(m, D, c) for c in coeffs], "1,0")
            for comp in F:
                if not field_.apply(comp).is_zero():
                    raise ArithmeticError("kernel field failed re-verification")
            return field_
    return None


# -- hypersurfaces --------------------------------------------------------------


@dataclass
class Dichotomy:
    outcome: str  # "zero_map", "segre_injective", "violation", "inconclusive"
    evidence: str
    detail: object = None


def hypersurface_dichotomy(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF) -> Dichotomy:
    if M.d != 1 or Mp.d != 1:
        raise ValueError("precondition failed: both manifolds must be hypersurfaces")
    ess = essential_finiteness_test(M)
    if not ess.essentially_finite:
        raise ValueError("precondition failed: source is not certified essentially finite")
    sends = check_sends(M, Mp, H)
    if not sends.sends:
        raise ValueError("precondition failed: map does not send M into M'")
    G = H.G[0]
    if G.is_zero():
        hz, hzeta = ambient_map(M, H)
        npr = H.target[0]
        zeros = [TruncatedSeries.zero(2 * M.N, M.precision)]
        lhs = Mp.Q[0].compose(hz[:npr] + hzeta[:npr] + zeros)
        if not reduce_mod_M(lhs, M).is_zero():
            return Dichotomy("violation", "G vanishes but Q'(F, bar F, 0) does not")
        if all(c.is_zero() for c in H.F):
            return Dichotomy("zero_map", "H vanishes identically")
        return Dichotomy("violation", "G vanishes while F does not: M' contains the formal curve F(z, w)", H.F)
    fin = finite_map_test(segre_restriction(H), H.precision)
    if fin.finite:
        return Dichotomy(
            "segre_injective", f"verified via finiteness test: codimension {fin.staircase.codim}", fin
        )
    return Dichotomy("inconclusive", f"z -> F(z,0) not certified finite up to degree {fin.staircase.bound}", fin)
