"""Ideals in truncated power series rings.

Membership is decided by bounded-degree cofactor linear algebra, finite
codimension by a monomial staircase, and elimination by resultants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from . import linalg
from .coeffs import ONE, ComplexRational, cq
from .series import (
    PolyInX,
    SeriesTuple,
    TruncatedSeries,
    grlex_key,
    monomials,
    monomials_upto,
    series_det,
    weierstrass_prepare,
)


@dataclass
class SeriesIdeal:
    generators: SeriesTuple

    def __post_init__(self):
        if not isinstance(self.generators, SeriesTuple):
            self.generators = SeriesTuple(self.generators)
        if len(self.generators) == 0:
            raise ValueError("an ideal needs at least one generator")

    @property
    def nvars(self) -> int:
        return self.generators.nvars

    @property
    def precision(self) -> int:
        return self.generators.precision


@dataclass
class MemberWitness:
    cofactors: list
    order: int

    def verify(self, f: TruncatedSeries, ideal: SeriesIdeal) -> bool:
        total = TruncatedSeries.zero(f.nvars, f.precision)
        for c, g in zip(self.cofactors, ideal.generators):
            total = total + c * g
        return (total - f).is_zero(self.order)


@dataclass
class StaircaseReport:
    finite: bool
    bound: int
    codim: int | None = None
    basis: list = field(default_factory=list)
    level: int | None = None
    leading: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return "finite" if self.finite else "undetermined"


@dataclass
class CurveWitness:
    components: list
    order: int

    def exponents(self) -> list:
        return [c.order() for c in self.components]


# -- membership -----------------------------------------------------------------


def _active(series: Sequence[TruncatedSeries]) -> list[int]:
    used = set()
    for s in series:
        used |= s.variables_used()
    return sorted(used)


def membership_bounded(f: TruncatedSeries, ideal: SeriesIdeal, cofactor_degree: int) -> MemberWitness | None:
    """Find cofactors of degree at most ``cofactor_degree`` with ``sum c_k g_k = f``.

    Returns ``None`` when no such cofactors exist at this bound, which is
    not a disproof of membership.
    """
    gens = list(ideal.generators)
    if f.nvars != ideal.nvars:
        raise ValueError("f and the ideal live in different rings")
    active = _active(gens + [f])
    D = min(f.precision, ideal.precision)
    top = max((g.max_degree() for g in gens), default=0)
    order = min(D, cofactor_degree + max(top, 0))
    gens_r = [g.restrict(active).truncate(order) for g in gens]
    f_r = f.restrict(active).truncate(order)
    m = len(active)
    ech = linalg.Echelon(track=True)
    for k, g in enumerate(gens_r):
        if g.is_zero():
            continue
        lo = g.order()
        for mu in monomials_upto(m, min(cofactor_degree, order - lo)):
            prod = {}
            for e, c in g.terms.items():
                ne = tuple(a + b for a, b in zip(e, mu))
                if sum(ne) <= order:
                    prod[grlex_key(ne)] = c
            if prod:
                ech.add(prod, (k, mu))
    rem, combo = ech.reduce({grlex_key(e): c for e, c in f_r.terms.items()})
    if rem:
        return None
    nv = f.nvars
    buckets: list[dict] = [{} for _ in gens]
    for (k, mu), c in combo.items():
        full = [0] * nv
        for i, a in zip(active, mu):
            full[i] = a
        buckets[k][tuple(full)] = c
    cofactors = [TruncatedSeries(nv, D, b) for b in buckets]
    witness = MemberWitness(cofactors, order)
    if not witness.verify(f, ideal):
        raise ArithmeticError("membership witness failed re-verification")
    return witness


# -- staircase ------------------------------------------------------------------


def staircase_codim(generators: Sequence[TruncatedSeries], degree_bound: int) -> StaircaseReport:
    """Codimension of the ideal via leading monomials of bounded-degree multiples.

    Leading monomials are taken lowest-first (degree, then lexicographic),
    the local ordering in which a captured full degree level certifies, by
    Nakayama, that every higher monomial lies in the ideal.
    """
    gens = [g for g in generators if not g.is_zero(degree_bound)]
    if not gens:
        return StaircaseReport(False, degree_bound)
    nv = gens[0].nvars
    for g in gens:
        if not g.constant_term().is_zero():
            raise ValueError("staircase generators must vanish at the origin")
    bound = min(degree_bound, min(g.precision for g in gens))
    ech = linalg.Echelon()
    for g in gens:
        gt = g.truncate(bound)
        lo = gt.order()
        for mu in monomials_upto(nv, bound - lo):
            row = {}
            for e, c in gt.terms.items():
                ne = tuple(a + b for a, b in zip(e, mu))
                if sum(ne) <= bound:
                    row[grlex_key(ne)] = c
            if row:
                ech.add(row)
    pivots = ech.pivot_columns()
    level = None
    for m in range(1, bound + 1):
        if all(grlex_key(e) in pivots for t in range(m, bound + 1) for e in monomials(nv, t)):
            level = m
            break
    leading = sorted(k[1] for k in pivots)
    if level is None:
        return StaircaseReport(False, bound, leading=leading)
    basis = [e for e in monomials_upto(nv, level - 1) if grlex_key(e) not in pivots]
    return StaircaseReport(True, bound, len(basis), basis, level, leading)


# -- resultants and elimination -------------------------------------------------


def poly_divmod(p2: PolyInX, p1: PolyInX) -> tuple[PolyInX, PolyInX]:
    """Division by a monic polynomial: ``p2 = q p1 + r`` with ``deg r < deg p1``."""
    if not p1.monic:
        raise ValueError("divisor must be monic")
    n = p1.degree
    rem = list(p2.coeffs)
    zero = TruncatedSeries.zero(p1.nvars, min(p1.precision, p2.precision))
    quo = [zero] * max(len(rem) - n, 1)
    for k in range(len(rem) - 1, n - 1, -1):
        c = rem[k]
        if c.is_zero():
            continue
        quo[k - n] = c
        for j in range(n + 1):
            rem[k - n + j] = rem[k - n + j] - c * p1.coeffs[j]
    rem = rem[:n] if n > 0 else [zero]
    return PolyInX(quo), PolyInX(rem or [zero])


def sylvester_matrix(p: PolyInX, q: PolyInX) -> list[list[TruncatedSeries]]:
    n, m = p.degree, q.degree
    size = n + m
    zero = TruncatedSeries.zero(p.nvars, min(p.precision, q.precision))
    rows = []
    for i in range(m):
        row = [zero] * size
        for j, c in enumerate(reversed(p.coeffs)):
            row[i + j] = c
        rows.append(row)
    for i in range(n):
        row = [zero] * size
        for j, c in enumerate(reversed(q.coeffs)):
            row[i + j] = c
        rows.append(row)
    return rows


def resultant_X(p1: PolyInX, p2: PolyInX) -> TruncatedSeries:
    """``Res_X(p1, p2)``, equal to the product of ``p2`` over the roots of the monic ``p1``."""
    if not p1.monic:
        raise ValueError("resultant_X needs a monic first argument")
    _, r = poly_divmod(p2, p1)
    n = p1.degree
    if n == 0:
        return TruncatedSeries.constant(ONE, p1.nvars, min(p1.precision, p2.precision))
    if r.degree == 0:
        return r.coeffs[0] ** n
    return series_det(sylvester_matrix(p1, r))


@dataclass
class Elimination:
    result: TruncatedSeries
    resultant: TruncatedSeries
    leading_exponent: int
    shape_ok: bool


def eliminate_pair(
    p1: PolyInX, p2: PolyInX, y_var: int, z_second: Sequence[int], check: bool = True
) -> Elimination:
    """Eliminate ``X`` from ``p1 = X^N + ...`` and ``p2 = Y^M + K``.

    Coefficients of both polynomials are series in a shared ring in which
    ``y_var`` is ``Y`` and ``z_second`` lists the variables that must be set
    to zero to kill ``K``.  The result is ``Res_X(p1, p2)^N``.
    """
    if not p1.monic:
        raise ValueError("first polynomial must be monic in X")
    N = p1.degree
    nv = p1.nvars
    if check:
        for c in p1.coeffs[:-1]:
            if not c.constant_term().is_zero():
                raise ValueError("lower coefficients of the monic polynomial must vanish at 0")
    flat = p2.to_series(nv)  # X appended as last variable
    killed = flat.set_zero(z_second)
    axis = killed.restrict([y_var])
    M = axis.order()
    if M is None:
        raise ValueError("second polynomial has no pure Y term once Z'' = 0")
    if check:
        pure = TruncatedSeries.monomial([M if i == y_var else 0 for i in range(nv + 1)], killed.precision)
        if not (killed - pure).is_zero():
            raise ValueError("second polynomial is not Y^M + K with K vanishing on Z'' = 0")
    res = resultant_X(p1, p2)
    r = res ** N
    lead = M * N * N
    target = TruncatedSeries.monomial([lead if i == y_var else 0 for i in range(nv)], r.precision)
    shape_ok = (r.set_zero(z_second) - target).is_zero()
    return Elimination(r, res, lead, shape_ok)


# -- monic systems --------------------------------------------------------------


@dataclass
class MonicSystem:
    polynomials: list
    power: int
    witnesses: list
    staircase: StaircaseReport


def monicize_system(
    f: Sequence[TruncatedSeries], p: int, q: int, degree_bound: int | None = None, certify: bool = True
) -> MonicSystem:
    """Monic polynomials ``P_j(u, v_j)`` in the ideal of ``f``.

    Variables are ``(u_1..u_p, v_1..v_q)``.  Each ``P_j`` is returned as a
    :class:`PolyInX` in ``v_j`` whose coefficients are series in ``u``.
    With ``certify`` each output gets a bounded membership witness; callers
    that verify the outputs another way can skip this costly step.
    """
    f = list(f)
    if not any(not g.is_zero() for g in f):
        raise ValueError("all equations vanish")
    nv = p + q
    D = min(g.precision for g in f)
    bound = D if degree_bound is None else degree_bound
    fixed = [g.set_zero(range(p)).restrict(list(range(p, nv))) for g in f]
    stair = staircase_codim(fixed, bound)
    if not stair.finite:
        raise ValueError(f"codimension of the fibre ideal undetermined up to degree {stair.bound}")
    v_ideal = SeriesIdeal(SeriesTuple(fixed))
    power = None
    cof_rows = None
    lo = min(g.order() for g in fixed if not g.is_zero())
    for N in range(1, stair.level + 1):
        rows = []
        for j in range(q):
            target = TruncatedSeries.monomial([N if i == j else 0 for i in range(q)], D)
            w = membership_bounded(target, v_ideal, D - lo)
            if w is None:
                break
            rows.append(w.cofactors)
        else:
            power, cof_rows = N, rows
            break
    if power is None:
        raise ArithmeticError("no pure power of the fibre variables found in the fibre ideal")
    positions = list(range(p, nv))
    shaped = []
    for j in range(q):
        acc = TruncatedSeries.zero(nv, D)
        for a, g in zip(cof_rows[j], f):
            acc = acc + a.embed(nv, positions) * g
        shaped.append(acc)

    ideal = SeriesIdeal(SeriesTuple(f))
    polys, witnesses = [], []
    for j in range(q):
        order = [i for i in range(q) if i != j] + [j]
        P = _eliminate_chain([shaped[i] for i in order], [p + i for i in order], p)
        polys.append(P)
        if not certify:
            continue
        flat = P.to_series(p).embed(nv, list(range(p)) + [p + j])
        w = membership_bounded(flat, ideal, D - min(g.order() for g in f if not g.is_zero()))
        if w is None:
            raise ArithmeticError(f"membership of the monic polynomial for v_{j + 1} not certified")
        witnesses.append(w)
    return MonicSystem(polys, power, witnesses, stair)


def _eliminate_chain(system: list, v_order: list, p: int) -> PolyInX:
    """Eliminate the leading fibre variables one by one; keep the last one.

    ``system`` lives in the full ring ``(u, v)``.  Each step prepares the
    first series in its distinguished variable and eliminates that variable
    from the rest.
    """
    nv = system[0].nvars
    u_vars = list(range(p))
    if len(system) == 1:
        last = v_order[0]
        live = sorted(u_vars + [last])
        reduced = system[0].restrict(live)
        prep = weierstrass_prepare(reduced, live.index(last))
        return prep.monic
    x = v_order[0]
    prep = weierstrass_prepare(system[0], x)
    keep = [i for i in range(nv) if i != x]
    p1 = prep.monic
    rest = []
    for g, y in zip(system[1:], v_order[1:]):
        p2 = PolyInX.from_series(g, x)
        elim = eliminate_pair(p1, p2, keep.index(y), u_vars, check=False)
        rest.append(elim.result.embed(nv, keep))
    return _eliminate_chain(rest, v_order[1:], p)


# -- curves ---------------------------------------------------------------------


def verify_curve(generators: Sequence[TruncatedSeries], curve: CurveWitness, order: int) -> bool:
    comps = [c.with_precision(order) for c in curve.components]
    for c in comps:
        if not c.constant_term().is_zero():
            raise ValueError("curve must pass through the origin")
    for g in generators:
        if not g.with_precision(order).compose(comps).is_zero(order):
            return False
    return True


def coefficient_candidates(breadth: int) -> list[ComplexRational]:
    base = [cq(1), cq(-1), cq(2), cq(-2), cq(0, 1), cq(0, -1), cq(1, 1), cq(1, -1),
            cq("1/2"), cq("-1/2"), cq(3), cq(-3), cq(0, 2), cq(0, -2), cq(-1, 1), cq(-1, -1)]
    return base[: max(1, breadth)]


def find_monomial_curve(
    generators: Sequence[TruncatedSeries], exponent_bound: int = 4, breadth: int = 8
) -> CurveWitness | None:
    """Search curves ``mu_j(s) = c_j s^{e_j}`` annihilating every generator.

    Supports are tried smallest first and exponent vectors by total size.
    The first nonzero coefficient is normalised to 1; the others run over a
    fixed candidate list.  Only verified curves are returned.
    """
    gens = list(generators)
    nv = gens[0].nvars
    D = min(g.precision for g in gens)
    cands = coefficient_candidates(breadth)
    for size in range(1, nv + 1):
        for support in itertools.combinations(range(nv), size):
            exps = sorted(itertools.product(range(1, exponent_bound + 1), repeat=size), key=grlex_key)
            for ex in exps:
                if size > 1 and _gcd(ex) != 1:
                    continue
                order = min(ex) * (D + 1) - 1
                for coeffs in itertools.product(cands, repeat=size - 1):
                    comps = []
                    cs = (ONE,) + coeffs
                    for i in range(nv):
                        if i in support:
                            k = support.index(i)
                            comps.append(TruncatedSeries(1, order, {(ex[k],): cs[k]}))
                        else:
                            comps.append(TruncatedSeries.zero(1, order))
                    curve = CurveWitness(comps, order)
                    if verify_curve(gens, curve, order):
                        return curve
    return None


def _gcd(values) -> int:
    return math.gcd(*values)
