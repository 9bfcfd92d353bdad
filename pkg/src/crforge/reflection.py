"""Reflection identities and the jet-determination ladders built on them.

The pipeline runs in three rings:

* the symbol ring ``(a, b, F)``: ``a_gamma`` and ``b_gamma`` stand for
  ``L^gamma bar F - L^gamma bar F(0)`` and ``L^gamma bar G``, ``F`` for the
  holomorphic components of the map;
* the jet ring ``(Z, zeta, a')`` in which ``a'_{delta, c}`` stands for
  ``d^delta bar H_c(zeta) - d^delta bar H_c(0)``;
* the ambient ring ``(Z, zeta)`` or a Segre parameter ring once jets of a
  concrete map are substituted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import linalg
from .coeffs import ONE, ComplexRational
from .geometry import (
    FormalVectorField,
    GenericSubmanifoldNF,
    cr_basis,
    essential_finiteness_test,
    finite_type_test,
    ideal_generators,
    reduce_mod_M,
    segre_substitution,
    split_by_block,
    tangential_frame_for,
)
from .ideal import StaircaseReport, eliminate_pair, monicize_system, staircase_codim, sylvester_matrix
from .mapping import FormalMapNF, _check_dims, check_sends, segre_injectivity_test
from .series import (
    PolyInX,
    TruncatedSeries,
    box,
    factorial_multi,
    grlex_key,
    leq,
    monomials_upto,
    series_det,
    weierstrass_prepare,
)

T = TruncatedSeries


class HypothesisFailure(ValueError):
    """An input fails a hypothesis the construction relies on."""


def _add(a: Sequence[int], b: Sequence[int]) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: Sequence[int], b: Sequence[int]) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def _unit(i: int, n: int) -> tuple:
    return tuple(1 if k == i else 0 for k in range(n))


def _pad(gamma: Sequence[int], length: int) -> tuple:
    return tuple(gamma) + (0,) * (length - len(gamma))


# -- expansion of the target's conjugate defining series --------------------------


@dataclass
class ReflectionExpansion:
    """``bar Q'(chi', z', 0) = sum_alpha bar Q'_alpha(z') chi'^alpha`` and the ``w'`` remainder.

    ``coefficients[alpha][l]`` is a series in ``z'``; ``remainder[l][m]`` is
    a series in ``(chi', z', w')`` with
    ``bar Q'_l(chi', z', w') - bar Q'_l(chi', z', 0) = sum_m w'_m remainder[l][m]``.
    ``composed`` holds ``bar Q'_alpha(F)`` when a map was supplied.
    """

    n: int
    d: int
    coefficients: dict
    remainder: list
    composed: dict | None = None

    def reconstruct(self, l: int) -> TruncatedSeries:
        """``sum_alpha bar Q'_{l alpha}(z') chi'^alpha`` in ``(chi', z')``."""
        n = self.n
        acc = T.zero(2 * n, min(c[l].precision + sum(a) for a, c in self.coefficients.items()))
        for alpha, comps in self.coefficients.items():
            mono = T.monomial(_pad(alpha, 2 * n), acc.precision)
            acc = acc + mono * comps[l].embed(2 * n, list(range(n, 2 * n)))
        return acc


def expand_reflection(Mp: GenericSubmanifoldNF, F: Sequence[TruncatedSeries] | None = None,
                      alpha_bound: int | None = None) -> ReflectionExpansion:
    n, d = Mp.n, Mp.d
    bound = Mp.precision if alpha_bound is None else alpha_bound
    coeffs: dict = {}
    remainder = []
    w_block = list(range(2 * n, 2 * n + d))
    for l, qb in enumerate(Mp.q_bar()):
        at0 = qb.set_zero(w_block).restrict(list(range(2 * n)))
        for alpha, c in split_by_block(at0, range(n)).items():
            if sum(alpha) <= bound:
                coeffs.setdefault(alpha, [None] * d)[l] = c
        row = [dict() for _ in range(d)]
        for e, c in qb.terms.items():
            hit = next((m for m in range(d) if e[2 * n + m]), None)
            if hit is None:
                continue
            ne = list(e)
            ne[2 * n + hit] -= 1
            row[hit][tuple(ne)] = c
        remainder.append([T(2 * n + d, qb.precision - 1, t) for t in row])
    for alpha, comps in coeffs.items():
        for l in range(d):
            if comps[l] is None:
                comps[l] = T.zero(n, Mp.precision - sum(alpha))
    coeffs = dict(sorted(coeffs.items(), key=lambda kv: grlex_key(kv[0])))
    out = ReflectionExpansion(n, d, coeffs, remainder)
    if F is not None:
        out.composed = {a: [c.compose(list(F)) for c in comps] for a, comps in coeffs.items()}
    return out


# -- choice of the jet order r ----------------------------------------------------


def _conj_jets(H: FormalMapNF, N: int, n: int, r: int) -> dict:
    """``L^gamma bar F_p(0) = conj(d^gamma_z F_p(0))`` for ``gamma`` in ``Z^n``, ``|gamma| <= r``."""
    out = {}
    npr = H.target[0]
    for gamma in monomials_upto(n, r):
        jet = H.jet(_pad(gamma, N))
        out[gamma] = [jet[p].conjugate() for p in range(npr)]
    return out


def _jet_generators(Mp: GenericSubmanifoldNF, H: FormalMapNF, r: int) -> list:
    """``sum_alpha bar Q'_alpha(mu) (L^beta bar F^alpha)(0)`` for ``|beta| <= r``, keyed by ``(beta, l)``."""
    n = H.source[0]
    exp = expand_reflection(Mp, alpha_bound=r)
    fz = [c.set_zero(range(n, c.nvars)).restrict(list(range(n))).bar_conjugate() for c in H.F]
    powers = {}
    for alpha in exp.coefficients:
        acc = T.constant(ONE, n, H.precision)
        for c, k in zip(fz, alpha):
            if k:
                acc = acc * (c ** k)
        powers[alpha] = acc
    out = []
    for beta in monomials_upto(n, r):
        for l in range(Mp.d):
            acc = None
            for alpha, comps in exp.coefficients.items():
                kappa = powers[alpha].derive_multi(beta).constant_term()
                if kappa.is_zero():
                    continue
                term = comps[l].scale(kappa)
                acc = term if acc is None else acc + term
            if acc is None:
                acc = T.zero(Mp.n, Mp.precision)
            out.append(((beta, l), acc))
    return out


@dataclass
class JetOrderChoice:
    r: int
    staircase: StaircaseReport
    confirmation: StaircaseReport
    generators: list


def pick_r(Mp: GenericSubmanifoldNF, H: FormalMapNF, bound: int = 4) -> JetOrderChoice:
    """Smallest ``r`` whose jet ideal has finite codimension that ``r + 1`` does not lower."""
    prev = None
    for r in range(bound + 2):
        gens = _jet_generators(Mp, H, r)
        nonzero = [g for _, g in gens if not g.is_zero()]
        if nonzero:
            stair = staircase_codim(nonzero, min(g.precision for g in nonzero))
        else:
            stair = StaircaseReport(False, 0)
        if prev is not None:
            p_r, p_stair, p_gens = prev
            if p_stair.finite and stair.finite and p_stair.codim == stair.codim:
                return JetOrderChoice(p_r, p_stair, stair, p_gens)
        prev = (r, stair, gens)
    raise HypothesisFailure(
        f"jet ideal not of stable finite codimension for r <= {bound}: "
        "Segre injectivity of the map or essential finiteness of the target is suspect"
    )


# -- the system R_{beta l}(a, b, F) ------------------------------------------------


@dataclass
class SymbolRing:
    """Index bookkeeping for ``(a_{gamma p}, b_{gamma l}, F_p, G_l)``."""

    n: int
    n_target: int
    d_target: int
    r: int

    def __post_init__(self):
        self.gammas = monomials_upto(self.n, self.r)
        self.position = {g: i for i, g in enumerate(self.gammas)}

    @property
    def n_u(self) -> int:
        return len(self.gammas) * (self.n_target + self.d_target)

    @property
    def nvars(self) -> int:
        return self.n_u + self.n_target

    def a(self, gamma, p: int) -> int:
        return self.position[tuple(gamma)] * self.n_target + p

    def b(self, gamma, l: int) -> int:
        return len(self.gammas) * self.n_target + self.position[tuple(gamma)] * self.d_target + l

    def f(self, p: int) -> int:
        return self.n_u + p

    def g(self, l: int) -> int:
        return self.n_u + self.n_target + l

    def names(self) -> list[str]:
        out = [""] * (self.nvars + self.d_target)
        for g in self.gammas:
            tag = "".join(str(k) for k in g)
            for p in range(self.n_target):
                out[self.a(g, p)] = f"a{tag}_{p + 1}"
            for l in range(self.d_target):
                out[self.b(g, l)] = f"b{tag}_{l + 1}"
        for p in range(self.n_target):
            out[self.f(p)] = f"F{p + 1}"
        for l in range(self.d_target):
            out[self.g(l)] = f"G{l + 1}"
        return out


@dataclass
class ReflectionSystem:
    ring: SymbolRing
    jets: dict
    relations: dict  # (beta, l) -> series in (a, b, F)

    def nonzero(self) -> list:
        return [s for s in self.relations.values() if not s.is_zero()]


def _derivation(S: TruncatedSeries, i: int, ring: SymbolRing, jets: dict) -> TruncatedSeries:
    """Formal ``L_i``: ``a_gamma -> a_{gamma+e_i} + c_{gamma+e_i}``, ``b_gamma -> b_{gamma+e_i}``."""
    nv = S.nvars
    p = S.precision
    out = T.zero(nv, p - 1)
    step = _unit(i, ring.n)
    for gamma in ring.gammas:
        up = _add(gamma, step)
        for q in range(ring.n_target):
            dv = S.derive(ring.a(gamma, q))
            if dv.is_zero():
                continue
            if up not in ring.position:
                raise ArithmeticError("derivation left the symbol ring")
            out = out + dv * (T.variable(ring.a(up, q), nv, p) + jets[up][q])
        for l in range(ring.d_target):
            dv = S.derive(ring.b(gamma, l))
            if dv.is_zero():
                continue
            if up not in ring.position:
                raise ArithmeticError("derivation left the symbol ring")
            out = out + dv * T.variable(ring.b(up, l), nv, p)
    return out


def build_reflection_system(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF,
                            r: int) -> ReflectionSystem:
    """Apply ``L^beta`` to ``bar G - bar Q'(bar F, F, G)`` and eliminate ``G``."""
    _check_dims(M, Mp, H)
    ring = SymbolRing(M.n, Mp.n, Mp.d, r)
    jets = _conj_jets(H, M.N, M.n, r)
    full = ring.nvars + ring.d_target
    p = min(Mp.precision, H.precision)
    var = [T.variable(i, full, p) for i in range(full)]
    zero = tuple([0] * M.n)
    a0 = [var[ring.a(zero, q)] for q in range(ring.n_target)]
    b0 = [var[ring.b(zero, l)] for l in range(ring.d_target)]
    Fv = [var[ring.f(q)] for q in range(ring.n_target)]
    Gv = [var[ring.g(l)] for l in range(ring.d_target)]
    E = [b0[l] - qb.compose(a0 + Fv + Gv) for l, qb in enumerate(Mp.q_bar())]
    G_sub = {ring.g(l): q.compose(Fv + a0 + b0) for l, q in enumerate(Mp.Q)}
    keep = list(range(ring.nvars))

    relations = {}
    for l in range(ring.d_target):
        cache = {zero: E[l]}
        for beta in ring.gammas:
            if beta not in cache:
                i = max(k for k in range(M.n) if beta[k])
                cache[beta] = _derivation(cache[_sub(beta, _unit(i, M.n))], i, ring, jets)
            relations[(beta, l)] = -(cache[beta].substitute(G_sub).restrict(keep))
    system = ReflectionSystem(ring, jets, dict(sorted(relations.items(), key=lambda kv: (grlex_key(kv[0][0]), kv[0][1]))))
    _check_jet_slice(system, Mp, H)
    return system


def _check_jet_slice(system: ReflectionSystem, Mp: GenericSubmanifoldNF, H: FormalMapNF) -> None:
    ring = system.ring
    expected = dict(_jet_generators(Mp, H, ring.r))
    fvars = [ring.f(q) for q in range(ring.n_target)]
    for key, rel in system.relations.items():
        slice_ = rel.set_zero(range(ring.n_u)).restrict(fvars)
        if not slice_.equals_through(expected[key], min(slice_.precision, expected[key].precision)):
            raise ArithmeticError(f"relation {key} does not restrict to its jet generator")


# -- reflection identities ---------------------------------------------------------


@dataclass
class IdentityComponent:
    """Monic ``X^N + sum_k coeffs[k] X^k`` for one component of the map."""

    index: int
    coeffs: list
    symbolic: PolyInX

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def as_poly(self) -> PolyInX:
        lead = T.constant(ONE, self.coeffs[0].nvars, self.coeffs[0].precision)
        return PolyInX(list(self.coeffs) + [lead])


@dataclass
class ReflectionIdentity:
    r: int
    N: int
    n_components: int
    deltas: list
    jets: dict
    components: list
    system: ReflectionSystem
    choice: JetOrderChoice

    @property
    def nvars(self) -> int:
        return 2 * self.N + len(self.deltas) * self.n_components

    def aprime(self, delta, c: int) -> int:
        return 2 * self.N + self.deltas.index(tuple(delta)) * self.n_components + c

    @property
    def degrees(self) -> list[int]:
        return [c.degree for c in self.components]


def l_table(M: GenericSubmanifoldNF, r: int) -> dict:
    """``L^gamma h(zeta) = sum_delta e[gamma][delta](chi, z, w) d^delta h(zeta)`` for ``|gamma| <= r``."""
    N, n, d = M.N, M.n, M.d
    fields = cr_basis(M)
    one = T.constant(ONE, 2 * N, M.precision)
    table = {tuple([0] * n): {tuple([0] * N): one}}
    for gamma in monomials_upto(n, r):
        if gamma in table:
            continue
        i = max(k for k in range(n) if gamma[k])
        prev = table[_sub(gamma, _unit(i, n))]
        L = fields[i]
        out: dict = {}

        def acc(delta, s):
            out[delta] = s if delta not in out else out[delta] + s

        for delta, e in prev.items():
            acc(delta, L.apply(e))
            acc(_add(delta, _unit(i, N)), e)
            for l in range(d):
                coef = L.coeffs[M.tau_idx[l]]
                acc(_add(delta, _unit(n + l, N)), coef * e)
        table[gamma] = {k: v for k, v in out.items() if not v.is_zero()}
    return table


def _symbol_values(M: GenericSubmanifoldNF, H: FormalMapNF, ring: SymbolRing, jets: dict,
                   deltas: list, aprime: Callable) -> list:
    """Each symbol-ring ``u`` variable written in the jet ring."""
    N = M.N
    npr, dpr = H.target
    Ncomp = npr + dpr
    nv = 2 * N + len(deltas) * Ncomp
    table = l_table(M, ring.r)
    hjets = {delta: [c.conjugate() for c in H.jet(delta)] for delta in deltas}
    amb = list(range(2 * N))
    values: list = [None] * ring.n_u
    for gamma in ring.gammas:
        ex = {delta: e.embed(nv, amb) for delta, e in table[gamma].items()}
        p = min(e.precision for e in ex.values())
        for c in range(Ncomp):
            acc = T.zero(nv, p)
            for delta, e in ex.items():
                acc = acc + e * (T.variable(aprime(delta, c), nv, p) + hjets[delta][c])
            if c < npr:
                values[ring.a(gamma, c)] = acc - jets[gamma][c]
            else:
                values[ring.b(gamma, c - npr)] = acc
    return values


def reflection_identities(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF,
                          r_bound: int = 4, verify: bool = True) -> ReflectionIdentity:
    """Monic identities ``P_j(H_j(Z), Z, zeta, d^gamma bar H(zeta) - d^gamma bar H(0)) in I(M)``."""
    _check_dims(M, Mp, H)
    choice = pick_r(Mp, H, r_bound)
    r = choice.r
    system = build_reflection_system(M, Mp, H, r)
    ring = system.ring
    npr, dpr = ring.n_target, ring.d_target
    try:
        monic = monicize_system(system.nonzero(), ring.n_u, npr, certify=False)
    except (ValueError, ArithmeticError) as exc:
        raise HypothesisFailure(f"monic system for the F components failed: {exc}") from exc
    symbolic = list(monic.polynomials)
    symbolic.extend(_g_identities(Mp, ring, symbolic))

    N = M.N
    deltas = monomials_upto(N, r)
    Ncomp = npr + dpr

    def aprime(delta, c):
        return 2 * N + deltas.index(tuple(delta)) * Ncomp + c

    values = _symbol_values(M, H, ring, system.jets, deltas, aprime)
    comps = []
    for j, P in enumerate(symbolic):
        if not P.monic:
            raise ArithmeticError(f"identity {j + 1} is not monic")
        coeffs = [c.compose(values) for c in P.coeffs[:-1]]
        comps.append(IdentityComponent(j, coeffs, P))
    jets = {delta: H.jet(delta) for delta in deltas}
    ident = ReflectionIdentity(r, N, Ncomp, deltas, jets, comps, system, choice)
    if verify and not verify_reflection(M, ident, H):
        raise ArithmeticError("reflection identity failed verification")
    return ident


def _g_identities(Mp: GenericSubmanifoldNF, ring: SymbolRing, fpolys: list) -> list:
    """Monic polynomials in ``Y = G_l`` from ``Y - Q'_l(F, a_0, b_0)`` with ``F`` eliminated."""
    npr = ring.n_target
    nu = ring.n_u
    zero = tuple([0] * ring.n)
    out = []
    for l, q in enumerate(Mp.Q):
        # ring (u, F_1..F_n', Y)
        nv = nu + npr + 1
        p = min(c.precision for P in fpolys for c in P.coeffs)
        p = min(p, q.precision)
        var = [T.variable(i, nv, p) for i in range(nv)]
        Fv = var[nu:nu + npr]
        a0 = [var[ring.a(zero, k)] for k in range(npr)]
        b0 = [var[ring.b(zero, m)] for m in range(ring.d_target)]
        g = var[nu + npr] - q.compose(Fv + a0 + b0)
        live_f = list(range(npr))
        for k in range(npr):
            pos = nu + live_f.index(k)
            keep = [i for i in range(g.nvars) if i != pos]
            u_pos = list(range(nu))
            p1 = PolyInX([c.embed(len(keep), u_pos) for c in fpolys[k].coeffs])
            p2 = PolyInX.from_series(g, pos)
            elim = eliminate_pair(p1, p2, len(keep) - 1, u_pos)
            if not elim.shape_ok:
                raise ArithmeticError("elimination lost the Y^M shape")
            g = elim.result
            live_f.remove(k)
        prep = weierstrass_prepare(g, nu)
        out.append(prep.monic)
    return out


# -- verification ------------------------------------------------------------------


def jet_substitution(ident: ReflectionIdentity, H: FormalMapNF, nvars_ambient: int) -> list:
    """``d^delta bar H_c(zeta) - d^delta bar H_c(0)`` as ambient series, ordered like ``a'``."""
    N = ident.N
    _, hzeta = _ambient(H, N)
    out = []
    for delta in ident.deltas:
        full = (0,) * N + tuple(delta)
        for c in range(ident.n_components):
            s = hzeta[c].derive_multi(full)
            out.append(s - s.constant_term())
    return out


def _ambient(H: FormalMapNF, N: int) -> tuple[list, list]:
    Zpos, zpos = list(range(N)), list(range(N, 2 * N))
    hz = [c.embed(2 * N, Zpos) for c in H.components]
    hzeta = [c.bar_conjugate().embed(2 * N, zpos) for c in H.components]
    return hz, hzeta


def specialize(ident: ReflectionIdentity, H: FormalMapNF, subs: Sequence[TruncatedSeries] | None = None) -> list:
    """Identities with the jets of ``H`` substituted, as polynomials over ``(Z, zeta)``.

    With ``subs`` (a substitution for ``(Z, zeta)``) the coefficients are
    further composed, e.g. with a Segre chain.
    """
    N = ident.N
    p = H.precision
    amb = [T.variable(i, 2 * N, p) for i in range(2 * N)]
    full = amb + jet_substitution(ident, H, 2 * N)
    out = []
    for comp in ident.components:
        coeffs = [c.compose(full) for c in comp.coeffs]
        if subs is not None:
            coeffs = [c.compose(list(subs)) for c in coeffs]
        lead = T.constant(ONE, coeffs[0].nvars, min(c.precision for c in coeffs))
        out.append(PolyInX(coeffs + [lead]))
    return out


@dataclass
class ReflectionCheck:
    ok: bool
    order: int
    residuals: list


def reflection_residuals(M: GenericSubmanifoldNF, ident: ReflectionIdentity, H: FormalMapNF) -> ReflectionCheck:
    polys = specialize(ident, H)
    hz, _ = _ambient(H, M.N)
    res = []
    for j, P in enumerate(polys):
        res.append(reduce_mod_M(P.evaluate(hz[j]), M))
    order = min(r.precision for r in res)
    return ReflectionCheck(all(r.is_zero() for r in res), order, res)


def verify_reflection(M: GenericSubmanifoldNF, ident: ReflectionIdentity, H: FormalMapNF) -> bool:
    return reflection_residuals(M, ident, H).ok


def same_coefficients(first: ReflectionIdentity, second: ReflectionIdentity) -> bool:
    if first.r != second.r or first.degrees != second.degrees:
        return False
    for a, b in zip(first.components, second.components):
        for x, y in zip(a.coeffs, b.coeffs):
            if x.precision != y.precision or x.terms != y.terms:
                return False
    return True


# -- Leibniz machinery ---------------------------------------------------------------


def apply_fields(fields: Sequence[FormalVectorField], f: TruncatedSeries, mu: Sequence[int]) -> TruncatedSeries:
    """``S^mu f = S_1^{mu_1} ... S_N^{mu_N} f`` (rightmost applied first)."""
    out = f
    for i in reversed(range(len(mu))):
        for _ in range(mu[i]):
            out = fields[i].apply(out)
    return out


def coordinate_fields(nvars: int, precision: int) -> list[FormalVectorField]:
    one = T.constant(ONE, nvars, precision)
    return [FormalVectorField([one if k == i else None for k in range(nvars)], "1,0") for i in range(nvars)]


class JetOracle:
    """Cached ``S^mu a_k`` and ``S^nu h``."""

    def __init__(self, P: PolyInX, h: TruncatedSeries, fields: Sequence[FormalVectorField]):
        self.P, self.h, self.fields = P, h, list(fields)
        self._a: dict = {}
        self._h: dict = {}

    @property
    def degree(self) -> int:
        return self.P.degree

    def _derived(self, cache: dict, key, base: TruncatedSeries, mu: tuple) -> TruncatedSeries:
        if key in cache:
            return cache[key]
        if not any(mu):
            val = base
        else:
            i = min(k for k in range(len(mu)) if mu[k])
            val = self.fields[i].apply(self._derived(cache, key[:-1] + (_sub(mu, _unit(i, len(mu))),), base,
                                                     _sub(mu, _unit(i, len(mu)))))
        cache[key] = val
        return val

    def sa(self, k: int, mu: tuple) -> TruncatedSeries:
        return self._derived(self._a, (k, tuple(mu)), self.P.coeffs[k], tuple(mu))

    def sh(self, nu: tuple) -> TruncatedSeries:
        return self._derived(self._h, (tuple(nu),), self.h, tuple(nu))


def _lt(a: Sequence[int], b: Sequence[int]) -> bool:
    return grlex_key(a) < grlex_key(b)


def _tuples(bound: tuple, count: int, accept: Callable) -> list:
    """Ordered tuples of ``count`` multi-indices, each accepted, summing to at most ``bound``."""
    if count == 0:
        return [()]
    out = []
    for nu in box(tuple([0] * len(bound)), bound):
        if not accept(nu):
            continue
        for rest in _tuples(_sub(bound, nu), count - 1, accept):
            out.append((nu,) + rest)
    return out


def leibniz_A(oracle: JetOracle, gamma: tuple, alpha: tuple, nus: tuple) -> TruncatedSeries:
    """``A(gamma, alpha, j, nu^1..nu^j)`` with ``j = len(nus)``; ``nus = ()`` gives ``A(gamma, alpha, 0)``."""
    j = len(nus)
    J = oracle.degree
    rho = gamma
    for nu in nus:
        rho = _sub(rho, nu)
    if any(x < 0 for x in rho):
        raise ValueError("outer multi-indices exceed gamma")
    gfact = factorial_multi(gamma)
    outer = 1
    for nu in nus:
        outer *= factorial_multi(nu)
    acc = None
    for k in range(j, J + 1):
        for inner in _tuples(rho, k - j, lambda nu: _lt(nu, alpha)):
            mu = rho
            den = outer
            for nu in inner:
                mu = _sub(mu, nu)
                den *= factorial_multi(nu)
            den *= factorial_multi(mu)
            coef = math.comb(k, j) * gfact // den
            if gfact * math.comb(k, j) % den:
                raise ArithmeticError("non-integral multinomial")
            term = oracle.sa(k, mu)
            if term.is_zero():
                continue
            for nu in inner:
                term = term * oracle.sh(nu)
            term = term.scale(coef)
            acc = term if acc is None else acc + term
    if acc is None:
        acc = T.zero(oracle.h.nvars, oracle.h.precision - sum(gamma))
    return acc


@dataclass
class LeibnizTable:
    gamma: tuple
    alpha: tuple
    constant: TruncatedSeries
    terms: dict  # (nu^1, .., nu^j) -> A(gamma, alpha, j, nu^1..nu^j)


def leibniz_coefficients(P: PolyInX, alpha: Sequence[int], gamma: Sequence[int], h: TruncatedSeries,
                         fields: Sequence[FormalVectorField]) -> LeibnizTable:
    """All coefficients of the regrouped expansion of ``S^gamma P(h(x), x)`` split at ``alpha``."""
    alpha, gamma = tuple(alpha), tuple(gamma)
    oracle = JetOracle(P, h, fields)
    return _table(oracle, alpha, gamma)


def _table(oracle: JetOracle, alpha: tuple, gamma: tuple) -> LeibnizTable:
    const = leibniz_A(oracle, gamma, alpha, ())
    terms = {}
    for j in range(1, oracle.degree + 1):
        for nus in _tuples(gamma, j, lambda nu: not _lt(nu, alpha)):
            terms[nus] = leibniz_A(oracle, gamma, alpha, nus)
    return LeibnizTable(gamma, alpha, const, terms)


def leibniz_regrouped(P: PolyInX, alpha, gamma, h: TruncatedSeries, fields) -> TruncatedSeries:
    """Re-sum the regrouped expansion: ``A(gamma, alpha, 0) + sum A(..nu..) prod S^nu h``."""
    oracle = JetOracle(P, h, fields)
    table = _table(oracle, tuple(alpha), tuple(gamma))
    acc = table.constant
    for nus, A in table.terms.items():
        term = A
        for nu in nus:
            term = term * oracle.sh(nu)
        acc = acc + term
    return acc


def leibniz_expanded(P: PolyInX, gamma, h: TruncatedSeries, fields) -> TruncatedSeries:
    """The plain multinomial expansion of ``S^gamma P(h(x), x)``."""
    return _plain(JetOracle(P, h, fields), tuple(gamma))


def _plain(oracle: JetOracle, gamma: tuple) -> TruncatedSeries:
    acc = None
    gfact = factorial_multi(gamma)
    for k in range(oracle.degree + 1):
        for nus in _tuples(gamma, k, lambda nu: True):
            mu = gamma
            den = 1
            for nu in nus:
                mu = _sub(mu, nu)
                den *= factorial_multi(nu)
            den *= factorial_multi(mu)
            term = oracle.sa(k, mu)
            for nu in nus:
                term = term * oracle.sh(nu)
            term = term.scale(gfact // den)
            acc = term if acc is None else acc + term
    return acc


def leibniz_direct(P: PolyInX, gamma, h: TruncatedSeries, fields) -> TruncatedSeries:
    return apply_fields(fields, P.evaluate(h), gamma)


def scaling_factor(gamma0: Sequence[int], alpha: Sequence[int], nus: Sequence[Sequence[int]]) -> ComplexRational:
    """``e`` in ``A(gamma0, alpha, j, nu..) = e A(gamma1, alpha, j, alpha..)``."""
    j = len(nus)
    gamma1 = tuple(gamma0)
    for nu in nus:
        gamma1 = _sub(gamma1, nu)
    gamma1 = _add(gamma1, tuple(j * a for a in alpha))
    num = factorial_multi(gamma0) * factorial_multi(alpha) ** j
    den = factorial_multi(gamma1)
    for nu in nus:
        den *= factorial_multi(nu)
    return ComplexRational(Fraction(num, den))


# -- derived polynomials --------------------------------------------------------------


@dataclass
class DerivedPolynomial:
    alpha: tuple
    gamma0: tuple
    coeffs: list  # series in x, constant term first
    provenance: dict
    restricted: list  # coefficients composed with the annihilating map
    order: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def restricted_poly(self) -> PolyInX:
        return PolyInX(list(self.restricted))


def derived_polynomial(P: PolyInX, h: TruncatedSeries, fields: Sequence[FormalVectorField],
                       v: Sequence[TruncatedSeries], alpha: Sequence[int]) -> DerivedPolynomial:
    """Polynomial satisfied by ``(S^alpha h)(v(y))`` built from the regrouped Leibniz coefficients."""
    alpha = tuple(alpha)
    v = list(v)
    J = P.degree
    if not (P.coeffs[-1] - 1).is_zero():
        raise ValueError("the polynomial must be monic")
    oracle = JetOracle(P, h, fields)

    def on_v(s: TruncatedSeries) -> TruncatedSeries:
        return s.compose(v)

    if not any(alpha):
        gamma0 = alpha
        coeffs = list(P.coeffs)
        prov = {"kind": "base"}
    else:
        gamma0 = None
        lead = leibniz_A(oracle, alpha, alpha, (alpha,))
        if not on_v(lead).is_zero():
            gamma0 = alpha
            coeffs = [leibniz_A(oracle, alpha, alpha, ()), lead]
            prov = {"kind": "linear"}
        else:
            top = tuple(J * a for a in alpha)
            for gamma in box(alpha, top):
                if gamma == alpha:
                    continue
                found = False
                for j in range(1, J + 1):
                    if not leq(tuple(j * a for a in alpha), gamma):
                        continue
                    if not on_v(leibniz_A(oracle, gamma, alpha, (alpha,) * j)).is_zero():
                        found = True
                        break
                if found:
                    gamma0 = gamma
                    break
            if gamma0 is None:
                raise ArithmeticError(f"no nonvanishing coefficient for alpha={alpha} within the box up to {top}")
            coeffs = [leibniz_A(oracle, gamma0, alpha, ())]
            for j in range(1, J + 1):
                if leq(tuple(j * a for a in alpha), gamma0):
                    coeffs.append(leibniz_A(oracle, gamma0, alpha, (alpha,) * j))
                else:
                    coeffs.append(T.zero(h.nvars, coeffs[0].precision))
            prov = {"kind": "search"}
    restricted = [on_v(c) for c in coeffs]
    root = on_v(oracle.sh(alpha))
    value = PolyInX(list(restricted)).evaluate(root) if len(restricted) > 1 else restricted[0]
    if all(c.is_zero() for c in restricted):
        raise ArithmeticError("derived polynomial vanishes on the annihilating map")
    if not value.is_zero():
        raise ArithmeticError(f"derived polynomial for alpha={alpha} does not annihilate its root")
    return DerivedPolynomial(alpha, tuple(gamma0), coeffs, prov, restricted, value.precision)


# -- separation order --------------------------------------------------------------------


def _derivative(P: PolyInX) -> PolyInX:
    return PolyInX([c.scale(k) for k, c in enumerate(P.coeffs)][1:] or [P.coeffs[0] * 0])


def discriminant(P: PolyInX) -> TruncatedSeries:
    """Resultant of ``P`` and ``P'``; a unit for degree one."""
    if P.degree <= 1:
        return T.constant(ONE, P.nvars, P.precision)
    return series_det(sylvester_matrix(P, _derivative(P)))


def _prem(A: PolyInX, B: PolyInX) -> tuple[PolyInX, PolyInX, int]:
    """Pseudo-division ``lc(B)^k A = Q B + R``; returns ``(Q, R, k)``."""
    nv, p = A.nvars, A.precision
    zero = T.zero(nv, p)
    R = list(A.coeffs)
    Q = [zero] * max(1, A.degree - B.degree + 1)
    lc = B.coeffs[-1]
    k = 0
    while len(R) - 1 >= B.degree and not (len(R) == 1 and R[0].is_zero()):
        shift = len(R) - 1 - B.degree
        top = R[-1]
        R = [c * lc for c in R]
        Q = [c * lc for c in Q]
        Q[shift] = Q[shift] + top
        for i, b in enumerate(B.coeffs):
            R[i + shift] = R[i + shift] - top * b
        R = PolyInX(R[:-1] if len(R) > 1 else R).coeffs
        k += 1
        if B.degree == 0 and len(R) == 1:
            R = [R[0] - R[0]]
            break
    return PolyInX(Q), PolyInX(R), k


def squarefree_part(P: PolyInX) -> PolyInX:
    """``P / gcd(P, P')`` up to a series factor, by pseudo-remainder sequences."""
    A, B = P, _derivative(P)
    while not (B.degree == 0 and B.coeffs[0].is_zero()):
        _, R, _ = _prem(A, B)
        A, B = B, R
        if B.degree == 0 and not B.coeffs[0].is_zero():
            return P
    if A.degree == 0:
        return P
    Q, R, _ = _prem(P, A)
    if not (R.degree == 0 and R.coeffs[0].is_zero()):
        raise ArithmeticError("gcd does not divide the polynomial")
    return Q


def separation_order(P: PolyInX) -> int | None:
    """``2 ord(disc) + 1`` for the squarefree part, or ``None`` when that discriminant vanishes."""
    if P.coeffs[-1].is_zero():
        raise ValueError("leading coefficient vanishes")
    if P.degree <= 1:
        return 1
    disc = discriminant(P)
    if disc.is_zero():
        try:
            P = squarefree_part(P)
        except ArithmeticError:
            return None
        if P.degree <= 1:
            return 1
        disc = discriminant(P)
        if disc.is_zero():
            return None
    return 2 * disc.order() + 1


# -- ladders ---------------------------------------------------------------------------


def segre_frame(M: GenericSubmanifoldNF) -> list[FormalVectorField]:
    """Fields ``d/dZ_j - rho_{Z_j} rho_tau^{-1} d/dtau`` tangent to I(M)."""
    return tangential_frame_for(list(ideal_generators(M, "holo")), M.N, M.d)


def chain(M: GenericSubmanifoldNF, k: int) -> list:
    """``(Z, zeta) = (v^k, bar v^{k-1})`` over ``k n`` parameters, ``k >= 1``."""
    if k < 1:
        raise ValueError("chains start at k = 1")
    return segre_substitution(M, k - 1)


@dataclass
class LedgerRung:
    k: int
    alpha: tuple
    component: int
    kind: str  # "constant", "base", "linear", "search"
    degree: int
    gamma0: tuple
    order: int
    verified: bool


@dataclass
class ConvergenceLedger:
    r: int
    degrees: list
    rungs: list
    out_of_scope: str = (
        "the closing step through an analytic right inverse of a full-rank Segre map is not computed"
    )

    @property
    def all_verified(self) -> bool:
        return all(x.verified for x in self.rungs)


def lift(obj, headroom: int):
    """Raise the precision of an exact (polynomial) manifold or map by ``headroom``."""
    return obj.with_precision(obj.precision + headroom) if headroom else obj


def _ladder_preconditions(M, Mp, H, check_injectivity: bool = True) -> None:
    rep = check_sends(M, Mp, H)
    if not rep.sends:
        raise HypothesisFailure(f"map {H.name!r} does not send M into M' through order {rep.order}")
    ess = essential_finiteness_test(Mp)
    if not ess.essentially_finite:
        raise HypothesisFailure("target is not certified essentially finite")
    if check_injectivity:
        inj = segre_injectivity_test(M, Mp, H)
        if inj.status != "injective":
            raise HypothesisFailure(f"Segre injectivity not established: {inj.status}")


def convergence_ledger(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H: FormalMapNF, k_max: int = 3,
                       alpha_max: int = 2, ident: ReflectionIdentity | None = None,
                       headroom: int = 0) -> ConvergenceLedger:
    """Verified polynomial identities for ``(d^alpha H) o v^k`` on every rung.

    ``headroom`` lifts exact inputs so that derivatives do not eat into the
    reported order.
    """
    M, Mp, H = lift(M, headroom), lift(Mp, headroom), lift(H, headroom)
    _ladder_preconditions(M, Mp, H)
    if ident is None:
        ident = reflection_identities(M, Mp, H)
    N = M.N
    fields = segre_frame(M)
    hz, _ = _ambient(H, N)
    base = specialize(ident, H)
    alphas = monomials_upto(N, alpha_max)
    rungs = []
    for alpha in alphas:
        for j in range(ident.n_components):
            rungs.append(LedgerRung(0, alpha, j, "constant", 0, alpha, H.precision, True))
    for k in range(1, k_max + 1):
        v = chain(M, k)
        for alpha in alphas:
            for j, P in enumerate(base):
                dp = derived_polynomial(P, hz[j], fields, v, alpha)
                rungs.append(LedgerRung(k, alpha, j, dp.provenance["kind"], dp.degree, dp.gamma0, dp.order, True))
    return ConvergenceLedger(ident.r, ident.degrees, rungs)


@dataclass
class Rung:
    k: int
    alpha: tuple
    K_required: int
    predicted: bool
    agree: bool
    order: int
    shared_root: bool | None = None
    separation: int | None = None
    jets_agree: bool | None = None


@dataclass
class DeterminationReport:
    K: int
    jets_agree_to: int
    r: int
    K_table: dict
    rungs: list
    first_disagreement: tuple | None
    conclusion: str
    conclusion_order: int | None
    direct_agreement_order: int | None

    @property
    def all_agree(self) -> bool:
        return self.first_disagreement is None


def _jet_agreement(H1: FormalMapNF, H2: FormalMapNF) -> int | None:
    """Largest ``t`` with equal Taylor coefficients through degree ``t``; ``None`` when equal throughout."""
    p = min(H1.precision, H2.precision)
    worst = None
    for a, b in zip(H1.components, H2.components):
        diff = a.truncate(p) - b.truncate(p)
        o = diff.order()
        if o is not None:
            worst = o - 1 if worst is None else min(worst, o - 1)
    return worst


def _first_difference(a: TruncatedSeries, b: TruncatedSeries) -> int | None:
    p = min(a.precision, b.precision)
    return (a.truncate(p) - b.truncate(p)).order()


def _injective_through(v: list, order: int, N: int) -> int:
    """Largest ``t`` such that composing with ``v`` is injective on polynomials of degree ``<= t`` mod degree ``> order``."""
    nv = v[0].nvars
    best = 0
    for t in range(1, order + 1):
        rows = []
        cols = monomials_upto(N, t, start=1)
        images = []
        for beta in cols:
            acc = T.constant(ONE, nv, order)
            for s, e in zip(v, beta):
                if e:
                    acc = acc * (s.truncate(order) ** e)
            images.append(acc)
        for img in images:
            rows.append({e: c for e, c in img.terms.items()})
        if linalg.rank(rows) < len(cols):
            break
        best = t
    return best


def chain_agreement(M: GenericSubmanifoldNF, Mp: GenericSubmanifoldNF, H1: FormalMapNF, H2: FormalMapNF,
                    K: int, k_max: int | None = None, alpha_max: int = 2,
                    headroom: int = 0) -> DeterminationReport:
    """Run the determination ladder for two maps whose jets agree through order ``K``."""
    M, Mp = lift(M, headroom), lift(Mp, headroom)
    H1, H2 = lift(H1, headroom), lift(H2, headroom)
    for H in (H1, H2):
        rep = check_sends(M, Mp, H)
        if not rep.sends:
            raise HypothesisFailure(f"map {H.name} does not send M into M' through order {rep.order}")
    agree_to = _jet_agreement(H1, H2)
    jets_to = min(H1.precision, H2.precision) if agree_to is None else agree_to
    if jets_to < K:
        raise HypothesisFailure(f"jets agree only through order {jets_to} < K = {K}")
    k_max = 2 * (M.d + 1) if k_max is None else k_max
    N = M.N
    ident = reflection_identities(M, Mp, H1)
    r = ident.r
    maxN = max(ident.degrees)
    fields = segre_frame(M)
    hz1, _ = _ambient(H1, N)
    hz2, _ = _ambient(H2, N)
    base1 = specialize(ident, H1)
    alphas = monomials_upto(N, alpha_max)

    K_table: dict = {}
    m_cache: dict = {}
    poly_cache: dict = {}

    def polys(k, alpha):
        key = (k, alpha)
        if key not in poly_cache:
            v = chain(M, k)
            poly_cache[key] = [derived_polynomial(P, hz1[j], fields, v, alpha) for j, P in enumerate(base1)]
        return poly_cache[key]

    def sep(k, alpha):
        if (k, alpha) not in m_cache:
            if maxN == 1:
                m_cache[(k, alpha)] = 1
            else:
                ms = [separation_order(dp.restricted_poly()) for dp in polys(k, alpha)]
                m_cache[(k, alpha)] = None if any(m is None for m in ms) else max(ms)
        return m_cache[(k, alpha)]

    def Kreq(k, alpha):
        key = (k, alpha)
        if key in K_table:
            return K_table[key]
        if k == 0:
            val = sum(alpha)
        elif not any(alpha):
            m = sep(k, alpha)
            parts = [r] + [Kreq(k - 1, beta) for beta in monomials_upto(N, r)]
            val = None if m is None or None in parts else max(parts + [m])
        else:
            m = sep(k, alpha)
            smaller = [b for b in monomials_upto(N, sum(alpha)) if _lt(b, alpha)]
            lower = monomials_upto(N, r + sum(alpha) * maxN)
            parts = [r] + [Kreq(k, b) for b in smaller] + [Kreq(k - 1, g) for g in lower]
            val = None if m is None or None in parts else max(parts + [m])
        K_table[key] = val
        return val

    rungs = []
    first = None
    for k in range(1, k_max + 1):
        v = chain(M, k)
        for alpha in alphas:
            roots1 = [h.derive_multi(_pad(alpha, 2 * N)).compose(v) for h in hz1]
            roots2 = [h.derive_multi(_pad(alpha, 2 * N)).compose(v) for h in hz2]
            diffs = [_first_difference(a, b) for a, b in zip(roots1, roots2)]
            agree = all(d is None for d in diffs)
            order = min(min(a.precision, b.precision) for a, b in zip(roots1, roots2))
            need = Kreq(k, alpha)
            rung = Rung(k, alpha, need, need is not None and K >= need, agree, order)
            dps = polys(k, alpha)
            shared = True
            for j, dp in enumerate(dps):
                val = dp.restricted_poly().evaluate(roots2[j]) if dp.degree >= 1 else dp.restricted[0]
                if not val.is_zero():
                    shared = False
            rung.shared_root = shared
            rung.separation = sep(k, alpha)
            if rung.separation is not None:
                m = rung.separation
                rung.jets_agree = all(d is None or d > m for d in diffs)
            rungs.append(rung)
            if not agree and first is None:
                first = (k, alpha)

    direct = _jet_agreement(H1, H2)
    direct_order = min(H1.precision, H2.precision) if direct is None else direct
    conclusion, c_order = "inconclusive", None
    if first is None:
        ft = finite_type_test(M)
        if ft.finite_type and ft.k1 is not None and ft.k1 <= k_max:
            v = chain(M, ft.k1)
            Zv = list(v[:N])
            order = min(c.compose(Zv).precision for c in H1.components)
            c_order = _injective_through(Zv, order, N)
            conclusion = "maps agree"
        else:
            conclusion = "ladder agrees; finite type not reached"
    else:
        conclusion = "maps differ"
    used = {(x.k, x.alpha): x.K_required for x in rungs}
    return DeterminationReport(K, jets_to, r, used, rungs, first, conclusion, c_order, direct_order)
