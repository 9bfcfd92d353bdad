import copy
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crforge.coeffs import cq
from crforge.fixtures import (
    MANIFOLDS,
    dilation,
    flat_extension,
    split_signature,
    heisenberg,
    heisenberg_automorphism,
    flat_shift_map,
    diagonal_map,
    negative_control,
)
from crforge.mapping import identity_map
from crforge.reflection import (
    HypothesisFailure,
    JetOracle,
    build_reflection_system,
    chain_agreement,
    convergence_ledger,
    coordinate_fields,
    derived_polynomial,
    discriminant,
    expand_reflection,
    leibniz_A,
    leibniz_coefficients,
    leibniz_direct,
    leibniz_expanded,
    leibniz_regrouped,
    pick_r,
    reflection_identities,
    reflection_residuals,
    same_coefficients,
    scaling_factor,
    separation_order,
    verify_reflection,
)
from crforge.series import PolyInX, TruncatedSeries

from strategies import series

T = TruncatedSeries


# -- expansion and jet order ------------------------------------------------------


def test_heisenberg_expansion():
    exp = expand_reflection(heisenberg())
    z = T.variable(0, 1, 7)
    assert exp.coefficients[(1,)][0] == z.scale(cq(0, -2))
    assert (exp.remainder[0][0] - 1).is_zero()


@pytest.mark.parametrize("name", ["heisenberg", "ex29", "ex212", "ex215"])
def test_expansion_reconstructs(name):
    Mp = MANIFOLDS[name]()
    exp = expand_reflection(Mp)
    w_block = range(2 * Mp.n, Mp.N + Mp.n)
    for l, qb in enumerate(Mp.q_bar()):
        at0 = qb.set_zero(w_block).restrict(list(range(2 * Mp.n)))
        rec = exp.reconstruct(l)
        assert rec.equals_through(at0, rec.precision)


def test_pick_r():
    assert pick_r(heisenberg(), identity_map(1, 1, 8)).r == 1
    assert pick_r(flat_extension(), flat_shift_map()).r == 1
    with pytest.raises(HypothesisFailure, match="Segre injectivity"):
        pick_r(split_signature(), diagonal_map())


def test_system_restricts_to_jet_generators():
    M = heisenberg()
    system = build_reflection_system(M, M, dilation(2), 1)
    assert system.nonzero()
    assert set(system.relations) == {((0,), 0), ((1,), 0)}


# -- identities -------------------------------------------------------------------


@pytest.mark.parametrize(
    "source, build",
    [(heisenberg, lambda: identity_map(1, 1, 8)), (heisenberg, lambda: dilation(2)), (flat_extension, flat_shift_map)],
)
def test_identities_verify(source, build):
    M, H = source(), build()
    ident = reflection_identities(M, M, H)
    assert ident.r == 1
    assert all(d == 1 for d in ident.degrees)
    check = reflection_residuals(M, ident, H)
    assert check.ok and check.order >= 7


def test_corrupted_identity_fails():
    M, H = heisenberg(), dilation(2)
    ident = reflection_identities(M, M, H)
    bad = copy.deepcopy(ident)
    c = bad.components[0].coeffs[0]
    bad.components[0].coeffs[0] = c + T.monomial([1] + [0] * (c.nvars - 1), c.precision)
    assert not verify_reflection(M, bad, H)


def test_identities_need_a_sending_map():
    M = heisenberg()
    with pytest.raises(ArithmeticError):
        reflection_identities(M, M, negative_control())


def test_jet_stability():
    # automorphisms with r = 1 and r = 2 share their 1-jet with the identity
    M = heisenberg()
    base = reflection_identities(M, M, identity_map(1, 1, 8))
    for r in (1, 2):
        H = heisenberg_automorphism(r=r)
        ident = reflection_identities(M, M, H)
        assert same_coefficients(base, ident)
    assert not same_coefficients(base, reflection_identities(M, M, dilation(2)))


# -- Leibniz expansions -----------------------------------------------------------

multi2 = st.tuples(st.integers(0, 2), st.integers(0, 2))


@st.composite
def leibniz_instances(draw):
    D = 6
    J = draw(st.integers(1, 3))
    coeffs = [draw(series(2, D, max_terms=3)) for _ in range(J)] + [T.constant(1, 2, D)]
    h = draw(series(2, D, max_terms=3))
    gamma = draw(multi2.filter(any))
    alpha = draw(multi2.filter(any))
    return PolyInX(coeffs), h, gamma, alpha


@settings(max_examples=100, deadline=None)
@given(leibniz_instances())
def test_leibniz_resums(inst):
    P, h, gamma, alpha = inst
    S = coordinate_fields(2, 6)
    direct = leibniz_direct(P, gamma, h, S)
    assert leibniz_expanded(P, gamma, h, S) == direct
    assert leibniz_regrouped(P, alpha, gamma, h, S) == direct


def test_leibniz_table_example():
    x1, x2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    P = PolyInX([x1 * x2 + x2, x1 + x1 * x1, T.constant(1, 2, 8)])
    tab = leibniz_coefficients(P, (1, 0), (1, 0), x1 + x2 * x2, coordinate_fields(2, 8))
    # sympy: d/dx1 of P(h) with h = x1 + x2^2, split at the h_{x1} term
    assert tab.constant == x1 + x2 + (x1 * x1).scale(2) + x2 * x2 + (x1 * x2 * x2).scale(2)
    assert tab.terms == {((1, 0),): x1.scale(3) + x1 * x1 + (x2 * x2).scale(2)}


@pytest.mark.parametrize("J", [1, 2, 3])
@pytest.mark.parametrize("alpha", [(1, 0), (0, 1), (1, 1), (2, 0), (2, 1)])
def test_top_coefficient_constant(J, alpha):
    x1, x2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    P = PolyInX([x1 * x2] + [x1] * (J - 1) + [T.constant(1, 2, 8)])
    oracle = JetOracle(P, x1 + x2 * x2, coordinate_fields(2, 8))
    top = tuple(J * a for a in alpha)
    A = leibniz_A(oracle, top, alpha, (alpha,) * J)
    afact = factorial(alpha[0]) * factorial(alpha[1])
    expected = factorial(top[0]) * factorial(top[1]) // afact ** J
    assert (A - expected).is_zero()


@settings(max_examples=40, deadline=None)
@given(multi2.filter(any), st.lists(multi2, min_size=1, max_size=2), st.data())
def test_scaling_factor(alpha, extra, data):
    nus = [tuple(a + b for a, b in zip(alpha, e)) for e in extra]
    rest = data.draw(multi2)
    gamma0 = tuple(r + sum(nu[i] for nu in nus) for i, r in enumerate(rest))
    x1, x2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    P = PolyInX([x1 * x2 + x2, x1, x2, T.constant(1, 2, 8)])
    oracle = JetOracle(P, x1 * x1 + x2, coordinate_fields(2, 8))
    j = len(nus)
    gamma1 = tuple(r + j * a for r, a in zip(rest, alpha))
    lhs = leibniz_A(oracle, gamma0, alpha, tuple(nus))
    rhs = leibniz_A(oracle, gamma1, alpha, (alpha,) * j)
    assert lhs == rhs.scale(scaling_factor(gamma0, alpha, nus))


# -- derived polynomials ----------------------------------------------------------


def test_derived_polynomial_linear():
    x1 = T.variable(0, 2, 8)
    P = PolyInX([-(x1 * x1), T.zero(2, 8), T.constant(1, 2, 8)])
    v = [T.variable(0, 1, 8), T.zero(1, 8)]
    dp = derived_polynomial(P, x1, coordinate_fields(2, 8), v, (1, 0))
    assert dp.provenance["kind"] == "linear" and dp.gamma0 == (1, 0)
    assert dp.coeffs == [x1.scale(-2), x1.scale(2)]


def test_derived_polynomial_search():
    zero = T.zero(2, 8)
    P = PolyInX([zero, zero, T.constant(1, 2, 8)])
    v = [T.zero(1, 8), T.zero(1, 8)]
    dp = derived_polynomial(P, zero, coordinate_fields(2, 8), v, (1, 0))
    assert dp.provenance["kind"] == "search" and dp.gamma0 == (2, 0)
    assert [c.to_str() for c in dp.coeffs] == ["0", "0", "2"]


def test_derived_polynomial_base():
    x1 = T.variable(0, 2, 8)
    P = PolyInX([-x1, T.constant(1, 2, 8)])
    dp = derived_polynomial(P, x1, coordinate_fields(2, 8), [T.variable(0, 1, 8)] * 2, (0, 0))
    assert dp.provenance["kind"] == "base" and dp.degree == 1


# -- separation order -------------------------------------------------------------


def test_separation_order_examples():
    x1 = T.variable(0, 2, 8)
    one = T.constant(1, 2, 8)
    zero = T.zero(2, 8)
    P = PolyInX([-(x1 * x1), zero, one])
    # sympy: discriminant of X^2 - x1^2 is 4 x1^2 up to sign
    assert discriminant(P).order() == 2
    assert separation_order(P) == 5
    assert separation_order(PolyInX([zero, zero, one])) == 1
    assert separation_order(PolyInX([x1, one])) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2), st.integers(-3, 3).filter(bool), st.integers(-3, 3))
def test_separation_exceeds_root_gap(t, c, shift):
    x1, x2 = T.variable(0, 2, 10), T.variable(1, 2, 10)
    a = x2.scale(shift) + x1
    b = a + (x1 ** t).scale(c)
    P = PolyInX([a * b, -(a + b), T.constant(1, 2, 10)])
    m = separation_order(P)
    gap = (a - b).order()
    assert m == 4 * gap + 1
    assert m > gap


# -- ledgers ----------------------------------------------------------------------


def test_small_ledger():
    M = heisenberg()
    led = convergence_ledger(M, M, dilation(2), k_max=2, alpha_max=1)
    assert led.all_verified
    assert len(led.rungs) == 2 * 3 + 2 * 2 * 3
    assert {x.kind for x in led.rungs} <= {"constant", "base", "linear", "search"}


def test_ledger_refuses_non_injective_map():
    M = split_signature()
    with pytest.raises(HypothesisFailure):
        convergence_ledger(M, M, diagonal_map(), k_max=1)


def test_chain_agreement_cases():
    M = heisenberg()
    r1, r2 = heisenberg_automorphism(r=1), heisenberg_automorphism(r=2)
    rep = chain_agreement(M, M, r1, r2, K=1)
    assert rep.first_disagreement == (1, (0, 1))
    assert rep.conclusion == "maps differ"
    same = chain_agreement(M, M, r1, heisenberg_automorphism(r=1), K=2)
    assert same.all_agree and same.conclusion == "maps agree"
    ident = identity_map(1, 1, 8)
    rep = chain_agreement(M, M, ident, dilation(2), K=0)
    assert rep.first_disagreement == (1, (0, 0))


def test_chain_agreement_rejects_low_jet_agreement():
    M = heisenberg()
    with pytest.raises(HypothesisFailure, match="jets agree only"):
        chain_agreement(M, M, heisenberg_automorphism(r=1), heisenberg_automorphism(r=2), K=2)
