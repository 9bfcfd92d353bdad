import pytest

from crforge.coeffs import cq
from crforge.fixtures import MANIFOLDS, rational_hypersurface_defining, flat_extension, product_modulus, split_signature, heisenberg
from crforge.geometry import (
    DefiningData,
    GenericSubmanifoldNF,
    cr_basis,
    defining_from_normal_form,
    essential_finiteness_test,
    essential_generators,
    essential_generators_general,
    finite_type_test,
    ideal_generators,
    normalize,
    reduce_mod_M,
    segre_jet,
    segre_map,
    tangential_frame,
    verify_segre_identity,
)
from crforge.ideal import staircase_codim, verify_curve
from crforge.series import SeriesTuple, TruncatedSeries

T = TruncatedSeries
TWO_I = cq(0, 2)
HALF_I_INV = cq(0, 2).inverse()


def ambient(M):
    return [M.ambient_var(i) for i in range(2 * M.N)]


def heisenberg_defining(D=8):
    z, w, chi, tau = [T.variable(i, 4, D) for i in range(4)]
    return DefiningData(2, 1, SeriesTuple([(w - tau).scale(HALF_I_INV) - z * chi]), "heis")


# -- normalization ----------------------------------------------------------------


def test_normalize_heisenberg():
    M, change = normalize(heisenberg_defining())
    assert M.Q[0] == heisenberg().Q[0]
    assert change.straighten is None


def test_normalize_flat_extension():
    D = 8
    z, w1, w2, chi, t1, t2 = [T.variable(i, 6, D) for i in range(6)]
    data = DefiningData(3, 2, SeriesTuple([(w1 - t1).scale(HALF_I_INV) - z * chi, (w2 - t2).scale(HALF_I_INV)]))
    M, _ = normalize(data)
    ref = flat_extension(D)
    assert all(a == b for a, b in zip(M.Q, ref.Q))


def test_normal_form_input_is_unchanged():
    for name in ("heisenberg", "ex29", "ex212", "ex215"):
        ref = MANIFOLDS[name](6)
        M, change = normalize(defining_from_normal_form(ref))
        assert change.permutation == list(range(ref.N))
        assert all(a == b for a, b in zip(M.Q, ref.Q))


def test_normalize_rational_hypersurface():
    M, _ = normalize(rational_hypersurface_defining(6))
    assert M.n == 2 and M.d == 1
    assert not M.normality_defects() and not M.reality_defects()


def test_non_real_defining_data_names_coefficient():
    z, w, chi, tau = [T.variable(i, 4, 4) for i in range(4)]
    bad = DefiningData(2, 1, SeriesTuple([(w - tau).scale(HALF_I_INV) - (z * chi).scale(cq(0, 1))]))
    with pytest.raises(ValueError, match="not real.*exponent"):
        bad.validate()


def test_non_generic_defining_data():
    z, w, chi, tau = [T.variable(i, 4, 4) for i in range(4)]
    with pytest.raises(ValueError, match="dependent"):
        DefiningData(2, 1, SeriesTuple([z * chi])).validate()


# -- generators and reduction -----------------------------------------------------


def test_heisenberg_generators():
    M = heisenberg()
    z, w, chi, tau = ambient(M)
    assert ideal_generators(M, "holo")[0] == w - tau - (z * chi).scale(TWO_I)
    assert ideal_generators(M, "antiholo")[0] == tau - w + (z * chi).scale(TWO_I)
    assert len(ideal_generators(flat_extension(), "holo")) == 2
    assert len(ideal_generators(flat_extension(), "antiholo")) == 2


def test_reduce_examples():
    M = heisenberg()
    z, w, chi, tau = ambient(M)
    assert reduce_mod_M(w - tau - (z * chi).scale(TWO_I), M).is_zero()
    x = [T.variable(i, 3, 8) for i in range(3)]
    assert reduce_mod_M(w, M) == x[2] + (x[0] * x[1]).scale(TWO_I)


@pytest.mark.parametrize("name", sorted(MANIFOLDS))
def test_cross_family_reduction(name):
    M = MANIFOLDS[name](6)
    for g in ideal_generators(M, "antiholo"):
        assert reduce_mod_M(g, M).is_zero()


# -- vector fields ----------------------------------------------------------------


def test_heisenberg_cr_field():
    M = heisenberg()
    (L,) = cr_basis(M)
    z = M.ambient_var(0)
    assert (L.coeffs[2] - 1).is_zero()
    assert L.coeffs[3] == z.scale(cq(0, -2))
    assert L.type_consistent(M.N)
    assert L.apply(ideal_generators(M, "antiholo")[0]).is_zero()


def test_heisenberg_tangential_frame():
    S = tangential_frame(heisenberg_defining())
    chi = T.variable(2, 4, 8)
    assert (S[0].coeffs[0] - 1).is_zero()
    assert S[0].coeffs[3] == chi.scale(cq(0, -2))
    z = T.variable(0, 4, 8)
    assert (S[0].apply(S[0].apply(z * z)) - 2).is_zero()


def test_tangential_frame_annihilates_rho():
    data = heisenberg_defining()
    for S in tangential_frame(data):
        assert S.apply(data.rho[0]).is_zero()


@pytest.mark.parametrize("name", sorted(MANIFOLDS))
def test_cr_fields_are_tangent(name):
    M = MANIFOLDS[name](6)
    for L in cr_basis(M):
        for form in ("holo", "antiholo"):
            for g in ideal_generators(M, form):
                assert reduce_mod_M(L.apply(g), M).is_zero()


def test_cr_fields_commute_on_two_dimensional_fixture():
    M = split_signature(6)
    L1, L2 = cr_basis(M)
    for i in range(2 * M.N):
        x = M.ambient_var(i)
        bracket = L1.apply(L2.apply(x)) - L2.apply(L1.apply(x))
        assert reduce_mod_M(bracket, M).is_zero()


# -- Segre maps -------------------------------------------------------------------


def test_first_segre_map():
    for name in ("heisenberg", "ex29", "ex212", "ex215"):
        M = MANIFOLDS[name]()
        v = segre_map(M, 1)
        for i in range(M.n):
            assert v[i] == T.variable(i, M.n, M.precision)
        assert all(c.is_zero() for c in list(v)[M.n:])


def test_heisenberg_segre_maps():
    M = heisenberg()
    z, c = T.variable(0, 2, 8), T.variable(1, 2, 8)
    v2 = segre_map(M, 2)
    assert v2[0] == z and v2[1] == (z * c).scale(TWO_I)
    # sympy: Q(z, c1, Qbar(c1, z1, 0)) = 2i c1 z - 2i c1 z1
    z0, c1, z1 = [T.variable(i, 3, 8) for i in range(3)]
    v3 = segre_map(M, 3)
    assert v3[1] == ((z0 - z1) * c1).scale(TWO_I)


@pytest.mark.parametrize("name", sorted(MANIFOLDS))
@pytest.mark.parametrize("k", range(5))
def test_segre_identity(name, k):
    M = MANIFOLDS[name](6)
    assert verify_segre_identity(M, k)


def corrupted_heisenberg():
    M = heisenberg()
    x = [T.variable(i, 3, 8) for i in range(3)]
    return GenericSubmanifoldNF(1, 1, SeriesTuple([M.Q[0] + (x[0] ** 2 * x[1]).scale(cq(0, 1))]), "bad")


def test_corrupted_q_fails_segre_identity():
    bad = corrupted_heisenberg()
    assert not all(verify_segre_identity(bad, k) for k in range(1, 5))
    assert bad.reality_defects()


# -- finite type ------------------------------------------------------------------


def test_heisenberg_finite_type():
    rep = finite_type_test(heisenberg())
    assert rep.status == "yes" and rep.k1 == 2
    assert rep.ranks[1] == 1 and rep.ranks[2] == 2
    cert = rep.certificates[2].certificate
    # Jacobian of (z, 2iz chi) has determinant 2iz (sympy) with columns (z, chi)
    assert cert.minor == cq(0, 2) * cert.point[0]
    pt = rep.rank_point
    assert pt is not None and pt.rank == 2
    val, _ = segre_jet(heisenberg(), pt.k, pt.point)
    assert all(v.is_zero() for v in val)


def test_flat_extension_not_finite_type():
    rep = finite_type_test(flat_extension())
    assert rep.status == "no_up_to"
    assert all(rep.certificates[k].exact for k in (1, 2, 3))
    assert max(rep.ranks.values()) <= 2


def test_product_modulus_finite_type():
    assert finite_type_test(product_modulus()).finite_type


@pytest.mark.parametrize("name", sorted(MANIFOLDS))
def test_ranks_nondecreasing(name):
    ranks = finite_type_test(MANIFOLDS[name](6)).ranks
    ks = sorted(ranks)
    assert all(ranks[a] <= ranks[b] for a, b in zip(ks, ks[1:]))


# -- essential finiteness ---------------------------------------------------------


def test_heisenberg_essential_generators():
    gens = [g for g in essential_generators(heisenberg()) if not g.series.is_zero()]
    assert len(gens) == 1
    assert gens[0].alpha == (1,)
    assert gens[0].series == T.variable(0, 1, 7).scale(cq(0, -2))


def test_product_modulus_generators_are_multiples():
    for g in essential_generators(product_modulus()):
        s = g.series
        for e in s.terms:
            assert e[0] >= 1 and e[1] >= 1


def test_split_signature_generators_contain_coordinates():
    found = {g.alpha: g.series for g in essential_generators(split_signature())}
    assert found[(1, 0)] == T.variable(0, 2, 7).scale(cq(0, -2))
    assert found[(0, 1)] == T.variable(1, 2, 7).scale(cq(0, 2))


def test_essential_verdicts():
    heis = essential_finiteness_test(heisenberg())
    assert heis.essentially_finite and heis.staircase.codim == 1
    assert essential_finiteness_test(flat_extension()).essentially_finite
    rep = essential_finiteness_test(product_modulus())
    assert rep.status == "undetermined"
    assert rep.curve is not None and rep.curve.exponents() == [1, None]
    nonzero = [g.series for g in rep.generators if not g.series.is_zero()]
    assert verify_curve(nonzero, rep.curve, rep.curve.order)


@pytest.mark.parametrize("name", ["heisenberg", "ex29", "ex212", "ex215"])
def test_route_agreement(name):
    M = MANIFOLDS[name](6)
    nf = [g.series for g in essential_generators(M, 3) if not g.series.is_zero()]
    general = essential_generators_general(defining_from_normal_form(M), 3)
    gen = [g.series.set_zero(range(M.n, M.N)).restrict(list(range(M.n))) for g in general]
    gen = [g for g in gen if not g.is_zero() and g.constant_term().is_zero()]
    a = staircase_codim(nf, 4)
    b = staircase_codim(gen, 4)
    assert (a.finite, a.codim) == (b.finite, b.codim)
