import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crforge.coeffs import cq
from crforge.fixtures import (
    dilation,
    flat_extension,
    product_modulus,
    split_signature,
    heisenberg,
    heisenberg_automorphism,
    flat_shift_map,
    exponential_twist_map,
    diagonal_map,
    negative_control,
)
from crforge.geometry import GenericSubmanifoldNF
from crforge.mapping import (
    FormalMapNF,
    check_sends,
    compose_maps,
    finite_map_test,
    find_relation,
    hypersurface_dichotomy,
    identity_map,
    kernel_vector_field,
    segre_injectivity_test,
    segre_restriction,
    total_degeneracy_test,
)
from crforge.series import SeriesTuple, TruncatedSeries

T = TruncatedSeries


def flat_target(D=8):
    """``Im w = 0`` in two variables, which contains the line ``w = 0``."""
    return GenericSubmanifoldNF(1, 1, SeriesTuple([T.variable(2, 3, D)]), "flat")


# -- sending M into M' ------------------------------------------------------------


@pytest.mark.parametrize(
    "source, target, build",
    [
        (heisenberg, heisenberg, lambda: identity_map(1, 1, 8)),
        (heisenberg, heisenberg, lambda: dilation(2)),
        (flat_extension, flat_extension, flat_shift_map),
        (product_modulus, product_modulus, exponential_twist_map),
        (split_signature, split_signature, diagonal_map),
    ],
)
def test_fixture_maps_send(source, target, build):
    rep = check_sends(source(), target(), build())
    assert rep.sends and rep.order == 8
    assert rep.first_defect() is None


def test_negative_control_residual():
    rep = check_sends(heisenberg(), heisenberg(), negative_control())
    assert not rep.sends
    z, chi, tau = [T.variable(i, 3, 8) for i in range(3)]
    # sympy: (tau + tau^2) - (w + w^2 - 2i chi z) with w = tau + 2i z chi
    expected = (z * z * chi * chi).scale(4) - (z * chi * tau).scale(cq(0, 4))
    assert rep.residuals[0] == expected
    j, (e, c) = rep.first_defect()
    assert j == 0 and sum(e) == 3


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        check_sends(heisenberg(), flat_extension(), identity_map(1, 1, 8))


def test_map_must_vanish_at_origin():
    one = T.constant(1, 2, 4)
    with pytest.raises(ValueError, match="origin"):
        FormalMapNF(SeriesTuple([one]), SeriesTuple([T.zero(2, 4)]), (1, 1), (1, 1))


def test_dilations_compose():
    H = compose_maps(dilation(2), dilation(3))
    ref = dilation(6)
    assert H.F[0] == ref.F[0] and H.G[0] == ref.G[0]


@settings(max_examples=12, deadline=None)
@given(
    st.sampled_from([1, 2, -1, cq(0, 1), cq(1, 1)]),
    st.sampled_from([0, 1, cq(0, 1)]),
    st.integers(-2, 2),
    st.sampled_from([1, 3, cq(1, -1)]),
    st.integers(-1, 1),
)
def test_automorphisms_compose_to_automorphisms(lam, a, r, lam2, r2):
    D = 6
    M = heisenberg(D)
    first = heisenberg_automorphism(lam, a, r, D)
    second = heisenberg_automorphism(lam2, 0, r2, D)
    assert check_sends(M, M, first).sends
    assert check_sends(M, M, compose_maps(first, second)).sends


# -- Segre homomorphism -----------------------------------------------------------


def test_identity_is_injective():
    rep = segre_injectivity_test(heisenberg(), heisenberg(), identity_map(1, 1, 8))
    assert rep.status == "injective" and rep.relation is None


def test_ex214_is_injective():
    assert segre_injectivity_test(product_modulus(), product_modulus(), exponential_twist_map()).status == "injective"


def test_ex217_relation():
    f = segre_restriction(diagonal_map())
    # F(z, 0) = (f(z1), f(z1)) with leading term z1 in both components
    assert f[0] == f[1] and f[0].order() == 1
    rep = segre_injectivity_test(split_signature(), split_signature(), diagonal_map())
    assert rep.status == "not_injective"
    x1, x2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    assert rep.relation == x1 - x2
    assert rep.relation.compose(list(f)).is_zero()


def test_find_relation_polynomial():
    z1, z2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    f = SeriesTuple([z1, z1 * z2, z1 * z1 * z2])
    h = find_relation(f, 3)
    assert h is not None and h.compose(list(f)).is_zero()
    y1, y2, y3 = [T.variable(i, 3, 8) for i in range(3)]
    assert h == y3 - y1 * y2


def test_no_relation_for_independent_components():
    z1, z2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    assert find_relation(SeriesTuple([z1, z2]), 3) is None


# -- finite maps and degeneracy ---------------------------------------------------


def test_finite_map_examples():
    z1, z2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    assert finite_map_test(SeriesTuple([z1, z2]), 4).staircase.codim == 1
    rep = finite_map_test(SeriesTuple([z1 * z1, z2 ** 3]), 6)
    assert rep.finite and rep.staircase.codim == 6
    bad = finite_map_test(SeriesTuple([z1 * z2, z1 * z1]), 6)
    assert not bad.finite
    assert bad.curve is not None and bad.curve.exponents() == [None, 1]


def test_total_degeneracy():
    assert total_degeneracy_test(split_signature(), split_signature(), diagonal_map()).degenerate
    rep = total_degeneracy_test(product_modulus(), product_modulus(), exponential_twist_map())
    assert not rep.degenerate
    assert (rep.determinant.constant_term() - 1).is_zero()


def test_kernel_vector_field():
    f = segre_restriction(diagonal_map())
    X = kernel_vector_field(f)
    assert X is not None
    assert X.coeffs[0].is_zero() and not X.coeffs[1].is_zero()
    z1, z2 = T.variable(0, 2, 8), T.variable(1, 2, 8)
    assert kernel_vector_field(SeriesTuple([z1, z2])) is None
    Y = kernel_vector_field(SeriesTuple([z1 * z2]), 1)
    assert Y.apply(z1 * z2).is_zero()


# -- hypersurface dichotomy -------------------------------------------------------


def test_dichotomy_injective():
    out = hypersurface_dichotomy(heisenberg(), heisenberg(), dilation(2))
    assert out.outcome == "segre_injective"
    assert "codimension 1" in out.evidence


def test_dichotomy_zero_map():
    zero = T.zero(2, 8)
    H = FormalMapNF(SeriesTuple([zero]), SeriesTuple([zero]), (1, 1), (1, 1))
    assert hypersurface_dichotomy(heisenberg(), heisenberg(), H).outcome == "zero_map"


def test_dichotomy_violation():
    z = T.variable(0, 2, 8)
    H = FormalMapNF(SeriesTuple([z]), SeriesTuple([T.zero(2, 8)]), (1, 1), (1, 1))
    out = hypersurface_dichotomy(heisenberg(), flat_target(), H)
    assert out.outcome == "violation"


def test_dichotomy_preconditions():
    with pytest.raises(ValueError, match="hypersurfaces"):
        hypersurface_dichotomy(flat_extension(), flat_extension(), identity_map(1, 2, 8))
    with pytest.raises(ValueError, match="does not send"):
        hypersurface_dichotomy(heisenberg(), heisenberg(), negative_control())
