from fractions import Fraction

import pytest
from hypothesis import given

from crforge.coeffs import I, ONE, ZERO, ComplexRational, cq
from strategies import coefficients


def test_lowest_terms_and_positive_denominator():
    c = ComplexRational(Fraction(4, -6), Fraction(2, 4))
    assert ComplexRational.format_part(c.re) == "-2/3"
    assert ComplexRational.format_part(c.im) == "1/2"


def test_parse_round_trip():
    c = ComplexRational.parse("6/4", "-3")
    assert c == cq(Fraction(3, 2), -3)
    assert ComplexRational.parse(ComplexRational.format_part(c.re), ComplexRational.format_part(c.im)) == c


def test_parse_rejects_nonpositive_denominator():
    with pytest.raises(ValueError):
        ComplexRational.parse("1/-2", "0")
    with pytest.raises(ValueError):
        ComplexRational.parse("1/0", "0")


def test_i_squared():
    assert I * I == -ONE
    assert (cq(1, 2) * cq(1, -2)) == cq(5)


def test_inverse_of_zero_fails():
    with pytest.raises(ZeroDivisionError):
        ZERO.inverse()


@given(coefficients, coefficients, coefficients)
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    if not a.is_zero():
        assert a * a.inverse() == ONE


@given(coefficients, coefficients)
def test_conjugation_is_multiplicative(a, b):
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    assert a.conjugate().conjugate() == a
