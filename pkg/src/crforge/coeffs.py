"""Exact Gaussian rationals used as series coefficients."""

from __future__ import annotations

from fractions import Fraction

from gmpy2 import mpq


def _to_mpq(x) -> mpq:
    if isinstance(x, str):
        return mpq(Fraction(x).numerator, Fraction(x).denominator)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


class ComplexRational:
    """An exact number ``re + i*im`` with rational parts in lowest terms."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _to_mpq(re)
        self.im = _to_mpq(im)

    @staticmethod
    def _raw(re: mpq, im: mpq) -> "ComplexRational":
        obj = object.__new__(ComplexRational)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def coerce(cls, x) -> "ComplexRational":
        if isinstance(x, ComplexRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(x, 0)

    def __add__(self, other):
        o = ComplexRational.coerce(other)
        return ComplexRational._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = ComplexRational.coerce(other)
        return ComplexRational._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return ComplexRational.coerce(other) - self

    def __mul__(self, other):
        o = ComplexRational.coerce(other)
        return ComplexRational._raw(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __neg__(self):
        return ComplexRational._raw(-self.re, -self.im)

    def inverse(self) -> "ComplexRational":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return ComplexRational._raw(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * ComplexRational.coerce(other).inverse()

    def __rtruediv__(self, other):
        return ComplexRational.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        result = ONE
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(k)):
            result = result * base
        return result

    def conjugate(self) -> "ComplexRational":
        return ComplexRational._raw(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        try:
            o = ComplexRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"ComplexRational({self.format_part(self.re)!r}, {self.format_part(self.im)!r})"

    def __str__(self):
        if self.im == 0:
            return self.format_part(self.re)
        if self.re == 0:
            return f"{self.format_part(self.im)}*i"
        return f"({self.format_part(self.re)}{'+' if self.im > 0 else '-'}{self.format_part(abs(self.im))}*i)"

    @staticmethod
    def format_part(q: mpq) -> str:
        """Lowest-terms decimal string ``p`` or ``p/q``."""
        q = mpq(q)
        if q.denominator == 1:
            return str(q.numerator)
        return f"{q.numerator}/{q.denominator}"

    @classmethod
    def parse(cls, re: str, im: str) -> "ComplexRational":
        return cls(_parse_rational(re), _parse_rational(im))


def _parse_rational(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        p, q = text.split("/")
        if int(q) <= 0:
            raise ValueError(f"denominator must be positive in {text!r}")
        return Fraction(int(p), int(q))
    return Fraction(int(text))


ZERO = ComplexRational(0, 0)
ONE = ComplexRational(1, 0)
I = ComplexRational(0, 1)


def cq(re=0, im=0) -> ComplexRational:
    """Shorthand constructor."""
    return ComplexRational(re, im)
