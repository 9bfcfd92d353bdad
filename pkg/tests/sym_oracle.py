"""Conversions between truncated series and sympy expressions, used as an independent oracle."""

from __future__ import annotations

import sympy as sp

from crforge.coeffs import ComplexRational
from crforge.series import TruncatedSeries


def rational(q) -> sp.Rational:
    return sp.Rational(int(q.numerator), int(q.denominator))


def to_sympy(s: TruncatedSeries, syms) -> sp.Expr:
    out = sp.Integer(0)
    for e, c in s.terms.items():
        mono = sp.Integer(1)
        for x, k in zip(syms, e):
            mono *= x**k
        out += (rational(c.re) + sp.I * rational(c.im)) * mono
    return out


def truncate(expr, syms, D: int) -> sp.Expr:
    poly = sp.Poly(sp.expand(expr), *syms)
    return sum(
        (c * sp.prod([x**k for x, k in zip(syms, e)]) for e, c in poly.terms() if sum(e) <= D),
        sp.Integer(0),
    )


def from_sympy(expr, syms, D: int) -> TruncatedSeries:
    poly = sp.Poly(sp.expand(expr), *syms)
    terms = {}
    for e, c in poly.terms():
        if sum(e) > D:
            continue
        re, im = sp.re(c), sp.im(c)
        terms[e] = ComplexRational(
            _frac(re), _frac(im)
        )
    return TruncatedSeries(len(syms), D, terms)


def _frac(q):
    from fractions import Fraction

    q = sp.Rational(q)
    return Fraction(int(q.p), int(q.q))


def same(s: TruncatedSeries, expr, syms) -> bool:
    """``s`` equals ``expr`` through the precision of ``s``."""
    return sp.expand(to_sympy(s, syms) - truncate(expr, syms, s.precision)) == 0
