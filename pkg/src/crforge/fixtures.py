"""Builders for the bundled manifolds and maps.

Every builder takes the truncation order.  Polynomial fixtures are exact
at any order, so they can be rebuilt with headroom when a pipeline
consumes precision.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .coeffs import ONE, ComplexRational, cq
from .geometry import DefiningData, GenericSubmanifoldNF, normalize
from .mapping import FormalMapNF, identity_map
from .series import SeriesTuple, TruncatedSeries

T = TruncatedSeries
TWO_I = cq(0, 2)


def _nf(n: int, d: int, comps: list[dict], D: int, name: str) -> GenericSubmanifoldNF:
    return GenericSubmanifoldNF(n, d, SeriesTuple(T(2 * n + d, D, c) for c in comps), name)


def heisenberg(D: int = 8) -> GenericSubmanifoldNF:
    """``Im w = |z|^2``."""
    return _nf(1, 1, [{(0, 0, 1): 1, (1, 1, 0): TWO_I}], D, "heisenberg")


def flat_extension(D: int = 8) -> GenericSubmanifoldNF:
    """``Im w1 = |z|^2, Im w2 = 0`` in three variables."""
    return _nf(1, 2, [{(0, 0, 1, 0): 1, (1, 1, 0, 0): TWO_I}, {(0, 0, 0, 1): 1}], D, "ex29")


def product_modulus(D: int = 8) -> GenericSubmanifoldNF:
    """``Im w1 = |z1 z2|^2, Im w2 = |z1 z2|^4``."""
    return _nf(
        2, 2,
        [{(0, 0, 0, 0, 1, 0): 1, (1, 1, 1, 1, 0, 0): TWO_I},
         {(0, 0, 0, 0, 0, 1): 1, (2, 2, 2, 2, 0, 0): TWO_I}],
        D, "ex212",
    )


def split_signature(D: int = 8) -> GenericSubmanifoldNF:
    """``Im w1 = |z1|^2 - |z2|^2, Im w2 = |z1|^4 - |z2|^4``."""
    return _nf(
        2, 2,
        [{(0, 0, 0, 0, 1, 0): 1, (1, 0, 1, 0, 0, 0): TWO_I, (0, 1, 0, 1, 0, 0): -TWO_I},
         {(0, 0, 0, 0, 0, 1): 1, (2, 0, 2, 0, 0, 0): TWO_I, (0, 2, 0, 2, 0, 0): -TWO_I}],
        D, "ex215",
    )


def rational_hypersurface_cleared(D: int = 8) -> tuple[TruncatedSeries, TruncatedSeries]:
    """Cleared-denominator defining polynomial and the unit that was multiplied in.

    Ring ``(z1, z2, w, chi1, chi2, tau)``.  The hypersurface is
    ``Im w = |z1|^2 |1 + z1 bar z2|^2 / (1 + Re(z1 bar z2)) - Re w Im(z1 bar z2) / (1 + Re(z1 bar z2))``.
    """
    v = [T.variable(i, 6, D) for i in range(6)]
    z1, z2, w, c1, c2, tau = v
    half = cq("1/2")
    inv2i = TWO_I.inverse()
    unit = 1 + (z1 * c2 + c1 * z2).scale(half)
    im_w = (w - tau).scale(inv2i)
    re_w = (w + tau).scale(half)
    im_p = (z1 * c2 - c1 * z2).scale(inv2i)
    rho = unit * im_w - z1 * c1 * (1 + z1 * c2) * (1 + c1 * z2) + re_w * im_p
    return rho, unit


def rational_hypersurface_defining(D: int = 8) -> DefiningData:
    rho, unit = rational_hypersurface_cleared(D)
    return DefiningData(3, 1, SeriesTuple([rho * unit.invert_unit()]), "rational_hypersurface")


def rational_hypersurface(D: int = 8) -> GenericSubmanifoldNF:
    M, _ = normalize(rational_hypersurface_defining(D))
    M.name = "rational_hypersurface"
    return M


MANIFOLDS = {
    "heisenberg": heisenberg,
    "ex29": flat_extension,
    "ex212": product_modulus,
    "ex215": split_signature,
    "rational_hypersurface": rational_hypersurface,
}


# -- maps -----------------------------------------------------------------------


def dilation(lam: int, D: int = 8) -> FormalMapNF:
    """``(z, w) -> (lam z, lam^2 w)`` on the Heisenberg space."""
    z, w = T.variable(0, 2, D), T.variable(1, 2, D)
    return FormalMapNF(SeriesTuple([z.scale(lam)]), SeriesTuple([w.scale(lam * lam)]), (1, 1), (1, 1), f"dilation{lam}")


def negative_control(D: int = 8) -> FormalMapNF:
    """``(z, w) -> (z, w + w^2)``, which does not preserve the Heisenberg hypersurface."""
    z, w = T.variable(0, 2, D), T.variable(1, 2, D)
    return FormalMapNF(SeriesTuple([z]), SeriesTuple([w + w * w]), (1, 1), (1, 1), "negcontrol")


def factorial_series(nvars: int, var: int, start: int, D: int) -> TruncatedSeries:
    """``sum_{k=start}^{D} k! x^k``, the truncation of a divergent series."""
    terms = {}
    for k in range(start, D + 1):
        e = [0] * nvars
        e[var] = k
        terms[tuple(e)] = factorial(k)
    return T(nvars, D, terms)


def flat_shift_map(D: int = 8) -> FormalMapNF:
    """``(z, w1, w2) -> (z, w1, w2 + f(w2))`` with real divergent ``f``."""
    v = [T.variable(i, 3, D) for i in range(3)]
    f = factorial_series(3, 2, 2, D)
    return FormalMapNF(SeriesTuple([v[0]]), SeriesTuple([v[1], v[2] + f]), (1, 2), (1, 2), "ex211")


def _exp(s: TruncatedSeries) -> TruncatedSeries:
    out = T.constant(ONE, s.nvars, s.precision)
    term = out
    for k in range(1, s.precision + 1):
        term = (term * s).scale(ComplexRational(Fraction(1, k)))
        out = out + term
    return out


def exponential_twist_map(D: int = 8) -> FormalMapNF:
    """``(z1 e^f, z2 e^{-f}, w1, w2)`` with ``f(z1) = sum k! z1^k``."""
    v = [T.variable(i, 4, D) for i in range(4)]
    f = factorial_series(4, 0, 1, D)
    return FormalMapNF(
        SeriesTuple([v[0] * _exp(f), v[1] * _exp(-f)]), SeriesTuple([v[2], v[3]]), (2, 2), (2, 2), "ex214"
    )


def diagonal_map(D: int = 8) -> FormalMapNF:
    """``(f(z1), f(z1), 0, 0)``."""
    f = factorial_series(4, 0, 1, D)
    zero = T.zero(4, D)
    return FormalMapNF(SeriesTuple([f, f]), SeriesTuple([zero, zero]), (2, 2), (2, 2), "ex217")


def heisenberg_automorphism(lam=1, a=0, r=0, D: int = 8, name: str = "") -> FormalMapNF:
    """Truncated fractional-linear automorphism of ``Im w = |z|^2``.

    ``z* = lam (z + a w) / delta``, ``w* = |lam|^2 w / delta`` with
    ``delta = 1 - 2i conj(a) z - (r + i |a|^2) w`` and real ``r``.
    """
    lam, a, r = ComplexRational.coerce(lam), ComplexRational.coerce(a), ComplexRational.coerce(r)
    if r.im != 0:
        raise ValueError("r must be real")
    z, w = T.variable(0, 2, D), T.variable(1, 2, D)
    a2 = a * a.conjugate()
    delta = 1 - z.scale(TWO_I * a.conjugate()) - w.scale(r + cq(0, 1) * a2)
    inv = delta.invert_unit()
    F = (z + w.scale(a)).scale(lam) * inv
    G = w.scale(lam * lam.conjugate()) * inv
    return FormalMapNF(SeriesTuple([F]), SeriesTuple([G]), (1, 1), (1, 1), name or "automorphism")


def maps(D: int = 8) -> dict:
    return {
        "identity_heisenberg": (identity_map(1, 1, D), "heisenberg"),
        "dilation2": (dilation(2, D), "heisenberg"),
        "negcontrol": (negative_control(D), "heisenberg"),
        "identity_ex29": (identity_map(1, 2, D), "ex29"),
        "ex211": (flat_shift_map(D), "ex29"),
        "ex214": (exponential_twist_map(D), "ex212"),
        "ex217": (diagonal_map(D), "ex215"),
        "auto_r1": (heisenberg_automorphism(r=1, D=D, name="auto_r1"), "heisenberg"),
        "auto_r2": (heisenberg_automorphism(r=2, D=D, name="auto_r2"), "heisenberg"),
    }


EXACT_MANIFOLDS = {"heisenberg", "ex29", "ex212", "ex215"}


INEXACT_MAPS = {"ex214", "auto_r1", "auto_r2"}


def bundled_files(D: int = 8) -> dict:
    """File objects for every bundled manifold and map, keyed by name."""
    from .formats import ManifoldFile, MapFile

    out = {}
    for name, build in MANIFOLDS.items():
        if name == "rational_hypersurface":
            rho, unit = rational_hypersurface_cleared(D)
            data = DefiningData(3, 1, SeriesTuple([rho]), name)
            out[name] = ManifoldFile.from_defining(data, [unit], exact=True)
        else:
            out[name] = ManifoldFile.from_manifold(build(D), exact=name in EXACT_MANIFOLDS)
    for name, (H, manifold) in maps(D).items():
        H.name = name
        out[name] = MapFile.from_map(H, exact=name not in INEXACT_MAPS, manifold=manifold)
    return out
