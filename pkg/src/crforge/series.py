"""Exact truncated multivariate power series over the Gaussian rationals.

Every series carries a precision ``D``: the total degree through which its
coefficients are valid.  Operations record the guaranteed-valid order of
their result, so identities can always be stated "through order D".
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from . import linalg
from .coeffs import ONE, ZERO, ComplexRational

MultiIndex = tuple  # tuple[int, ...]


# ---------------------------------------------------------------------------
# Multi-index helpers
# ---------------------------------------------------------------------------


def grlex_key(alpha: Sequence[int]):
    """Graded-lexicographic sort key (total degree first, then lexicographic)."""
    return (sum(alpha), tuple(alpha))


def monomials(nvars: int, degree: int) -> list[MultiIndex]:
    """All exponent vectors of the given total degree, in graded-lex order."""
    if nvars == 0:
        return [()] if degree == 0 else []
    out = []
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    out.sort()
    return out


def monomials_upto(nvars: int, degree: int, start: int = 0) -> list[MultiIndex]:
    out = []
    for t in range(start, degree + 1):
        out.extend(monomials(nvars, t))
    return out


def factorial_multi(alpha: Sequence[int]) -> int:
    out = 1
    for a in alpha:
        for k in range(2, a + 1):
            out *= k
    return out


def leq(a: Sequence[int], b: Sequence[int]) -> bool:
    """Componentwise partial order."""
    return all(x <= y for x, y in zip(a, b))


def box(lo: Sequence[int], hi: Sequence[int]) -> list[MultiIndex]:
    """Multi-indices between ``lo`` and ``hi`` componentwise, graded-lex order."""
    ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
    return sorted(itertools.product(*ranges), key=grlex_key)


# ---------------------------------------------------------------------------
# Series
# ---------------------------------------------------------------------------


class TruncatedSeries:
    """Sparse multivariate power series truncated at total degree ``precision``.

    ``terms`` maps exponent tuples to :class:`ComplexRational`; zero
    coefficients and terms of degree above the precision are never stored.
    Instances are treated as immutable.
    """

    __slots__ = ("nvars", "precision", "terms")

    def __init__(self, nvars: int, precision: int, terms: Mapping | None = None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        self.nvars = nvars
        self.precision = precision
        clean = {}
        if terms:
            for e, c in terms.items():
                e = tuple(int(x) for x in e)
                if len(e) != nvars:
                    raise ValueError(f"exponent {e} has wrong length for {nvars} variables")
                if any(x < 0 for x in e):
                    raise ValueError(f"negative exponent {e}")
                if sum(e) > precision:
                    continue
                c = ComplexRational.coerce(c)
                if not c.is_zero():
                    clean[e] = c
        self.terms = clean

    @classmethod
    def _wrap(cls, nvars: int, precision: int, terms: dict) -> "TruncatedSeries":
        obj = object.__new__(cls)
        obj.nvars = nvars
        obj.precision = precision
        obj.terms = terms
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int, precision: int) -> "TruncatedSeries":
        return cls._wrap(nvars, precision, {})

    @classmethod
    def constant(cls, value, nvars: int, precision: int) -> "TruncatedSeries":
        return cls(nvars, precision, {(0,) * nvars: value})

    @classmethod
    def variable(cls, index: int, nvars: int, precision: int) -> "TruncatedSeries":
        e = [0] * nvars
        e[index] = 1
        return cls(nvars, precision, {tuple(e): ONE})

    @classmethod
    def monomial(cls, exponents: Sequence[int], precision: int, coeff=1) -> "TruncatedSeries":
        return cls(len(exponents), precision, {tuple(exponents): coeff})

    # -- inspection ---------------------------------------------------------

    def coefficient(self, exponents: Sequence[int]) -> ComplexRational:
        return self.terms.get(tuple(exponents), ZERO)

    def constant_term(self) -> ComplexRational:
        return self.terms.get((0,) * self.nvars, ZERO)

    def order(self) -> int | None:
        """Lowest total degree of a nonzero term, or ``None`` for zero."""
        if not self.terms:
            return None
        return min(sum(e) for e in self.terms)

    def max_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_zero(self, through: int | None = None) -> bool:
        """True when every coefficient through ``through`` (default: precision) vanishes."""
        limit = self.precision if through is None else min(through, self.precision)
        return all(sum(e) > limit for e in self.terms)

    def degree_in(self, var: int) -> int:
        if not self.terms:
            return -1
        return max(e[var] for e in self.terms)

    def variables_used(self) -> set[int]:
        used = set()
        for e in self.terms:
            for i, x in enumerate(e):
                if x:
                    used.add(i)
        return used

    def sorted_terms(self) -> list[tuple[MultiIndex, ComplexRational]]:
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def homogeneous_part(self, degree: int) -> "TruncatedSeries":
        return TruncatedSeries._wrap(
            self.nvars, self.precision, {e: c for e, c in self.terms.items() if sum(e) == degree}
        )

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"TruncatedSeries(nvars={self.nvars}, precision={self.precision}, {self.to_str()})"

    def to_str(self, names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        names = list(names) if names else [f"x{i + 1}" for i in range(self.nvars)]
        out = ""
        # degree ascending, then x1 before x2 within a degree
        for e, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), tuple(-k for k in kv[0]))):
            mono = "*".join(
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k
            )
            negative = str(c).startswith("-")
            a = -c if negative else c
            if not mono:
                body = str(a)
            elif a == ONE:
                body = mono
            else:
                body = f"{a}*{mono}"
            if not out:
                out = "-" + body if negative else body
            else:
                out += (" - " if negative else " + ") + body
        return out

    # -- precision ----------------------------------------------------------

    def truncate(self, precision: int) -> "TruncatedSeries":
        """Lower the precision (never raises it)."""
        p = min(precision, self.precision)
        return TruncatedSeries._wrap(
            self.nvars, p, {e: c for e, c in self.terms.items() if sum(e) <= p}
        )

    def with_precision(self, precision: int) -> "TruncatedSeries":
        """Reinterpret the stored polynomial at another precision.

        Raising precision is only meaningful when the stored terms are the
        exact series (a polynomial); callers take responsibility for that.
        """
        return TruncatedSeries._wrap(
            self.nvars, precision, {e: c for e, c in self.terms.items() if sum(e) <= precision}
        )

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "TruncatedSeries"):
        if self.nvars != other.nvars:
            raise ValueError(f"variable-count mismatch: {self.nvars} vs {other.nvars}")

    def _lift(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return other
        return TruncatedSeries.constant(other, self.nvars, self.precision)

    def __add__(self, other) -> "TruncatedSeries":
        other = self._lift(other)
        p = min(self.precision, other.precision)
        out = {e: c for e, c in self.terms.items() if sum(e) <= p}
        for e, c in other.terms.items():
            if sum(e) > p:
                continue
            if e in out:
                s = out[e] + c
                if s.is_zero():
                    del out[e]
                else:
                    out[e] = s
            else:
                out[e] = c
        return TruncatedSeries._wrap(self.nvars, p, out)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries._wrap(
            self.nvars, self.precision, {e: -c for e, c in self.terms.items()}
        )

    def __sub__(self, other) -> "TruncatedSeries":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "TruncatedSeries":
        return self._lift(other) - self

    def scale(self, c) -> "TruncatedSeries":
        c = ComplexRational.coerce(c)
        if c.is_zero():
            return TruncatedSeries.zero(self.nvars, self.precision)
        return TruncatedSeries._wrap(
            self.nvars, self.precision, {e: v * c for e, v in self.terms.items()}
        )

    def __mul__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check(other)
        p = min(self.precision, other.precision)
        return _mul_terms(self.terms, other.terms, self.nvars, p)

    def __rmul__(self, other) -> "TruncatedSeries":
        return self.scale(other)

    def __pow__(self, k: int) -> "TruncatedSeries":
        if k < 0:
            return self.invert_unit() ** (-k)
        result = TruncatedSeries.constant(ONE, self.nvars, self.precision)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        """Coefficient-wise agreement through the smaller precision."""
        if not isinstance(other, TruncatedSeries):
            try:
                other = self._lift(other)
            except (TypeError, ValueError):
                return NotImplemented
        if self.nvars != other.nvars:
            return False
        return (self - other).is_zero()

    __hash__ = None

    def equals_through(self, other: "TruncatedSeries", order: int) -> bool:
        return (self - other).is_zero(order)

    # -- calculus -----------------------------------------------------------

    def derive(self, var: int, order: int = 1) -> "TruncatedSeries":
        """Formal ``order``-th derivative in variable ``var``; precision drops by ``order``."""
        if order == 0:
            return self
        out = {}
        for e, c in self.terms.items():
            k = e[var]
            if k < order:
                continue
            f = 1
            for j in range(k - order + 1, k + 1):
                f *= j
            ne = e[:var] + (k - order,) + e[var + 1:]
            out[ne] = c * f
        return TruncatedSeries._wrap(self.nvars, self.precision - order, out)

    def derive_multi(self, alpha: Sequence[int]) -> "TruncatedSeries":
        out = self
        for i, a in enumerate(alpha):
            if a:
                out = out.derive(i, a)
        return out

    def bar_conjugate(self, permutation: Sequence[int] | None = None) -> "TruncatedSeries":
        """Conjugate every coefficient.

        With ``permutation`` the variables are also relabelled: variable ``i``
        of the input becomes variable ``permutation[i]`` of the output.  This
        is how the block swap ``(Z, zeta) -> (zeta, Z)`` is expressed.
        """
        if permutation is None:
            return TruncatedSeries._wrap(
                self.nvars, self.precision, {e: c.conjugate() for e, c in self.terms.items()}
            )
        out = {}
        for e, c in self.terms.items():
            ne = [0] * self.nvars
            for i, k in enumerate(e):
                ne[permutation[i]] = k
            out[tuple(ne)] = c.conjugate()
        return TruncatedSeries._wrap(self.nvars, self.precision, out)

    def invert_unit(self) -> "TruncatedSeries":
        """Multiplicative inverse of a series with nonzero constant term."""
        c0 = self.constant_term()
        if c0.is_zero():
            raise ZeroDivisionError("invert_unit needs a nonzero constant term")
        inv0 = c0.inverse()
        # self = c0 (1 + h) with h of order >= 1; 1/(1+h) = sum (-h)^k
        h = (self.scale(inv0) - 1)
        result = TruncatedSeries.constant(ONE, self.nvars, self.precision)
        for _ in range(self.precision):
            result = 1 - h * result
        return result.scale(inv0)

    # -- substitution -------------------------------------------------------

    def compose(self, subs: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        """Substitute series with zero constant term for every variable."""
        if len(subs) != self.nvars:
            raise ValueError(f"arity mismatch: {self.nvars} variables, {len(subs)} substitutions")
        if not subs:
            return self
        target = subs[0].nvars
        for s in subs:
            if s.nvars != target:
                raise ValueError("substituted series must share a variable set")
        used = self.variables_used()
        for i in used:
            if not subs[i].constant_term().is_zero():
                raise ValueError(f"substitution for variable {i} has a nonzero constant term")
        p = min([self.precision] + [subs[i].precision for i in used])
        return _compose(self.terms, list(subs), target, p)

    def substitute(self, mapping: Mapping[int, "TruncatedSeries"]) -> "TruncatedSeries":
        """Substitute some variables, keeping the others (same ambient ring)."""
        subs = [
            mapping[i] if i in mapping else TruncatedSeries.variable(i, self.nvars, self.precision)
            for i in range(self.nvars)
        ]
        return self.compose(subs)

    def set_zero(self, variables: Iterable[int]) -> "TruncatedSeries":
        vs = set(variables)
        return TruncatedSeries._wrap(
            self.nvars,
            self.precision,
            {e: c for e, c in self.terms.items() if all(e[i] == 0 for i in vs)},
        )

    def embed(self, nvars: int, positions: Sequence[int]) -> "TruncatedSeries":
        """Move variable ``i`` to position ``positions[i]`` of a larger ring."""
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for i, k in enumerate(e):
                ne[positions[i]] += k
            out[tuple(ne)] = c
        return TruncatedSeries._wrap(nvars, self.precision, out)

    def restrict(self, keep: Sequence[int]) -> "TruncatedSeries":
        """Keep only terms free of the dropped variables and re-index ``keep``."""
        drop = [i for i in range(self.nvars) if i not in set(keep)]
        out = {}
        for e, c in self.terms.items():
            if any(e[i] for i in drop):
                continue
            out[tuple(e[i] for i in keep)] = c
        return TruncatedSeries._wrap(len(keep), self.precision, out)

    def evaluate(self, point: Sequence) -> ComplexRational:
        """Evaluate the truncated representative at an exact point."""
        pts = [ComplexRational.coerce(x) for x in point]
        powers: list[dict[int, ComplexRational]] = [{0: ONE} for _ in pts]
        total = ZERO
        for e, c in self.terms.items():
            term = c
            for i, k in enumerate(e):
                if k:
                    cache = powers[i]
                    if k not in cache:
                        cache[k] = pts[i] ** k
                    term = term * cache[k]
            total = total + term
        return total

    def coefficients_in(self, var: int) -> dict[int, "TruncatedSeries"]:
        """Split by powers of ``var``: ``{k: coefficient series (var removed)}``."""
        keep = [i for i in range(self.nvars) if i != var]
        groups: dict[int, dict] = {}
        for e, c in self.terms.items():
            groups.setdefault(e[var], {})[tuple(e[i] for i in keep)] = c
        return {
            k: TruncatedSeries._wrap(self.nvars - 1, self.precision - k, t)
            for k, t in sorted(groups.items())
        }


def _mul_terms(a: dict, b: dict, nvars: int, p: int) -> TruncatedSeries:
    if not a or not b:
        return TruncatedSeries._wrap(nvars, p, {})
    if len(a) > len(b):
        a, b = b, a
    bd: dict[int, list] = {}
    for e, c in b.items():
        bd.setdefault(sum(e), []).append((e, c.re, c.im))
    bdegs = sorted(bd)
    acc: dict = {}
    for ea, ca in a.items():
        da = sum(ea)
        room = p - da
        if room < 0:
            continue
        ar, ai = ca.re, ca.im
        for db in bdegs:
            if db > room:
                break
            for eb, br, bi in bd[db]:
                e = tuple([x + y for x, y in zip(ea, eb)])
                re = ar * br - ai * bi
                im = ar * bi + ai * br
                cur = acc.get(e)
                if cur is None:
                    acc[e] = [re, im]
                else:
                    cur[0] += re
                    cur[1] += im
    out = {}
    for e, (re, im) in acc.items():
        if re != 0 or im != 0:
            out[e] = ComplexRational._raw(re, im)
    return TruncatedSeries._wrap(nvars, p, out)


def _compose(terms: dict, subs: list, target: int, p: int) -> TruncatedSeries:
    """Horner-style evaluation splitting on the first variable."""
    one = TruncatedSeries.constant(ONE, target, p)
    power_cache: dict[tuple[int, int], TruncatedSeries] = {}

    def power(i: int, k: int) -> TruncatedSeries:
        key = (i, k)
        if key not in power_cache:
            if k == 0:
                power_cache[key] = one
            elif k == 1:
                power_cache[key] = subs[i].truncate(p)
            else:
                power_cache[key] = power(i, k // 2) * power(i, k - k // 2)
        return power_cache[key]

    def rec(items: list, var: int) -> TruncatedSeries:
        if var == len(subs):
            c = ZERO
            for _, v in items:
                c = c + v
            return TruncatedSeries.constant(c, target, p)
        groups: dict[int, list] = {}
        for e, c in items:
            groups.setdefault(e[var], []).append((e, c))
        out = TruncatedSeries.zero(target, p)
        for k in sorted(groups):
            inner = rec(groups[k], var + 1)
            out = out + (inner if k == 0 else inner * power(var, k))
        return out

    return rec(list(terms.items()), 0)


# ---------------------------------------------------------------------------
# Tuples and polynomials in a distinguished variable
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesTuple:
    """An ordered list of series over one variable set (a formal map)."""

    components: tuple

    def __init__(self, components: Iterable[TruncatedSeries]):
        comps = tuple(components)
        if comps:
            n0 = comps[0].nvars
            for c in comps:
                if c.nvars != n0:
                    raise ValueError("components must share nvars")
        object.__setattr__(self, "components", comps)

    def __iter__(self) -> Iterator[TruncatedSeries]:
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    @property
    def nvars(self) -> int:
        return self.components[0].nvars if self.components else 0

    @property
    def precision(self) -> int:
        return min(c.precision for c in self.components) if self.components else 0

    def compose(self, subs: Sequence[TruncatedSeries]) -> "SeriesTuple":
        return SeriesTuple(c.compose(subs) for c in self.components)

    def truncate(self, precision: int) -> "SeriesTuple":
        return SeriesTuple(c.truncate(precision) for c in self.components)

    def jacobian(self) -> list[list[TruncatedSeries]]:
        return [[c.derive(j) for j in range(c.nvars)] for c in self.components]

    def is_zero(self, through: int | None = None) -> bool:
        return all(c.is_zero(through) for c in self.components)


def identity_tuple(nvars: int, precision: int) -> SeriesTuple:
    return SeriesTuple(TruncatedSeries.variable(i, nvars, precision) for i in range(nvars))


@dataclass
class PolyInX:
    """Polynomial ``sum coeffs[k] X^k`` with series coefficients."""

    coeffs: list

    def __post_init__(self):
        coeffs = list(self.coeffs)
        while len(coeffs) > 1 and coeffs[-1].is_zero():
            coeffs.pop()
        self.coeffs = coeffs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def monic(self) -> bool:
        lead = self.coeffs[-1]
        return (lead - 1).is_zero()

    @property
    def nvars(self) -> int:
        return self.coeffs[0].nvars

    @property
    def precision(self) -> int:
        return min(c.precision for c in self.coeffs)

    def to_series(self, position: int) -> TruncatedSeries:
        """Embed as a series with ``X`` inserted at variable index ``position``."""
        m = self.nvars + 1
        positions = [i if i < position else i + 1 for i in range(self.nvars)]
        out = TruncatedSeries.zero(m, self.precision)
        x = TruncatedSeries.variable(position, m, self.precision)
        for k, c in enumerate(self.coeffs):
            out = out + c.embed(m, positions) * (x ** k)
        return out

    @classmethod
    def from_series(cls, f: TruncatedSeries, var: int) -> "PolyInX":
        parts = f.coefficients_in(var)
        deg = max(parts) if parts else 0
        zero = TruncatedSeries.zero(f.nvars - 1, f.precision)
        coeffs = [parts.get(k, zero).with_precision(f.precision) for k in range(deg + 1)]
        return cls(coeffs)

    def evaluate(self, x: TruncatedSeries) -> TruncatedSeries:
        out = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            out = out * x + c
        return out


# ---------------------------------------------------------------------------
# Weierstrass preparation and implicit solving
# ---------------------------------------------------------------------------


@dataclass
class Preparation:
    unit: TruncatedSeries
    monic: PolyInX
    var: int

    @property
    def degree(self) -> int:
        return self.monic.degree


def weierstrass_prepare(f: TruncatedSeries, var: int) -> Preparation:
    """Split ``f = unit * (v^N + sum c_l v^l)`` with ``c_l(0) = 0``.

    The truncated representative is treated as exact.  The division
    iteration runs after scaling the other exponents by ``N`` so that
    total degree equals the weighted degree in which the iteration loses
    no precision; the result is scaled back and truncated to the input
    precision.  Reconstruction is checked before returning.
    """
    D = f.precision
    others = [i for i in range(f.nvars) if i != var]
    axis = [k for e, c in f.terms.items() if all(e[i] == 0 for i in others) for k in [e[var]]]
    if not axis:
        raise ValueError("series vanishes identically in the distinguished variable through precision")
    N = min(axis)
    if N > D:
        raise ValueError("distinguished order exceeds precision")
    if N == 0:
        unit = f
        zero = TruncatedSeries.zero(f.nvars - 1, D)
        return Preparation(unit, PolyInX([zero + 1]), var)

    W = N * D + N
    scaled = {}
    for e, c in f.terms.items():
        ne = tuple(k * N if i != var else k for i, k in enumerate(e))
        scaled[ne] = c
    g = TruncatedSeries(f.nvars, W, scaled)

    low = TruncatedSeries._wrap(g.nvars, W, {e: c for e, c in g.terms.items() if e[var] < N})
    e_unit = _shift_down(TruncatedSeries._wrap(g.nvars, W, {e: c for e, c in g.terms.items() if e[var] >= N}), var, N)
    e_inv = e_unit.invert_unit()
    vN = TruncatedSeries.variable(var, g.nvars, W) ** N

    h = vN
    q = TruncatedSeries.zero(g.nvars, W)
    r = TruncatedSeries.zero(g.nvars, W)
    for _ in range(D + 3):
        if h.is_zero():
            break
        h_low = TruncatedSeries._wrap(g.nvars, h.precision, {e: c for e, c in h.terms.items() if e[var] < N})
        h_high = _shift_down(TruncatedSeries._wrap(g.nvars, h.precision, {e: c for e, c in h.terms.items() if e[var] >= N}), var, N)
        r = r + h_low
        t = (h_high * e_inv).with_precision(W)
        q = q + t
        h = -(t * low).with_precision(W)
    if not h.is_zero():
        raise ArithmeticError("Weierstrass division did not converge")

    monic_scaled = vN - r
    unit_scaled = q.invert_unit()

    def unscale(s: TruncatedSeries) -> TruncatedSeries:
        out = {}
        for e, c in s.terms.items():
            ne = []
            for i, k in enumerate(e):
                if i != var:
                    if k % N:
                        raise ArithmeticError("non-integral exponent after unscaling")
                    k //= N
                ne.append(k)
            if sum(ne) <= D:
                out[tuple(ne)] = c
        return TruncatedSeries._wrap(s.nvars, D, out)

    unit = unscale(unit_scaled)
    monic_series = unscale(monic_scaled)
    monic = PolyInX.from_series(monic_series, var)
    coeffs = [c.with_precision(D) for c in monic.coeffs]
    monic = PolyInX(coeffs)
    if not (unit * monic.to_series(var) - f).is_zero():
        raise ArithmeticError("Weierstrass reconstruction failed")
    return Preparation(unit, monic, var)


def _shift_down(s: TruncatedSeries, var: int, k: int) -> TruncatedSeries:
    out = {}
    for e, c in s.terms.items():
        out[e[:var] + (e[var] - k,) + e[var + 1:]] = c
    return TruncatedSeries._wrap(s.nvars, s.precision - k, out)


def implicit_solve(system: Sequence[TruncatedSeries], solve_for: Sequence[int]) -> SeriesTuple:
    """Solve ``system(x, y) = 0`` for the ``y`` variables as series in ``x``.

    Returns one series per solved variable, in the variables that were not
    solved for (original order kept).  Order-by-order Newton iteration with
    the Jacobian inverted once at the origin.
    """
    system = list(system)
    d = len(solve_for)
    if len(system) != d:
        raise ValueError("need as many equations as unknowns")
    nv = system[0].nvars
    D = min(s.precision for s in system)
    xs = [i for i in range(nv) if i not in set(solve_for)]
    jac0 = [[system[r].derive(solve_for[c]).constant_term() for c in range(d)] for r in range(d)]
    inv = linalg.inverse(jac0)
    if inv is None:
        raise ValueError("Jacobian in the solve-for variables is singular at 0")
    for s in system:
        if not s.constant_term().is_zero():
            raise ValueError("system must vanish at the origin")
    m = len(xs)
    ys = [TruncatedSeries.zero(m, D) for _ in range(d)]
    xvars = [TruncatedSeries.variable(j, m, D) for j in range(m)]
    for _ in range(D + 1):
        subs = [None] * nv
        for j, i in enumerate(xs):
            subs[i] = xvars[j]
        for j, i in enumerate(solve_for):
            subs[i] = ys[j]
        residual = [s.compose(subs) for s in system]
        if all(r.is_zero() for r in residual):
            break
        ys = [
            ys[a] - sum((residual[b].scale(inv[a][b]) for b in range(d)), TruncatedSeries.zero(m, D))
            for a in range(d)
        ]
    else:
        raise ArithmeticError("implicit solve did not converge")
    return SeriesTuple(ys)


# ---------------------------------------------------------------------------
# Generic rank
# ---------------------------------------------------------------------------


@dataclass
class RankCertificate:
    point: tuple
    rows: tuple
    cols: tuple
    minor: ComplexRational


@dataclass
class RankResult:
    rank: int
    certificate: RankCertificate | None
    exact: bool
    symbolic_checked: bool = False

    @property
    def label(self) -> str:
        return "exact" if self.exact else "probabilistic"


def sample_point(rng: random.Random, n: int) -> tuple:
    return tuple(ComplexRational(Fraction(rng.randint(-6, 6) or 1, rng.randint(1, 4))) for _ in range(n))


def generic_rank(mapping: SeriesTuple, mode: str = "sample", seed: int = 17, retries: int = 8) -> RankResult:
    """Generic rank of the Jacobian of a truncated map.

    Sample mode evaluates at seeded small-denominator rational points and
    returns the largest rank seen with a nonzero minor as certificate (a
    lower bound, exact).  Symbolic mode further certifies deficiency by
    checking every larger minor vanishes as a series.
    """
    comps = list(mapping)
    if not comps:
        return RankResult(0, None, True)
    nv = comps[0].nvars
    jac = [[c.derive(j) for j in range(nv)] for c in comps]
    target = min(len(comps), nv)
    rng = random.Random(seed)
    best = RankResult(0, None, target == 0)
    for _ in range(retries):
        pt = sample_point(rng, nv)
        mat = [[entry.evaluate(pt) for entry in row] for row in jac]
        rank, rows, cols = linalg.rank_profile(mat)
        if rank > best.rank:
            sub = [[mat[r][c] for c in cols] for r in rows]
            best = RankResult(rank, RankCertificate(pt, tuple(rows), tuple(cols), linalg.det(sub)), rank == target)
        if rank == target:
            best.exact = True
            break
    if best.rank == 0 and all(e.is_zero() for row in jac for e in row):
        best.exact = True
    if mode == "symbolic" and not best.exact:
        if minors_vanish(jac, best.rank + 1):
            best.exact = True
        best.symbolic_checked = True
    return best


def minors_vanish(jac: list[list[TruncatedSeries]], size: int) -> bool:
    m = len(jac)
    n = len(jac[0]) if jac else 0
    if size > min(m, n):
        return True
    for rows in itertools.combinations(range(m), size):
        if all(all(jac[r][c].is_zero() for c in range(n)) for r in rows[:1]):
            continue
        for cols in itertools.combinations(range(n), size):
            sub = [[jac[r][c] for c in cols] for r in rows]
            if not series_det(sub).is_zero():
                return False
    return True


def series_det(mat: list[list[TruncatedSeries]]) -> TruncatedSeries:
    """Division-free determinant (Laplace expansion with memoised minors)."""
    n = len(mat)
    if n == 0:
        raise ValueError("empty matrix")
    nv = mat[0][0].nvars
    p = min(e.precision for row in mat for e in row)
    memo: dict[tuple, TruncatedSeries] = {}

    def minor(row: int, cols: tuple) -> TruncatedSeries:
        if row == n:
            return TruncatedSeries.constant(ONE, nv, p)
        key = (row, cols)
        if key in memo:
            return memo[key]
        total = TruncatedSeries.zero(nv, p)
        for idx, c in enumerate(cols):
            entry = mat[row][c]
            if entry.is_zero():
                continue
            rest = cols[:idx] + cols[idx + 1:]
            term = entry * minor(row + 1, rest)
            total = total - term if idx % 2 else total + term
        memo[key] = total
        return total

    return minor(0, tuple(range(n)))


def series_matrix_inverse(mat: list[list[TruncatedSeries]]) -> list[list[TruncatedSeries]]:
    """Inverse of a square series matrix invertible at the origin (adjugate / det)."""
    n = len(mat)
    det = series_det(mat)
    inv_det = det.invert_unit()
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if n == 1:
                cof = TruncatedSeries.constant(ONE, det.nvars, det.precision)
            else:
                sub = [[mat[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
                cof = series_det(sub)
            if (i + j) % 2:
                cof = -cof
            out[j][i] = cof * inv_det
    return out
