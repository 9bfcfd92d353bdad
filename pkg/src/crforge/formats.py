"""JSON file formats for manifolds, maps and reports.

Series are stored as lists of terms ``[e_1, ..., e_m, "re", "im"]`` sorted
by graded-lexicographic exponent, with rationals as ``p`` or ``p/q``
strings.  Output is canonical: sorted keys, fixed indentation and a
trailing newline, so equal inputs give equal bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .coeffs import ComplexRational
from .geometry import DefiningData, GenericSubmanifoldNF
from .mapping import FormalMapNF
from .series import SeriesTuple, TruncatedSeries, grlex_key

MANIFOLD_TAG = "crforge-manifold-v1"
MAP_TAG = "crforge-map-v1"
REPORT_TAG = "crforge-report-v1"


class FormatError(ValueError):
    """Malformed or invalid input file."""


def canonical_json(obj) -> str:
    """Sorted keys, two-space indentation, flat lists of scalars kept on one line."""
    return _dump(obj, 0) + "\n"


def _dump(obj, depth: int) -> str:
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_dump(obj[k], depth + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not any(isinstance(x, (dict, list, tuple)) for x in obj):
            return "[" + ", ".join(json.dumps(x) for x in obj) + "]"
        return "[\n" + ",\n".join(inner + _dump(x, depth + 1) for x in obj) + "\n" + pad + "]"
    return json.dumps(obj)


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# -- series payloads --------------------------------------------------------------


def coeff_pair(c: ComplexRational) -> list[str]:
    return [ComplexRational.format_part(c.re), ComplexRational.format_part(c.im)]


def series_terms(s: TruncatedSeries) -> list:
    out = []
    for e in sorted(s.terms, key=grlex_key):
        c = s.terms[e]
        if not c.is_zero():
            out.append(list(e) + coeff_pair(c))
    return out


def series_from_terms(terms, nvars: int, precision: int, where: str) -> TruncatedSeries:
    if not isinstance(terms, list):
        raise FormatError(f"{where}: expected a list of terms")
    out: dict = {}
    for k, term in enumerate(terms):
        if not isinstance(term, list) or len(term) != nvars + 2:
            raise FormatError(f"{where}, term {k}: expected {nvars} exponents and two rational strings")
        exps, re, im = term[:nvars], term[nvars], term[nvars + 1]
        if not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in exps):
            raise FormatError(f"{where}, term {k}: exponents must be nonnegative integers")
        if not isinstance(re, str) or not isinstance(im, str):
            raise FormatError(f"{where}, term {k}: coefficients must be strings")
        if sum(exps) > precision:
            raise FormatError(f"{where}, term {k}: degree {sum(exps)} exceeds truncation {precision}")
        try:
            c = ComplexRational.parse(re, im)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"{where}, term {k}: bad rational ({exc})") from None
        e = tuple(exps)
        if e in out:
            raise FormatError(f"{where}, term {k}: repeated exponent {exps}")
        out[e] = c
    return TruncatedSeries(nvars, precision, out)


def _int_field(obj: dict, key: str, minimum: int = 0) -> int:
    val = obj.get(key)
    if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
        raise FormatError(f"field {key!r} must be an integer >= {minimum}")
    return val


def _dims(obj: dict, key: str) -> tuple:
    val = obj.get(key)
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(x, int) and x >= 1 for x in val)):
        raise FormatError(f"field {key!r} must be a pair of positive integers")
    return tuple(val)


# -- manifolds ----------------------------------------------------------------------


@dataclass
class ManifoldFile:
    """A manifold in normal form (``Q``) or as real defining polynomials (``rho``).

    In defining mode ``units`` optionally lists the unit that was multiplied
    into each ``rho_l`` to clear denominators; it is divided out at build time.
    ``exact`` marks payloads that are polynomials rather than truncations,
    which may then be rebuilt at a higher order.
    """

    name: str
    n: int
    d: int
    degree: int
    mode: str
    series: list
    units: list | None = None
    exact: bool = False

    def to_json(self) -> dict:
        out = {
            "format": MANIFOLD_TAG,
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "degree": self.degree,
            "mode": self.mode,
            "exact": self.exact,
        }
        key = "Q" if self.mode == "normal_form" else "rho"
        out[key] = [series_terms(s) for s in self.series]
        if self.units is not None:
            out["units"] = [series_terms(u) for u in self.units]
        return out

    def emit(self) -> str:
        return canonical_json(self.to_json())

    def build(self, precision: int | None = None) -> GenericSubmanifoldNF | DefiningData:
        """Validated manifold object, optionally at a raised precision (exact files only)."""
        p = self.degree if precision is None else precision
        if p > self.degree and not self.exact:
            raise FormatError(f"{self.name}: cannot raise the order of a truncated payload")
        series = [s.with_precision(p) for s in self.series]
        if self.mode == "normal_form":
            M = GenericSubmanifoldNF(self.n, self.d, SeriesTuple(series), self.name)
            problems = M.normality_defects() + M.reality_defects()
            if problems:
                raise FormatError(f"{self.name}: " + "; ".join(problems))
            return M
        if self.units is not None:
            series = [s * u.with_precision(p).invert_unit() for s, u in zip(series, self.units)]
        data = DefiningData(self.n + self.d, self.d, SeriesTuple(series), self.name)
        try:
            data.validate()
        except ValueError as exc:
            raise FormatError(f"{self.name}: {exc}") from None
        return data

    @classmethod
    def from_json(cls, obj) -> "ManifoldFile":
        if not isinstance(obj, dict) or obj.get("format") != MANIFOLD_TAG:
            raise FormatError(f"not a {MANIFOLD_TAG} document")
        n, d = _int_field(obj, "n", 1), _int_field(obj, "d", 1)
        D = _int_field(obj, "degree", 1)
        mode = obj.get("mode")
        name = obj.get("name", "")
        exact = obj.get("exact", False)
        if not isinstance(name, str) or not isinstance(exact, bool):
            raise FormatError("fields 'name' and 'exact' must be a string and a boolean")
        if mode == "normal_form":
            key, nvars = "Q", 2 * n + d
        elif mode == "defining":
            key, nvars = "rho", 2 * (n + d)
        else:
            raise FormatError("field 'mode' must be 'normal_form' or 'defining'")
        payload = obj.get(key)
        if not isinstance(payload, list) or len(payload) != d:
            raise FormatError(f"field {key!r} must hold {d} series")
        series = [series_from_terms(t, nvars, D, f"{key}[{j}]") for j, t in enumerate(payload)]
        units = None
        if "units" in obj:
            if mode != "defining":
                raise FormatError("'units' is only meaningful in defining mode")
            raw = obj["units"]
            if not isinstance(raw, list) or len(raw) != d:
                raise FormatError(f"field 'units' must hold {d} series")
            units = [series_from_terms(t, nvars, D, f"units[{j}]") for j, t in enumerate(raw)]
            for j, u in enumerate(units):
                if u.constant_term().is_zero():
                    raise FormatError(f"units[{j}] vanishes at the origin")
        return cls(name, n, d, D, mode, series, units, exact)

    @classmethod
    def from_manifold(cls, M: GenericSubmanifoldNF, exact: bool = False) -> "ManifoldFile":
        return cls(M.name, M.n, M.d, M.precision, "normal_form", list(M.Q), None, exact)

    @classmethod
    def from_defining(cls, data: DefiningData, units: list | None = None, exact: bool = False) -> "ManifoldFile":
        return cls(data.name, data.n, data.d, data.precision, "defining", list(data.rho), units, exact)


# -- maps -------------------------------------------------------------------------


@dataclass
class MapFile:
    name: str
    source: tuple
    target: tuple
    degree: int
    F: list
    G: list
    exact: bool = False
    manifold: str = ""

    def to_json(self) -> dict:
        out = {
            "format": MAP_TAG,
            "name": self.name,
            "source": list(self.source),
            "target": list(self.target),
            "degree": self.degree,
            "exact": self.exact,
            "F": [series_terms(s) for s in self.F],
            "G": [series_terms(s) for s in self.G],
        }
        if self.manifold:
            out["manifold"] = self.manifold
        return out

    def emit(self) -> str:
        return canonical_json(self.to_json())

    def build(self, precision: int | None = None) -> FormalMapNF:
        p = self.degree if precision is None else precision
        if p > self.degree and not self.exact:
            raise FormatError(f"{self.name}: cannot raise the order of a truncated payload")
        F = SeriesTuple(s.with_precision(p) for s in self.F)
        G = SeriesTuple(s.with_precision(p) for s in self.G)
        try:
            return FormalMapNF(F, G, self.source, self.target, self.name)
        except ValueError as exc:
            raise FormatError(f"{self.name}: {exc}") from None

    @classmethod
    def from_json(cls, obj) -> "MapFile":
        if not isinstance(obj, dict) or obj.get("format") != MAP_TAG:
            raise FormatError(f"not a {MAP_TAG} document")
        source, target = _dims(obj, "source"), _dims(obj, "target")
        D = _int_field(obj, "degree", 1)
        name = obj.get("name", "")
        exact = obj.get("exact", False)
        manifold = obj.get("manifold", "")
        if not isinstance(name, str) or not isinstance(exact, bool) or not isinstance(manifold, str):
            raise FormatError("fields 'name', 'exact' and 'manifold' have the wrong type")
        nvars = sum(source)
        series = {}
        for key, count in (("F", target[0]), ("G", target[1])):
            payload = obj.get(key)
            if not isinstance(payload, list) or len(payload) != count:
                raise FormatError(f"field {key!r} must hold {count} series")
            series[key] = [series_from_terms(t, nvars, D, f"{key}[{j}]") for j, t in enumerate(payload)]
            for j, s in enumerate(series[key]):
                if not s.constant_term().is_zero():
                    raise FormatError(f"{key}[{j}] has nonzero constant term {s.constant_term()}")
        return cls(name, source, target, D, series["F"], series["G"], exact, manifold)

    @classmethod
    def from_map(cls, H: FormalMapNF, exact: bool = False, manifold: str = "") -> "MapFile":
        return cls(H.name, tuple(H.source), tuple(H.target), H.precision, list(H.F), list(H.G), exact, manifold)


# -- reading --------------------------------------------------------------------


def load_json(path) -> tuple[dict, str]:
    """Parsed document and the digest of its canonical form."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return obj, digest(canonical_json(obj))


def read_manifold_file(path) -> ManifoldFile:
    return ManifoldFile.from_json(load_json(path)[0])


def read_map_file(path) -> MapFile:
    return MapFile.from_json(load_json(path)[0])


def parse_manifold(path) -> GenericSubmanifoldNF | DefiningData:
    return read_manifold_file(path).build()


def parse_map(path) -> FormalMapNF:
    return read_map_file(path).build()


def canonicalize(text: str) -> str:
    """Canonical form of a manifold or map document."""
    obj = json.loads(text)
    tag = obj.get("format") if isinstance(obj, dict) else None
    if tag == MANIFOLD_TAG:
        return ManifoldFile.from_json(obj).emit()
    if tag == MAP_TAG:
        return MapFile.from_json(obj).emit()
    raise FormatError("unknown document format")


@dataclass
class Report:
    """Deterministic report: nothing time- or host-dependent goes in here."""

    command: str
    inputs: dict
    seed: int
    bounds: dict
    verdicts: dict
    certificates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "format": REPORT_TAG,
            "command": self.command,
            "inputs": self.inputs,
            "seed": self.seed,
            "bounds": self.bounds,
            "verdicts": self.verdicts,
            "certificates": self.certificates,
        }

    def emit(self) -> str:
        return canonical_json(self.to_json())
