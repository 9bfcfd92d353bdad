import json

import pytest
from hypothesis import given, settings

from crforge.coeffs import cq
from crforge.fixtures import bundled_files, heisenberg, flat_shift_map
from crforge.formats import (
    FormatError,
    ManifoldFile,
    MapFile,
    canonical_json,
    canonicalize,
    digest,
    parse_manifold,
    parse_map,
    series_from_terms,
    series_terms,
)
from crforge.geometry import DefiningData, GenericSubmanifoldNF
from crforge.mapping import identity_map
from crforge.series import SeriesTuple, TruncatedSeries

from strategies import series

T = TruncatedSeries


def heisenberg_doc(**changes):
    obj = ManifoldFile.from_manifold(heisenberg(), exact=True).to_json()
    obj.update(changes)
    return obj


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


@settings(max_examples=50, deadline=None)
@given(series(3, 5, max_terms=6))
def test_series_terms_round_trip(s):
    back = series_from_terms(series_terms(s), 3, 5, "test")
    assert back == s


def test_terms_are_grlex_sorted():
    x1, x2 = T.variable(0, 2, 4), T.variable(1, 2, 4)
    s = x1 * x1 + x2.scale(cq("1/3", -1)) + x1
    assert series_terms(s) == [[0, 1, "1/3", "-1"], [1, 0, "1", "0"], [2, 0, "1", "0"]]


@pytest.mark.parametrize("name", sorted(bundled_files()))
def test_bundled_documents_round_trip(name):
    text = bundled_files()[name].emit()
    assert canonicalize(text) == text
    cls = ManifoldFile if '"crforge-manifold-v1"' in text else MapFile
    assert cls.from_json(json.loads(text)).emit() == text


def test_canonical_json_layout():
    text = canonical_json({"b": [1, 2], "a": {"c": [[0, 1, "1", "0"]]}})
    assert text == '{\n  "a": {\n    "c": [\n      [0, 1, "1", "0"]\n    ]\n  },\n  "b": [1, 2]\n}\n'
    assert len(digest(text)) == 64


def test_parse_heisenberg(tmp_path):
    M = parse_manifold(write(tmp_path, "h.json", heisenberg_doc()))
    assert isinstance(M, GenericSubmanifoldNF)
    assert M.Q[0] == heisenberg().Q[0]


def test_parse_identity_map(tmp_path):
    obj = MapFile.from_map(identity_map(1, 1, 8), exact=True, manifold="heisenberg").to_json()
    H = parse_map(write(tmp_path, "id.json", obj))
    ref = identity_map(1, 1, 8)
    assert H.F[0] == ref.F[0] and H.G[0] == ref.G[0]


def test_parse_ex211(tmp_path):
    obj = MapFile.from_map(flat_shift_map(), manifold="ex29").to_json()
    H = parse_map(write(tmp_path, "m.json", obj))
    # G2 = w2 + sum_{k>=2} k! w2^k
    assert H.G[1].coefficient((0, 0, 8)) == cq(40320)


def test_non_real_q_names_coefficient(tmp_path):
    obj = heisenberg_doc()
    obj["Q"][0][1] = [1, 1, 0, "1", "0"]
    with pytest.raises(FormatError, match=r"residue .* at exponent \[1, 1, 0\]"):
        parse_manifold(write(tmp_path, "bad.json", obj))


def test_non_real_defining_names_coefficient(tmp_path):
    z, w, chi, tau = [T.variable(i, 4, 6) for i in range(4)]
    rho = (w - tau).scale(cq(0, 2).inverse()) - (z * chi).scale(cq(0, 1))
    doc = ManifoldFile.from_defining(DefiningData(2, 1, SeriesTuple([rho])), exact=True).to_json()
    with pytest.raises(FormatError, match=r"rho_1 is not real.*exponent"):
        parse_manifold(write(tmp_path, "rho.json", doc))


def test_map_with_constant_term(tmp_path):
    obj = MapFile.from_map(identity_map(1, 1, 8)).to_json()
    obj["F"][0].insert(0, [0, 0, "1", "0"])
    with pytest.raises(FormatError, match="nonzero constant term"):
        parse_map(write(tmp_path, "c.json", obj))


@pytest.mark.parametrize(
    "change, message",
    [
        ({"degree": -1}, "degree"),
        ({"mode": "other"}, "mode"),
        ({"Q": [[[0, 0, 9, "1", "0"]]]}, "exceeds truncation"),
        ({"Q": [[[0, 0, 1, 1, "0"]]]}, "strings"),
        ({"Q": [[[0, 0, 1, "1", "0"], [0, 0, 1, "2", "0"]]]}, "repeated"),
        ({"Q": [[[0, 0, 1, "x", "0"]]]}, "bad rational"),
        ({"format": "other"}, "not a"),
    ],
)
def test_malformed_manifolds(tmp_path, change, message):
    with pytest.raises(FormatError, match=message):
        parse_manifold(write(tmp_path, "m.json", heisenberg_doc(**change)))


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "format": \n}')
    with pytest.raises(FormatError, match="line"):
        parse_manifold(path)


def test_missing_file(tmp_path):
    with pytest.raises(FormatError, match="cannot read"):
        parse_manifold(tmp_path / "nope.json")


def test_truncated_payload_cannot_be_raised():
    f = ManifoldFile.from_manifold(heisenberg(), exact=False)
    with pytest.raises(FormatError, match="cannot raise"):
        f.build(10)
    assert ManifoldFile.from_manifold(heisenberg(), exact=True).build(10).precision == 10
