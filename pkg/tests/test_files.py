import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import QQ, QQ_I

from conftest import lattes, real_circle_complex
from fsrkit.complex import CellRef
from fsrkit.files import (FormatError, complex_from_json, complex_to_json, carriers_from_json, dumps,
                          fsr_from_json, fsr_to_json, kind_of_document, map_from_json, map_to_json,
                          read_complex, write_complex)
from fsrkit.ratmap import RationalMap


_CIRCLE = []


def circle():
    if not _CIRCLE:
        _CIRCLE.append(real_circle_complex())
    return _CIRCLE[0]


def same_complex(a, b):
    assert a.vertices == b.vertices
    assert dict(a.edges) == dict(b.edges)
    assert dict(a.tiles) == dict(b.tiles)
    assert (a.positions is None) == (b.positions is None)
    if a.positions is not None:
        for v in a.vertices:
            assert np.array_equal(a.positions[v], b.positions[v])
        for e in a.edges:
            assert np.array_equal(a.polylines[e], b.polylines[e])


def test_complex_round_trip_is_exact(tmp_path):
    c = circle()
    write_complex(tmp_path / "c.json", c)
    same_complex(c, read_complex(tmp_path / "c.json"))
    # and the second write is byte identical
    write_complex(tmp_path / "d.json", read_complex(tmp_path / "c.json"))
    assert (tmp_path / "c.json").read_bytes() == (tmp_path / "d.json").read_bytes()


def test_carriers_round_trip(lattes_levels):
    p = lattes_levels[1]
    obj = json.loads(dumps(complex_to_json(p.complex, p.carrier, p.edge_sign)))
    carrier, sign = carriers_from_json(obj)
    assert carrier == dict(p.carrier)
    assert sign == dict(p.edge_sign)


def test_fsr_round_trip():
    from fsrkit.constructor import construct
    r = construct(lattes()).rule
    text = dumps(fsr_to_json(r))
    back = fsr_from_json(json.loads(text))
    same_complex(r.base, back.base)
    same_complex(r.refined, back.refined)
    assert back.carriers == r.carriers
    assert back.sigma.vertex_map == r.sigma.vertex_map
    assert back.sigma.edge_map == r.sigma.edge_map
    assert dumps(fsr_to_json(back)) == text


def test_norm_outside_range_rejected():
    obj = complex_to_json(circle())
    obj["vertices"][0]["pos"] = [1.01, 0.0, 0.0]
    with pytest.raises(FormatError, match="norm"):
        complex_from_json(obj)


def test_norm_inside_range_renormalized():
    obj = complex_to_json(circle())
    obj["vertices"][0]["pos"] = [0.0, 0.0, -1.0005]
    c = complex_from_json(obj)
    assert np.linalg.norm(c.positions[c.vertices[0]]) == pytest.approx(1.0, abs=1e-15)


def test_partial_geometry_rejected():
    obj = complex_to_json(circle())
    del obj["vertices"][0]["pos"]
    with pytest.raises(FormatError, match="all cells or none"):
        complex_from_json(obj)


def test_combinatorial_complex_round_trip():
    c = circle()
    obj = complex_to_json(c)
    for v in obj["vertices"]:
        del v["pos"]
    for e in obj["edges"]:
        del e["polyline"]
    back = complex_from_json(obj)
    assert back.positions is None
    assert complex_to_json(back) == obj


def test_kind_detection():
    assert kind_of_document(map_to_json(lattes())) == "map"
    assert kind_of_document(complex_to_json(circle())) == "complex"
    with pytest.raises(FormatError):
        kind_of_document([1, 2])


def test_bad_json(tmp_path):
    (tmp_path / "x.json").write_text("{nope")
    with pytest.raises(FormatError):
        read_complex(tmp_path / "x.json")


def test_exact_map_text():
    obj = map_to_json(lattes())
    assert obj["mode"] == "exact"
    assert map_from_json(obj).numerator == lattes().numerator


frac = st.fractions(min_value=-100, max_value=100, max_denominator=50)
gauss = st.tuples(frac, frac)
floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
unit = st.floats(min_value=-1, max_value=1, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(gauss, min_size=2, max_size=4), st.lists(gauss, min_size=1, max_size=3))
def test_exact_map_round_trip(num, den):
    n = [QQ_I(QQ(a.numerator, a.denominator), QQ(b.numerator, b.denominator)) for a, b in num]
    d = [QQ_I(QQ(a.numerator, a.denominator), QQ(b.numerator, b.denominator)) for a, b in den]
    try:
        f = RationalMap(tuple(n), tuple(d))
    except ValueError:
        return
    g = map_from_json(json.loads(dumps(map_to_json(f))))
    assert g.numerator == f.numerator and g.denominator == f.denominator


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(floats, floats), min_size=3, max_size=4), st.tuples(floats, floats))
def test_float_map_round_trip(num, den):
    try:
        f = RationalMap(tuple(complex(a, b) for a, b in num), (complex(*den),), exact=False)
    except (ValueError, ArithmeticError):
        return
    g = map_from_json(json.loads(dumps(map_to_json(f))))
    assert g.numerator == f.numerator and g.denominator == f.denominator


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(unit, unit, unit).filter(lambda t: np.linalg.norm(t) > 0.1), min_size=3, max_size=3))
def test_vertex_positions_round_trip(points):
    c = circle()
    obj = complex_to_json(c)
    for item, p in zip(obj["vertices"], points):
        p = np.asarray(p) / np.linalg.norm(p)
        item["pos"] = [float(x) for x in p]
    back = complex_from_json(json.loads(dumps(obj)))
    again = complex_to_json(back)
    assert dumps(complex_to_json(complex_from_json(json.loads(dumps(again))))) == dumps(again)
    for item in obj["vertices"]:
        assert np.allclose(back.positions[item["id"]], item["pos"], atol=1e-15)


def test_carrier_ref_types():
    obj = complex_to_json(circle(), {"p0": CellRef("vertex", "q")})
    assert obj["vertices"][0]["carrier"] == {"kind": "vertex", "id": "q"}
