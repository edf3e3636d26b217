import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsrkit import sphere
from fsrkit.complex import (OrientedComplex, canonical_rotation, cyclic_equal, faces_from_rotation_system,
                            reverse, reverse_cycle, validate_complex, vertex_valences)
from fsrkit.samples import grid_disk, polygon, tetrahedron


def test_tetrahedron_is_sphere():
    rep = validate_complex(tetrahedron(), "sphere")
    assert rep.ok, rep.violations
    assert (rep.V, rep.E, rep.F, rep.euler) == (4, 6, 4, 2)


def test_square_is_disk():
    rep = validate_complex(polygon(4), "disk")
    assert rep.ok and rep.euler == 1


def test_reused_signed_edge_reported():
    c = OrientedComplex(("a", "b", "c"), {"x": ("a", "b"), "y": ("b", "c"), "z": ("c", "a")},
                        {"T": (("x", 1), ("y", 1), ("z", 1)), "U": (("x", 1), ("y", 1), ("z", 1))})
    assert any("signed edge reused" in m for m in validate_complex(c).violations)


def test_broken_cycle_reported():
    c = OrientedComplex(("a", "b", "c"), {"x": ("a", "b"), "y": ("b", "c"), "z": ("c", "a")},
                        {"T": (("x", 1), ("z", 1), ("y", 1))})
    assert any("not a cycle" in m for m in validate_complex(c).violations)


def test_valences():
    assert set(vertex_valences(tetrahedron()).values()) == {3}
    assert vertex_valences(grid_disk(2, 2))["v1_1"] == 4
    assert set(vertex_valences(polygon(7)).values()) == {2}


def test_theta_graph_faces():
    edges = {"e0": ("a", "b"), "e1": ("a", "b"), "e2": ("a", "b")}
    rot = {"a": [("e0", 1), ("e1", 1), ("e2", 1)], "b": [("e2", -1), ("e1", -1), ("e0", -1)]}
    c = faces_from_rotation_system(("a", "b"), edges, rot)
    assert len(c.tiles) == 3 and c.euler_characteristic() == 2
    assert validate_complex(c, "sphere").ok
    # every face is a bigon made of two consecutive parallel edges
    assert all(len(cyc) == 2 for cyc in c.tiles.values())


def test_single_loop_faces():
    c = faces_from_rotation_system(("a",), {"l": ("a", "a")}, {"a": [("l", 1), ("l", -1)]})
    assert len(c.tiles) == 2 and c.euler_characteristic() == 2


def test_k4_planar_faces():
    c = faces_from_rotation_system(tetrahedron().vertices, tetrahedron().edges, tetrahedron().rotation_system())
    assert len(c.tiles) == 4 and all(len(cyc) == 3 for cyc in c.tiles.values())
    assert validate_complex(c, "sphere").ok


def test_missing_edge_end_rejected():
    with pytest.raises(ValueError, match="inconsistent rotation"):
        faces_from_rotation_system(("a", "b"), {"e": ("a", "b")}, {"a": [("e", 1)], "b": []})


def test_cyclic_helpers():
    assert cyclic_equal([1, 2, 3], [3, 1, 2])
    assert not cyclic_equal([1, 2, 3], [1, 3, 2])
    assert canonical_rotation([3, 1, 2]) == canonical_rotation([2, 3, 1])
    assert reverse(("e", 1)) == ("e", -1)
    assert reverse_cycle((("a", 1), ("b", -1))) == (("b", 1), ("a", -1))


# -- geometry -----------------------------------------------------------------

def test_antipodal_distance():
    p = sphere.normalize(np.array([0.3, -0.2, 0.9]))
    assert sphere.distance(p, -p) == pytest.approx(math.pi)


def test_pole_to_equator():
    eq = np.array([[math.cos(t), math.sin(t), 0.0] for t in np.linspace(0, 2 * math.pi, 200)])
    assert sphere.point_polyline_distance(sphere.NORTH, eq) == pytest.approx(math.pi / 2)


def test_octant_triangle_diameter():
    e = np.eye(3)
    tri = np.concatenate([sphere.great_circle_points(e[i], e[(i + 1) % 3], 20) for i in range(3)])
    assert sphere.diameter(tri) == pytest.approx(math.pi / 2)


unit = st.tuples(*[st.floats(-1, 1) for _ in range(3)]).map(np.array).filter(lambda v: np.linalg.norm(v) > 0.1)


@given(unit, unit)
def test_distance_symmetric_and_bounded(a, b):
    a, b = sphere.normalize(a), sphere.normalize(b)
    d = sphere.distance(a, b)
    assert 0 <= d <= math.pi + 1e-12
    assert d == pytest.approx(sphere.distance(b, a), abs=1e-12)


@given(unit)
def test_stereographic_round_trip(v):
    p = sphere.normalize(v)
    back = sphere.from_homogeneous(*sphere.to_homogeneous(p))
    assert sphere.distance(p, back) < 1e-12


@given(st.lists(unit, min_size=2, max_size=5), unit)
def test_vectorized_polyline_distance_matches_loop(poly, pt):
    poly = np.array([sphere.normalize(p) for p in poly])
    pts = np.array([sphere.normalize(pt), -sphere.normalize(pt)])
    fast = sphere.points_polyline_distance(pts, poly)
    slow = [sphere.point_polyline_distance(p, poly) for p in pts]
    assert np.allclose(fast, slow, atol=1e-12)


# -- rotation systems ----------------------------------------------------------------

@st.composite
def rotation_systems(draw):
    """A random connected multigraph with a random rotation at each vertex."""
    n = draw(st.integers(1, 5))
    vs = [f"v{i}" for i in range(n)]
    edges = {}
    for i in range(1, n):
        edges[f"t{i}"] = (vs[draw(st.integers(0, i - 1))], vs[i])
    for j in range(draw(st.integers(0, 4))):
        edges[f"x{j}"] = (vs[draw(st.integers(0, n - 1))], vs[draw(st.integers(0, n - 1))])
    if not edges:
        edges["x"] = (vs[0], vs[0])
    rot = {v: [] for v in vs}
    for e, (t, h) in edges.items():
        rot[t].append((e, 1))
        rot[h].append((e, -1))
    for v in vs:
        rot[v] = draw(st.permutations(rot[v]))
    return vs, edges, rot


@settings(max_examples=200)
@given(rotation_systems())
def test_rotation_round_trip(data):
    vs, edges, rot = data
    c = faces_from_rotation_system(vs, edges, rot)
    assert c.is_closed_surface()
    chi = c.euler_characteristic()
    assert chi <= 2 and chi % 2 == 0
    back = c.rotation_system()
    for v in vs:
        assert cyclic_equal(back[v], rot[v])


@given(st.integers(3, 12))
def test_polygon_is_disk(n):
    c = polygon(n)
    assert validate_complex(c, "disk").ok
    assert c.counts() == (n, n, 1)


@given(st.integers(1, 5), st.integers(1, 5))
def test_grid_is_disk(r, k):
    rep = validate_complex(grid_disk(r, k), "disk")
    assert rep.ok and rep.F == r * k
