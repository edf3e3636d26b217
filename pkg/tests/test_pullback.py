import math

import numpy as np
import pytest

from fsrkit import sphere
from fsrkit.complex import validate_complex
from fsrkit.pullback import (LiftError, PullbackComplex, complex_from_geometry, lift_edge,
                             preimages_of_point, pullback_complex, tile_diameters)
from fsrkit.ratmap import RationalMap, SpherePoint

from conftest import lattes, square
from oracles import composite_residual


def _fibre(f, q):
    return sorted((round(p.to_complex().real, 9) + 0.0, round(p.to_complex().imag, 9) + 0.0, k)
                  for p, k in preimages_of_point(f, q))


def test_fibres():
    assert _fibre(square(), SpherePoint.finite(1)) == [(-1.0, 0.0, 1), (1.0, 0.0, 1)]
    assert _fibre(square(), SpherePoint.finite(0)) == [(0.0, 0.0, 2)]
    assert _fibre(lattes(), SpherePoint.infinity()) == [(0.0, 0.0, 2)]


def test_fibre_degrees_sum_to_degree():
    f = RationalMap((1, 2, 0, -1), (3, 0, 1, 0))
    for q in (SpherePoint.finite(0.3 + 0.2j), SpherePoint.infinity(), SpherePoint.finite(-5)):
        assert sum(k for _, k in preimages_of_point(f, q)) == 3


def test_semicircle_lift_is_quarter_circle():
    arc = np.array([sphere.from_complex(complex(math.cos(t), math.sin(t))) for t in np.linspace(0, math.pi, 65)])
    res = lift_edge(square(), arc, SpherePoint.finite(1))
    end = SpherePoint.from_vector(res.polyline[-1]).to_complex()
    assert abs(end - 1j) < 1e-9
    # every sample lies on the unit circle in the first quadrant, at half the angle
    zs = [SpherePoint.from_vector(p).to_complex() for p in res.polyline]
    assert max(abs(abs(z) - 1) for z in zs) < 1e-9
    assert max(abs(np.angle(z) - t / 2) for z, t in zip(zs, np.linspace(0, math.pi, 65))) < 1e-9
    assert res.max_residual < 1e-9


def test_constant_arc_lift():
    arc = np.array([sphere.from_complex(1)] * 5)
    res = lift_edge(square(), arc, SpherePoint.finite(-1))
    assert np.allclose(res.polyline, sphere.from_complex(-1))


def test_start_must_be_a_preimage():
    arc = np.array([sphere.from_complex(1), sphere.from_complex(2)])
    with pytest.raises(ValueError):
        lift_edge(square(), arc, SpherePoint.finite(0.5))


def _equator():
    pos = {"p": sphere.from_complex(1), "m": sphere.from_complex(-1)}
    upper = sphere.sample_path([pos["p"], sphere.from_complex(1j), pos["m"]])
    lower = sphere.sample_path([pos["m"], sphere.from_complex(-1j), pos["p"]])
    return complex_from_geometry(pos, {"u": ("p", "m"), "l": ("m", "p")}, {"u": upper, "l": lower})


def test_square_equator_pullback():
    s = _equator()
    p = pullback_complex(square(), s, 1)
    assert p.complex.counts() == (4, 4, 2)
    pts = sorted((round(z.real, 6) + 0.0, round(z.imag, 6) + 0.0)
                 for z in (sphere.to_complex(x) for x in p.complex.positions.values()))
    assert pts == [(-1.0, 0.0), (0.0, -1.0), (0.0, 1.0), (1.0, 0.0)]
    # walking around the equator, carriers alternate between the two edges of S
    order = sorted(p.complex.edges, key=lambda e: np.angle(
        SpherePoint.from_vector(p.complex.polylines[e][len(p.complex.polylines[e]) // 2]).to_complex()) % (2 * math.pi))
    labels = [p.carrier[e].id for e in order]
    assert all(a != b for a, b in zip(labels, labels[1:] + labels[:1]))


def test_needs_positive_level(lattes_base):
    with pytest.raises(ValueError):
        pullback_complex(lattes(), lattes_base, 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_lattes_counts(lattes_levels, n):
    p = lattes_levels[n - 1]
    V, E, F = p.complex.counts()
    assert (E, F) == (3 * 2 ** n, 2 * 2 ** n)
    assert V - E + F == 2
    assert validate_complex(p.complex, "sphere").ok


def test_lattes_level_one_vertices(lattes_levels):
    # f^-1({inf, 1, -1}) = {0} u {inf} u {1, -1}
    got = sorted(str(SpherePoint.from_vector(v)) for v in lattes_levels[0].complex.positions.values())
    assert got == ["-1", "0", "1", "inf"]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_composite_residual(lattes_levels, lattes_base, n):
    assert composite_residual(lattes_levels[n - 1], lattes_base) < 1e-9


def test_fibre_degree_sums(lattes_levels, lattes_base):
    for p in lattes_levels[:4]:
        total = {v: 0 for v in lattes_base.vertices}
        for v in p.complex.vertices:
            total[p.carrier[v].id] += p.local_degree[v]
        assert set(total.values()) == {2 ** p.level}


def test_even_covering_of_cells(lattes_levels, lattes_base):
    for p in lattes_levels[:4]:
        for kind, cells in (("edge", lattes_base.edges), ("tile", lattes_base.tiles)):
            counts = {c: 0 for c in cells}
            for c in (p.complex.edges if kind == "edge" else p.complex.tiles):
                counts[p.carrier[c].id] += 1
            assert set(counts.values()) == {2 ** p.level}


def _left_point(c, t):
    """A point just to the left of the first usable boundary sample of tile t (complex plane)."""
    for e, sg in c.tiles[t]:
        pl = c.polylines[e] if sg > 0 else c.polylines[e][::-1]
        zs = [sphere.to_complex(x) for x in pl]
        for k in range(1, len(zs) - 1):
            z, dz = zs[k], zs[k + 1] - zs[k - 1]
            if abs(z) < 1e3 and abs(dz) > 0:
                return z + 1e-6 * max(1.0, abs(z)) * 1j * dz / abs(dz)
    raise AssertionError("no usable sample")


def test_carrier_tiles_agree_with_geometry(lattes_levels):
    """Points inside a tile map into the same half plane as the rest of its carrier class."""
    from oracles import lattes_on_vectors
    for p in lattes_levels[:4]:
        side = {}
        for t in p.complex.tiles:
            q = sphere.from_complex(_left_point(p.complex, t))[None, :]
            for _ in range(p.level):
                q = lattes_on_vectors(q)
            im = sphere.to_complex(q[0]).imag
            assert abs(im) > 0
            side.setdefault(p.carrier[t].id, set()).add(im > 0)
        assert all(len(v) == 1 for v in side.values())
        assert len({next(iter(v)) for v in side.values()}) == 2


def test_diameters_bounded(lattes_base, lattes_levels):
    assert tile_diameters(lattes_base).max <= math.pi + 1e-12
    maxes = [tile_diameters(p).max for p in lattes_levels]
    assert all(m <= math.pi + 1e-12 for m in maxes)
    # decay within the horizon
    assert maxes[-1] < maxes[0]


def test_critical_value_in_edge_interior_rejected():
    # z^2 with an edge through the critical value 0
    pos = {"a": sphere.from_complex(-1), "b": sphere.from_complex(1), "c": sphere.from_complex(1j)}
    lines = {"x": sphere.sample_path([pos["a"], sphere.from_complex(0), pos["b"]]),
             "y": sphere.sample_path([pos["b"], pos["c"]]),
             "z": sphere.sample_path([pos["c"], pos["a"]])}
    s = complex_from_geometry(pos, {"x": ("a", "b"), "y": ("b", "c"), "z": ("c", "a")}, lines)
    with pytest.raises(LiftError):
        pullback_complex(square(), s, 1)


def test_identity_level_zero(lattes_base):
    p = PullbackComplex.identity(lattes(), lattes_base)
    assert p.level == 0 and p.complex is lattes_base
