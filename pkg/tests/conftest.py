import numpy as np
import pytest

from fsrkit import sphere
from fsrkit.constructor import build_alpha
from fsrkit.pullback import PullbackOptions, complex_from_geometry, pullback_levels
from fsrkit.ratmap import RationalMap


def lattes():
    """1 - 2/z^2."""
    return RationalMap((1, 0, -2), (1, 0, 0))


def square():
    return RationalMap((1, 0, 0), (1,))


def real_circle_complex(points=(-1.0, 1.0, None)):
    """Two tiles bounded by the real circle, vertices at the given points."""
    vecs = [sphere.from_complex(z) for z in points]
    alpha = build_alpha(vecs)
    return alpha.complex


def latlong_sphere(nlon, nlat, rot=np.eye(3)):
    """A fine latitude/longitude tiling of the sphere with geometry."""
    pos = {}

    def point(th, ph):
        return rot @ np.array([np.cos(ph) * np.cos(th), np.cos(ph) * np.sin(th), np.sin(ph)])

    pos["S"] = point(0, -np.pi / 2)
    pos["N"] = point(0, np.pi / 2)
    lats = [-np.pi / 2 + np.pi * (j + 1) / nlat for j in range(nlat - 1)]
    for j, ph in enumerate(lats):
        for i in range(nlon):
            pos[f"g{j:03d}_{i:03d}"] = point(2 * np.pi * i / nlon, ph)
    edges, lines = {}, {}

    def add(a, b):
        e = f"e{len(edges):05d}"
        edges[e] = (a, b)
        lines[e] = sphere.great_circle_points(pos[a], pos[b], 3)

    top = len(lats) - 1
    for j in range(len(lats)):
        for i in range(nlon):
            add(f"g{j:03d}_{i:03d}", f"g{j:03d}_{(i + 1) % nlon:03d}")
            if j < top:
                add(f"g{j:03d}_{i:03d}", f"g{j + 1:03d}_{i:03d}")
    for i in range(nlon):
        add("S", f"g000_{i:03d}")
        add(f"g{top:03d}_{i:03d}", "N")
    return complex_from_geometry(pos, edges, lines)


@pytest.fixture(scope="session")
def lattes_map():
    return lattes()


@pytest.fixture(scope="session")
def lattes_base():
    return real_circle_complex()


@pytest.fixture(scope="session")
def lattes_levels(lattes_base):
    """f^-n(S) for n = 1..6."""
    return list(pullback_levels(lattes(), lattes_base, 6, PullbackOptions()))
