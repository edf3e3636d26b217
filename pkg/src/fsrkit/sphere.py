"""Geometry on the unit sphere.

Points are unit 3-vectors.  The extended complex plane is identified with
the sphere by inverse stereographic projection from the north pole, so
``0`` is the south pole and ``inf`` the north pole.  Distances are
great-circle distances.
"""
from __future__ import annotations

import math

import numpy as np

NORTH = np.array([0.0, 0.0, 1.0])


def from_homogeneous(a, b) -> np.ndarray:
    """Unit vector of the point ``(a : b)``; arrays of pairs give an ``(n, 3)`` array."""
    if np.ndim(a) or np.ndim(b):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
        s = np.maximum(np.abs(a), np.abs(b))
        if np.any(s == 0):
            raise ValueError("(0 : 0) is not a point of the sphere")
        a, b = a / s, b / s
        ab = a * np.conj(b)
        na, nb = np.abs(a) ** 2, np.abs(b) ** 2
        v = np.stack([2 * ab.real, 2 * ab.imag, na - nb], axis=-1) / (na + nb)[..., None]
        return v / np.linalg.norm(v, axis=-1, keepdims=True)
    a = complex(a)
    b = complex(b)
    s = max(abs(a), abs(b))
    if s == 0:
        raise ValueError("(0 : 0) is not a point of the sphere")
    a, b = a / s, b / s
    ab = a * b.conjugate()
    na, nb = abs(a) ** 2, abs(b) ** 2
    v = np.array([2 * ab.real, 2 * ab.imag, na - nb]) / (na + nb)
    return v / np.linalg.norm(v)


def from_complex(z: complex | None) -> np.ndarray:
    if z is None or (isinstance(z, (float, complex)) and math.isinf(abs(z))):
        return NORTH.copy()
    return from_homogeneous(z, 1.0)


def to_homogeneous(p: np.ndarray) -> tuple[complex, complex]:
    """A homogeneous pair for ``p``, chosen away from the degenerate pole."""
    x, y, z = (float(t) for t in p)
    if z <= 0:
        return complex(x, y), complex(1.0 - z, 0.0)
    return complex(1.0 + z, 0.0), complex(x, -y)


def to_complex(p: np.ndarray) -> complex:
    """Complex coordinate of ``p``; the north pole maps to ``complex(inf)``."""
    a, b = to_homogeneous(p)
    if b == 0:
        return complex(math.inf, 0.0)
    return a / b


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def distance(p, q) -> float | np.ndarray:
    """Great-circle distance; broadcasts over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    cr = np.linalg.norm(np.cross(p, q), axis=-1)
    dt = np.sum(p * q, axis=-1)
    return np.arctan2(cr, dt)


def slerp(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    """Point at fraction ``s`` along the minor great-circle arc from a to b."""
    om = float(distance(a, b))
    if om < 1e-15:
        return normalize(a + s * (b - a))
    so = math.sin(om)
    return normalize((math.sin((1 - s) * om) / so) * a + (math.sin(s * om) / so) * b)


def great_circle_points(a: np.ndarray, b: np.ndarray, count: int) -> np.ndarray:
    """``count`` points from a to b inclusive along the minor arc."""
    return np.array([slerp(a, b, s) for s in np.linspace(0.0, 1.0, count)])


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from point(s) ``p`` to the minor arcs ``[a[i], b[i]]``.

    ``a`` and ``b`` have shape (m, 3); ``p`` is a single point.  Returns an
    array of length m.
    """
    p = np.asarray(p, dtype=float)
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    da = distance(a, p)
    db = distance(b, p)
    best = np.minimum(da, db)
    n = np.cross(a, b)
    nn = np.linalg.norm(n, axis=-1)
    ok = nn > 1e-15
    if not np.any(ok):
        return best
    n = n[ok] / nn[ok][:, None]
    h = n @ p
    c = p[None, :] - h[:, None] * n
    inside = (np.sum(np.cross(a[ok], c) * n, axis=-1) >= 0) & (
        np.sum(np.cross(c, b[ok]) * n, axis=-1) >= 0
    )
    perp = np.abs(np.arcsin(np.clip(h, -1.0, 1.0)))
    sub = best[ok]
    sub = np.where(inside, np.minimum(sub, perp), sub)
    best[ok] = sub
    return best


def point_polyline_distance(p: np.ndarray, poly: np.ndarray) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) == 1:
        return float(distance(p, poly[0]))
    return float(np.min(point_segment_distance(p, poly[:-1], poly[1:])))


def points_polyline_distance(points: np.ndarray, poly: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Distance from each of ``points`` to the polyline ``poly`` (vectorized)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.atleast_2d(np.asarray(poly, dtype=float))
    if len(poly) == 1:
        return np.atleast_1d(distance(pts, poly[0]))
    a, b = poly[:-1], poly[1:]
    n = np.cross(a, b)
    nn = np.linalg.norm(n, axis=-1)
    good = nn > 1e-15
    n = np.where(good[:, None], n / np.where(good, nn, 1.0)[:, None], 0.0)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        dv = np.arctan2(np.linalg.norm(np.cross(p[:, None, :], poly[None, :, :]), axis=-1), p @ poly.T)
        best = np.minimum(dv[:, :-1], dv[:, 1:])
        h = p @ n.T  # (P, M)
        c = p[:, None, :] - h[..., None] * n[None, :, :]
        inside = (np.einsum("pmk,mk->pm", np.cross(a[None, :, :], c), n) >= 0) & (
            np.einsum("pmk,mk->pm", np.cross(c, b[None, :, :]), n) >= 0) & good[None, :]
        perp = np.abs(np.arcsin(np.clip(h, -1.0, 1.0)))
        best = np.where(inside, np.minimum(best, perp), best)
        out[s:s + chunk] = best.min(axis=1)
    return out


def diameter(points: np.ndarray) -> float:
    """Largest pairwise great-circle distance among ``points``."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    best = 0.0
    for start in range(0, len(pts), 512):
        block = pts[start:start + 512]
        chord = np.linalg.norm(block[:, None, :] - pts[None, :, :], axis=-1)
        best = max(best, float(chord.max()))
    return 2.0 * math.asin(min(1.0, best / 2.0))


def tangent_basis(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent frame at ``w`` oriented like the complex plane.

    ``e1 x e2 = -w``; inverse stereographic projection reverses the
    orientation given by the outward normal.
    """
    w = np.asarray(w, dtype=float)
    ref = np.array([1.0, 0.0, 0.0]) if abs(w[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = ref - np.dot(ref, w) * w
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(-w, e1)
    return e1, e2


def direction_angle(w: np.ndarray, toward: np.ndarray) -> float:
    """Angle, counterclockwise in the complex orientation, of ``toward`` seen from ``w``."""
    e1, e2 = tangent_basis(w)
    d = np.asarray(toward, dtype=float) - w
    return math.atan2(float(np.dot(d, e2)), float(np.dot(d, e1)))


def fibonacci_sphere(count: int) -> np.ndarray:
    """Nearly uniform deterministic sample of the sphere."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def arcs_cross(a1, a2, b1, b2, eps: float = 1e-12) -> bool:
    """True if minor arcs [a1,a2] and [b1,b2] meet at a point interior to both."""
    na = np.cross(a1, a2)
    nb = np.cross(b1, b2)
    line = np.cross(na, nb)
    ln = np.linalg.norm(line)
    if ln < eps:
        return False
    line /= ln
    for x in (line, -line):
        if (_strictly_on_arc(x, a1, a2, na, eps) and _strictly_on_arc(x, b1, b2, nb, eps)):
            return True
    return False


def _strictly_on_arc(x, a, b, n, eps) -> bool:
    return float(np.dot(np.cross(a, x), n)) > eps and float(np.dot(np.cross(x, b), n)) > eps


def polyline_is_simple(poly: np.ndarray, closed: bool = False) -> bool:
    """Check that a spherical polyline does not cross itself.

    Only proper crossings of non-adjacent segments and repeated vertices are
    detected; this is adequate for densely sampled curves.
    """
    pts = np.asarray(poly, dtype=float)
    segs = list(zip(pts[:-1], pts[1:]))
    m = len(segs)
    # repeated vertices
    body = pts[:-1] if closed else pts
    for i in range(len(body)):
        d = distance(body[i], body[i + 1:])
        if np.any(np.atleast_1d(d) < 1e-12):
            return False
    for i in range(m):
        for j in range(i + 2, m):
            if closed and i == 0 and j == m - 1:
                continue
            if arcs_cross(segs[i][0], segs[i][1], segs[j][0], segs[j][1]):
                return False
    return True


def arc_parameters(count: int = 64, refine: int = 12) -> np.ndarray:
    """Parameters in [0, 1]: ``count`` uniform steps plus geometric refinement at both ends."""
    base = np.linspace(0.0, 1.0, count + 1)
    h = 1.0 / count
    near = h * 0.5 ** np.arange(1, refine + 1)
    return np.unique(np.concatenate([base, near, 1.0 - near]))


def sample_path(waypoints, count: int = 64, refine: int = 12) -> np.ndarray:
    """Polyline along great arcs through ``waypoints``, sampled by arc length."""
    pts = normalize(np.asarray(waypoints, dtype=float))
    seg = np.array([float(distance(a, b)) for a, b in zip(pts[:-1], pts[1:])])
    if np.any(seg < 1e-12) or np.any(seg > math.pi - 1e-9):
        raise ValueError("consecutive waypoints must be distinct and not antipodal")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    out = []
    for t in arc_parameters(count, refine) * cum[-1]:
        i = min(int(np.searchsorted(cum, t, side="right")) - 1, len(seg) - 1)
        out.append(slerp(pts[i], pts[i + 1], (t - cum[i]) / seg[i]))
    out = np.array(out)
    out[0], out[-1] = pts[0], pts[-1]
    return out
