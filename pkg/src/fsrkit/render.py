"""SVG pictures of complexes by stereographic projection."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from . import sphere
from .complex import OrientedComplex

PALETTE = ("#f4d35e", "#8ecae6", "#f28482", "#90be6d", "#cdb4db", "#ffb703", "#a8dadc", "#e9c46a")


@dataclass
class RenderSpec:
    """Projection centre (a complex number or ``None`` for infinity), strokes, fills and size.

    The view is the stereographic projection from the antipode of the
    centre, so the centre lands in the middle of the picture.
    """
    center: complex | None = 0j
    size: int = 800
    edge_width: float = 1.0
    vertex_radius: float = 2.0
    fills: Mapping[str, str] = field(default_factory=dict)
    scale: float = 0.4  # unit circle radius as a fraction of the size

    def __post_init__(self):
        if not 64 <= int(self.size) <= 8192:
            raise ValueError("image size must be within [64, 8192]")


def _frame(center: np.ndarray) -> np.ndarray:
    """Rotation taking ``center`` to the south pole (complex 0)."""
    south = np.array([0.0, 0.0, -1.0])
    v = np.cross(center, south)
    s, c = np.linalg.norm(v), float(center @ south)
    if s < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    k = v / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kx + (1 - c) * (kx @ kx)


def _nudged_center(c: OrientedComplex, spec: RenderSpec) -> np.ndarray:
    """The projection pole (antipode of the centre) must avoid every vertex."""
    center = sphere.from_complex(spec.center)
    if c.positions:
        pos = np.array(list(c.positions.values()))
        step = 0
        while float(np.min(sphere.distance(pos, -center))) < 1e-3 and step < 64:
            step += 1
            center = sphere.normalize(center + 0.01 * np.array([np.sin(step), np.cos(step), 0.3]))
    return center


def _project(points: np.ndarray, rot: np.ndarray) -> np.ndarray:
    q = points @ rot.T
    denom = np.maximum(1.0 - q[:, 2], 1e-9)
    return np.stack([q[:, 0] / denom, q[:, 1] / denom], axis=1)


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def render_svg(c: OrientedComplex, spec: RenderSpec = RenderSpec(),
               tile_types: Mapping[str, str] | None = None) -> str:
    """SVG 1.1 document; tiles are coloured by ``tile_types`` (tile id to type)."""
    n = int(spec.size)
    header = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
              f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{n}" height="{n}" '
              f'viewBox="0 0 {n} {n}">\n')
    if not c.vertices and not c.edges and not c.tiles:
        return header + "</svg>\n"
    if not c.has_geometry:
        raise ValueError("complex has no geometry")
    rot = _frame(_nudged_center(c, spec))
    half, r = n / 2, spec.scale * n

    def xy(points: np.ndarray) -> list[str]:
        p = _project(np.asarray(points, dtype=float), rot)
        p = np.clip(p, -4.0, 4.0)
        return [f"{_fmt(half + r * x)},{_fmt(half - r * y)}" for x, y in p]

    types = sorted(set((tile_types or {}).values()))
    colour = {t: spec.fills.get(t, PALETTE[i % len(PALETTE)]) for i, t in enumerate(types)}
    out = [header, '<g id="tiles" fill-rule="evenodd" stroke="none">\n']
    for t, cyc in c.tiles.items():
        pts = [c.polylines[e] if s > 0 else c.polylines[e][::-1] for e, s in cyc]
        ring = np.concatenate([p[:-1] for p in pts]) if pts else np.zeros((0, 3))
        if len(ring) < 3:
            continue
        fill = colour.get((tile_types or {}).get(t), "#dddddd")
        out.append(f'<polygon id={quoteattr(t)} fill="{fill}" fill-opacity="0.6" '
                   f'points="{" ".join(xy(ring))}"/>\n')
    out.append('</g>\n')
    out.append(f'<g id="edges" fill="none" stroke="#222222" stroke-width="{spec.edge_width}">\n')
    for e, pl in c.polylines.items():
        out.append(f'<polyline id={quoteattr(e)} points="{" ".join(xy(pl))}"/>\n')
    out.append('</g>\n')
    out.append('<g id="vertices" fill="#000000">\n')
    for v, p in c.positions.items():
        x, y = xy(p[None, :])[0].split(",")
        out.append(f'<circle id={quoteattr(v)} cx="{x}" cy="{y}" r="{spec.vertex_radius}"/>\n')
    out.append('</g>\n')
    out.append(f'<!-- {escape(f"{len(c.vertices)} vertices, {len(c.edges)} edges, {len(c.tiles)} tiles")} -->\n')
    out.append("</svg>\n")
    return "".join(out)
