"""Oriented polygonal 2-complexes.

A complex is given by vertices, directed edges and tiles.  A tile boundary
is a cyclic sequence of darts ``(edge_id, sign)``: sign ``+1`` traverses the
edge from tail to head, ``-1`` from head to tail.  Ids are opaque strings
and must be unique across vertices, edges and tiles.

Faces traced from a rotation system are traversed counterclockwise (the
face lies on the left), with rotations listed counterclockwise.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

Dart = tuple[str, int]


def reverse(d: Dart) -> Dart:
    return (d[0], -d[1])


def reverse_cycle(cycle: Iterable[Dart]) -> tuple[Dart, ...]:
    return tuple(reverse(d) for d in reversed(tuple(cycle)))


def canonical_rotation(seq: Iterable) -> tuple:
    """Rotate a cyclic sequence so that it starts at its smallest element."""
    seq = tuple(seq)
    if not seq:
        return seq
    k = min(range(len(seq)), key=lambda i: seq[i])
    return seq[k:] + seq[:k]


def cyclic_equal(a: Iterable, b: Iterable) -> bool:
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        return False
    if not a:
        return True
    doubled = b + b
    return any(doubled[i:i + len(a)] == a for i in range(len(b)))


@dataclass(frozen=True)
class CellRef:
    kind: str  # "vertex" | "edge" | "tile"
    id: str

    def __post_init__(self):
        if self.kind not in ("vertex", "edge", "tile"):
            raise ValueError(f"bad cell kind {self.kind!r}")


DIMENSION = {"vertex": 0, "edge": 1, "tile": 2}


@dataclass(frozen=True, eq=False)
class OrientedComplex:
    vertices: tuple[str, ...]
    edges: Mapping[str, tuple[str, str]]
    tiles: Mapping[str, tuple[Dart, ...]]
    positions: Mapping[str, np.ndarray] | None = None
    polylines: Mapping[str, np.ndarray] | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))
        object.__setattr__(self, "edges", MappingProxyType(dict(sorted(self.edges.items()))))
        tiles = {t: tuple((e, int(s)) for e, s in cyc) for t, cyc in sorted(self.tiles.items())}
        object.__setattr__(self, "tiles", MappingProxyType(tiles))
        if self.positions is not None:
            pos = {v: np.asarray(p, dtype=float) for v, p in sorted(self.positions.items())}
            object.__setattr__(self, "positions", MappingProxyType(pos))
        if self.polylines is not None:
            pl = {e: np.asarray(p, dtype=float) for e, p in sorted(self.polylines.items())}
            object.__setattr__(self, "polylines", MappingProxyType(pl))

    # -- basic incidence ------------------------------------------------
    @property
    def has_geometry(self) -> bool:
        return self.positions is not None and self.polylines is not None

    def tail(self, d: Dart) -> str:
        t, h = self.edges[d[0]]
        return t if d[1] > 0 else h

    def head(self, d: Dart) -> str:
        t, h = self.edges[d[0]]
        return h if d[1] > 0 else t

    def tile_vertices(self, tid: str) -> list[str]:
        return [self.tail(d) for d in self.tiles[tid]]

    def kind_of(self, cid: str) -> str | None:
        if cid in self.edges:
            return "edge"
        if cid in self.tiles:
            return "tile"
        if cid in self._vertex_set:
            return "vertex"
        return None

    @property
    def _vertex_set(self) -> frozenset:
        vs = self.__dict__.get("_vs")
        if vs is None:
            vs = frozenset(self.vertices)
            object.__setattr__(self, "_vs", vs)
        return vs

    def counts(self) -> tuple[int, int, int]:
        return len(self.vertices), len(self.edges), len(self.tiles)

    def euler_characteristic(self) -> int:
        v, e, f = self.counts()
        return v - e + f

    def dart_uses(self) -> Counter:
        return Counter(d for cyc in self.tiles.values() for d in cyc)

    def edge_uses(self) -> Counter:
        return Counter(d[0] for cyc in self.tiles.values() for d in cyc)

    def is_closed_surface(self) -> bool:
        uses = self.dart_uses()
        return all(uses[(e, s)] == 1 for e in self.edges for s in (1, -1))

    def boundary_darts(self) -> list[Dart]:
        """Darts of tiles whose edge lies on exactly one tile side."""
        eu = self.edge_uses()
        return [d for t in self.tiles for d in self.tiles[t] if eu[d[0]] == 1]

    def edge_tiles(self) -> dict[str, list[str]]:
        out = defaultdict(list)
        for t, cyc in self.tiles.items():
            for e, _ in cyc:
                out[e].append(t)
        return out

    def vertex_tiles(self) -> dict[str, set[str]]:
        out = defaultdict(set)
        for t in self.tiles:
            out_t = self.tile_vertices(t)
            for v in out_t:
                out[v].add(t)
        return out

    def neighbors(self) -> dict[str, list[tuple[str, Dart]]]:
        """Adjacency of the 1-skeleton: vertex -> [(other vertex, dart)]."""
        adj = defaultdict(list)
        for e, (t, h) in self.edges.items():
            adj[t].append((h, (e, 1)))
            adj[h].append((t, (e, -1)))
        return adj

    def subcomplex(self, tile_ids: Iterable[str]) -> "OrientedComplex":
        """The closed subcomplex formed by the given tiles."""
        tile_ids = sorted(set(tile_ids))
        edges = {}
        verts = set()
        for t in tile_ids:
            for e, _ in self.tiles[t]:
                edges[e] = self.edges[e]
                verts.update(self.edges[e])
        pos = None if self.positions is None else {v: self.positions[v] for v in verts}
        pl = None if self.polylines is None else {e: self.polylines[e] for e in edges}
        return OrientedComplex(tuple(verts), edges, {t: self.tiles[t] for t in tile_ids}, pos, pl)

    def rotation_system(self) -> dict[str, list[Dart]]:
        """Counterclockwise cyclic order of darts leaving each vertex.

        Inverse of :func:`faces_from_rotation_system` for closed surfaces.
        For vertices whose link is not a single cycle the result lists the
        longest chain found and is not meaningful.
        """
        succ = {}
        for cyc in self.tiles.values():
            k = len(cyc)
            for i in range(k):
                d, d2 = cyc[i], cyc[(i + 1) % k]
                succ[d2] = reverse(d)
        leaving = defaultdict(list)
        for e, (t, h) in self.edges.items():
            leaving[t].append((e, 1))
            leaving[h].append((e, -1))
        rot = {}
        for v in self.vertices:
            ds = sorted(leaving[v])
            if not ds:
                rot[v] = []
                continue
            start = ds[0]
            order = [start]
            d = succ.get(start)
            while d is not None and d != start and len(order) <= len(ds):
                order.append(d)
                d = succ.get(d)
            rot[v] = order
        return rot

    def tile_boundary_points(self, tid: str) -> np.ndarray:
        """Concatenated boundary polyline of a tile (requires geometry)."""
        if not self.has_geometry:
            raise ValueError("complex has no geometry")
        pts = []
        for e, s in self.tiles[tid]:
            pl = self.polylines[e]
            pts.append(pl if s > 0 else pl[::-1])
        return np.concatenate(pts, axis=0)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    V: int = 0
    E: int = 0
    F: int = 0
    euler: int = 0
    valences: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def vertex_valences(c: OrientedComplex) -> dict[str, int]:
    """Number of edge-ends at each vertex (a loop counts twice)."""
    val = {v: 0 for v in c.vertices}
    for t, h in c.edges.values():
        val[t] += 1
        val[h] += 1
    return val


def _components(vertices, adjacency) -> int:
    seen = set()
    n = 0
    for v in vertices:
        if v in seen:
            continue
        n += 1
        stack = [v]
        seen.add(v)
        while stack:
            x = stack.pop()
            for y in adjacency.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
    return n


def validate_complex(c: OrientedComplex, expect: str = "any", min_tile_length: int = 1) -> ValidationReport:
    """Check the structural invariants of ``c``.

    ``expect`` is one of ``"any"``, ``"surface"`` (closed), ``"sphere"`` or
    ``"disk"``.  Problems are reported, never raised.
    """
    rep = ValidationReport()
    bad = rep.violations
    vset = set(c.vertices)
    ids = list(c.vertices) + list(c.edges) + list(c.tiles)
    if len(ids) != len(set(ids)):
        bad.append("ids not unique across cell kinds")
    for e, (t, h) in c.edges.items():
        if t not in vset or h not in vset:
            bad.append(f"edge {e} has unknown endpoint")
    if bad:
        return rep
    for tid, cyc in c.tiles.items():
        if len(cyc) < max(1, min_tile_length):
            if min_tile_length >= 3:
                bad.append(f"tile {tid}: tile type needs >= 3 vertices")
            else:
                bad.append(f"tile {tid} boundary shorter than {max(1, min_tile_length)}")
            continue
        if any(e not in c.edges for e, _ in cyc):
            bad.append(f"tile {tid} references unknown edge")
            continue
        k = len(cyc)
        for i in range(k):
            if c.head(cyc[i]) != c.tail(cyc[(i + 1) % k]):
                bad.append(f"tile {tid} boundary not a cycle")
                break
    if bad:
        return rep
    uses = c.dart_uses()
    for d, n in sorted(uses.items()):
        if n > 1:
            bad.append(f"signed edge reused: {d[0]}{'+' if d[1] > 0 else '-'}")
    eu = c.edge_uses()
    for e in c.edges:
        if eu[e] == 0:
            bad.append(f"edge {e} not on any tile")
    deg = vertex_valences(c)
    for v in c.vertices:
        if deg[v] == 0:
            bad.append(f"vertex {v} isolated")
    rep.V, rep.E, rep.F = c.counts()
    rep.euler = rep.V - rep.E + rep.F
    rep.valences = deg
    if c.positions is not None:
        for v, p in c.positions.items():
            if abs(np.linalg.norm(p) - 1.0) > 1e-9:
                bad.append(f"vertex {v} position not a unit vector")
    if expect == "any" or bad:
        return rep

    adj = defaultdict(set)
    for t, h in c.edges.values():
        adj[t].add(h)
        adj[h].add(t)
    if _components(c.vertices, adj) != 1:
        bad.append("not connected")
    link_ok = _links_ok(c, allow_boundary=(expect == "disk"))
    if not link_ok:
        bad.append("vertex link not a single cycle")
    if expect in ("surface", "sphere"):
        if not c.is_closed_surface():
            bad.append("not a closed surface")
        if expect == "sphere" and rep.euler != 2:
            bad.append(f"euler characteristic {rep.euler} != 2")
    elif expect == "disk":
        if rep.euler != 1:
            bad.append(f"euler characteristic {rep.euler} != 1")
        bd = c.boundary_darts()
        if not bd or not _single_cycle(c, bd):
            bad.append("boundary not a single cycle")
        for tid in c.tiles:
            vs = c.tile_vertices(tid)
            if len(set(vs)) != len(vs):
                bad.append(f"tile {tid} boundary not embedded")
    return rep


def _single_cycle(c: OrientedComplex, darts: list[Dart]) -> bool:
    nxt = {}
    for d in darts:
        t = c.tail(d)
        if t in nxt:
            return False
        nxt[t] = d
    start = darts[0]
    d = start
    for _ in range(len(darts)):
        d = nxt.get(c.head(d))
        if d is None:
            return False
        if d == start:
            break
    else:
        return False
    seen = 1
    d = nxt[c.head(start)]
    while d != start:
        seen += 1
        d = nxt[c.head(d)]
    return seen == len(darts)


def _links_ok(c: OrientedComplex, allow_boundary: bool) -> bool:
    """Each vertex link (from tile corners) is one cycle, or one path on the boundary."""
    corners = defaultdict(list)  # v -> list of (incoming edge end, outgoing edge end)
    for cyc in c.tiles.values():
        k = len(cyc)
        for i in range(k):
            d_in, d_out = cyc[i - 1], cyc[i]
            corners[c.tail(d_out)].append((reverse(d_in), d_out))
    for v in c.vertices:
        cs = corners.get(v, [])
        if not cs:
            return False
        # link graph: nodes are darts leaving v, corners join two of them
        adj = defaultdict(list)
        for a, b in cs:
            adj[a].append(b)
            adj[b].append(a)
        nodes = list(adj)
        if any(len(adj[x]) > 2 for x in nodes):
            return False
        if _components(nodes, adj) != 1:
            return False
        ends = sum(1 for x in nodes if len(adj[x]) == 1)
        if ends and not allow_boundary:
            return False
        if ends not in (0, 2):
            return False
    return True


def faces_from_rotation_system(
    vertices: Iterable[str],
    edges: Mapping[str, tuple[str, str]],
    rotation: Mapping[str, list[Dart]],
    tile_prefix: str = "t",
    positions=None,
    polylines=None,
) -> OrientedComplex:
    """Trace the faces of an embedded graph given counterclockwise rotations.

    The face following dart ``d`` into vertex ``v`` continues along the dart
    preceding ``reverse(d)`` in the rotation at ``v``.
    """
    vertices = tuple(vertices)
    expected = defaultdict(list)
    for e, (t, h) in edges.items():
        expected[t].append((e, 1))
        expected[h].append((e, -1))
    pred = {}
    seen = Counter()
    for v in vertices:
        rot = [(e, int(s)) for e, s in rotation.get(v, [])]
        if sorted(rot) != sorted(expected[v]):
            raise ValueError(f"inconsistent rotation data at vertex {v}")
        for i, d in enumerate(rot):
            pred[d] = rot[i - 1]
            seen[d] += 1
    if any(n != 1 for n in seen.values()) or len(pred) != 2 * len(edges):
        raise ValueError("inconsistent rotation data")

    def head(d):
        t, h = edges[d[0]]
        return h if d[1] > 0 else t

    visited = set()
    faces = []
    for d0 in sorted(pred):
        if d0 in visited:
            continue
        cyc = []
        d = d0
        while d not in visited:
            visited.add(d)
            cyc.append(d)
            d = pred[reverse(d)]
        if d != d0:
            raise ValueError("inconsistent rotation data")
        faces.append(tuple(cyc))
    width = max(1, len(str(len(faces) - 1)))
    tiles = {f"{tile_prefix}{i:0{width}d}": cyc for i, cyc in enumerate(faces)}
    return OrientedComplex(vertices, dict(edges), tiles, positions, polylines)


@dataclass(frozen=True, eq=False)
class CellularMap:
    """Cellular map between complexes that is a homeomorphism on open cells.

    ``edge_map`` sends an edge to a signed edge of the target.  The tile map
    may name any target cell; validation flags a dimension drop.
    """
    source: OrientedComplex
    target: OrientedComplex
    vertex_map: Mapping[str, str]
    edge_map: Mapping[str, tuple[str, int]]
    tile_map: Mapping[str, str]

    def image_dart(self, d: Dart) -> Dart:
        e, s = self.edge_map[d[0]]
        return (e, s * d[1])

    def image_cycle(self, tid: str) -> tuple[Dart, ...]:
        return tuple(self.image_dart(d) for d in self.source.tiles[tid])

    def image_of(self, ref: CellRef) -> CellRef:
        if ref.kind == "vertex":
            return CellRef("vertex", self.vertex_map[ref.id])
        if ref.kind == "edge":
            e = self.edge_map[ref.id][0]
            return CellRef(self.target.kind_of(e) or "edge", e)
        t = self.tile_map[ref.id]
        return CellRef(self.target.kind_of(t) or "tile", t)


def tile_orientation_sign(m: CellularMap, tid: str) -> int:
    """+1 if tile ``tid`` maps onto its image preserving boundary direction,
    -1 if reversing, 0 if the boundary does not map onto the image tile."""
    img = m.tile_map.get(tid)
    if img not in m.target.tiles:
        return 0
    cyc = m.image_cycle(tid)
    target = m.target.tiles[img]
    if cyclic_equal(cyc, target):
        return 1
    if cyclic_equal(reverse_cycle(cyc), target):
        return -1
    return 0


def validate_cellular_map(m: CellularMap) -> list[str]:
    """Incidence and dimension checks for a map that is injective on open cells."""
    bad = []
    src, tgt = m.source, m.target
    for v in src.vertices:
        w = m.vertex_map.get(v)
        if w is None:
            bad.append(f"vertex {v} unmapped")
        elif tgt.kind_of(w) != "vertex":
            bad.append(f"vertex {v} maps to non-vertex {w}")
    for e, (t, h) in src.edges.items():
        img = m.edge_map.get(e)
        if img is None:
            bad.append(f"edge {e} unmapped")
            continue
        kind = tgt.kind_of(img[0])
        if kind == "vertex":
            bad.append(f"dimension drop: edge {e} maps to vertex {img[0]}")
            continue
        if kind != "edge":
            bad.append(f"edge {e} maps to non-edge {img[0]}")
            continue
        d = (img[0], img[1])
        if m.vertex_map.get(t) != tgt.tail(d) or m.vertex_map.get(h) != tgt.head(d):
            bad.append(f"edge {e} endpoints incompatible with image")
    if bad:
        return bad
    for tid in src.tiles:
        img = m.tile_map.get(tid)
        kind = tgt.kind_of(img) if img is not None else None
        if kind in ("vertex", "edge"):
            bad.append(f"dimension drop: tile {tid} maps to {kind} {img}")
            continue
        if kind != "tile":
            bad.append(f"tile {tid} unmapped")
            continue
        if tile_orientation_sign(m, tid) == 0:
            bad.append(f"tile {tid} boundary does not map onto tile {img}")
    return bad
