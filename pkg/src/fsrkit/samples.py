"""Small hand-built complexes and subdivision rules used in tests and demos."""
from __future__ import annotations

from fractions import Fraction

from .complex import CellRef, CellularMap, OrientedComplex, cyclic_equal, reverse_cycle


def tetrahedron() -> OrientedComplex:
    v = ["a", "b", "c", "d"]
    edges = {"ab": ("a", "b"), "ac": ("a", "c"), "ad": ("a", "d"),
             "bc": ("b", "c"), "bd": ("b", "d"), "cd": ("c", "d")}
    tiles = {
        "abc": (("ab", 1), ("bc", 1), ("ac", -1)),
        "adb": (("ad", 1), ("bd", -1), ("ab", -1)),
        "bdc": (("bd", 1), ("cd", -1), ("bc", -1)),
        "acd": (("ac", 1), ("cd", 1), ("ad", -1)),
    }
    return OrientedComplex(tuple(v), edges, tiles)


def polygon(n: int, prefix: str = "") -> OrientedComplex:
    vs = [f"{prefix}p{i}" for i in range(n)]
    edges = {f"{prefix}s{i}": (vs[i], vs[(i + 1) % n]) for i in range(n)}
    tiles = {f"{prefix}T": tuple((f"{prefix}s{i}", 1) for i in range(n))}
    return OrientedComplex(tuple(vs), edges, tiles)


def grid_disk(rows: int, cols: int) -> OrientedComplex:
    """A rows x cols grid of squares, counterclockwise, vertex ids ``v{i}_{j}``."""
    def v(i, j):
        return f"v{i}_{j}"

    verts = [v(i, j) for i in range(rows + 1) for j in range(cols + 1)]
    edges = {}
    for i in range(rows + 1):
        for j in range(cols):
            edges[f"h{i}_{j}"] = (v(i, j), v(i, j + 1))
    for i in range(rows):
        for j in range(cols + 1):
            edges[f"u{i}_{j}"] = (v(i, j), v(i + 1, j))
    tiles = {}
    for i in range(rows):
        for j in range(cols):
            tiles[f"q{i}_{j}"] = ((f"h{i}_{j}", 1), (f"u{i}_{j + 1}", 1),
                                  (f"h{i + 1}_{j}", -1), (f"u{i}_{j}", -1))
    return OrientedComplex(tuple(verts), edges, tiles)


# -- binary square pillow --------------------------------------------------
#
# The pillow is two unit squares glued along their boundary.  The rule cuts
# each square into four and maps each small square onto a face by the tent
# map in each coordinate, so the front small squares alternate between the
# front and back faces.

_HALF = Fraction(1, 2)


def _tent(x: Fraction) -> Fraction:
    return 2 * x if x <= _HALF else 2 - 2 * x


def _corner_name(p) -> str:
    return {(0, 0): "p0", (1, 0): "p1", (1, 1): "p2", (0, 1): "p3"}[p]


def pillow_base() -> OrientedComplex:
    edges = {"e0": ("p0", "p1"), "e1": ("p1", "p2"), "e2": ("p2", "p3"), "e3": ("p3", "p0")}
    front = (("e0", 1), ("e1", 1), ("e2", 1), ("e3", 1))
    return OrientedComplex(("p0", "p1", "p2", "p3"), edges, {"A": front, "B": reverse_cycle(front)})


def binary_square_rule(flip_tile: str | None = None):
    """The tent-map pillow rule: 8 small squares over 2 squares.

    ``flip_tile`` names a refined tile whose image is recorded with reversed
    orientation (for negative tests) by swapping its image face.
    """
    from .fsr import FiniteSubdivisionRule

    base = pillow_base()
    corner_edge = {}
    for e, (t, h) in base.edges.items():
        corner_edge[(t, h)] = (e, 1)
        corner_edge[(h, t)] = (e, -1)

    h = _HALF

    def on_boundary(p):
        return p[0] in (0, 1) or p[1] in (0, 1)

    def vname(p, face):
        if p in ((0, 0), (1, 0), (1, 1), (0, 1)):
            return _corner_name(p)
        tag = f"{p[0]}_{p[1]}".replace("/", "|")
        return f"m{tag}" if on_boundary(p) else f"c{face}"

    def side_of(p, q):
        """Base edge carrying the segment pq on the pillow boundary, or None."""
        for e, (t, hh) in base.edges.items():
            a, b = _corner_xy(t), _corner_xy(hh)
            if all(_on_segment(x, a, b) for x in (p, q)):
                return e
        return None

    verts = set()
    edges = {}
    carriers = {}
    vmap = {}
    emap = {}
    tiles = {}
    tmap = {}
    seg_ids = {}

    def add_vertex(p, face):
        name = vname(p, face)
        if name not in verts:
            verts.add(name)
            img = (_tent(p[0]), _tent(p[1]))
            vmap[name] = _corner_name(img)
            if name.startswith("p"):
                carriers[name] = CellRef("vertex", name)
            elif name.startswith("m"):
                carriers[name] = CellRef("edge", side_of(p, p))
            else:
                carriers[name] = CellRef("tile", face)
        return name

    def add_segment(p, q, face):
        a, b = add_vertex(p, face), add_vertex(q, face)
        key = frozenset((a, b))
        if key in seg_ids:
            eid = seg_ids[key]
            return (eid, 1 if edges[eid][0] == a else -1)
        eid = f"r{len(edges)}"
        seg_ids[key] = eid
        edges[eid] = (a, b)
        side = side_of(p, q)
        carriers[eid] = CellRef("edge", side) if side else CellRef("tile", face)
        ia = _corner_name((_tent(p[0]), _tent(p[1])))
        ib = _corner_name((_tent(q[0]), _tent(q[1])))
        emap[eid] = corner_edge[(ia, ib)]
        return (eid, 1)

    for face in ("A", "B"):
        for x0 in (0, h):
            for y0 in (0, h):
                sq = [(x0, y0), (x0 + h, y0), (x0 + h, y0 + h), (x0, y0 + h)]
                cyc = tuple(add_segment(sq[i], sq[(i + 1) % 4], face) for i in range(4))
                if face == "B":
                    cyc = reverse_cycle(cyc)
                tid = f"{face}{x0}_{y0}".replace("/", "|")
                tiles[tid] = cyc
                carriers[tid] = CellRef("tile", face)
                img = tuple((emap[e][0], emap[e][1] * s) for e, s in cyc)
                if cyclic_equal(img, base.tiles["A"]):
                    tmap[tid] = "A"
                else:
                    tmap[tid] = "B"
    if flip_tile is not None:
        tmap[flip_tile] = "B" if tmap[flip_tile] == "A" else "A"
    refined = OrientedComplex(tuple(verts), edges, tiles)
    sigma = CellularMap(refined, base, vmap, emap, tmap)
    return FiniteSubdivisionRule(base, refined, carriers, sigma)


def _corner_xy(name):
    return {"p0": (0, 0), "p1": (1, 0), "p2": (1, 1), "p3": (0, 1)}[name]


def _on_segment(p, a, b) -> bool:
    (px, py), (ax, ay), (bx, by) = p, a, b
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if cross != 0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def square_rule():
    """z -> z^2 on the sphere cut along the real circle through 0, 1, inf.

    Vertex ``0`` (and ``inf``) is a fixed critical vertex, and the edge from
    ``0`` to ``1`` (and from ``1`` to ``inf``) maps onto itself unsubdivided.
    """
    from .fsr import FiniteSubdivisionRule

    base_edges = {"a": ("z0", "z1"), "b": ("z1", "zinf"), "c": ("zinf", "z0")}
    upper = (("a", 1), ("b", 1), ("c", 1))
    base = OrientedComplex(("z0", "z1", "zinf"), base_edges, {"U": upper, "L": reverse_cycle(upper)})
    # refined: real and imaginary axes; -1 subdivides c
    verts = ("z0", "z1", "zinf", "zm1")
    edges = {
        "r01": ("z0", "z1"), "r1i": ("z1", "zinf"),
        "rim": ("zinf", "zm1"), "rm0": ("zm1", "z0"),
        "rpi": ("z0", "zinf"), "rni": ("z0", "zinf"),
    }
    tiles = {
        "Q1": (("r01", 1), ("r1i", 1), ("rpi", -1)),
        "Q2": (("rpi", 1), ("rim", 1), ("rm0", 1)),
        "Q3": (("rm0", -1), ("rim", -1), ("rni", -1)),
        "Q4": (("rni", 1), ("r1i", -1), ("r01", -1)),
    }
    refined = OrientedComplex(verts, edges, tiles)
    carriers = {
        "z0": CellRef("vertex", "z0"), "z1": CellRef("vertex", "z1"),
        "zinf": CellRef("vertex", "zinf"), "zm1": CellRef("edge", "c"),
        "r01": CellRef("edge", "a"), "r1i": CellRef("edge", "b"),
        "rim": CellRef("edge", "c"), "rm0": CellRef("edge", "c"),
        "rpi": CellRef("tile", "U"), "rni": CellRef("tile", "L"),
        "Q1": CellRef("tile", "U"), "Q2": CellRef("tile", "U"),
        "Q3": CellRef("tile", "L"), "Q4": CellRef("tile", "L"),
    }
    vmap = {"z0": "z0", "z1": "z1", "zinf": "zinf", "zm1": "z1"}
    # squaring: [0,1] -> [0,1]; [1,inf] -> [1,inf]; [inf,-1] -> [inf,1];
    # [-1,0] -> [1,0]; i-axis 0->inf maps to negative reals 0 -> inf
    emap = {
        "r01": ("a", 1), "r1i": ("b", 1), "rim": ("b", -1), "rm0": ("a", -1),
        "rpi": ("c", -1), "rni": ("c", -1),
    }
    tmap = {"Q1": "U", "Q2": "L", "Q3": "U", "Q4": "L"}
    sigma = CellularMap(refined, base, vmap, emap, tmap)
    return FiniteSubdivisionRule(base, refined, carriers, sigma)
