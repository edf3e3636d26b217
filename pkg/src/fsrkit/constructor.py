"""Realize an iterate of a critically finite rational map as the subdivision
map of a finite subdivision rule.

Pipeline: a simple closed curve ``alpha`` through the postcritical set
gives a two-tile complex ``S``; ``S`` is pulled back until every tile is
smaller than ``eps``; small disks ``D_i`` around the postcritical points
and corridor arcs ``beta_i`` near the edges of ``alpha`` are joined by arcs
``gamma_i`` through the postcritical points into a curve ``beta``; the
cells of the pulled-back complex on either side of ``beta`` form the rule.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from . import sphere
from .complex import CellRef, CellularMap, Dart, OrientedComplex, reverse
from .disk import DiskComplex, path_vertices, triarc
from .fsr import (FiniteSubdivisionRule, has_bounded_valence, has_edge_pairing, mesh_zero_combinatorial,
                  validate_fsr)
from .pullback import _Form, PullbackComplex, PullbackOptions, complex_from_geometry, pullback_step, tile_diameters
from .ratmap import RationalMap, has_periodic_critical_point, postcritical_set

log = logging.getLogger(__name__)


class ConstructionError(RuntimeError):
    pass


@dataclass
class CurveSpec:
    """Cyclic order of the postcritical points plus optional waypoints.

    ``waypoints[i]`` lists unit vectors visited between point ``order[i]``
    and the next point in the order.
    """
    order: list[int]
    waypoints: dict[int, list[np.ndarray]] = field(default_factory=dict)


@dataclass
class Alpha:
    points: np.ndarray  # (k, 3) postcritical points in curve order
    arcs: list[np.ndarray]  # arcs[i] runs from points[i] to points[i+1]
    complex: OrientedComplex  # the base complex S

    @property
    def closed(self) -> np.ndarray:
        return np.concatenate([a[:-1] for a in self.arcs] + [self.arcs[0][:1]])


def _vid(i: int) -> str:
    return f"p{i}"


def _eid(i: int) -> str:
    return f"a{i}"


# -- alpha ----------------------------------------------------------------------

def _common_circle(points: np.ndarray, tol: float = 1e-9) -> np.ndarray | None:
    """Unit normal of a great circle through all points, if there is one."""
    best = None
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            n = np.cross(points[i], points[j])
            if np.linalg.norm(n) > 1e-6:
                best = n / np.linalg.norm(n)
                break
        if best is not None:
            break
    if best is None:
        return None
    return best if np.all(np.abs(points @ best) < tol) else None


def _circle_curve(points: np.ndarray, normal: np.ndarray) -> CurveSpec:
    e1 = points[0]
    e2 = np.cross(normal, e1)
    ang = np.mod(np.arctan2(points @ e2, points @ e1), 2 * math.pi)
    order = [int(i) for i in np.argsort(ang, kind="stable")]
    way = {}
    k = len(order)
    for s in range(k):
        a0, a1 = ang[order[s]], ang[order[(s + 1) % k]]
        span = (a1 - a0) % (2 * math.pi)
        # sample the circle between consecutive points so arcs follow it
        pieces = max(2, int(math.ceil(span / (math.pi / 4))))
        way[s] = [math.cos(a0 + span * t / pieces) * e1 + math.sin(a0 + span * t / pieces) * e2
                  for t in range(1, pieces)]
    return CurveSpec(order, way)


def _tour(points: np.ndarray) -> list[int]:
    k = len(points)
    order = [0]
    left = set(range(1, k))
    while left:
        last = points[order[-1]]
        nxt = min(sorted(left), key=lambda j: float(sphere.distance(last, points[j])))
        order.append(nxt)
        left.remove(nxt)
    return order


def build_alpha(points: Sequence[np.ndarray], spec: CurveSpec | str = "auto", samples: int = 64,
                seed: int = 0, retries: int = 32) -> Alpha:
    """A simple closed curve through the points and the two-tile complex it bounds."""
    pts = sphere.normalize(np.asarray(points, dtype=float))
    if len(pts) < 3:
        raise ConstructionError("unsupported postcritical size")
    if spec != "auto":
        alpha = _alpha_from_spec(pts, spec, samples)
        if not _alpha_simple(alpha):
            raise ConstructionError("α not simple")
        return alpha
    normal = _common_circle(pts)
    if normal is not None:
        alpha = _alpha_from_spec(pts, _circle_curve(pts, normal), samples)
        if _alpha_simple(alpha):
            return alpha
    order = _tour(pts)
    rng = np.random.default_rng(seed)
    base = CurveSpec(order, {})
    for attempt in range(retries + 1):
        spec_try = base if attempt == 0 else _perturbed(pts, order, rng, 0.3)
        try:
            alpha = _alpha_from_spec(pts, spec_try, samples)
        except ValueError:
            continue
        if _alpha_simple(alpha):
            return alpha
    raise ConstructionError("α not simple")


def _perturbed(pts, order, rng, scale) -> CurveSpec:
    way = {}
    k = len(order)
    for s in range(k):
        a, b = pts[order[s]], pts[order[(s + 1) % k]]
        mid = sphere.normalize(a + b + 1e-9)
        way[s] = [sphere.normalize(mid + scale * rng.normal(size=3))]
    return CurveSpec(order, way)


def _alpha_from_spec(pts: np.ndarray, spec: CurveSpec, samples: int) -> Alpha:
    order = list(spec.order)
    if sorted(order) != list(range(len(pts))):
        raise ConstructionError("curve order is not a permutation of the postcritical set")
    k = len(order)
    ordered = pts[order]
    arcs = []
    for s in range(k):
        way = [ordered[s]] + [np.asarray(w, dtype=float) for w in spec.waypoints.get(s, [])] + [ordered[(s + 1) % k]]
        arcs.append(sphere.sample_path(way, samples))
    positions = {_vid(i): ordered[i] for i in range(k)}
    edges = {_eid(i): (_vid(i), _vid((i + 1) % k)) for i in range(k)}
    polylines = {_eid(i): arcs[i] for i in range(k)}
    s_complex = complex_from_geometry(positions, edges, polylines, "t")
    return Alpha(ordered, arcs, s_complex)


def _alpha_simple(alpha: Alpha) -> bool:
    if len(alpha.complex.tiles) != 2 or alpha.complex.euler_characteristic() != 2:
        return False
    return sphere.polyline_is_simple(_coarse(alpha.closed), closed=True)


def _coarse(poly: np.ndarray, step: float = 0.02) -> np.ndarray:
    """Drop samples closer than ``step`` to the previous kept one (keeps the curve shape)."""
    keep = [0]
    for i in range(1, len(poly) - 1):
        if float(sphere.distance(poly[keep[-1]], poly[i])) >= step:
            keep.append(i)
    keep.append(len(poly) - 1)
    return poly[keep]


def _densify(poly: np.ndarray, spacing: float) -> np.ndarray:
    out = [poly[0]]
    for a, b in zip(poly[:-1], poly[1:]):
        m = max(1, int(math.ceil(float(sphere.distance(a, b)) / spacing)))
        out.extend(sphere.slerp(a, b, j / m) for j in range(1, m + 1))
    return np.array(out)


def single_arc_condition(alpha: Alpha, radius: float) -> bool:
    """For every point v, alpha meets the closed ball B(v, radius) in one arc."""
    closed = _densify(alpha.closed, radius / 20)
    for v in alpha.points:
        inside = sphere.distance(closed[:-1], v) <= radius
        runs = int(np.sum(inside & ~np.roll(inside, 1)))
        if inside.all():
            return False
        if runs != 1:
            return False
    return True


# -- parameters -----------------------------------------------------------------

def choose_delta(points: np.ndarray, alpha: Alpha) -> float:
    k = len(points)
    dmin = min(float(sphere.distance(points[i], points[j])) for i in range(k) for j in range(i + 1, k))
    delta = dmin / 4
    for _ in range(11):
        if single_arc_condition(alpha, delta) and single_arc_condition(alpha, delta / 2):
            return delta
        delta /= 2
    raise ConstructionError("no δ satisfies the single-arc conditions")


def _outside_pieces(alpha: Alpha, radius: float) -> list[np.ndarray]:
    """Pieces of alpha outside the open balls of the given radius, one per arc."""
    pieces = []
    for arc in alpha.arcs:
        dense = _densify(arc, radius / 40)
        d = np.min(np.stack([sphere.distance(dense, v) for v in alpha.points]), axis=0)
        pieces.append(dense[d >= radius])
    return pieces


def epsilon_terms(alpha: Alpha, delta: float, grid: int = 20000) -> tuple[float, float]:
    """(m1, m2): gap between components of alpha minus the half balls, and the
    largest distance of a sample point from alpha and the closed balls."""
    pieces = _outside_pieces(alpha, delta / 2)
    if any(len(p) == 0 for p in pieces):
        raise ConstructionError("δ/2 balls swallow an arc of α")
    m1 = math.inf
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            pj = pieces[j] if len(pieces[j]) > 1 else np.vstack([pieces[j], pieces[j]])
            m1 = min(m1, float(np.min(sphere.points_polyline_distance(pieces[i], pj))))
    pts = sphere.fibonacci_sphere(grid)
    d_alpha = sphere.points_polyline_distance(pts, alpha.closed)
    d_balls = np.min(np.stack([sphere.distance(pts, v) - delta for v in alpha.points]), axis=0)
    m2 = float(np.max(np.minimum(d_alpha, d_balls)))
    return m1, m2


def choose_epsilon(alpha: Alpha, delta: float, grid: int = 20000) -> float:
    m1, m2 = epsilon_terms(alpha, delta, grid)
    if m1 <= 0 or m2 <= 0:
        raise ConstructionError("degenerate configuration: no room for ε")
    return 0.9 * min(delta / 2, m1 / 3, m2 / 3)


def verify_epsilon(alpha: Alpha, delta: float, eps: float, grid: int = 20000) -> list[str]:
    """Re-check the three conditions on ε; returns violated ones."""
    m1, m2 = epsilon_terms(alpha, delta, grid)
    bad = []
    if not eps < delta / 2:
        bad.append("ε is not below δ/2")
    if not m1 > 3 * eps:
        bad.append("components of α outside the δ/2 balls are within 3ε")
    if not m2 > 3 * eps:
        bad.append("no point is 3ε away from α and the δ balls")
    return bad


# -- pullback search ------------------------------------------------------------------

@dataclass
class SearchResult:
    n: int
    pullback: PullbackComplex
    diameters: list[float]


def find_n(f: RationalMap, s: OrientedComplex, eps: float, n_cap: int = 8,
           opts: PullbackOptions = PullbackOptions(), start: PullbackComplex | None = None,
           diameters: list[float] | None = None) -> SearchResult:
    """Smallest n <= n_cap with every tile of f^-n(S) of diameter below eps."""
    g = postcritical_set(f)
    periodic, cyc = has_periodic_critical_point(g)
    if periodic:
        raise ConstructionError(
            "hypothesis violated: periodic critical point in cycle " + ", ".join(str(g.points[i]) for i in cyc))
    p = start or PullbackComplex.identity(f, s)
    diams = list(diameters or [])
    while p.level < n_cap:
        p = pullback_step(p, opts)
        diams.append(tile_diameters(p).max)
        log.info("level %d: max tile diameter %.4f (eps %.4f)", p.level, diams[-1], eps)
        if diams[-1] < eps:
            return SearchResult(p.level, p, diams)
    raise ConstructionError(
        f"no n <= {n_cap} with tiles below ε={eps:.4g}; diameters: " + ", ".join(f"{d:.4g}" for d in diams))


# -- disks and arcs ---------------------------------------------------------------------

def postcritical_vertices(p: PullbackComplex, points: np.ndarray) -> list[str]:
    c = p.complex
    ids = list(c.vertices)
    pos = np.array([c.positions[v] for v in ids])
    out = []
    for x in points:
        d = sphere.distance(pos, x)
        i = int(np.argmin(d))
        if d[i] > 1e-9:
            raise ConstructionError("postcritical point is not a vertex of the pullback")
        out.append(ids[i])
    return out


def _tile_points(c: OrientedComplex) -> dict[str, np.ndarray]:
    return {t: c.tile_boundary_points(t) for t in c.tiles}


def build_disks(p: PullbackComplex, points: np.ndarray, delta: float) -> list[DiskComplex]:
    """D_i: closed tiles meeting the closed δ/2 ball plus complementary pieces inside the δ ball."""
    c = p.complex
    tpts = _tile_points(c)
    nbrs: dict[str, set[str]] = {t: set() for t in c.tiles}
    for e, ts in c.edge_tiles().items():
        for a in ts:
            for b in ts:
                if a != b:
                    nbrs[a].add(b)
    centres = postcritical_vertices(p, points)
    disks = []
    for v_id, v in zip(centres, points):
        near = {t for t, pts in tpts.items() if np.min(sphere.distance(pts, v)) <= delta / 2}
        rest = set(c.tiles) - near
        seen = set()
        for t in sorted(rest):
            if t in seen:
                continue
            comp, stack = set(), [t]
            while stack:
                x = stack.pop()
                if x in comp:
                    continue
                comp.add(x)
                stack.extend(y for y in nbrs[x] if y in rest and y not in comp)
            seen |= comp
            if all(np.max(sphere.distance(tpts[x], v)) < delta for x in comp):
                near |= comp
        try:
            d = DiskComplex.from_complex(c.subcomplex(near))
        except ValueError as exc:
            raise ConstructionError(f"disk around {v_id} is not a disk: {exc}") from exc
        if v_id not in d.interior_vertices():
            raise ConstructionError(f"postcritical vertex {v_id} is not interior to its disk")
        reach = max(float(np.max(sphere.distance(tpts[t], v))) for t in near)
        if reach >= delta:
            raise ConstructionError(f"disk around {v_id} leaves the δ ball")
        disks.append(d)
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            if set(disks[i].complex.vertices) & set(disks[j].complex.vertices):
                raise ConstructionError("disks overlap")
    return disks


@dataclass
class BetaAssembly:
    """The curve beta, split into pieces from v_i to v_{i+1}.

    ``invariant`` marks the case where alpha itself lies in the 1-skeleton,
    so beta equals alpha; ``beta``/``gamma`` are then the inner part and the
    two edges at each v_i of the pieces.
    """
    centres: list[str]  # v_i
    disks: list[DiskComplex] | None
    a: list[str]
    b: list[str]
    beta: list[list[Dart]]  # beta_i from a_i to b_i
    gamma: list[list[Dart]]  # gamma_i from a_i through v_i to b_{i-1}
    eps: float
    delta: float
    invariant: bool = False
    pieces: list[list[Dart]] | None = None

    def edge_path(self, c: OrientedComplex, i: int) -> list[Dart]:
        """The part of the curve beta from v_i to v_{i+1}."""
        if self.pieces is not None:
            return list(self.pieces[i])
        k = len(self.centres)
        j = (i + 1) % k
        g_i = self.gamma[i]
        head = g_i[:_split(c, g_i, self.centres[i])]
        g_j = self.gamma[j]
        tail = g_j[_split(c, g_j, self.centres[j]):]
        return _rev(head) + self.beta[i] + _rev(tail)

    def curve(self, c: OrientedComplex) -> list[Dart]:
        return [d for i in range(len(self.centres)) for d in self.edge_path(c, i)]


def _split(c: OrientedComplex, path: list[Dart], v: str) -> int:
    vs = path_vertices(c, path)
    return vs.index(v)


def _rev(path: list[Dart]) -> list[Dart]:
    return [reverse(d) for d in reversed(path)]


def route_beta_arcs(p: PullbackComplex, disks: list[DiskComplex], alpha: Alpha, eps: float):
    """Shortest corridor paths beta_i from D_i to D_{i+1} within ε of alpha_i."""
    c = p.complex
    k = len(disks)
    in_disk: dict[str, int] = {}
    for i, d in enumerate(disks):
        for v in d.complex.vertices:
            in_disk[v] = i
    boundary = [set(d.boundary_vertices()) for d in disks]
    disk_edges = set().union(*(d.complex.edges for d in disks))
    ids = list(c.vertices)
    pos = np.array([c.positions[v] for v in ids])
    used: set[str] = set()
    a_list, b_list, paths = [], [], []
    for i in range(k):
        j = (i + 1) % k
        near = sphere.points_polyline_distance(pos, alpha.arcs[i]) < eps
        ok = {v for v, flag in zip(ids, near) if flag}
        sources = {v for v in boundary[i] if v in ok} - set(b_list[-1:] if i else [])
        targets = {v for v in boundary[j] if v in ok}
        if i == k - 1:
            targets -= {a_list[0]}
        free = {v for v in ok if v not in in_disk and v not in used}
        g = nx.Graph()
        for e, (t, h) in c.edges.items():
            if e in disk_edges or t == h:
                continue
            if not ({t, h} <= free | sources | targets):
                continue
            if t in sources and h in sources or t in targets and h in targets:
                continue
            pl = c.polylines[e]
            if np.max(sphere.points_polyline_distance(pl, alpha.arcs[i])) >= eps:
                continue
            w = float(np.sum(sphere.distance(pl[:-1], pl[1:])))
            if not g.has_edge(t, h) or g[t][h]["weight"] > w or (g[t][h]["weight"] == w and e < g[t][h]["edge"]):
                g.add_edge(t, h, weight=w, edge=e)
        srcs = sorted(s for s in sources if s in g)
        if not srcs:
            raise ConstructionError(f"no start for β_{i}")
        dist, route = nx.multi_source_dijkstra(g, srcs, weight="weight")
        reach = sorted((dist[t], t) for t in targets if t in dist)
        if not reach:
            raise ConstructionError(f"no corridor path for β_{i}")
        nodes = route[reach[0][1]]
        path = []
        for x, y in zip(nodes, nodes[1:]):
            e = g[x][y]["edge"]
            path.append((e, 1) if c.edges[e][0] == x else (e, -1))
        a_list.append(nodes[0])
        b_list.append(nodes[-1])
        used |= set(nodes)
        paths.append(path)
    return a_list, b_list, paths


def route_gamma_arcs(disks: list[DiskComplex], a: list[str], b: list[str], centres: list[str]) -> list[list[Dart]]:
    k = len(disks)
    return [triarc(disks[i], a[i], centres[i], b[(i - 1) % k]) for i in range(k)]


def invariant_beta(p: PullbackComplex, alpha: Alpha, delta: float, eps: float,
                   tol: float = 1e-7) -> BetaAssembly | None:
    """beta = alpha when every arc alpha_i is a union of edges of the pullback."""
    c = p.complex
    centres = postcritical_vertices(p, alpha.points)
    k = len(centres)
    pieces = []
    for i in range(k):
        arc = alpha.arcs[i]
        g = nx.Graph()
        for e, (t, h) in c.edges.items():
            pl = c.polylines[e]
            if t != h and np.max(sphere.points_polyline_distance(pl, arc)) < tol:
                g.add_edge(t, h, edge=e)
        if centres[i] not in g or centres[(i + 1) % k] not in g:
            return None
        try:
            nodes = nx.shortest_path(g, centres[i], centres[(i + 1) % k])
        except nx.NetworkXNoPath:
            return None
        if any(x in centres for x in nodes[1:-1]):
            return None
        path = []
        for x, y in zip(nodes, nodes[1:]):
            e = g[x][y]["edge"]
            path.append((e, 1) if c.edges[e][0] == x else (e, -1))
        covered = np.concatenate([c.polylines[e] for e, _ in path])
        if np.max(sphere.points_polyline_distance(arc, covered)) >= tol:
            return None
        pieces.append(path)
    a = [c.head(pc[0]) for pc in pieces]
    b = [c.tail(pc[-1]) for pc in pieces]
    beta = [pc[1:-1] for pc in pieces]
    gamma = [[reverse(pieces[i][0]), reverse(pieces[i - 1][-1])] for i in range(k)]
    return BetaAssembly(centres, None, a, b, beta, gamma, eps, delta, invariant=True, pieces=pieces)


def assemble_beta(p: PullbackComplex, alpha: Alpha, delta: float, eps: float) -> BetaAssembly:
    disks = build_disks(p, alpha.points, delta)
    centres = postcritical_vertices(p, alpha.points)
    a, b, beta = route_beta_arcs(p, disks, alpha, eps)
    gamma = route_gamma_arcs(disks, a, b, centres)
    return BetaAssembly(centres, disks, a, b, beta, gamma, eps, delta)


# -- the rule -------------------------------------------------------------------------------

def assemble_fsr(p: PullbackComplex, asm: BetaAssembly, s: OrientedComplex) -> FiniteSubdivisionRule:
    """Subdivision complex: S with edges realized by the pieces of beta."""
    c = p.complex
    k = len(asm.centres)
    carriers: dict[str, CellRef] = {}
    on_curve: dict[str, tuple[str, int]] = {}  # edge of p -> (S edge, direction along it)
    base_poly = {}
    for i in range(k):
        E = _eid(i)
        path = asm.edge_path(c, i)
        vs = path_vertices(c, path)
        if vs[0] != asm.centres[i] or vs[-1] != asm.centres[(i + 1) % k]:
            raise ConstructionError("β pieces do not join the postcritical vertices")
        for e, sgn in path:
            if e in on_curve:
                raise ConstructionError("β is not simple")
            on_curve[e] = (E, sgn)
            carriers[e] = CellRef("edge", E)
        for v in vs[1:-1]:
            if v in carriers:
                raise ConstructionError("β is not simple")
            carriers[v] = CellRef("edge", E)
        base_poly[E] = np.concatenate([c.polylines[e] if sg > 0 else c.polylines[e][::-1] for e, sg in path])
    for i, v in enumerate(asm.centres):
        carriers[v] = CellRef("vertex", _vid(i))

    # the side of beta each tile lies on: a tile containing a dart running
    # along beta lies on the left of beta, like the S tile containing (a_i, +)
    left_tile = next(t for t, cyc in s.tiles.items() if (_eid(0), 1) in cyc)
    right_tile = next(t for t, cyc in s.tiles.items() if (_eid(0), -1) in cyc)
    side: dict[str, str] = {}
    for t, cyc in c.tiles.items():
        for e, sg in cyc:
            if e in on_curve:
                want = left_tile if sg == on_curve[e][1] else right_tile
                if side.setdefault(t, want) != want:
                    raise ConstructionError("side matching ambiguous")
    adj = {t: set() for t in c.tiles}
    for e, ts in c.edge_tiles().items():
        if e not in on_curve:
            for x in ts:
                adj[x].update(y for y in ts if y != x)
    stack = list(side)
    while stack:
        t = stack.pop()
        for u in adj[t]:
            if u not in side:
                side[u] = side[t]
                stack.append(u)
            elif side[u] != side[t]:
                raise ConstructionError("β does not separate the sphere into two sides")
    if len(side) != len(c.tiles):
        raise ConstructionError("side matching incomplete")
    for t in c.tiles:
        carriers[t] = CellRef("tile", side[t])
    et = c.edge_tiles()
    for e in c.edges:
        if e not in carriers:
            carriers[e] = CellRef("tile", side[et[e][0]])
    vt = c.vertex_tiles()
    for v in c.vertices:
        if v not in carriers:
            carriers[v] = CellRef("tile", side[sorted(vt[v])[0]])

    base = OrientedComplex(s.vertices, s.edges, s.tiles, s.positions, base_poly)
    vmap = {v: p.carrier[v].id for v in c.vertices}
    emap = {e: (p.carrier[e].id, p.edge_sign[e]) for e in c.edges}
    tmap = {t: p.carrier[t].id for t in c.tiles}
    sigma = CellularMap(c, base, vmap, emap, tmap)
    return FiniteSubdivisionRule(base, c, carriers, sigma)


# -- certificate ------------------------------------------------------------------------

@dataclass
class IsotopyReport:
    checks: dict[str, bool]
    details: list[str]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def verify_isotopy_conditions(asm: BetaAssembly, p: PullbackComplex, alpha: Alpha,
                              eps: float | None = None, delta: float | None = None) -> IsotopyReport:
    """Geometric sufficient conditions for beta to be isotopic to alpha rel P.

    Containment is always measured with the ε and δ the curve was built
    with; passing different values only fails the parameter check.
    """
    c = p.complex
    k = len(asm.centres)
    checks, details = {}, []
    checks["parameters match"] = (eps is None or eps == asm.eps) and (delta is None or delta == asm.delta)
    ok = True
    for i in range(k):
        for e, _ in asm.beta[i]:
            dmax = float(np.max(sphere.points_polyline_distance(c.polylines[e], alpha.arcs[i])))
            if dmax >= asm.eps:
                ok = False
                details.append(f"β_{i} edge {e} leaves the ε neighbourhood ({dmax:.4g})")
    checks["beta in eps neighbourhood"] = ok
    ok = True
    vt = c.vertex_tiles()
    for i in range(k):
        v = alpha.points[i]
        if asm.centres[i] not in path_vertices(c, asm.gamma[i]):
            ok = False
            details.append(f"γ_{i} misses its postcritical point")
        if asm.disks is None:
            # beta equals alpha; D_i is the closed star of v_i
            star = vt[asm.centres[i]]
            et = c.edge_tiles()
            if any(not set(et[e]) & star for e, _ in asm.gamma[i]):
                ok = False
                details.append(f"γ_{i} leaves the star of v_{i}")
            continue
        d = asm.disks[i]
        if any(e not in d.complex.edges for e, _ in asm.gamma[i]):
            ok = False
            details.append(f"γ_{i} leaves D_{i}")
        reach = max(float(np.max(sphere.distance(d.complex.tile_boundary_points(t), v))) for t in d.complex.tiles)
        if reach >= asm.delta:
            ok = False
            details.append(f"D_{i} leaves the δ ball")
    checks["gamma in disks in delta balls"] = ok
    try:
        curve = asm.curve(c)
        vs = path_vertices(c, curve)
        simple = vs[0] == vs[-1] and len(set(vs[:-1])) == len(vs) - 1
        simple = simple and all(c.head(x) == c.tail(y) for x, y in zip(curve, curve[1:]))
    except ValueError:
        curve, vs, simple = [], [], False
    checks["beta simple"] = simple
    visit = [x for x in vs[:-1] if x in set(asm.centres)]
    checks["cyclic order matches"] = len(visit) == k and _same_cycle(visit, asm.centres)
    if not checks["cyclic order matches"]:
        details.append("β visits the postcritical points in a different cyclic order")
    return IsotopyReport(checks, details)


def _same_cycle(a: list[str], b: list[str]) -> bool:
    if len(a) != len(b):
        return False
    if not a:
        return True
    i = b.index(a[0]) if a[0] in b else -1
    return i >= 0 and b[i:] + b[:i] == a


# -- driver -------------------------------------------------------------------------------

@dataclass
class Construction:
    rule: FiniteSubdivisionRule
    alpha: Alpha
    delta: float
    eps: float
    n: int
    diameters: list[float]
    pullback: PullbackComplex
    assembly: BetaAssembly
    isotopy: IsotopyReport
    certificate: dict[str, object]

    def report(self) -> str:
        lines = [
            f"postcritical points: {len(self.alpha.points)}",
            f"delta: {self.delta!r}",
            f"epsilon: {self.eps!r}",
            f"n: {self.n}",
            "max tile diameters: " + ", ".join(f"{d:.6g}" for d in self.diameters),
        ]
        for name, val in self.certificate.items():
            lines.append(f"{name}: {val}")
        for name, val in self.isotopy.checks.items():
            lines.append(f"isotopy/{name}: {val}")
        return "\n".join(lines) + "\n"


def construct(f: RationalMap, spec: CurveSpec | str = "auto", n_cap: int = 8, mesh_cap: int = 5,
              opts: PullbackOptions = PullbackOptions(), use_invariant: bool = True,
              require_mesh: bool = True) -> Construction:
    """Build a rule whose subdivision map is an iterate of ``f``.

    Levels n = 1, 2, ... are tried in turn.  A level is accepted when alpha
    lies in the 1-skeleton of the pullback (then beta = alpha), or when all
    tiles are below ε and the disks and corridor arcs can be routed.  With
    ``require_mesh=False`` routing is attempted at every level and the
    geometric certificate alone decides.
    """
    g = postcritical_set(f)
    if not g.finite:
        raise ConstructionError(f"not critically finite: {g.reason}")
    periodic, cyc = has_periodic_critical_point(g)
    if periodic:
        raise ConstructionError(
            "hypothesis violated: periodic critical point in cycle " + ", ".join(str(g.points[i]) for i in cyc))
    pts = [g.points[i].to_vector() for i in g.postcritical]
    if len(pts) < 3:
        raise ConstructionError("unsupported postcritical size")
    alpha = build_alpha(pts, spec)
    delta = choose_delta(alpha.points, alpha)
    eps = choose_epsilon(alpha, delta)
    s = alpha.complex
    p = PullbackComplex.identity(f, s)
    form = _Form(f)
    diams: list[float] = []
    failures: list[str] = []
    while p.level < n_cap:
        p = pullback_step(p, opts, form)
        diams.append(tile_diameters(p).max)
        log.info("level %d: max tile diameter %.4f (eps %.4f)", p.level, diams[-1], eps)
        asm = invariant_beta(p, alpha, delta, eps) if use_invariant else None
        if asm is None and (diams[-1] < eps or not require_mesh):
            try:
                asm = assemble_beta(p, alpha, delta, eps)
            except ConstructionError as exc:
                failures.append(f"n={p.level}: {exc}")
                continue
        if asm is None:
            continue
        iso = verify_isotopy_conditions(asm, p, alpha)
        if not iso.ok:
            failures.append(f"n={p.level}: " + "; ".join(iso.details))
            continue
        rule = assemble_fsr(p, asm, s)
        break
    else:
        msg = f"no n <= {n_cap} works (ε={eps:.4g}); max tile diameters: " + ", ".join(f"{d:.4g}" for d in diams)
        if failures:
            msg += "; " + failures[-1]
        raise ConstructionError(msg)
    rep = validate_fsr(rule)
    if not rep.ok:
        raise ConstructionError("assembled rule is invalid: " + "; ".join(rep.violations[:5]))
    mesh = mesh_zero_combinatorial(rule, mesh_cap)
    bv = has_bounded_valence(rule)
    cert = {
        "beta equals alpha": asm.invariant,
        "valid": rep.ok,
        "orientation preserving": rep.orientation_preserving,
        "bounded valence": bv.ok,
        "edge pairing": has_edge_pairing(rule),
        "mesh approaching 0 combinatorially": mesh.status,
        "isotopy conditions": iso.ok,
    }
    return Construction(rule, alpha, delta, eps, p.level, diams, p, asm, iso, cert)
