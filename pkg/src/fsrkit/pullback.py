"""Pull an embedded complex back under a rational map.

Each edge of the complex is lifted along all ``d`` branches of ``f^-1`` by
predictor-corrector continuation.  Lifts are seeded at an interior sample,
where all preimages are simple, and continued towards both endpoints; the
endpoints are then snapped onto the vertex fibres.  Faces of the lifted
graph are traced from the rotation system read off the lifted geometry.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import polyroots, sphere
from .complex import CellRef, OrientedComplex, canonical_rotation, faces_from_rotation_system, vertex_valences
from .ratmap import RationalMap, SpherePoint, critical_points

log = logging.getLogger(__name__)

Pair = tuple[complex, complex]


class LiftError(RuntimeError):
    pass


@dataclass(frozen=True)
class PullbackOptions:
    corrector_tol: float = 1e-12
    residual_tol: float = 1e-9
    snap_tol: float = 1e-6
    clearance: float = 1e-4
    max_halvings: int = 30
    step_fraction: float = 0.25  # max Newton step relative to distance from the critical set
    direction_radius: float = 1e-4  # sample distance used for edge directions at a vertex


# -- homogeneous helpers ------------------------------------------------------

def _pair(p: np.ndarray) -> Pair:
    a, b = sphere.to_homogeneous(p)
    s = max(abs(a), abs(b))
    return a / s, b / s


def _vec(p: Pair) -> np.ndarray:
    return sphere.from_homogeneous(*p)


def _hdist(p: Pair, q: Pair) -> float:
    """Great-circle distance between two homogeneous points."""
    a1, b1 = p
    a2, b2 = q
    num = abs(a1 * b2 - b1 * a2)
    den = math.sqrt((abs(a1) ** 2 + abs(b1) ** 2) * (abs(a2) ** 2 + abs(b2) ** 2))
    return 2.0 * math.asin(min(1.0, num / den))


def _horner(c, z):
    p, dp = c[0], 0j
    for x in c[1:]:
        dp = dp * z + p
        p = p * z + x
    return p, dp


class _Form:
    """A floating map in the two affine charts, with its critical points."""

    def __init__(self, f: RationalMap):
        self.map = f
        ff = f.to_float()
        n, m = ff.padded()
        self.d = ff.degree
        self.nA, self.mA = [complex(c) for c in n], [complex(c) for c in m]
        self.nB, self.mB = self.nA[::-1], self.mA[::-1]
        try:
            crit = critical_points(f)
        except ValueError:
            # irrational critical points of an exact map: locate them in floating point
            crit = critical_points(ff)
        self.critical = [(_pair(p.to_vector()), k) for p, k in crit.points]
        self.critical_values = [(self.image(c), k) for c, k in self.critical]

    def image(self, p: Pair) -> Pair:
        a, b = p
        if abs(a) <= abs(b):
            z = a / b
            return _normalize(_horner(self.nA, z)[0], _horner(self.mA, z)[0])
        w = b / a
        return _normalize(_horner(self.nB, w)[0], _horner(self.mB, w)[0])

    def residual(self, p: Pair, q: Pair) -> float:
        return _hdist(self.image(p), q)

    def crit_distance(self, p: Pair) -> float:
        return min((_hdist(p, c) for c, _ in self.critical), default=math.pi)

    def newton(self, p: Pair, q: Pair, max_step: float, tol: float) -> Pair | None:
        """Newton iteration for f(w) = q started at p; None if it does not settle
        or wanders further than ``max_step`` from p."""
        qa, qb = q
        a, b = p
        chart = "A" if abs(a) <= abs(b) else "B"
        z0 = z = a / b if chart == "A" else b / a
        nc, mc = (self.nA, self.mA) if chart == "A" else (self.nB, self.mB)
        na, ma = [abs(c) for c in nc], [abs(c) for c in mc]
        prev = None
        for _ in range(40):
            nv, nd = _horner(nc, z)
            mv, md = _horner(mc, z)
            g = qb * nv - qa * mv
            r = abs(z)
            scale = abs(qb) * _horner(na, r)[0].real + abs(qa) * _horner(ma, r)[0].real
            if abs(g) <= 8e-16 * scale:
                break
            dg = qb * nd - qa * md
            if dg == 0:
                return None
            delta = -g / dg
            if prev is None:
                if _hdist(_chart_pair(z, chart), _chart_pair(z + delta, chart)) > max_step:
                    return None
            elif abs(delta) > 0.5 * abs(prev):
                return None
            prev = delta
            z = z + delta
        else:
            return None
        out = _chart_pair(z, chart)
        if _hdist(out, _chart_pair(z0, chart)) > 2 * max_step or self.residual(out, q) > tol:
            return None
        return out


def _normalize(a: complex, b: complex) -> Pair:
    s = max(abs(a), abs(b))
    if s == 0:
        raise ArithmeticError("(0 : 0) in evaluation")
    return a / s, b / s


def _chart_pair(z: complex, chart: str) -> Pair:
    return _normalize(z, 1 + 0j) if chart == "A" else _normalize(1 + 0j, z)


def _midpoint(p: Pair, q: Pair) -> Pair:
    v = _vec(p) + _vec(q)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise LiftError("antipodal targets")
    return _pair(v / n)


def _toward(p: Pair, q: Pair, s: float) -> Pair:
    return _pair(sphere.slerp(_vec(p), _vec(q), s))


# -- fibres -------------------------------------------------------------------

def _fiber(form: _Form, q: Pair, tol: float = 1e-9) -> list[tuple[Pair, int]]:
    """Preimages of q with local degrees, critical preimages taken from the critical set."""
    qa, qb = q
    coeffs = [qb * n - qa * m for n, m in zip(form.nA, form.mA)]
    trimmed = polyroots.trim(coeffs, 1e-13)
    roots = [_normalize(z, 1 + 0j) for z in polyroots.roots(trimmed)]
    roots += [(1 + 0j, 0j)] * (len(coeffs) - len(trimmed))
    out: list[tuple[Pair, int]] = []
    for c, k in form.critical:
        if form.residual(c, q) < tol:
            roots.sort(key=lambda r: _hdist(r, c))
            roots = roots[k:]
            out.append((c, k))
    for r in roots:
        p = r
        for _ in range(3):
            nxt = form.newton(p, q, math.pi, 1e-13)
            if nxt is None:
                break
            p = nxt
        out.append((p, 1))
    if sum(k for _, k in out) != form.d:
        raise LiftError("fibre degree sum mismatch")
    out.sort(key=lambda t: _sort_key(_vec(t[0])))
    return out


def _sort_key(v: np.ndarray) -> tuple:
    return tuple(round(float(x), 9) + 0.0 for x in v)


def preimages_of_point(f: RationalMap, q: SpherePoint) -> list[tuple[SpherePoint, int]]:
    """The fibre ``f^-1(q)`` with local degrees; degrees sum to ``deg f``."""
    form = _Form(f)
    return [(SpherePoint.from_vector(_vec(p)), k) for p, k in _fiber(form, _pair(q.to_vector()))]


# -- continuation ---------------------------------------------------------------

class _Tracker:
    def __init__(self, form: _Form, opts: PullbackOptions, step_fraction: float | None = None):
        self.form = form
        self.opts = opts
        self.frac = step_fraction or opts.step_fraction
        self.max_residual = 0.0

    def step(self, p: Pair, q: Pair) -> Pair | None:
        max_step = self.frac * self.form.crit_distance(p)
        return self.form.newton(p, q, max_step, self.opts.corrector_tol)

    def advance(self, p: Pair, q0: Pair, q1: Pair, depth: int = 0) -> Pair:
        r = self.step(p, q1)
        if r is not None:
            return r
        if depth >= self.opts.max_halvings:
            raise LiftError("corrector failed after maximum step halvings")
        qm = _midpoint(q0, q1)
        p = self.advance(p, q0, qm, depth + 1)
        return self.advance(p, qm, q1, depth + 1)

    def run(self, p: Pair, targets: list[Pair]) -> list[Pair]:
        """Continue p (a solution for targets[0]) through all targets."""
        out = [p]
        for q0, q1 in zip(targets[:-1], targets[1:]):
            p = self.advance(p, q0, q1)
            self.max_residual = max(self.max_residual, self.form.residual(p, q1))
            out.append(p)
        return out

    def finish(self, p: Pair, q_last: Pair, q_end: Pair, fiber: list[tuple[Pair, int]]) -> tuple[int, float]:
        """Approach the endpoint target and snap to a fibre point: (index, snap distance)."""
        cur = q_last
        for _ in range(200):
            if _hdist(cur, q_end) < 1e-14:
                break
            r = self.step(p, q_end)
            if r is not None:
                p, cur = r, q_end
                break
            nxt = _toward(cur, q_end, 0.5)
            p = self.advance(p, cur, nxt)
            cur = nxt
        dists = [_hdist(p, c) for c, _ in fiber]
        i = min(range(len(fiber)), key=dists.__getitem__)
        m = fiber[i][1]
        if dists[i] > self.opts.snap_tol ** (1.0 / m):
            raise LiftError(f"endpoint snap distance {dists[i]:.3g} too large")
        others = [d for j, d in enumerate(dists) if j != i]
        if others and min(others) <= 2 * dists[i]:
            raise LiftError("ambiguous endpoint snap")
        return i, dists[i]


@dataclass
class LiftResult:
    polyline: np.ndarray
    snap_distance: float
    max_residual: float


def lift_edge(f: RationalMap, arc: np.ndarray, start: SpherePoint | np.ndarray,
              opts: PullbackOptions = PullbackOptions()) -> LiftResult:
    """Lift a spherical polyline starting from a simple preimage of its first point."""
    form = _Form(f)
    targets = [_pair(p) for p in np.asarray(arc, dtype=float)]
    p0 = _pair(start.to_vector() if isinstance(start, SpherePoint) else np.asarray(start, dtype=float))
    if form.residual(p0, targets[0]) > opts.residual_tol:
        raise ValueError("start is not a preimage of the first arc point")
    if form.crit_distance(p0) < opts.clearance:
        raise ValueError("start is a critical point; lift from an interior sample instead")
    tr = _Tracker(form, opts)
    if len(targets) == 1:
        return LiftResult(_vec(p0)[None, :], 0.0, form.residual(p0, targets[0]))
    path = tr.run(p0, targets[:-1])
    fiber = _fiber(form, targets[-1])
    i, snap = tr.finish(path[-1], targets[-2], targets[-1], fiber)
    pts = np.array([_vec(p) for p in path] + [_vec(fiber[i][0])])
    return LiftResult(pts, snap, tr.max_residual)


@dataclass
class _Branch:
    points: list[Pair]
    tail: int  # index into the tail fibre
    head: int
    snap: float


def lift_arc_all(form: _Form, targets: list[Pair], tail_fiber, head_fiber,
                 opts: PullbackOptions) -> tuple[list[_Branch], float]:
    """All d lifts of a polyline whose interior avoids the critical values."""
    k = len(targets)
    if k < 3:
        raise LiftError("edge polyline needs an interior sample")
    mid = k // 2
    for frac in (opts.step_fraction, opts.step_fraction / 5, opts.step_fraction / 25):
        tr = _Tracker(form, opts, frac)
        seeds = _fiber(form, targets[mid])
        if any(m != 1 for _, m in seeds):
            raise LiftError("edge interior meets a critical value")
        branches = []
        for s, _ in seeds:
            fwd = tr.run(s, targets[mid:-1])
            bwd = tr.run(s, targets[mid::-1][:-1])
            ih, sh = tr.finish(fwd[-1], targets[-2], targets[-1], head_fiber)
            it, st = tr.finish(bwd[-1], targets[1], targets[0], tail_fiber)
            pts = bwd[::-1] + fwd[1:]
            branches.append(_Branch(pts, it, ih, max(sh, st)))
        if _distinct(branches):
            return branches, tr.max_residual
        log.debug("branches collided; retrying with smaller steps")
    raise LiftError("lifted branches collide (path jumping)")


def _distinct(branches: list[_Branch]) -> bool:
    if len(branches) < 2:
        return True
    arr = np.array([[_vec(p) for p in b.points] for b in branches])  # (d, samples, 3)
    for i in range(len(branches)):
        for j in range(i + 1, len(branches)):
            gap = np.linalg.norm(arr[i] - arr[j], axis=1)
            if np.min(gap) < 1e-9:
                return False
    return True


# -- assembling ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PullbackComplex:
    """``g^-1(S)`` for ``g = f^level`` with carriers into ``S``.

    ``carrier`` sends each vertex, edge and tile to the cell of ``S`` that
    ``g`` maps it onto; ``edge_sign`` records whether an edge runs along or
    against its carrier.  ``step`` sends cells to their image one level down.
    """
    complex: OrientedComplex
    base: OrientedComplex
    level: int
    map: RationalMap
    carrier: Mapping[str, CellRef]
    edge_sign: Mapping[str, int]
    local_degree: Mapping[str, int]
    max_residual: float = 0.0
    max_snap: float = 0.0
    step: Mapping[str, str] = field(default_factory=dict)
    previous: "PullbackComplex | None" = field(default=None, repr=False)

    @classmethod
    def identity(cls, f: RationalMap, s: OrientedComplex) -> "PullbackComplex":
        carrier = {v: CellRef("vertex", v) for v in s.vertices}
        carrier.update({e: CellRef("edge", e) for e in s.edges})
        carrier.update({t: CellRef("tile", t) for t in s.tiles})
        return cls(s, s, 0, f, MappingProxyType(carrier), MappingProxyType({e: 1 for e in s.edges}),
                   MappingProxyType({v: 1 for v in s.vertices}))

    def vertex_image(self, v: str) -> str:
        return self.carrier[v].id


def rotation_from_geometry(c: OrientedComplex, radius: float = 1e-4) -> dict[str, list[tuple[str, int]]]:
    """Counterclockwise order of edge-ends at each vertex from the edge polylines."""
    ends: dict[str, list[tuple[float, tuple[str, int]]]] = {v: [] for v in c.vertices}
    for e, (t, h) in c.edges.items():
        pl = c.polylines[e]
        for v, seq, sign in ((t, pl, 1), (h, pl[::-1], -1)):
            origin = c.positions[v]
            d = sphere.distance(origin, seq[1:])
            far = np.nonzero(d >= radius)[0]
            toward = seq[1 + far[0]] if far.size else seq[-1]
            ends[v].append((sphere.direction_angle(origin, toward), (e, sign)))
    return {v: [d for _, d in sorted(lst)] for v, lst in ends.items()}


def complex_from_geometry(positions: Mapping[str, np.ndarray], edges: Mapping[str, tuple[str, str]],
                          polylines: Mapping[str, np.ndarray], tile_prefix: str = "t",
                          radius: float = 1e-4) -> OrientedComplex:
    """Trace the faces of an embedded graph on the sphere."""
    skeleton = OrientedComplex(tuple(positions), edges, {}, positions, polylines)
    rot = rotation_from_geometry(skeleton, radius)
    return faces_from_rotation_system(tuple(positions), edges, rot, tile_prefix, positions, polylines)


def pullback_step(prev: PullbackComplex, opts: PullbackOptions = PullbackOptions(),
                  form: _Form | None = None) -> PullbackComplex:
    """One more level: ``f^-1`` of the complex of ``prev``."""
    form = form or _Form(prev.map)
    X = prev.complex
    if not X.has_geometry:
        raise ValueError("complex has no geometry")
    crit_values = [cv for cv, _ in form.critical_values]
    pairs = {v: _pair(X.positions[v]) for v in X.vertices}

    # vertex fibres
    fibers = {v: _fiber(form, pairs[v]) for v in X.vertices}
    vid: dict[tuple[str, int], str] = {}
    positions, local_degree, step, carrier = {}, {}, {}, {}
    for v in X.vertices:
        for i, (p, m) in enumerate(fibers[v]):
            name = f"v{len(vid):05d}"
            vid[(v, i)] = name
            positions[name] = _vec(p)
            local_degree[name] = m * prev.local_degree[v]
            step[name] = v
            carrier[name] = prev.carrier[v]

    # edge lifts
    edges, polylines, edge_sign = {}, {}, {}
    residual, snap = 0.0, 0.0
    for E in X.edges:
        t, h = X.edges[E]
        pl = X.polylines[E]
        targets = [_pair(p) for p in pl]
        _check_clearance(pl, crit_values, pairs[t], pairs[h], opts.clearance, E)
        branches, res = lift_arc_all(form, targets, fibers[t], fibers[h], opts)
        residual = max(residual, res)
        branches.sort(key=lambda b: _sort_key(_vec(b.points[len(b.points) // 2])))
        for b in branches:
            name = f"e{len(edges):05d}"
            a_id, b_id = vid[(t, b.tail)], vid[(h, b.head)]
            edges[name] = (a_id, b_id)
            pts = np.array([positions[a_id]] + [_vec(p) for p in b.points] + [positions[b_id]])
            polylines[name] = pts
            edge_sign[name] = prev.edge_sign[E]
            step[name] = E
            carrier[name] = prev.carrier[E]
            snap = max(snap, b.snap)

    c = complex_from_geometry(positions, edges, polylines, "t", opts.direction_radius)
    # tiles: match each face with the tile its boundary maps onto
    index = {}
    for T, cyc in X.tiles.items():
        index[canonical_rotation(cyc)] = T
    tiles, covered = {}, 0
    for k, (tid, cyc) in enumerate(sorted(c.tiles.items(), key=lambda kv: _tile_order(kv[1]))):
        T, mult = _covered_tile(index, tuple((step[e], s) for e, s in cyc))
        covered += mult
        name = f"t{k:05d}"
        tiles[name] = cyc
        step[name] = T
        carrier[name] = prev.carrier[T]
    c = OrientedComplex(c.vertices, c.edges, tiles, c.positions, c.polylines)
    out = PullbackComplex(c, prev.base, prev.level + 1, prev.map, MappingProxyType(carrier),
                          MappingProxyType(edge_sign), MappingProxyType(local_degree),
                          max(prev.max_residual, residual), max(prev.max_snap, snap),
                          MappingProxyType(step), prev)
    _check_counts(out, prev, form.d, covered)
    return out


def _tile_order(cyc):
    return min(cyc)


def _covered_tile(index, img: tuple) -> tuple[str, int]:
    """The tile whose boundary ``img`` winds around, and how many times.

    Winding more than once happens only over a tile containing a critical
    value in its interior.
    """
    for period in range(1, len(img) + 1):
        if len(img) % period == 0 and img == img[:period] * (len(img) // period):
            T = index.get(canonical_rotation(img[:period]))
            if T is not None:
                return T, len(img) // period
    raise LiftError("face boundary does not map onto a tile boundary")


def _check_clearance(pl, crit_values, tail, head, clearance, name):
    interior = pl[1:-1]
    for cv in crit_values:
        if _hdist(cv, tail) < 1e-9 or _hdist(cv, head) < 1e-9:
            continue
        d = sphere.distance(_vec(cv), interior)
        if np.min(d) < clearance:
            raise LiftError(f"edge {name} passes within {np.min(d):.2g} of a critical value")


def _check_counts(p: PullbackComplex, prev: PullbackComplex, d: int, covered: int) -> None:
    c, X = p.complex, prev.complex
    V, E, F = c.counts()
    if E != d * len(X.edges) or covered != d * len(X.tiles):
        raise LiftError(f"covering count mismatch: E={E}, F={F}")
    if V - E + F != X.euler_characteristic():
        raise LiftError(f"euler characteristic {V - E + F}")
    val_new, val_old = vertex_valences(c), vertex_valences(X)
    for v in c.vertices:
        m = p.local_degree[v] // prev.local_degree[p.step[v]]
        if val_new[v] != m * val_old[p.step[v]]:
            raise LiftError(f"vertex {v}: valence does not match local degree")


def pullback_complex(f: RationalMap, s: OrientedComplex, n: int,
                     opts: PullbackOptions = PullbackOptions()) -> PullbackComplex:
    """``f^-n(S)`` by ``n`` successive single pullbacks."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    form = _Form(f)
    p = PullbackComplex.identity(f, s)
    for _ in range(n):
        p = pullback_step(p, opts, form)
    return p


def pullback_levels(f: RationalMap, s: OrientedComplex, n: int,
                    opts: PullbackOptions = PullbackOptions()):
    """Yield ``f^-k(S)`` for k = 1..n."""
    form = _Form(f)
    p = PullbackComplex.identity(f, s)
    for _ in range(n):
        p = pullback_step(p, opts, form)
        yield p


@dataclass
class DiameterStats:
    max: float
    mean: float
    per_tile: dict[str, float]


def tile_diameters(p: PullbackComplex | OrientedComplex) -> DiameterStats:
    c = p.complex if isinstance(p, PullbackComplex) else p
    per = {t: sphere.diameter(c.tile_boundary_points(t)) for t in c.tiles}
    vals = list(per.values()) or [0.0]
    return DiameterStats(max(vals), float(np.mean(vals)), per)
