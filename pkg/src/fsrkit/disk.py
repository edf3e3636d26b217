"""Disk tilings and arcs through three prescribed vertices."""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from functools import lru_cache

from .complex import Dart, OrientedComplex, reverse, validate_complex


class NotRegularTiling(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiskComplex:
    complex: OrientedComplex
    boundary: tuple[Dart, ...]

    @classmethod
    def from_complex(cls, c: OrientedComplex) -> "DiskComplex":
        rep = validate_complex(c, expect="disk")
        if not rep.ok:
            raise ValueError("not a disk: " + "; ".join(rep.violations))
        bd = c.boundary_darts()
        nxt = {c.tail(d): d for d in bd}
        start = min(bd)
        cyc = [start]
        d = nxt[c.head(start)]
        while d != start:
            cyc.append(d)
            d = nxt[c.head(d)]
        return cls(c, tuple(cyc))

    def boundary_vertices(self) -> list[str]:
        return [self.complex.tail(d) for d in self.boundary]

    def interior_vertices(self) -> list[str]:
        bv = set(self.boundary_vertices())
        return [v for v in self.complex.vertices if v not in bv]


# -- triarc ----------------------------------------------------------------
#
# The disk is peeled one tile at a time.  A tile is peelable when it meets
# the boundary of the current disk in a single arc made of whole edges.
# Removing it leaves a smaller disk.  The peel sequence depends only on the
# disk and the middle vertex, so it is cached per (disk, v).


@dataclass(frozen=True)
class _Peel:
    tile: str
    arc: tuple[Dart, ...]  # boundary darts of the tile, in order
    arc_vertices: tuple[str, ...]  # vertices along the arc, endpoints included


class _Tiling:
    """Minimal hashable view of a disk complex used by the peeling search."""

    def __init__(self, c: OrientedComplex):
        self.c = c
        self.key = id(c)
        self.cycles = {t: c.tiles[t] for t in c.tiles}
        self.tail = {}
        self.head = {}
        for t, cyc in self.cycles.items():
            for d in cyc:
                self.tail[d] = c.tail(d)
                self.head[d] = c.head(d)
                rd = reverse(d)
                self.tail[rd] = c.head(d)
                self.head[rd] = c.tail(d)


def _boundary(tiling: _Tiling, tiles: frozenset) -> set:
    uses = Counter(d[0] for t in tiles for d in tiling.cycles[t])
    return {d for t in tiles for d in tiling.cycles[t] if uses[d[0]] == 1}


def _peelable(tiling: _Tiling, tiles: frozenset, bset: set) -> list[_Peel]:
    bverts = {tiling.tail[d] for d in bset}
    out = []
    for t in sorted(tiles):
        cyc = tiling.cycles[t]
        k = len(cyc)
        flags = [d in bset for d in cyc]
        nb = sum(flags)
        if nb == 0 or nb == k:
            continue
        # rotate so the cycle starts right after a non-boundary dart
        start = next(i for i in range(k) if flags[i] and not flags[i - 1])
        runs = sum(1 for i in range(k) if flags[i] and not flags[i - 1])
        if runs != 1:
            continue
        arc = tuple(cyc[(start + j) % k] for j in range(nb))
        arc_vs = [tiling.tail[arc[0]]] + [tiling.head[d] for d in arc]
        interior_chord = [tiling.tail[cyc[(start + nb + j) % k]] for j in range(1, k - nb)]
        if any(v in bverts for v in interior_chord):
            continue
        if len(set(arc_vs)) != len(arc_vs):
            continue
        out.append(_Peel(t, arc, tuple(arc_vs)))
    return out


def _peel_sequence(tiling: _Tiling, v: str) -> list[tuple[frozenset, _Peel | None]]:
    """Successive (disk, peel) pairs ending with a single tile (peel None)."""
    tiles = frozenset(tiling.cycles)
    seq = []
    while len(tiles) > 1:
        bset = _boundary(tiling, tiles)
        choices = _peelable(tiling, tiles, bset)
        if len(choices) < 1:
            raise NotRegularTiling("not a regular tiling: no peelable tile")
        pick = None
        for p in choices:
            if v not in p.arc_vertices[1:-1]:
                pick = p
                break
        if pick is None:
            raise NotRegularTiling("not a regular tiling: every peelable tile removes v")
        seq.append((tiles, pick))
        tiles = tiles - {pick.tile}
    seq.append((tiles, None))
    return seq


def _vertices_of(tiling: _Tiling, tiles: frozenset) -> set:
    return {tiling.tail[d] for t in tiles for d in tiling.cycles[t]}


def _shortest_path(tiling: _Tiling, tiles: frozenset, a: str, b: str) -> list[Dart]:
    adj = {}
    for t in sorted(tiles):
        for d in tiling.cycles[t]:
            for x in (d, reverse(d)):
                adj.setdefault(tiling.tail[x], set()).add(x)
    prev = {a: None}
    q = deque([a])
    while q:
        x = q.popleft()
        if x == b:
            break
        for d in sorted(adj.get(x, ())):
            y = tiling.head[d]
            if y not in prev:
                prev[y] = d
                q.append(y)
    if b not in prev:
        raise NotRegularTiling("disk 1-skeleton disconnected")
    path = []
    x = b
    while prev[x] is not None:
        d = prev[x]
        path.append(d)
        x = tiling.tail[d]
    return path[::-1]


def _rev_path(path: list[Dart]) -> list[Dart]:
    return [reverse(d) for d in reversed(path)]


def _arc_segment(p: _Peel, i: int, j: int) -> list[Dart]:
    """Darts along the peel arc from arc vertex index i to index j."""
    if i <= j:
        return list(p.arc[i:j])
    return _rev_path(list(p.arc[j:i]))


def _triarc(tiling, seq, level, u, v, w):
    tiles, peel = seq[level]
    if u == v:
        return _shortest_path(tiling, tiles, u, w)
    if w == v:
        return _shortest_path(tiling, tiles, u, w)
    if peel is None:
        cyc = tiling.cycles[next(iter(tiles))]
        vs = [tiling.tail[d] for d in cyc]
        k = len(vs)
        i = vs.index(u)
        fwd = []
        j = i
        hit = False
        while vs[j] != w:
            if vs[j] == v:
                hit = True
            fwd.append(cyc[j])
            j = (j + 1) % k
        if hit:
            return fwd
        back = []
        j = i
        while vs[j] != w:
            back.append(reverse(cyc[j - 1]))
            j = (j - 1) % k
        return back
    inner = peel.arc_vertices[1:-1]
    x1, x2 = peel.arc_vertices[0], peel.arc_vertices[-1]
    last = len(peel.arc_vertices) - 1
    u_out, w_out = u in inner, w in inner
    if not u_out and not w_out:
        return _triarc(tiling, seq, level + 1, u, v, w)
    if u_out and not w_out:
        iu = peel.arc_vertices.index(u)
        if x1 != w:
            return _arc_segment(peel, iu, 0) + _triarc(tiling, seq, level + 1, x1, v, w)
        return _arc_segment(peel, iu, last) + _triarc(tiling, seq, level + 1, x2, v, w)
    if w_out and not u_out:
        return _rev_path(_triarc(tiling, seq, level, w, v, u))
    iu = peel.arc_vertices.index(u)
    iw = peel.arc_vertices.index(w)
    if iu < iw:
        return _arc_segment(peel, iu, 0) + _triarc(tiling, seq, level + 1, x1, v, x2) + _arc_segment(peel, last, iw)
    return _arc_segment(peel, iu, last) + _triarc(tiling, seq, level + 1, x2, v, x1) + _arc_segment(peel, 0, iw)



@lru_cache(maxsize=256)
def _cached_sequence(tiling: _Tiling, v: str):
    return _peel_sequence(tiling, v)


@lru_cache(maxsize=64)
def _tiling_for(c: OrientedComplex) -> _Tiling:
    return _Tiling(c)


def triarc(d: DiskComplex | OrientedComplex, u: str, v: str, w: str) -> list[Dart]:
    """Simple edge path from ``u`` to ``w`` through ``v`` in a disk's 1-skeleton.

    Follows the tile-peeling induction: a tile meeting the boundary in an
    arc, and not swallowing ``v``, is removed; the path found in the
    remaining disk is extended across the removed tile's boundary arc when
    an endpoint was on it.
    """
    c = d.complex if isinstance(d, DiskComplex) else d
    if len({u, v, w}) != 3:
        raise ValueError("vertices not distinct")
    for x in (u, v, w):
        if x not in c._vertex_set:
            raise ValueError(f"{x} is not a vertex of the disk")
    tiling = _tiling_for(c)
    seq = _cached_sequence(tiling, v)
    return _triarc(tiling, seq, 0, u, v, w)


def path_vertices(c: OrientedComplex, path: list[Dart]) -> list[str]:
    if not path:
        return []
    return [c.tail(path[0])] + [c.head(d) for d in path]


def is_simple_path(c: OrientedComplex, path: list[Dart], u: str, w: str, through: str | None = None) -> bool:
    """Independent check: consecutive darts chain, no repeated vertex, right endpoints."""
    if not path:
        return False
    for a, b in zip(path, path[1:]):
        if c.head(a) != c.tail(b):
            return False
    if any(e not in c.edges for e, _ in path):
        return False
    vs = path_vertices(c, path)
    if len(set(vs)) != len(vs):
        return False
    if vs[0] != u or vs[-1] != w:
        return False
    return through is None or through in vs
