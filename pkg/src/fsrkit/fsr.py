"""Finite subdivision rules: validation, recursive subdivision and the
orientation, valence, edge pairing and combinatorial mesh checks."""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations
from types import MappingProxyType
from typing import Mapping

from .complex import (
    DIMENSION,
    CellRef,
    CellularMap,
    Dart,
    OrientedComplex,
    reverse,
    reverse_cycle,
    tile_orientation_sign,
    validate_cellular_map,
    validate_complex,
    vertex_valences,
)


@dataclass(frozen=True, eq=False)
class FiniteSubdivisionRule:
    base: OrientedComplex
    refined: OrientedComplex
    carriers: Mapping[str, CellRef]
    sigma: CellularMap

    def __post_init__(self):
        object.__setattr__(self, "carriers", MappingProxyType(dict(sorted(self.carriers.items()))))

    @property
    def degree(self) -> int:
        """Number of refined tiles over each base tile (must be constant)."""
        counts = {len(self.carried_by("tile", t)) for t in self.base.tiles}
        if len(counts) != 1:
            raise ValueError("tile types carry different numbers of tiles")
        return counts.pop()

    def carried_by(self, kind: str, base_id: str) -> list[str]:
        """Refined cells of dimension ``kind`` whose carrier is ``base_id``."""
        cells = {"vertex": self.refined.vertices, "edge": self.refined.edges, "tile": self.refined.tiles}[kind]
        return [c for c in cells if self.carriers.get(c) is not None and self.carriers[c].id == base_id]

    def refined_vertex(self, base_vertex: str) -> str:
        found = [v for v in self.refined.vertices
                 if self.carriers.get(v) == CellRef("vertex", base_vertex)]
        if len(found) != 1:
            raise ValueError(f"base vertex {base_vertex} carried by {len(found)} refined vertices")
        return found[0]


@dataclass(frozen=True, eq=False)
class RComplex:
    complex: OrientedComplex
    structure: CellularMap


def as_r_complex(r: FiniteSubdivisionRule) -> RComplex:
    """The subdivision complex as an R-complex via the identity map."""
    b = r.base
    ident = CellularMap(b, b, {v: v for v in b.vertices}, {e: (e, 1) for e in b.edges},
                        {t: t for t in b.tiles})
    return RComplex(b, ident)


def tile_type_complex(r: FiniteSubdivisionRule, tile: str) -> RComplex:
    """The tile type over ``tile``: a polygon with distinct corners mapped onto it."""
    cyc = r.base.tiles[tile]
    k = len(cyc)
    corners = [f"{tile}:c{i}" for i in range(k)]
    edges = {f"{tile}:s{i}": (corners[i], corners[(i + 1) % k]) for i in range(k)}
    poly = OrientedComplex(tuple(corners), edges, {tile: tuple((f"{tile}:s{i}", 1) for i in range(k))})
    vmap = {corners[i]: r.base.tail(cyc[i]) for i in range(k)}
    emap = {f"{tile}:s{i}": cyc[i] for i in range(k)}
    return RComplex(poly, CellularMap(poly, r.base, vmap, emap, {tile: tile}))


# -- validation -------------------------------------------------------------

@dataclass
class FSRReport:
    violations: list[str] = field(default_factory=list)
    orientation_preserving: bool | None = None

    @property
    def ok(self) -> bool:
        return not self.violations


def edge_arc(r: FiniteSubdivisionRule, edge: str) -> list[Dart]:
    """Refined darts subdividing a base edge, from its tail to its head."""
    b_tail, b_head = r.base.edges[edge]
    carried = set(r.carried_by("edge", edge))
    start = r.refined_vertex(b_tail)
    end = r.refined_vertex(b_head)
    adj = defaultdict(list)
    for e in sorted(carried):
        t, h = r.refined.edges[e]
        adj[t].append((e, 1))
        adj[h].append((e, -1))
    path, used, x = [], set(), start
    while True:
        nxt = [d for d in adj[x] if d[0] not in used]
        if not nxt:
            break
        if len(nxt) > 1 and x != start:
            raise ValueError(f"edge {edge}: carried edges branch")
        d = nxt[0]
        used.add(d[0])
        path.append(d)
        x = r.refined.head(d)
        if x == end and (end != start or len(used) == len(carried)):
            break
    if x != end or used != carried:
        raise ValueError(f"edge {edge}: carried cells do not form a subdivided arc")
    return path


def validate_fsr(r: FiniteSubdivisionRule) -> FSRReport:
    rep = FSRReport()
    bad = rep.violations
    rb = validate_complex(r.base, "any", min_tile_length=3)
    bad += [f"base: {m}" for m in rb.violations]
    rr = validate_complex(r.refined, "any")
    bad += [f"refined: {m}" for m in rr.violations]
    if rr.violations or any("tile type" not in m for m in rb.violations):
        return rep
    base, ref = r.base, r.refined
    cells = ([("vertex", v) for v in ref.vertices] + [("edge", e) for e in ref.edges]
             + [("tile", t) for t in ref.tiles])
    for kind, cid in cells:
        c = r.carriers.get(cid)
        if c is None:
            bad.append(f"{kind} {cid} has no carrier")
        elif base.kind_of(c.id) != c.kind:
            bad.append(f"{kind} {cid} carrier {c.id} is not a base {c.kind}")
        elif DIMENSION[c.kind] < DIMENSION[kind]:
            bad.append(f"{kind} {cid} carried by lower-dimensional {c.kind} {c.id}")
    if bad:
        return rep
    for v in base.vertices:
        n = len([x for x in ref.vertices if r.carriers[x] == CellRef("vertex", v)])
        if n != 1:
            bad.append(f"base vertex {v} carried by {n} refined vertices")
    if bad:
        return rep
    for e in base.edges:
        try:
            edge_arc(r, e)
        except ValueError as exc:
            bad.append(str(exc))
    for t in base.tiles:
        bad += _check_tile_disk(r, t)
    bad += [f"sigma: {m}" for m in validate_cellular_map(r.sigma)]
    if not bad:
        try:
            rep.orientation_preserving = is_orientation_preserving(r)
        except ValueError:
            rep.orientation_preserving = None
    return rep


def _check_tile_disk(r: FiniteSubdivisionRule, tile: str) -> list[str]:
    base, ref = r.base, r.refined
    tids = r.carried_by("tile", tile)
    if not tids:
        return [f"tile {tile} carries no refined tiles"]
    verts = base.tile_vertices(tile)
    if len(set(verts)) != len(verts):
        return []  # identifications on the boundary; the tile type is not an embedded disk
    sub = ref.subcomplex(tids)
    out = []
    rep = validate_complex(sub, "disk")
    if not rep.ok:
        out.append(f"tile {tile}: carried tiles do not form a disk ({'; '.join(rep.violations)})")
        return out
    eu = sub.edge_uses()
    boundary_edges = {e for e, _ in base.tiles[tile]}
    for e in sub.edges:
        c = r.carriers[e]
        if eu[e] == 2 and c != CellRef("tile", tile):
            out.append(f"tile {tile}: interior edge {e} carried by {c.kind} {c.id}")
        if eu[e] == 1 and not (c.kind == "edge" and c.id in boundary_edges):
            out.append(f"tile {tile}: boundary edge {e} not carried by the tile boundary")
    return out


# -- orientation ------------------------------------------------------------

def _carrier_orientation(r: FiniteSubdivisionRule) -> dict[str, int]:
    """Sign of each refined tile's stored orientation relative to its carrier tile."""
    arc_dir = {}
    for e in r.base.edges:
        for d in edge_arc(r, e):
            arc_dir[d[0]] = d[1]
    out = {}
    for T, tcyc in r.base.tiles.items():
        tsign = {}
        for e, s in tcyc:
            tsign.setdefault(e, s)
        tids = r.carried_by("tile", T)
        sub = r.refined.subcomplex(tids)
        eu = sub.edge_uses()
        by_edge = defaultdict(list)
        for t in tids:
            for d in r.refined.tiles[t]:
                by_edge[d[0]].append((t, d[1]))
        queue = deque()
        for t in sorted(tids):
            for e, s in r.refined.tiles[t]:
                c = r.carriers[e]
                if eu[e] == 1 and c.kind == "edge" and c.id in tsign and t not in out:
                    out[t] = s * arc_dir[e] * tsign[c.id]
                    queue.append(t)
        while queue:
            t = queue.popleft()
            for e, s in r.refined.tiles[t]:
                for t2, s2 in by_edge[e]:
                    if t2 == t:
                        continue
                    want = out[t] if s2 == -s else -out[t]
                    if t2 not in out:
                        out[t2] = want
                        queue.append(t2)
                    elif out[t2] != want:
                        raise ValueError(f"refined tiles over {T} not coherently oriented")
        for t in tids:
            out.setdefault(t, 1)
    return out


def is_orientation_preserving(r: FiniteSubdivisionRule) -> bool:
    """True if some orientation of the base tiles makes sigma preserve
    orientation on every refined tile (refined tiles inherit the orientation
    of the base tile carrying them)."""
    if not r.base.is_closed_surface():
        raise ValueError("base not a surface")
    rel = _carrier_orientation(r)
    constraints = defaultdict(list)
    for t in r.refined.tiles:
        s = tile_orientation_sign(r.sigma, t)
        if s == 0:
            return False
        a = r.carriers[t].id
        b = r.sigma.tile_map[t]
        w = rel[t] * s
        constraints[a].append((b, w))
        constraints[b].append((a, w))
    eps = {}
    for start in sorted(r.base.tiles):
        if start in eps:
            continue
        eps[start] = 1
        queue = deque([start])
        while queue:
            a = queue.popleft()
            for b, w in constraints[a]:
                want = eps[a] * w
                if b not in eps:
                    eps[b] = want
                    queue.append(b)
                elif eps[b] != want:
                    return False
    return True


# -- valence ----------------------------------------------------------------

def local_degree_at_vertex(r: FiniteSubdivisionRule, v: str) -> int:
    """Local degree of sigma at refined vertex ``v`` from the valence ratio."""
    val_r = vertex_valences(r.refined)
    val_b = vertex_valences(r.base)
    img = r.sigma.vertex_map[v]
    num, den = val_r[v], val_b[img]
    if den == 0 or num % den:
        raise ValueError(f"vertex {v}: valence ratio {num}/{den} is not an integer")
    return num // den


@dataclass
class BoundedValence:
    ok: bool
    certificate: list[list[str]]


def vertex_dynamics(r: FiniteSubdivisionRule) -> dict[str, str]:
    """Base vertex -> base vertex, through the refined copy of each base vertex."""
    return {b: r.sigma.vertex_map[r.refined_vertex(b)] for b in r.base.vertices}


def _cycles(fmap: Mapping[str, str]) -> list[list[str]]:
    seen = {}
    cycles = []
    for start in sorted(fmap):
        path = []
        x = start
        while x not in seen:
            seen[x] = start
            path.append(x)
            x = fmap[x]
        if seen[x] == start and x in path:
            cyc = path[path.index(x):]
            k = cyc.index(min(cyc))
            cycles.append(cyc[k:] + cyc[:k])
    return cycles


def has_bounded_valence(r: FiniteSubdivisionRule) -> BoundedValence:
    """Bounded valence holds iff no periodic base vertex is critical for sigma."""
    dyn = vertex_dynamics(r)
    bad = []
    for cyc in _cycles(dyn):
        if any(local_degree_at_vertex(r, r.refined_vertex(x)) > 1 for x in cyc):
            bad.append(cyc)
    return BoundedValence(not bad, bad)


def has_edge_pairing(r: FiniteSubdivisionRule) -> bool:
    return r.base.is_closed_surface()


# -- subdivision ------------------------------------------------------------

def _tile_runs(r: FiniteSubdivisionRule) -> dict[str, list[list[Dart]]]:
    arcs = {e: edge_arc(r, e) for e in r.base.edges}
    runs = {}
    for T, cyc in r.base.tiles.items():
        runs[T] = [list(arcs[e]) if s > 0 else [reverse(d) for d in reversed(arcs[e])] for e, s in cyc]
    return runs


def _align(img: list[Dart], target: tuple[Dart, ...]) -> tuple[int, bool]:
    k = len(target)
    if len(img) == k:
        for flip in (False, True):
            seq = list(reverse_cycle(img)) if flip else img
            for off in range(k):
                if all(seq[i] == target[(i + off) % k] for i in range(k)):
                    return off, flip
    raise ValueError("structure map does not send a tile boundary onto its image tile")


@dataclass(frozen=True, eq=False)
class Subdivision:
    rcomplex: RComplex
    parents: Mapping[str, CellRef]  # new cell -> cell of the input complex containing it


def subdivide(r: FiniteSubdivisionRule, x: RComplex) -> RComplex:
    """R(X): pull the refined structure back along the structure map."""
    return subdivide_with_parents(r, x).rcomplex


def subdivide_with_parents(r: FiniteSubdivisionRule, x: RComplex, _cache=None) -> Subdivision:
    runs = _cache["runs"] if _cache else _tile_runs(r)
    carried_tiles = _cache["tiles"] if _cache else {T: r.carried_by("tile", T) for T in r.base.tiles}
    rvertex = _cache["rvertex"] if _cache else {b: r.refined_vertex(b) for b in r.base.vertices}
    ref, sig = r.refined, r.sigma
    X, st = x.complex, x.structure

    vertices = set(X.vertices)
    edges: dict[str, tuple[str, str]] = {}
    tiles: dict[str, tuple[Dart, ...]] = {}
    vmap = {v: sig.vertex_map[rvertex[st.vertex_map[v]]] for v in X.vertices}
    emap: dict[str, tuple[str, int]] = {}
    tmap: dict[str, str] = {}
    parents = {v: CellRef("vertex", v) for v in X.vertices}
    chains: dict[str, list[str]] = {}

    for tau in X.tiles:
        T = st.tile_map[tau]
        if r.base.kind_of(T) != "tile":
            raise ValueError(f"invalid structure map: tile {tau} maps to {T}")
        cyc = X.tiles[tau]
        off, flip = _align([st.image_dart(d) for d in cyc], r.base.tiles[T])
        if flip:
            cyc = reverse_cycle(cyc)
        k = len(cyc)
        local_v: dict[str, str] = {}
        local_e: dict[str, tuple[str, int]] = {}
        for i, (eps, sg) in enumerate(cyc):
            run = runs[T][(i + off) % k]
            m = len(run)
            if eps not in chains:
                t0, h0 = X.edges[eps]
                chain = [t0] + [f"{eps}/v{j}" for j in range(1, m)] + [h0]
                chains[eps] = chain
                for j in range(1, m):
                    vertices.add(chain[j])
                    parents[chain[j]] = CellRef("edge", eps)
                for j in range(m):
                    edges[f"{eps}/e{j}"] = (chain[j], chain[j + 1])
                    parents[f"{eps}/e{j}"] = CellRef("edge", eps)
            chain = chains[eps]
            if len(chain) != m + 1:
                raise ValueError(f"edge {eps} subdivided inconsistently")
            run_vs = [ref.tail(run[0])] + [ref.head(d) for d in run]
            for j, (e_r, s_r) in enumerate(run):
                if sg > 0:
                    nid, ndir = f"{eps}/e{j}", 1
                else:
                    nid, ndir = f"{eps}/e{m - 1 - j}", -1
                rho = s_r * ndir
                local_e[e_r] = (nid, rho)
                if nid not in emap:
                    img, u = sig.edge_map[e_r]
                    emap[nid] = (img, u * rho)
            for j, rvx in enumerate(run_vs):
                nv = chain[j] if sg > 0 else chain[m - j]
                local_v[rvx] = nv
                if nv not in vmap:
                    vmap[nv] = sig.vertex_map[rvx]

        def new_vertex(rvx: str) -> str:
            nv = local_v.get(rvx)
            if nv is None:
                nv = f"{tau}/{rvx}"
                local_v[rvx] = nv
                vertices.add(nv)
                vmap[nv] = sig.vertex_map[rvx]
                parents[nv] = CellRef("tile", tau)
            return nv

        for t_r in carried_tiles[T]:
            new_cyc = []
            for e_r, s_r in ref.tiles[t_r]:
                if e_r in local_e:
                    nid, rho = local_e[e_r]
                    new_cyc.append((nid, s_r * rho))
                    continue
                nid = f"{tau}/{e_r}"
                if nid not in edges:
                    a, b = ref.edges[e_r]
                    edges[nid] = (new_vertex(a), new_vertex(b))
                    emap[nid] = sig.edge_map[e_r]
                    parents[nid] = CellRef("tile", tau)
                new_cyc.append((nid, s_r))
            tid = f"{tau}/{t_r}"
            tiles[tid] = reverse_cycle(new_cyc) if flip else tuple(new_cyc)
            tmap[tid] = sig.tile_map[t_r]
            parents[tid] = CellRef("tile", tau)

    c = OrientedComplex(tuple(vertices), edges, tiles)
    return Subdivision(RComplex(c, CellularMap(c, r.base, vmap, emap, tmap)), parents)


def iterate_subdivision(r: FiniteSubdivisionRule, x: RComplex, n: int) -> RComplex:
    if n < 1:
        raise ValueError("n must be a positive integer")
    for _ in range(n):
        x = subdivide(r, x)
    return x


# -- combinatorial mesh -----------------------------------------------------

@dataclass
class MeshReport:
    status: str  # "true" | "false" | "unknown"
    edges_subdivided: bool
    edge_witness: list[str]
    edge_level: int | None
    separation_level: int | None

    @property
    def value(self) -> bool | None:
        return {"true": True, "false": False}.get(self.status)


def mesh_zero_combinatorial(r: FiniteSubdivisionRule, cap: int = 8) -> MeshReport:
    """Decide condition (i) exactly and condition (ii) up to ``cap`` subdivisions."""
    arcs = {e: edge_arc(r, e) for e in r.base.edges}
    step = {}
    for e, arc in arcs.items():
        if len(arc) == 1:
            step[e] = r.sigma.edge_map[arc[0][0]][0]
    level = {}
    witness = []
    for e in sorted(r.base.edges):
        chain = []
        x = e
        while x in step and x not in chain:
            chain.append(x)
            x = step[x]
        if x in step:
            cyc = chain[chain.index(x):]
            k = cyc.index(min(cyc))
            cyc = cyc[k:] + cyc[:k]
            if cyc not in witness:
                witness.append(cyc)
        else:
            level[e] = len(chain) + 1
    if witness:
        return MeshReport("false", False, witness[0], None, None)
    edge_level = max(level.values(), default=1)

    cache = {
        "runs": _tile_runs(r),
        "tiles": {T: r.carried_by("tile", T) for T in r.base.tiles},
        "rvertex": {b: r.refined_vertex(b) for b in r.base.vertices},
    }
    sep_level = 0
    for T, cyc in r.base.tiles.items():
        k = len(cyc)
        pairs = [(i, j) for i, j in combinations(range(k), 2) if (j - i) % k not in (1, k - 1)]
        if not pairs:
            continue
        x = tile_type_complex(r, T)
        # origin[cell] = set of polygon sides the cell lies on
        origin = {}
        for i in range(k):
            origin[f"{T}:c{i}"] = {i, (i - 1) % k}
            origin[f"{T}:s{i}"] = {i}
        found = None
        for n in range(1, cap + 1):
            sub = subdivide_with_parents(r, x, cache)
            new_origin = {}
            for cid, par in sub.parents.items():
                new_origin[cid] = origin.get(par.id, set()) if par.kind != "vertex" else origin.get(cid, set())
            origin = new_origin
            x = sub.rcomplex
            if all(_separated(x.complex, origin, i, j) for i, j in pairs):
                found = n
                break
        if found is None:
            return MeshReport("unknown", True, [], edge_level, None)
        sep_level = max(sep_level, found)
    return MeshReport("true", True, [], edge_level, max(sep_level, 1))


def _separated(c: OrientedComplex, origin, i: int, j: int) -> bool:
    for t in c.tiles:
        sides = set()
        for v in c.tile_vertices(t):
            sides |= origin.get(v, set())
        if i in sides and j in sides:
            return False
    return True
