"""JSON readers and writers for complexes, subdivision rules and maps.

Output is deterministic: keys are sorted, cells are listed by id and floats
are written with ``repr``, which round-trips bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .complex import CellRef, CellularMap, OrientedComplex
from .fsr import FiniteSubdivisionRule
from .ratmap import RationalMap, format_gaussian, parse_gaussian

NORM_RANGE = (0.999, 1.001)


class FormatError(ValueError):
    pass


def _sign(s: int) -> str:
    return "+" if s > 0 else "-"


def _parse_sign(s: str) -> int:
    if s not in ("+", "-"):
        raise FormatError(f"bad orientation {s!r}")
    return 1 if s == "+" else -1


def _unit(v, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise FormatError(f"{what}: expected three finite coordinates")
    r = float(np.linalg.norm(a))
    if not NORM_RANGE[0] <= r <= NORM_RANGE[1]:
        raise FormatError(f"{what}: norm {r!r} is not within {NORM_RANGE}")
    # leave vectors that are unit to rounding untouched so read/write is the identity
    return a if abs(r - 1.0) <= 4e-16 else a / r


def _vec(v: np.ndarray) -> list[float]:
    return [float(x) for x in v]


# -- complexes -----------------------------------------------------------------

def complex_to_json(c: OrientedComplex, carrier: Mapping[str, CellRef] | None = None,
                    edge_sign: Mapping[str, int] | None = None) -> dict[str, Any]:
    """Complex file object; optional per-cell carriers name cells of another complex."""
    def extra(cid: str, out: dict) -> dict:
        if carrier is not None and cid in carrier:
            out["carrier"] = {"kind": carrier[cid].kind, "id": carrier[cid].id}
            if edge_sign is not None and cid in edge_sign:
                out["carrier"]["sign"] = _sign(edge_sign[cid])
        return out

    vertices = []
    for v in c.vertices:
        item = {"id": v}
        if c.positions is not None and v in c.positions:
            item["pos"] = _vec(c.positions[v])
        vertices.append(extra(v, item))
    edges = []
    for e, (t, h) in c.edges.items():
        item = {"id": e, "tail": t, "head": h}
        if c.polylines is not None and e in c.polylines:
            item["polyline"] = [_vec(p) for p in c.polylines[e]]
        edges.append(extra(e, item))
    tiles = [extra(t, {"id": t, "boundary": [[e, _sign(s)] for e, s in cyc]}) for t, cyc in c.tiles.items()]
    return {"vertices": vertices, "edges": edges, "tiles": tiles}


def complex_from_json(obj: Mapping[str, Any]) -> OrientedComplex:
    try:
        vs = obj["vertices"]
        es = obj["edges"]
        ts = obj["tiles"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"complex: missing key {exc}") from exc
    ids = [v["id"] for v in vs]
    if len(set(ids)) != len(ids):
        raise FormatError("complex: duplicate vertex id")
    positions = {v["id"]: _unit(v["pos"], f"vertex {v['id']}") for v in vs if "pos" in v}
    edges = {}
    polylines = {}
    for e in es:
        if e["id"] in edges:
            raise FormatError(f"complex: duplicate edge id {e['id']}")
        edges[e["id"]] = (e["tail"], e["head"])
        if "polyline" in e:
            pl = [_unit(p, f"edge {e['id']}") for p in e["polyline"]]
            polylines[e["id"]] = np.array(pl) if pl else np.zeros((0, 3))
    tiles = {}
    for t in ts:
        if t["id"] in tiles:
            raise FormatError(f"complex: duplicate tile id {t['id']}")
        tiles[t["id"]] = tuple((e, _parse_sign(s)) for e, s in t["boundary"])
    geometric = len(positions) == len(ids) and len(polylines) == len(edges)
    if positions and not geometric:
        raise FormatError("complex: geometry must be given for all cells or none")
    return OrientedComplex(tuple(ids), edges, tiles, positions if geometric else None,
                           polylines if geometric else None)


def carriers_from_json(obj: Mapping[str, Any]) -> tuple[dict[str, CellRef], dict[str, int]]:
    """Per-cell carrier fields of a pullback complex file."""
    carrier, sign = {}, {}
    for key in ("vertices", "edges", "tiles"):
        for item in obj.get(key, []):
            if "carrier" in item:
                carrier[item["id"]] = CellRef(item["carrier"]["kind"], item["carrier"]["id"])
                if "sign" in item["carrier"]:
                    sign[item["id"]] = _parse_sign(item["carrier"]["sign"])
    return carrier, sign


# -- subdivision rules -------------------------------------------------------------

def fsr_to_json(r: FiniteSubdivisionRule) -> dict[str, Any]:
    m = r.sigma
    return {
        "base": complex_to_json(r.base),
        "refined": complex_to_json(r.refined),
        "carriers": {k: {"kind": v.kind, "id": v.id} for k, v in sorted(r.carriers.items())},
        "sigma": {
            "vertices": dict(sorted(m.vertex_map.items())),
            "edges": {e: [t, _sign(s)] for e, (t, s) in sorted(m.edge_map.items())},
            "tiles": dict(sorted(m.tile_map.items())),
        },
    }


def fsr_from_json(obj: Mapping[str, Any]) -> FiniteSubdivisionRule:
    try:
        base = complex_from_json(obj["base"])
        refined = complex_from_json(obj["refined"])
        carriers = {k: CellRef(v["kind"], v["id"]) for k, v in obj["carriers"].items()}
        sg = obj["sigma"]
        sigma = CellularMap(refined, base, dict(sg["vertices"]),
                            {e: (t, _parse_sign(s)) for e, (t, s) in sg["edges"].items()},
                            dict(sg["tiles"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"subdivision rule: {exc}") from exc
    return FiniteSubdivisionRule(base, refined, carriers, sigma)


# -- maps ----------------------------------------------------------------------------

def _format_float_coeff(c: complex) -> str:
    return f"{c.real!r},{c.imag!r}"


def _parse_float_coeff(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 1:
        return complex(_num(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(_num(parts[0]), _num(parts[1]))
    raise FormatError(f"bad coefficient {text!r}")


def _num(text: str) -> float:
    text = text.strip()
    if "/" in text:
        p, q = text.split("/")
        return int(p) / int(q)
    return float(text)


def map_to_json(f: RationalMap) -> dict[str, Any]:
    fmt = format_gaussian if f.exact else _format_float_coeff
    return {
        "numerator": [fmt(c) for c in f.numerator],
        "denominator": [fmt(c) for c in f.denominator],
        "mode": "exact" if f.exact else "float",
    }


def map_from_json(obj: Mapping[str, Any]) -> RationalMap:
    mode = obj.get("mode", "exact")
    if mode not in ("exact", "float"):
        raise FormatError(f"bad mode {mode!r}")
    try:
        parse = parse_gaussian if mode == "exact" else _parse_float_coeff
        num = [parse(str(c)) for c in obj["numerator"]]
        den = [parse(str(c)) for c in obj["denominator"]]
        return RationalMap(tuple(num), tuple(den), exact=mode == "exact")
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"map: {exc}") from exc


# -- files ---------------------------------------------------------------------------

def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def kind_of_document(obj: Any) -> str:
    """"complex", "fsr" or "map"."""
    if isinstance(obj, dict):
        if "base" in obj and "refined" in obj:
            return "fsr"
        if "numerator" in obj:
            return "map"
        if "vertices" in obj:
            return "complex"
    raise FormatError("unrecognized document")


def read_complex(path) -> OrientedComplex:
    return complex_from_json(read_json(path))


def read_fsr(path) -> FiniteSubdivisionRule:
    return fsr_from_json(read_json(path))


def read_map(path) -> RationalMap:
    return map_from_json(read_json(path))


def write_complex(path, c: OrientedComplex, **kw) -> None:
    write_json(path, complex_to_json(c, **kw))


def write_fsr(path, r: FiniteSubdivisionRule) -> None:
    write_json(path, fsr_to_json(r))


def write_map(path, f: RationalMap) -> None:
    write_json(path, map_to_json(f))
