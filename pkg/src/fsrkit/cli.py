"""Command line entry point.

Exit status 0 on success, 1 when an input fails validation or a
computation cannot be completed, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .complex import CellRef
from .constructor import ConstructionError, CurveSpec, construct
from .files import (FormatError, complex_to_json, fsr_to_json, kind_of_document, complex_from_json,
                    fsr_from_json, map_from_json, read_json, write_json)
from .fsr import (as_r_complex, has_bounded_valence, has_edge_pairing, iterate_subdivision,
                  mesh_zero_combinatorial, validate_fsr)
from .pullback import LiftError, PullbackOptions, pullback_complex, tile_diameters
from .ratmap import (critical_points, format_nu, has_periodic_critical_point, nu_map,
                     postcritical_set)
from .render import RenderSpec, render_svg

log = logging.getLogger("fsrkit")

LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
          "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class Failure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _center(text: str) -> complex | None:
    if text.strip().lower() in ("inf", "infinity"):
        return None
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad centre {text!r}")


def _load(path: str, want: str | None = None):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    obj = read_json(p)
    kind = kind_of_document(obj)
    if want is not None and kind != want:
        raise Failure(f"{path}: expected a {want} file, found a {kind} file")
    return kind, {"complex": complex_from_json, "fsr": fsr_from_json, "map": map_from_json}[kind](obj)


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# -- subcommands -------------------------------------------------------------------

def cmd_analyze(args) -> int:
    _, f = _load(args.map, "map")
    kw = {"max_orbit": args.max_orbit}
    if args.tol is not None:
        kw["tol"] = args.tol
    crit = critical_points(f)
    g = postcritical_set(f, crit=crit, **kw)
    out = ["critical points:"]
    out += [f"  {p}  degree {m}" for p, m in crit.points]
    if not g.finite:
        out.append(f"postcritical set: not finite ({g.reason})")
        print("\n".join(out))
        return 1
    orb = nu_map(g)
    out.append("postcritical set:")
    out += [f"  {p}  nu {format_nu(v)}" for p, v in zip(orb.points, orb.nu)]
    out.append("signature: (" + ",".join(format_nu(v) for v in orb.signature) + ")")
    out.append(f"euler characteristic: {orb.chi}")
    out.append(f"class: {orb.klass}")
    periodic, cyc = has_periodic_critical_point(g)
    if periodic:
        out.append("periodic critical points: " + ", ".join(str(g.points[i]) for i in cyc))
    else:
        out.append("no periodic critical points")
    print("\n".join(out))
    return 0


def cmd_pullback(args) -> int:
    _, f = _load(args.map, "map")
    _, s = _load(args.complex, "complex")
    if not s.has_geometry:
        raise Failure(f"{args.complex}: complex has no geometry")
    p = pullback_complex(f, s, args.n, PullbackOptions())
    write_json(args.output, complex_to_json(p.complex, p.carrier, p.edge_sign))
    v, e, t = p.complex.counts()
    stats = tile_diameters(p)
    print(f"level {p.level}: V={v} E={e} F={t} chi={v - e + t} max residual {p.max_residual:.3g} "
          f"max tile diameter {stats.max:.6g}")
    if args.svg:
        _write_text(args.svg, render_svg(p.complex, tile_types={k: p.carrier[k].id for k in p.complex.tiles}))
    return 0


def _curve_spec(text: str | None) -> CurveSpec | str:
    if text is None or text == "auto":
        return "auto"
    if Path(text).is_file():
        obj = read_json(text)
        way = {int(k): [np.asarray(w, dtype=float) for w in v] for k, v in obj.get("waypoints", {}).items()}
        return CurveSpec([int(i) for i in obj["order"]], way)
    try:
        return CurveSpec([int(i) for i in text.split(",")])
    except ValueError:
        raise UsageError(f"bad curve specification {text!r}")


def cmd_construct(args) -> int:
    _, f = _load(args.map, "map")
    spec = _curve_spec(args.alpha)
    c = construct(f, spec, n_cap=args.n_cap, mesh_cap=args.mesh_cap)
    write_json(args.output, fsr_to_json(c.rule))
    sys.stdout.write(c.report())
    if args.svg:
        types = {k: c.rule.carriers[k].id for k in c.rule.refined.tiles}
        _write_text(args.svg, render_svg(c.rule.refined, tile_types=types))
    return 0


def cmd_subdivide(args) -> int:
    _, r = _load(args.fsr, "fsr")
    rep = validate_fsr(r)
    if not rep.ok:
        raise Failure("invalid subdivision rule: " + "; ".join(rep.violations[:5]))
    x = iterate_subdivision(r, as_r_complex(r), args.n)
    write_json(args.output, complex_to_json(x.complex, _structure_carriers(x.structure)))
    v, e, t = x.complex.counts()
    print(f"R^{args.n}: V={v} E={e} F={t}")
    if args.svg:
        if args.n != 1 or not r.refined.has_geometry:
            raise Failure("only the first subdivision of a rule with geometry can be drawn")
        types = {k: r.carriers[k].id for k in r.refined.tiles}
        _write_text(args.svg, render_svg(r.refined, tile_types=types))
    return 0


def _structure_carriers(m):
    out = {v: CellRef("vertex", b) for v, b in m.vertex_map.items()}
    out.update({e: CellRef("edge", b) for e, (b, _) in m.edge_map.items()})
    out.update({t: CellRef("tile", b) for t, b in m.tile_map.items()})
    return out


def cmd_check(args) -> int:
    _, r = _load(args.fsr, "fsr")
    rep = validate_fsr(r)
    lines = [f"valid: {str(rep.ok).lower()}"]
    lines += [f"  {m}" for m in rep.violations[:20]]
    good = rep.ok
    if rep.ok:
        bv = has_bounded_valence(r)
        mesh = mesh_zero_combinatorial(r, args.mesh_cap)
        pairing = has_edge_pairing(r)
        lines.append(f"orientation preserving: {str(bool(rep.orientation_preserving)).lower()}")
        lines.append(f"bounded valence: {str(bv.ok).lower()}")
        if not bv.ok:
            lines.append("  periodic critical vertices: " + "; ".join(" -> ".join(c) for c in bv.certificate))
        lines.append(f"edge pairing: {str(pairing).lower()}")
        lines.append(f"mesh approaching 0 combinatorially: {mesh.status}")
        if mesh.edge_witness:
            lines.append("  unsubdivided edges: " + ", ".join(mesh.edge_witness))
        good = bool(rep.orientation_preserving) and bv.ok and pairing and mesh.status == "true"
    print("\n".join(lines))
    return 0 if good else 1


def cmd_render(args) -> int:
    kind, obj = _load(args.input)
    try:
        spec = RenderSpec(center=args.center, size=args.size)
    except ValueError as exc:
        raise UsageError(str(exc))
    if kind == "complex":
        c, types = obj, None
    elif kind == "fsr":
        c, types = obj.base, {t: t for t in obj.base.tiles}
    else:
        raise Failure("maps cannot be rendered")
    _write_text(args.output, render_svg(c, spec, types))
    return 0


# -- dispatch -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fsrkit", description="Finite subdivision rules from critically finite rational maps.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    a = sub.add_parser("analyze", help="critical and postcritical data and the orbifold")
    a.add_argument("map")
    a.add_argument("--tol", type=float, default=None)
    a.add_argument("--max-orbit", type=_positive, default=64)
    a.set_defaults(run=cmd_analyze)

    p = sub.add_parser("pullback", help="pull a complex back n times")
    p.add_argument("map")
    p.add_argument("complex")
    p.add_argument("-n", type=_positive, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--svg")
    p.set_defaults(run=cmd_pullback)

    c = sub.add_parser("construct", help="build a subdivision rule for an iterate of the map")
    c.add_argument("map")
    c.add_argument("--alpha", default="auto", help="auto, a comma separated order, or a JSON curve file")
    c.add_argument("--n-cap", type=_positive, default=8)
    c.add_argument("--mesh-cap", type=_positive, default=5)
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--svg")
    c.set_defaults(run=cmd_construct)

    s = sub.add_parser("subdivide", help="iterate a subdivision rule on its base complex")
    s.add_argument("fsr")
    s.add_argument("-n", type=_positive, required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--svg")
    s.set_defaults(run=cmd_subdivide)

    k = sub.add_parser("check", help="validity, bounded valence, edge pairing and mesh")
    k.add_argument("fsr")
    k.add_argument("--mesh-cap", type=_positive, default=5)
    k.set_defaults(run=cmd_check)

    r = sub.add_parser("render", help="draw a complex or the base of a rule as SVG")
    r.add_argument("input")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--center", type=_center, default=0j)
    r.add_argument("--size", type=int, default=800)
    r.set_defaults(run=cmd_render)
    return ap


def main(argv: list[str] | None = None) -> int:
    level = LEVELS.get(os.environ.get("LOG_LEVEL", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        return args.run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (Failure, FormatError, ConstructionError, LiftError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
