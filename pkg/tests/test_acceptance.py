"""One check per acceptance criterion; each prints a PASS/FAIL line."""
import itertools
import json
import math
import time
from fractions import Fraction


from conftest import lattes, square
from oracles import composite_residual
from test_disk import path_ok
from test_ratmap import CORPUS
from fsrkit.cli import main
from fsrkit.constructor import ConstructionError, construct
from fsrkit.disk import DiskComplex, triarc
from fsrkit.files import (carriers_from_json, complex_from_json, complex_to_json, dumps, fsr_from_json, fsr_to_json, map_from_json,
                          map_to_json, write_complex, write_map)
from fsrkit.fsr import has_bounded_valence, mesh_zero_combinatorial, validate_fsr
from fsrkit.pullback import PullbackOptions, pullback_complex, tile_diameters
from fsrkit.ratmap import (RationalMap, critical_points, has_periodic_critical_point, divisibility_violations,
                           nu_fixed_point, nu_map, postcritical_set)
from fsrkit.samples import grid_disk, polygon, square_rule


def verdict(capsys, number, ok, detail=""):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# -- hand oracles ------------------------------------------------------------------

def _lattes_orbit_oracle():
    """Orbit graph of 1 - 2/z^2 from rational arithmetic; None is infinity."""
    def f(z):
        if z is None:
            return Fraction(1)
        if z == 0:
            return None
        return 1 - Fraction(2) / (z * z)

    degree = {Fraction(0): 2, None: 2}  # the two critical points, each a double root of f'
    nodes, z = [], Fraction(0)
    while z not in nodes:
        nodes.append(z)
        z = f(z)
    nu = {x: 1 for x in nodes}
    changed = True
    while changed:
        changed = False
        for x in nodes:
            y = f(x)
            want = math.lcm(nu[y], degree.get(x, 1) * nu[x])
            if want != nu[y]:
                nu[y], changed = want, True
    return nodes, nu


def _key(p):
    return None if p.is_infinity else Fraction(str(p))


# -- 1 ------------------------------------------------------------------------------

def test_criterion_1_orbifold_analysis(capsys):
    f = lattes()
    t0 = time.perf_counter()
    crit = critical_points(f)
    g = postcritical_set(f, crit=crit)
    orb = nu_map(g)
    periodic, _ = has_periodic_critical_point(g)
    elapsed = time.perf_counter() - t0
    nodes, nu = _lattes_orbit_oracle()
    got_crit = sorted((str(p), m) for p, m in crit.points)
    got_nu = {_key(p): v for p, v in zip(orb.points, orb.nu)}
    want_nu = {x: nu[x] for x in nodes if x != 0}
    ok = (got_crit == [("0", 2), ("inf", 2)]
          and got_nu == want_nu == {None: 2, Fraction(1): 4, Fraction(-1): 4}
          and sorted(orb.signature) == [2, 4, 4]
          and orb.chi == 0 and orb.klass == "euclidean-listed"
          and not periodic and elapsed < 1.0)
    verdict(capsys, 1, ok, f"crit={got_crit} nu={sorted(orb.signature)} chi={orb.chi} {orb.klass} "
                           f"periodic={periodic} {elapsed:.3f}s")


# -- 2 ------------------------------------------------------------------------------

def test_criterion_2_divisibility_over_corpus(capsys):
    failures = []
    for name, (num, den) in sorted(CORPUS.items()):
        g = postcritical_set(RationalMap(num, den))
        if not g.finite:
            continue
        failures += [f"{name}: {v}" for v in divisibility_violations(g, nu_fixed_point(g))]
    verdict(capsys, 2, not failures, f"{len(CORPUS)} maps, {len(failures)} failures {failures[:3]}")


# -- 3 ------------------------------------------------------------------------------

def test_criterion_3_covering_counts(capsys, lattes_base):
    rows, ok = [], True
    for n in range(1, 5):
        t0 = time.perf_counter()
        p = pullback_complex(lattes(), lattes_base, n, PullbackOptions())
        elapsed = time.perf_counter() - t0
        v, e, t = p.complex.counts()
        res = max(p.max_residual, composite_residual(p, lattes_base))
        good = e == 3 * 2 ** n and t == 2 * 2 ** n and v - e + t == 2 and res < 1e-9
        if n == 4:
            good = good and elapsed < 30
        ok = ok and good
        rows.append(f"n={n} V={v} E={e} F={t} res={res:.1e} {elapsed:.1f}s")
    verdict(capsys, 3, ok, "; ".join(rows))


# -- 4 ------------------------------------------------------------------------------

def test_criterion_4_tile_diameters(capsys, lattes_levels):
    d = [tile_diameters(p).max for p in lattes_levels]
    # eventually strictly decreasing: some tail d[k:] over n = 1..6 strictly decreases, k <= 4
    tail = next((k for k in range(len(d) - 1) if all(a > b for a, b in zip(d[k:], d[k + 1:]))), None)
    decreasing = tail is not None and tail <= len(d) - 3
    tested = [0.05, 0.1, 0.2]
    below = {eps: next((n + 1 for n, x in enumerate(d) if x < eps), None) for eps in tested}
    small = all(v is not None for v in below.values())
    verdict(capsys, 4, decreasing and small,
            "max diameters " + ", ".join(f"{x:.4f}" for x in d)
            + f"; strictly decreasing from n={None if tail is None else tail + 1}"
            + f"; first n below eps: {below}")


# -- 5 ------------------------------------------------------------------------------

def test_criterion_5_triarc_exhaustive(capsys):
    t0 = time.perf_counter()
    disks = [grid_disk(r, c) for r in range(1, 6) for c in range(1, 6)] + [polygon(n) for n in range(3, 9)]
    total = bad = 0
    for c in disks:
        d = DiskComplex.from_complex(c)
        for u, v, w in itertools.permutations(c.vertices, 3):
            total += 1
            if not path_ok(c, triarc(d, u, v, w), u, v, w):
                bad += 1
    elapsed = time.perf_counter() - t0
    verdict(capsys, 5, bad == 0 and elapsed < 10, f"{total} triples, {bad} bad, {elapsed:.1f}s")


# -- 6 ------------------------------------------------------------------------------

def test_criterion_6_end_to_end(capsys):
    f = lattes()
    t0 = time.perf_counter()
    c = construct(f, n_cap=6, mesh_cap=5)
    elapsed = time.perf_counter() - t0
    r = c.rule
    rep = validate_fsr(r)
    bv = has_bounded_valence(r)
    mesh = mesh_zero_combinatorial(r, 5)
    # σ_R agrees with g = f^n on the vertices of S_R (g permutes P rather than fixing it)
    g = postcritical_set(f)
    step = {_key(g.points[i]): _key(g.points[g.image[i]]) for i in range(len(g.points))}
    where = {v: _key_of_vector(r.base.positions[v]) for v in r.base.vertices}
    fine = r.refined.positions
    vertex_ok = True
    for v in r.base.vertices:
        w = min(fine, key=lambda u: float(((fine[u] - r.base.positions[v]) ** 2).sum()))
        x = where[v]
        for _ in range(c.n):
            x = step[x]
        vertex_ok = vertex_ok and where[r.sigma.vertex_map[w]] == x
    per_tile = {}
    for t in r.refined.tiles:
        per_tile[r.sigma.tile_map[t]] = per_tile.get(r.sigma.tile_map[t], 0) + 1
    checks = {
        "n<=6": c.n <= 6,
        "valid": rep.ok,
        "orientation": rep.orientation_preserving is True,
        "bounded valence": bv.ok and bv.certificate == [],
        "mesh": mesh.status == "true",
        "sigma=g on vertices": vertex_ok,
        "degree": set(per_tile.values()) == {2 ** c.n},
        "tiles": len(r.refined.tiles) == 2 ** (c.n + 1),
        "isotopy": c.isotopy.ok,
        "runtime": elapsed < 120,
    }
    failed = [k for k, v in checks.items() if not v]
    verdict(capsys, 6, not failed, f"n={c.n} beta=alpha:{c.assembly.invariant} {elapsed:.1f}s failed={failed}")


def _key_of_vector(v):
    # the postcritical points of the test map are -1, 1 and infinity
    for z, vec in ((None, (0, 0, 1)), (Fraction(1), (1, 0, 0)), (Fraction(-1), (-1, 0, 0))):
        if sum((a - b) ** 2 for a, b in zip(v, vec)) < 1e-18:
            return z
    raise AssertionError(f"unexpected vertex position {v}")


# -- 7 ------------------------------------------------------------------------------

def test_criterion_7_negative_controls(capsys):
    t0 = time.perf_counter()
    try:
        construct(square())
        msg = ""
    except ConstructionError as exc:
        msg = str(exc)
    elapsed = time.perf_counter() - t0
    fast = "hypothesis violated" in msg and elapsed < 5
    bv = has_bounded_valence(square_rule())
    cert_ok = not bv.ok and bool(bv.certificate) and all(len(cyc) == 1 for cyc in bv.certificate)
    mesh = mesh_zero_combinatorial(square_rule(), 5)
    mesh_ok = mesh.status == "false" and not mesh.edges_subdivided and mesh.edge_witness == ["a"]
    verdict(capsys, 7, fast and cert_ok and mesh_ok,
            f"z^2 error {msg!r} in {elapsed:.2f}s; certificate {bv.certificate}; mesh witness {mesh.edge_witness}")


# -- 8 ------------------------------------------------------------------------------

def test_criterion_8_determinism_and_round_trip(capsys, tmp_path, lattes_base):
    write_map(tmp_path / "f.json", lattes())
    write_complex(tmp_path / "s.json", lattes_base)
    f, s = str(tmp_path / "f.json"), str(tmp_path / "s.json")
    runs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        codes = [
            main(["construct", f, "-o", str(d / "r.json"), "--svg", str(d / "r.svg")]),
            main(["pullback", f, s, "-n", "2", "-o", str(d / "p.json"), "--svg", str(d / "p.svg")]),
            main(["subdivide", str(d / "r.json"), "-n", "2", "-o", str(d / "x.json")]),
            main(["render", str(d / "r.json"), "-o", str(d / "b.svg")]),
        ]
        assert codes == [0, 0, 0, 0]
        runs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    same = runs[0] == runs[1]
    text_r = runs[0]["r.json"].decode()
    text_p = runs[0]["p.json"].decode()
    trips = {
        "fsr": dumps(fsr_to_json(fsr_from_json(json.loads(text_r)))) == text_r,
        "complex": dumps(complex_to_json(complex_from_json(json.loads(text_p)),
                                         *carriers_from_json(json.loads(text_p)))) == text_p,
        "map": dumps(map_to_json(map_from_json(map_to_json(lattes())))) == dumps(map_to_json(lattes())),
    }
    verdict(capsys, 8, same and all(trips.values()),
            f"{len(runs[0])} files identical: {same}; round trips {trips}")
