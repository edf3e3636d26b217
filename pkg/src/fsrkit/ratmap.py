"""Rational maps of the Riemann sphere and their postcritical orbifolds.

Maps are stored as numerator and denominator coefficient lists, highest
degree first.  Exact maps use Gaussian-rational coefficients (sympy's
``QQ_I`` domain); floating maps use Python complex numbers.  Points are
homogeneous pairs ``(a : b)`` with ``(1 : 0)`` the point at infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np
from sympy import QQ, QQ_I, Poly, symbols

from . import polyroots, sphere

INF = math.inf
_Z = symbols("z")
_HEIGHT_LIMIT = 4096  # bits; exact orbits beyond this are treated as escaping


# -- exact scalars ----------------------------------------------------------

def gaussian(value) -> "QQ_I.dtype":
    """Coerce an int, Fraction, complex with rational parts or string to QQ_I."""
    if isinstance(value, QQ_I.dtype):
        return value
    if isinstance(value, str):
        return parse_gaussian(value)
    if isinstance(value, complex):
        return QQ_I(_qq(Fraction(value.real)), _qq(Fraction(value.imag)))
    return QQ_I(_qq(Fraction(value)), QQ(0))


def _qq(f: Fraction):
    return QQ(f.numerator, f.denominator)


def to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def parse_gaussian(text: str):
    """``"p/q"`` or ``"re,im"`` with rational parts."""
    parts = text.split(",")
    if len(parts) == 1:
        re, im = Fraction(parts[0].strip()), Fraction(0)
    elif len(parts) == 2:
        re, im = Fraction(parts[0].strip()), Fraction(parts[1].strip())
    else:
        raise ValueError(f"bad coefficient {text!r}")
    return QQ_I(_qq(re), _qq(im))


def format_gaussian(x) -> str:
    re, im = to_fraction(x.x), to_fraction(x.y)
    return str(re) if im == 0 else f"{re},{im}"


def _bits(x) -> int:
    return max(int(q.numerator).bit_length() + int(q.denominator).bit_length() for q in (x.x, x.y))


def _is_zero(x) -> bool:
    return x == 0 if isinstance(x, (complex, float, int)) else x == QQ_I.zero


# -- points -----------------------------------------------------------------

@dataclass(frozen=True)
class SpherePoint:
    """A point ``(a : b)`` of the Riemann sphere.

    Exact points are normalized to ``(z : 1)`` or ``(1 : 0)``.  Floating
    points are scaled so the larger coordinate is exactly 1.
    """
    a: object
    b: object
    exact: bool = False

    @classmethod
    def make(cls, a, b, exact: bool) -> "SpherePoint":
        if exact:
            a, b = gaussian(a), gaussian(b)
            if b == QQ_I.zero:
                if a == QQ_I.zero:
                    raise ValueError("(0 : 0) is not a point")
                return cls(QQ_I.one, QQ_I.zero, True)
            return cls(a / b, QQ_I.one, True)
        a, b = complex(a), complex(b)
        if abs(a) >= abs(b):
            if a == 0:
                raise ValueError("(0 : 0) is not a point")
            return cls(1 + 0j, b / a, False)
        return cls(a / b, 1 + 0j, False)

    @classmethod
    def finite(cls, z, exact: bool = False) -> "SpherePoint":
        return cls.make(z, 1, exact)

    @classmethod
    def infinity(cls, exact: bool = False) -> "SpherePoint":
        return cls.make(1, 0, exact)

    @classmethod
    def from_vector(cls, p) -> "SpherePoint":
        a, b = sphere.to_homogeneous(np.asarray(p, dtype=float))
        return cls.make(a, b, False)

    @property
    def is_infinity(self) -> bool:
        return _is_zero(self.b)

    def to_complex(self) -> complex:
        """Complex value, ``inf`` for the point at infinity."""
        a, b = self._float_pair()
        return complex(INF, 0) if b == 0 else a / b

    def _float_pair(self) -> tuple[complex, complex]:
        if self.exact:
            return (complex(float(self.a.x), float(self.a.y)), complex(float(self.b.x), float(self.b.y)))
        return self.a, self.b

    def to_vector(self) -> np.ndarray:
        return sphere.from_homogeneous(*self._float_pair())

    def to_float(self) -> "SpherePoint":
        return SpherePoint.make(*self._float_pair(), exact=False)

    def distance(self, other: "SpherePoint") -> float:
        return float(sphere.distance(self.to_vector(), other.to_vector()))

    def height(self) -> int:
        return _bits(self.a) if self.exact else 0

    def __str__(self) -> str:
        if self.is_infinity:
            return "inf"
        if self.exact:
            re, im = to_fraction(self.a.x), to_fraction(self.a.y)
            if im == 0:
                return str(re)
            sign = "+" if im > 0 else "-"
            mag = abs(im)
            imag = "i" if mag == 1 else f"{mag}i"
            return imag if re == 0 and sign == "+" else (f"-{imag}" if re == 0 else f"{re}{sign}{imag}")
        z = self.a / self.b
        re, im = z.real + 0.0, z.imag + 0.0
        if abs(im) <= 1e-12 * max(1.0, abs(re)):
            return f"{re:.12g}"
        return f"{re:.12g}{im:+.12g}i"

    def sort_key(self):
        z = self.to_complex()
        return (1, 0.0, 0.0) if self.is_infinity else (0, round(z.real, 9), round(z.imag, 9))


# -- maps -------------------------------------------------------------------

def _strip(coeffs, zero) -> tuple:
    coeffs = list(coeffs)
    while len(coeffs) > 1 and _is_zero(coeffs[0]):
        coeffs.pop(0)
    return tuple(coeffs) if coeffs else (zero,)


@dataclass(frozen=True, eq=False)
class RationalMap:
    numerator: tuple
    denominator: tuple
    exact: bool = True

    def __post_init__(self):
        if self.exact:
            num = _strip([gaussian(c) for c in self.numerator], QQ_I.zero)
            den = _strip([gaussian(c) for c in self.denominator], QQ_I.zero)
        else:
            num = _strip([complex(c) for c in self.numerator], 0j)
            den = _strip([complex(c) for c in self.denominator], 0j)
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)
        if all(_is_zero(c) for c in den):
            raise ValueError("denominator is zero")
        if self.degree < 2:
            raise ValueError("degree must be at least 2")
        if not self._coprime():
            raise ValueError("numerator and denominator share a root")

    @classmethod
    def from_coefficients(cls, numerator, denominator, exact: bool = True) -> "RationalMap":
        return cls(tuple(numerator), tuple(denominator), exact)

    @property
    def degree(self) -> int:
        return max(len(self.numerator), len(self.denominator)) - 1

    def padded(self) -> tuple[list, list]:
        d = self.degree
        zero = QQ_I.zero if self.exact else 0j
        n = [zero] * (d + 1 - len(self.numerator)) + list(self.numerator)
        m = [zero] * (d + 1 - len(self.denominator)) + list(self.denominator)
        return n, m

    def _coprime(self) -> bool:
        if self.exact:
            g = self.num_poly().gcd(self.den_poly())
            return g.degree() <= 0
        n, m = self.padded()
        rn = _homogeneous_roots(np.array(n))
        rm = _homogeneous_roots(np.array(m))
        for p in rn:
            for q in rm:
                if sphere.distance(p, q) < 1e-8:
                    return False
        return True

    def num_poly(self) -> Poly:
        return Poly(list(self.numerator), _Z, domain=QQ_I)

    def den_poly(self) -> Poly:
        return Poly(list(self.denominator), _Z, domain=QQ_I)

    def to_float(self) -> "RationalMap":
        if not self.exact:
            return self
        conv = lambda c: complex(float(c.x), float(c.y))
        return RationalMap(tuple(map(conv, self.numerator)), tuple(map(conv, self.denominator)), False)

    def __call__(self, p: SpherePoint) -> SpherePoint:
        return evaluate(self, p)

    def compose(self, inner: "RationalMap") -> "RationalMap":
        """The map ``self o inner``."""
        if self.exact != inner.exact:
            raise ValueError("cannot compose exact and floating maps")
        n, m = self.padded()
        ni, mi = inner.padded()
        d = self.degree
        zero = QQ_I.zero if self.exact else 0j

        def poly_mul(p, q):
            out = [zero] * (len(p) + len(q) - 1)
            for i, x in enumerate(p):
                for j, y in enumerate(q):
                    out[i + j] = out[i + j] + x * y
            return out

        def poly_add(p, q):
            k = max(len(p), len(q))
            p = [zero] * (k - len(p)) + list(p)
            q = [zero] * (k - len(q)) + list(q)
            return [x + y for x, y in zip(p, q)]

        def poly_pow(p, k):
            out = [QQ_I.one if self.exact else 1 + 0j]
            for _ in range(k):
                out = poly_mul(out, p)
            return out

        def homog(coeffs):
            total = [zero]
            for i, c in enumerate(coeffs):
                k = d - i  # power of the inner numerator
                term = poly_mul(poly_pow(ni, k), poly_pow(mi, d - k))
                total = poly_add(total, [c * t for t in term])
            return total

        return RationalMap(tuple(homog(n)), tuple(homog(m)), self.exact)

    def iterate(self, n: int) -> "RationalMap":
        if n < 1:
            raise ValueError("n must be positive")
        g = self
        for _ in range(n - 1):
            g = self.compose(g)
        return g

    def __str__(self) -> str:
        def fmt(cs):
            return "[" + ", ".join(format_gaussian(c) if self.exact else repr(c) for c in cs) + "]"
        return f"RationalMap({fmt(self.numerator)} / {fmt(self.denominator)})"


def _homogeneous_value(coeffs, a, b):
    """sum_i coeffs[i] * a^(d-i) * b^i for a padded coefficient list of length d+1."""
    d = len(coeffs) - 1
    apow = [a ** 0]
    bpow = [b ** 0]
    for _ in range(d):
        apow.append(apow[-1] * a)
        bpow.append(bpow[-1] * b)
    out = coeffs[0] * apow[d]
    for i in range(1, d + 1):
        out = out + coeffs[i] * apow[d - i] * bpow[i]
    return out


def evaluate(f: RationalMap, p: SpherePoint) -> SpherePoint:
    n, m = f.padded()
    if f.exact:
        if not p.exact:
            raise ValueError("exact map evaluated at a floating point")
        a, b = p.a, p.b
    else:
        a, b = p._float_pair()
    return SpherePoint.make(_homogeneous_value(n, a, b), _homogeneous_value(m, a, b), f.exact)


def evaluate_vectors(f: RationalMap, points: np.ndarray) -> np.ndarray:
    """Evaluate a map (as floats) on an array of unit vectors, returning unit vectors."""
    f = f.to_float()
    n, m = (np.array(c, dtype=complex) for c in f.padded())
    pts = np.atleast_2d(points)
    z = pts[:, 2]
    x = pts[:, 0] + 1j * pts[:, 1]
    lower = z <= 0
    a = np.where(lower, x, 1 + z)
    b = np.where(lower, 1 - z, np.conj(x))
    scale = np.maximum(np.abs(a), np.abs(b))
    a, b = a / scale, b / scale
    na = _homogeneous_value(list(n), a, b)
    ma = _homogeneous_value(list(m), a, b)
    return sphere.from_homogeneous(na, ma)


def _homogeneous_roots(coeffs: np.ndarray) -> list[np.ndarray]:
    """Zeros (as unit vectors) of a binary form given by padded coefficients."""
    c = np.asarray(coeffs, dtype=complex)
    trimmed = polyroots.trim(c)
    out = [sphere.from_complex(z) for z in polyroots.roots(trimmed)]
    out += [sphere.from_complex(None)] * (c.size - trimmed.size)
    return out


# -- critical points ---------------------------------------------------------

@dataclass
class CriticalData:
    points: list[tuple[SpherePoint, int]]

    def total_excess(self) -> int:
        return sum(m - 1 for _, m in self.points)


def wronskian(f: RationalMap):
    """``N' D - N D'`` and the order of vanishing of the homogeneous Wronskian at infinity."""
    d = f.degree
    if f.exact:
        n, m = f.num_poly(), f.den_poly()
        w = n.diff(_Z) * m - n * m.diff(_Z)
        deg = w.degree() if not w.is_zero else -1
        return w, 2 * d - 2 - deg
    n = np.array(f.numerator)
    m = np.array(f.denominator)
    w = np.polysub(np.polymul(np.polyder(n), m), np.polymul(n, np.polyder(m)))
    w = polyroots.trim(w, 1e-14)
    deg = w.size - 1 if np.any(w != 0) else -1
    return w, 2 * d - 2 - deg


def critical_points(f: RationalMap) -> CriticalData:
    """Critical points with local degrees; Riemann-Hurwitz is enforced."""
    w, at_inf = wronskian(f)
    pts: list[tuple[SpherePoint, int]] = []
    if f.exact:
        for z, mult in exact_roots(w):
            pts.append((SpherePoint.finite(z, True), mult + 1))
    else:
        for z, mult in polyroots.roots_with_multiplicity(w):
            pts.append((SpherePoint.finite(z, False), mult + 1))
    if at_inf > 0:
        pts.append((SpherePoint.infinity(f.exact), at_inf + 1))
    pts.sort(key=lambda t: t[0].sort_key())
    cd = CriticalData(pts)
    if cd.total_excess() != 2 * f.degree - 2:
        raise ArithmeticError(
            f"Riemann-Hurwitz failed: excess {cd.total_excess()} != {2 * f.degree - 2}")
    return cd


def exact_roots(p: Poly) -> list[tuple[object, int]]:
    """Gaussian-rational roots with multiplicity; raises if any root is not Gaussian rational."""
    if p.is_zero or p.degree() <= 0:
        return []
    out = []
    _, factors = p.factor_list()
    for fac, mult in factors:
        if fac.degree() != 1:
            raise ValueError("roots are not Gaussian rational; use floating mode")
        c1, c0 = fac.all_coeffs()
        out.append((QQ_I.convert(-c0 / c1), mult))
    return out


# -- postcritical orbits -----------------------------------------------------

@dataclass
class OrbitGraph:
    """The map restricted to critical and postcritical points.

    ``image[i]`` is the node index of ``f(points[i])``.
    """
    points: list[SpherePoint]
    image: list[int]
    local_degree: list[int]
    critical: list[int]
    postcritical: list[int]
    finite: bool = True
    reason: str = ""

    def cycles(self) -> list[list[int]]:
        seen: dict[int, int] = {}
        out = []
        for s in range(len(self.points)):
            path = []
            x = s
            while x not in seen:
                seen[x] = s
                path.append(x)
                x = self.image[x]
            if seen[x] == s:
                out.append(path[path.index(x):])
        return out

    def postcritical_points(self) -> list[SpherePoint]:
        return [self.points[i] for i in self.postcritical]


def postcritical_set(f: RationalMap, max_orbit: int = 64, tol: float = 1e-9,
                     crit: CriticalData | None = None) -> OrbitGraph:
    """Forward orbits of the critical points until they close up.

    Returns a graph with ``finite=False`` when some orbit is longer than
    ``max_orbit`` (or, in exact mode, when point heights explode).
    """
    crit = crit or critical_points(f)
    points: list[SpherePoint] = []
    degree: list[int] = []
    image: dict[int, int] = {}
    index: dict[SpherePoint, int] = {}

    def find(p: SpherePoint) -> int | None:
        if f.exact:
            return index.get(p)
        v = p.to_vector()
        for i, q in enumerate(points):
            if sphere.distance(v, q.to_vector()) < tol:
                return i
        return None

    def add(p: SpherePoint, deg: int) -> int:
        points.append(p)
        degree.append(deg)
        if f.exact:
            index[p] = len(points) - 1
        return len(points) - 1

    critical = [add(p, m) for p, m in crit.points]
    frontier = list(critical)
    steps = 0
    while frontier:
        steps += 1
        new = []
        for i in frontier:
            q = evaluate(f, points[i])
            j = find(q)
            if j is None:
                if f.exact and q.height() > _HEIGHT_LIMIT:
                    return _unfinished(points, image, degree, critical, "orbit height exceeded")
                j = add(q, 1)
                new.append(j)
            image[i] = j
        frontier = new
        if frontier and steps > max_orbit:
            return _unfinished(points, image, degree, critical, f"orbit longer than {max_orbit}")
    img = [image[i] for i in range(len(points))]
    post = set()
    for c in critical:
        x = img[c]
        while x not in post:
            post.add(x)
            x = img[x]
    g = OrbitGraph(points, img, degree, critical, sorted(post, key=lambda i: points[i].sort_key()))
    if not f.exact:
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                if points[i].distance(points[j]) < 100 * tol:
                    raise ArithmeticError("postcritical points too close for floating mode; use exact mode")
    return g


def _unfinished(points, image, degree, critical, reason) -> OrbitGraph:
    img = [image.get(i, i) for i in range(len(points))]
    return OrbitGraph(points, img, degree, critical, [], finite=False, reason=reason)


def has_periodic_critical_point(g: OrbitGraph) -> tuple[bool, list[int]]:
    """Whether some cycle of the orbit graph contains a critical point, with that cycle."""
    if not g.finite:
        raise ValueError("postcritical set not finite")
    for cyc in g.cycles():
        if any(g.local_degree[i] > 1 for i in cyc):
            return True, cyc
    return False, []


# -- orbifold ----------------------------------------------------------------

EUCLIDEAN_SIGNATURES = {
    (INF, INF), (2, 2, INF), (2, 3, 6), (2, 4, 4), (3, 3, 3), (2, 2, 2, 2),
}


def _lcm(a, b):
    if a == INF or b == INF:
        return INF
    return math.lcm(a, b)


def _mul(a, b):
    return INF if INF in (a, b) else a * b


def _divides(a, b) -> bool:
    if b == INF:
        return True
    if a == INF:
        return False
    return b % a == 0


@dataclass
class OrbifoldData:
    points: list[SpherePoint]
    nu: list  # int or INF, aligned with points
    chi: Fraction
    signature: tuple
    klass: str
    graph: OrbitGraph = field(repr=False)
    node_nu: list = field(repr=False, default_factory=list)


def nu_fixed_point(g: OrbitGraph, start: list | None = None) -> list:
    """Ramification values on every node of the orbit graph (1 off the postcritical set)."""
    n = len(g.points)
    post = set(g.postcritical)
    nu = list(start) if start is not None else [1] * n
    for cyc in g.cycles():
        if reduce(lambda a, b: a * b, (g.local_degree[i] for i in cyc), 1) > 1:
            for i in cyc:
                nu[i] = INF
    preimages: dict[int, list[int]] = {j: [] for j in range(n)}
    for i in range(n):
        preimages[g.image[i]].append(i)
    changed = True
    while changed:
        changed = False
        for j in post:
            val = nu[j]
            for i in preimages[j]:
                val = _lcm(val, _mul(g.local_degree[i], nu[i]))
            if val != nu[j]:
                nu[j] = val
                changed = True
    return nu


def nu_map(f: RationalMap | OrbitGraph, **kw) -> OrbifoldData:
    g = f if isinstance(f, OrbitGraph) else postcritical_set(f, **kw)
    if not g.finite:
        raise ValueError(f"postcritical set not finite: {g.reason}")
    node_nu = nu_fixed_point(g)
    pts = [g.points[i] for i in g.postcritical]
    nu = [node_nu[i] for i in g.postcritical]
    chi = Fraction(2) - sum((Fraction(1) if v == INF else 1 - Fraction(1, v)) for v in nu)
    sig = tuple(sorted(nu))
    if sig in EUCLIDEAN_SIGNATURES:
        klass = "euclidean-listed"
    elif chi < 0:
        klass = "hyperbolic"
    else:
        klass = "other"
    return OrbifoldData(pts, nu, chi, sig, klass, g, node_nu)


def divisibility_violations(g: OrbitGraph, node_nu: list) -> list[str]:
    """Edges x -> f(x) where D(x) * nu(x) does not divide nu(f(x))."""
    bad = []
    for i, j in enumerate(g.image):
        lhs = _mul(g.local_degree[i], node_nu[i])
        if not _divides(lhs, node_nu[j]):
            bad.append(f"{g.points[i]} -> {g.points[j]}: {lhs} does not divide {node_nu[j]}")
    return bad


def format_nu(v) -> str:
    return "inf" if v == INF else str(v)
