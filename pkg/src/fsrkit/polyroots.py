"""All roots of a complex polynomial, with multiplicities.

Aberth-Ehrlich simultaneous iteration is the main solver; the companion
matrix eigenvalues from :func:`numpy.roots` are the fallback.
"""
from __future__ import annotations

import math

import numpy as np


def trim(coeffs, rel_tol: float = 0.0) -> np.ndarray:
    """Drop leading coefficients that are zero (or below ``rel_tol`` relative to the largest)."""
    c = np.asarray(coeffs, dtype=complex)
    if c.size == 0:
        return c
    scale = np.max(np.abs(c))
    k = 0
    while k < c.size - 1 and abs(c[k]) <= rel_tol * scale:
        k += 1
    return c[k:]


def aberth(coeffs, tol: float = 1e-15, max_iter: int = 500) -> np.ndarray | None:
    """Simultaneous roots of ``coeffs`` (highest degree first); None if not converged."""
    c = trim(coeffs)
    n = c.size - 1
    if n < 1:
        return np.empty(0, dtype=complex)
    c = c / c[0]
    dc = np.polyder(c)
    absc = np.abs(c)
    # initial guesses on a circle whose radius is the geometric mean of the roots
    r0 = abs(c[-1]) ** (1.0 / n) if c[-1] != 0 else 0.5
    r0 = min(max(r0, 1e-8), 1 + np.max(np.abs(c[1:])))
    z = r0 * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    done = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        # overflow on huge coefficients yields non-finite values, handled by the caller's fallback
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            p = np.polyval(c, z)
            dp = np.polyval(dc, z)
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            w = ratio / (1 - ratio * s)
        w = np.where(np.isfinite(w) & ~done, w, 0.0)
        z = z - w
        # stop when the step is negligible or |p| is at the rounding level of its evaluation
        with np.errstate(invalid="ignore", over="ignore"):
            bound = np.polyval(absc, np.abs(z)) * 4 * n * np.finfo(float).eps
            done |= (np.abs(w) <= tol * np.maximum(1.0, np.abs(z))) | (np.abs(np.polyval(c, z)) <= bound)
        if done.all():
            return z
    return None


def roots(coeffs) -> np.ndarray:
    """All finite roots of the polynomial, leading zeros removed."""
    c = trim(coeffs)
    if c.size <= 1:
        return np.empty(0, dtype=complex)
    z = aberth(c)
    if z is None or not np.all(np.isfinite(z)):
        z = np.roots(c).astype(complex)
    return z


def _scaled_derivatives(c: np.ndarray, z: complex, m: int) -> list[float]:
    """|p^(k)(z)| / k! for k < m, relative to the coefficient scale at |z|."""
    scale = np.sum(np.abs(c) * max(1.0, abs(z)) ** np.arange(c.size - 1, -1, -1))
    out = []
    d = c
    for k in range(m):
        out.append(abs(np.polyval(d, z)) / math.factorial(k) / scale)
        d = np.polyder(d)
    return out


def _polish(c: np.ndarray, z: complex, m: int, steps: int = 50) -> complex:
    """Newton on the (m-1)-th derivative, where an m-fold root is simple."""
    d = c
    for _ in range(m - 1):
        d = np.polyder(d)
    dd = np.polyder(d)
    for _ in range(steps):
        den = np.polyval(dd, z) if dd.size else 0
        if den == 0:
            break
        step = np.polyval(d, z) / den
        z = z - step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return complex(z)


def roots_with_multiplicity(coeffs, cluster_tol: float = 1e-7, merge_tol: float = 1e-3,
                            vanish_tol: float = 1e-9) -> list[tuple[complex, int]]:
    """Distinct roots and multiplicities.

    Roots within ``cluster_tol`` (relative) are grouped.  Groups within
    ``merge_tol`` are merged when the derivatives of orders below the merged
    multiplicity vanish at the refined centre, since an m-fold root only
    resolves to about the m-th root of machine precision.
    """
    c = trim(coeffs)
    zs = sorted(roots(c), key=lambda z: (z.real, z.imag))
    groups = _cluster(zs, cluster_tol)
    merged = True
    while merged and len(groups) > 1:
        merged = False
        best = None
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                gi, gj = groups[i], groups[j]
                ci, cj = np.mean(gi), np.mean(gj)
                dist = abs(ci - cj) / max(1.0, abs(ci))
                if dist < merge_tol and (best is None or dist < best[0]):
                    best = (dist, i, j)
        if best is not None:
            _, i, j = best
            union = groups[i] + groups[j]
            m = len(union)
            centre = _polish(c, complex(np.mean(union)), m)
            if max(_scaled_derivatives(c, centre, m)) < vanish_tol:
                groups = [g for k, g in enumerate(groups) if k not in (i, j)] + [union]
                merged = True
    out = []
    for g in groups:
        m = len(g)
        z = _polish(c, complex(np.mean(g)), m)
        out.append((z, m))
    out.sort(key=lambda t: (round(t[0].real, 9), round(t[0].imag, 9)))
    return out


def _cluster(zs: list[complex], tol: float) -> list[list[complex]]:
    groups: list[list[complex]] = []
    for z in zs:
        for g in groups:
            if any(abs(z - w) <= tol * max(1.0, abs(w)) for w in g):
                g.append(z)
                break
        else:
            groups.append([z])
    return groups
