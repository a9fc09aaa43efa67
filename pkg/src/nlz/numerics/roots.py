"""Real roots of quartics and bracketed scalar root finding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ..errors import NoBracket, NonQuartic

# eigenvalues closer than this (relative) are tested as one multiple root
_CLUSTER_TOL = 1e-4
# |p(x)| / sum|c_k x^k| below this accepts a cluster centroid as a multiple root
_MULTIPLE_RESIDUAL = 1e-13
TOL_RESIDUAL = 1e-10


@dataclass(frozen=True)
class RealRoots:
    """Distinct real roots in ascending order with their multiplicities."""

    roots: tuple[float, ...]
    multiplicities: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.roots)

    @property
    def count(self) -> int:
        """Number of real roots counted with multiplicity."""
        return sum(self.multiplicities)

    def expanded(self) -> list[float]:
        out: list[float] = []
        for r, m in zip(self.roots, self.multiplicities):
            out.extend([r] * m)
        return out


def _horner(c: np.ndarray, x: float) -> float:
    acc = 0.0
    for ck in c:
        acc = acc * x + ck
    return acc


def _abs_scale(c: np.ndarray, x: float) -> float:
    ax = abs(x)
    acc = 0.0
    for ck in c:
        acc = acc * ax + abs(ck)
    return acc


def _newton(c: np.ndarray, x: float, iters: int = 8) -> float:
    """Newton polish on polynomial ``c``; keeps the best iterate."""
    dc = np.polyder(c)
    best, fbest = x, abs(_horner(c, x))
    for _ in range(iters):
        d = _horner(dc, x)
        if d == 0.0 or fbest == 0.0:
            break
        x = x - _horner(c, x) / d
        fx = abs(_horner(c, x))
        if not np.isfinite(x):
            break
        if fx < fbest:
            best, fbest = x, fx
        else:
            break
    return best


def real_roots_quartic(
    c4: float, c3: float, c2: float, c1: float, c0: float, tol: float = 1e-9
) -> RealRoots:
    """Real roots of ``c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0``.

    Companion-matrix eigenvalues are grouped into clusters; a cluster whose
    centroid is real and annihilates the polynomial to rounding level is
    reported as a multiple root (double roots at fold points come out of the
    eigensolver as a pair split by ~1e-8 that may be complex). Remaining
    eigenvalues are real when ``|Im z| <= tol * (1 + |z|)`` and are polished
    with Newton's method.
    """
    if c4 == 0.0:
        raise NonQuartic("leading coefficient is zero; reduce the degree explicitly")
    return _real_roots(np.array([c4, c3, c2, c1, c0], dtype=float), tol)


def real_roots_poly(coeffs, tol: float = 1e-9) -> RealRoots:
    """Real roots of a low-degree polynomial given in descending order.

    Leading zeros are stripped, so callers whose quartic degenerates
    (e.g. ``C = 0``) get the lower-degree answer.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if c.size == 0:
        raise NonQuartic("zero polynomial")
    if c.size == 1:
        return RealRoots((), ())
    return _real_roots(c, tol)


def _real_roots(coeffs: np.ndarray, tol: float) -> RealRoots:
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    coeffs = coeffs / coeffs[0]
    z = np.roots(coeffs)

    # single-linkage clustering of nearby eigenvalues
    n = len(z)
    group = list(range(n))

    def find(i: int) -> int:
        while group[i] != i:
            group[i] = group[group[i]]
            i = group[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= _CLUSTER_TOL * (1.0 + abs(z[i])):
                group[find(i)] = find(j)
    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)

    found: list[tuple[float, int]] = []
    for members in clusters.values():
        zs = z[members]
        if len(members) > 1:
            centroid = complex(np.mean(zs))
            x = centroid.real
            m = len(members)
            if abs(centroid.imag) <= tol * (1.0 + abs(x)) and abs(
                _horner(coeffs, x)
            ) <= _MULTIPLE_RESIDUAL * _abs_scale(coeffs, x):
                deriv = coeffs
                for _ in range(m - 1):
                    deriv = np.polyder(deriv)
                x = _newton(deriv, x, iters=4)
                found.append((x, m))
                continue
        for zi in zs:
            if abs(zi.imag) <= tol * (1.0 + abs(zi)):
                found.append((_newton(coeffs, float(zi.real)), 1))

    found.sort()
    roots: list[float] = []
    mult: list[int] = []
    for x, m in found:
        if roots and x == roots[-1]:
            mult[-1] += m
        else:
            roots.append(float(x))
            mult.append(m)
    return RealRoots(tuple(roots), tuple(mult))


def find_root_scalar(
    g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12
) -> float:
    """Root of ``g`` inside ``[lo, hi]`` by Brent's safeguarded bisection/secant."""
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if (glo > 0.0) == (ghi > 0.0):
        raise NoBracket(f"g({lo})={glo:g} and g({hi})={ghi:g} have the same sign")
    x = brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return min(max(x, min(lo, hi)), max(lo, hi))
