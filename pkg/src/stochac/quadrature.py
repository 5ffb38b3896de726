"""Quadrature rules on the reference triangle in barycentric form.

Weights are normalized to sum to one; multiply by the element area at use.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (q, 3) barycentric coordinates
    weights: np.ndarray  # (q,)
    degree: int


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    pts = [(a, a, b), (a, b, a), (b, a, a)]
    return pts, [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    pts = sorted(set(permutations((a, b, c))))
    return pts, [w] * 6


def _build(orbits, degree):
    pts, wts = [], []
    for p, w in orbits:
        pts += p
        wts += w
    points = np.array(pts, dtype=float)
    weights = np.array(wts, dtype=float)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, degree)


def _collapsed_gauss(npts):
    """Conical product Gauss rule, exact to degree 2*npts - 1."""
    xg, wg = np.polynomial.legendre.leggauss(npts)
    s = 0.5 * (xg + 1.0)
    ws = 0.5 * wg
    u, v = np.meshgrid(s, s, indexing="ij")
    wu, wv = np.meshgrid(ws, ws, indexing="ij")
    l1 = u.ravel()
    l2 = (v * (1.0 - u)).ravel()
    weights = 2.0 * (wu * wv * (1.0 - u)).ravel()
    points = np.column_stack([1.0 - l1 - l2, l1, l2])
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, 2 * npts - 1)


# Strang-Fix / Dunavant symmetric rules.
_DEG4 = _build(
    [
        _orbit3(0.44594849091596488631832925388305, 0.22338158967801146569500700843312),
        _orbit3(0.091576213509770743459571463402202, 0.10995174365532186763832632490021),
    ],
    4,
)

_DEG6 = _build(
    [
        _orbit3(0.24928674517091042129163855310702, 0.11678627572637936602528961138558),
        _orbit3(0.063089014491502228340331602870819, 0.050844906370206816920936809106869),
        _orbit6(
            0.053145049844816947353249671631398,
            0.31035245103378440541660773395655,
            0.082851075618373575193553456420442,
        ),
    ],
    6,
)

_DEG8 = _collapsed_gauss(5)


def triangle_rule(degree: int) -> QuadratureRule:
    """Smallest rule here that is exact to at least ``degree``."""
    if degree <= 1:
        return _build([([(1 / 3, 1 / 3, 1 / 3)], [1.0])], 1)
    if degree <= 4:
        return _DEG4
    if degree <= 6:
        return _DEG6
    if degree <= 9:
        return _DEG8
    if degree <= 39:
        return _collapsed_gauss((degree + 2) // 2)
    raise InvalidArgument(f"no rule of degree {degree}")


def basis_values(rule: QuadratureRule) -> np.ndarray:
    """P1 basis values at the rule's points: the barycentric coordinates."""
    return rule.points
