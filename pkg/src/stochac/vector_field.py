"""The noise-carrying vector field X(x) = phi(x) (x1 + x2, x1 - x2).

phi is a bump supported in the disc of radius 0.3.  All derived quantities
(gradient, B = X X^T, b = (grad X) X, div B - b = (div X) X) are evaluated in
closed form and vectorized over arrays of points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

RADIUS = 0.3
BUMP_SCALE = 0.001


@dataclass(frozen=True)
class FieldEval:
    """Field data at a stack of points; leading shape matches the input."""

    X: np.ndarray  # (..., 2)
    gradX: np.ndarray  # (..., 2, 2), gradX[..., i, j] = dX_j / dx_i
    B: np.ndarray  # (..., 2, 2)
    b: np.ndarray  # (..., 2)
    divB_minus_b: np.ndarray  # (..., 2)

    @property
    def divX(self) -> np.ndarray:
        return np.trace(self.gradX, axis1=-2, axis2=-1)


class VectorField:
    """Bump-modulated field.

    Parameters
    ----------
    bump_denominator : {"squared_radius", "literal"}
        ``squared_radius`` uses ``0.3**2 - |x|^2`` in the exponent, which is
        smooth with compact support.  ``literal`` uses ``0.09**2 - |x|^2``
        inside ``|x| < 0.3``; it is singular on the circle ``|x| = 0.09``
        and is kept only for comparison.
    scale : float
        Overall multiplier; ``scale=0`` gives the zero field.
    """

    def __init__(self, bump_denominator: str = "squared_radius", scale: float = 1.0):
        if bump_denominator == "squared_radius":
            self._den = RADIUS**2
        elif bump_denominator == "literal":
            self._den = 0.09**2
        else:
            raise InvalidArgument(f"unknown bump_denominator {bump_denominator!r}")
        self.bump_denominator = bump_denominator
        self.scale = float(scale)

    def __repr__(self):
        return f"VectorField(bump_denominator={self.bump_denominator!r}, scale={self.scale})"

    def _bump_and_grad(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        inside = r2 < RADIUS**2
        gap = np.where(inside, self._den - r2, 1.0)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            phi = np.where(inside, np.exp(-BUMP_SCALE / gap), 0.0)
            # d/dx exp(-c/(D - r^2)) = phi * (-2c x) / (D - r^2)^2
            coef = np.where(inside, phi * (-2.0 * BUMP_SCALE) / gap**2, 0.0)
        grad = coef[..., None] * x
        return phi, grad

    def bump(self, x) -> np.ndarray | float:
        phi, _ = self._bump_and_grad(x)
        return phi if np.ndim(phi) else float(phi)

    def eval(self, x) -> FieldEval:
        x = np.asarray(x, dtype=float)
        phi, dphi = self._bump_and_grad(x)
        phi = self.scale * phi
        dphi = self.scale * dphi
        v = np.stack([x[..., 0] + x[..., 1], x[..., 0] - x[..., 1]], axis=-1)
        X = phi[..., None] * v
        dv = np.array([[1.0, 1.0], [1.0, -1.0]])
        gradX = dphi[..., :, None] * v[..., None, :] + phi[..., None, None] * dv
        B = X[..., :, None] * X[..., None, :]
        b = np.einsum("...i,...ij->...j", X, gradX)
        # div v = 0, so div X = grad(phi) . v
        divX = np.einsum("...i,...i->...", dphi, v)
        return FieldEval(X=X, gradX=gradX, B=B, b=b, divB_minus_b=divX[..., None] * X)
