"""Structured P1 triangulations of the square [-0.5, 0.5]^2."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, InvalidArgument

LOWER = -0.5
UPPER = 0.5


@dataclass(frozen=True)
class Mesh:
    """Immutable conforming triangulation.

    Attributes
    ----------
    points : (nv, 2) float array
        Vertex coordinates, numbered row-major (by y, then x).
    triangles : (nt, 3) int array
        Counterclockwise vertex ids.
    n : int
        Subdivisions per side.
    h : float
        Maximum element diameter.
    """

    points: np.ndarray
    triangles: np.ndarray
    n: int
    h: float
    _geom: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_vertices(self) -> int:
        return self.points.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def areas(self) -> np.ndarray:
        if "areas" not in self._geom:
            self._compute_geometry()
        return self._geom["areas"]

    @property
    def grads(self) -> np.ndarray:
        """(nt, 3, 2) constant gradients of the barycentric basis functions."""
        if "grads" not in self._geom:
            self._compute_geometry()
        return self._geom["grads"]

    def _compute_geometry(self):
        areas, grads = _geometry(self.points[self.triangles])
        if np.any(areas <= 1e-14):
            bad = int(np.argmin(areas))
            raise GeometryError(f"degenerate triangle {bad} (area {areas[bad]:.3e})")
        areas.setflags(write=False)
        grads.setflags(write=False)
        self._geom["areas"] = areas
        self._geom["grads"] = grads

    def barycentric_to_physical(self, bary: np.ndarray) -> np.ndarray:
        """Map barycentric points (q, 3) onto every element -> (nt, q, 2)."""
        corners = self.points[self.triangles]
        return np.einsum("qk,tkd->tqd", bary, corners)

    def interpolate(self, f) -> np.ndarray:
        """Nodal interpolant of a vectorized ``f(x, y)``."""
        return np.asarray(f(self.points[:, 0], self.points[:, 1]), dtype=float)


def _geometry(corners: np.ndarray):
    """Areas and basis gradients for stacked triangles of shape (nt, 3, 2)."""
    p0, p1, p2 = corners[:, 0], corners[:, 1], corners[:, 2]
    e1 = p1 - p0
    e2 = p2 - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    areas = 0.5 * det
    # rows of inv(J)^T give grad(lambda_1), grad(lambda_2)
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
        g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
        g0 = -g1 - g2
    return areas, np.stack([g0, g1, g2], axis=1)


def generate_uniform(n: int) -> Mesh:
    """Uniform n-by-n grid, each square cut along its lower-left/upper-right diagonal."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    n = int(n)
    coords = np.linspace(LOWER, UPPER, n + 1)
    xx, yy = np.meshgrid(coords, coords)
    points = np.column_stack([xx.ravel(), yy.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ll = (j * (n + 1) + i).ravel()
    lr = ll + 1
    ul = ll + n + 1
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    points.setflags(write=False)
    triangles.setflags(write=False)
    return Mesh(points=points, triangles=triangles, n=n, h=float(np.sqrt(2.0) / n))


def element_geometry(mesh: Mesh, t: int):
    """Area and the three barycentric gradients of triangle ``t``."""
    if not 0 <= t < mesh.num_triangles:
        raise InvalidArgument(f"triangle id {t} out of range")
    areas, grads = _geometry(mesh.points[mesh.triangles[t]][None])
    if areas[0] <= 1e-14:
        raise GeometryError(f"degenerate triangle {t} (area {areas[0]:.3e})")
    return float(areas[0]), grads[0]


def triangle_geometry(corners) -> tuple[float, np.ndarray]:
    """Same as :func:`element_geometry` for an explicit (3, 2) corner array."""
    areas, grads = _geometry(np.asarray(corners, dtype=float)[None])
    if areas[0] <= 1e-14:
        raise GeometryError(f"degenerate triangle (area {areas[0]:.3e})")
    return float(areas[0]), grads[0]


def edges(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Unique undirected edges and how many triangles share each."""
    tri = mesh.triangles
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    return uniq, counts


def write_off(mesh: Mesh, path) -> None:
    """Debug dump: counts line, coordinates, then connectivity."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.num_vertices} {mesh.num_triangles} 0\n")
        for x, y in mesh.points:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")
