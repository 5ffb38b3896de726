"""Diagnostics of discrete fields: norms, the Allen-Cahn energy, zero-level
sets, interface radius and time-increment (Holder) estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import NonlinearOperator, assemble_mass, assemble_stiffness
from .errors import InvalidArgument
from .mesh import Mesh


def l2_norm(u, M) -> float:
    """sqrt(u^T M u)."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(max(u @ (M @ u), 0.0)))


def h1_semi(u, A) -> float:
    """sqrt(u^T A u)."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(max(u @ (A @ u), 0.0)))


class EnergyFunctional:
    """J(u) = 1/2 |grad u_h|^2 + eps^-2 F(u_h), F(v) = (v^2 - 1)^2 / 4.

    The potential is integrated with the degree-4 rule, exact for P1 fields.
    """

    def __init__(self, mesh: Mesh, stiffness=None, nonlinear: NonlinearOperator | None = None):
        self.mesh = mesh
        self.A = stiffness if stiffness is not None else assemble_stiffness(mesh)
        self.nonlinear = nonlinear if nonlinear is not None else NonlinearOperator(mesh)
        self.area = float(mesh.areas.sum())

    def potential(self, u) -> float:
        s2, s4 = self.nonlinear.power_integrals(u)
        # (v^2 - 1)^2 expanded; clip tiny negative rounding
        return max(0.25 * (s4 - 2.0 * s2 + self.area), 0.0)

    def __call__(self, u, epsilon: float) -> float:
        if not epsilon > 0:
            raise InvalidArgument("epsilon must be positive")
        u = np.asarray(u, dtype=float)
        grad = 0.5 * max(u @ (self.A @ u), 0.0)
        return float(grad + self.potential(u) / epsilon**2)


def energy(u, mesh: Mesh, epsilon: float, functional: EnergyFunctional | None = None) -> float:
    """Discrete Allen-Cahn energy of the nodal field ``u``.

    Pass a prebuilt :class:`EnergyFunctional` to avoid reassembling the
    stiffness matrix in loops.
    """
    if functional is None:
        functional = EnergyFunctional(mesh)
    return functional(u, epsilon)


# -- level sets ----------------------------------------------------------------


@dataclass(frozen=True)
class LevelSetPolyline:
    points: np.ndarray  # (k, 2)
    closed: bool

    def __len__(self):
        return self.points.shape[0]


def level_set(u, mesh: Mesh, level: float = 0.0) -> list:
    """Polylines of {u_h = level} by marching triangles.

    Vertex values equal to ``level`` are nudged up by 1e-14 * max|u| so every
    crossing lies strictly inside an edge.  Crossing points are keyed by the
    edge they lie on, which stitches neighbouring segments exactly.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.num_vertices,):
        raise InvalidArgument("field size does not match the mesh")
    if not np.all(np.isfinite(u)):
        raise InvalidArgument("field must be finite")
    v = u - level
    scale = np.abs(u).max() if u.size else 0.0
    bump = 1e-14 * scale if scale > 0 else 1e-300
    v = np.where(v == 0.0, bump, v)
    pos = v > 0
    tri = mesh.triangles
    p = pos[tri]
    cut = p.any(axis=1) & ~p.all(axis=1)
    if not cut.any():
        return []

    # for each cut triangle, the two local edges with a sign change
    local_edges = ((0, 1), (1, 2), (2, 0))
    adjacency: dict = {}
    point_of: dict = {}
    for t in np.flatnonzero(cut):
        verts = tri[t]
        keys = []
        for i, j in local_edges:
            a, b = verts[i], verts[j]
            if pos[a] != pos[b]:
                key = (a, b) if a < b else (b, a)
                if key not in point_of:
                    va, vb = v[key[0]], v[key[1]]
                    s = va / (va - vb)
                    point_of[key] = (1.0 - s) * mesh.points[key[0]] + s * mesh.points[key[1]]
                keys.append(key)
        k0, k1 = keys
        adjacency.setdefault(k0, []).append(k1)
        adjacency.setdefault(k1, []).append(k0)

    visited = set()
    lines = []

    def walk(start):
        chain = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adjacency[cur] if k != prev and k not in visited]
            if not nxt:
                return chain
            prev, cur = cur, nxt[0]
            visited.add(cur)
            chain.append(cur)

    # open chains start at boundary edges (one neighbouring segment)
    for key in sorted(adjacency):
        if len(adjacency[key]) == 1 and key not in visited:
            lines.append((walk(key), False))
    for key in sorted(adjacency):
        if key not in visited:
            chain = walk(key)
            lines.append((chain, len(chain) > 2 and chain[0] in adjacency[chain[-1]]))

    out = []
    for chain, closed in lines:
        pts = np.array([point_of[k] for k in chain])
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(np.abs(np.diff(pts, axis=0)) > 1e-12, axis=1)
        pts = pts[keep]
        if closed and len(pts) > 1 and np.all(np.abs(pts[0] - pts[-1]) <= 1e-12):
            pts = pts[:-1]
        out.append(LevelSetPolyline(points=pts, closed=closed))
    return out


def interface_radius(poly: LevelSetPolyline) -> float:
    """Mean distance of the polyline's points to their centroid."""
    if not poly.closed:
        raise InvalidArgument("interface radius needs a closed polyline")
    pts = np.asarray(poly.points, dtype=float)
    if pts.shape[0] == 0:
        raise InvalidArgument("empty polyline")
    c = pts.mean(axis=0)
    return float(np.hypot(*(pts - c).T).mean())


# -- time increments ---------------------------------------------------------------


@dataclass(frozen=True)
class HolderEstimate:
    lags: np.ndarray  # t - s
    l2: np.ndarray  # E ||u(t) - u(s)||^2_L2
    h1: np.ndarray  # E ||grad(u(t) - u(s))||^2_L2
    slope_l2: float
    slope_h1: float
    nonlinear: np.ndarray | None = None  # E ||f(u(t)) - f(u(s))||^2_L2, f(v) = v^3 - v
    slope_nonlinear: float | None = None


def _loglog_slope(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def holder_estimator(trajectories, lags, dt: float, mesh: Mesh | None = None, M=None, A=None,
                     nonlinear: bool = False) -> HolderEstimate:
    """Monte Carlo mean squared increments against the lag, and log-log slopes.

    Parameters
    ----------
    trajectories : array (samples, times, vertices)
        States on a uniform time grid of spacing ``dt``.
    lags : sequence of int
        Lags in grid steps.  Increments are averaged over samples and over
        every start index.
    dt : float
        Grid spacing, used to report lags as time differences.
    mesh, M, A :
        The mass and stiffness matrices, or a mesh to assemble them from.
    nonlinear : bool
        Also estimate E||f(u(t)) - f(u(s))||^2 with f(v) = v^3 - v.
    """
    U = np.asarray(trajectories, dtype=float)
    if U.ndim == 2:
        U = U[None]
    lags = [int(k) for k in lags]
    if len(lags) < 2:
        raise InvalidArgument("need at least two lags")
    if any(k < 0 or k >= U.shape[1] for k in lags):
        raise InvalidArgument("lags must lie in [0, number of times)")
    if M is None or A is None:
        if mesh is None:
            raise InvalidArgument("pass a mesh or both M and A")
        M = assemble_mass(mesh) if M is None else M
        A = assemble_stiffness(mesh) if A is None else A

    def mean_sq(X, mat, k):
        if k == 0:
            return 0.0
        d = (X[:, k:, :] - X[:, :-k, :]).reshape(-1, X.shape[2])
        return float(np.einsum("ij,ij->i", d, (mat @ d.T).T).mean())

    l2 = np.array([mean_sq(U, M, k) for k in lags])
    h1 = np.array([mean_sq(U, A, k) for k in lags])
    t = np.array(lags, dtype=float) * dt
    est = dict(lags=t, l2=np.maximum(l2, 0.0), h1=np.maximum(h1, 0.0),
               slope_l2=_loglog_slope(t, l2), slope_h1=_loglog_slope(t, h1))
    if nonlinear:
        F = U**3 - U
        nl = np.maximum(np.array([mean_sq(F, M, k) for k in lags]), 0.0)
        est.update(nonlinear=nl, slope_nonlinear=_loglog_slope(t, nl))
    return HolderEstimate(**est)
