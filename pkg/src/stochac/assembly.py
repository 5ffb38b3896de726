"""Sparse P1 assembly: mass, stiffness, noise-weighted matrices, nonlinear loads."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import SolverError
from .mesh import Mesh
from .quadrature import triangle_rule
from .vector_field import VectorField

# Quadrature degrees.  The coefficient matrices see X, whose derivative has a
# sharp ridge just inside |x| = 0.3, so they get the degree-8 rule.
COEFF_DEGREE = 8
NONLINEAR_DEGREE = 4
LOAD_DEGREE = 6

_REF_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    """Sum (nt, 3, 3) element matrices into a CSR matrix with sorted indices."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    nv = mesh.num_vertices
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def element_mass(area: float) -> np.ndarray:
    return area * _REF_MASS


def element_stiffness(area: float, grads: np.ndarray) -> np.ndarray:
    return area * grads @ grads.T


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    local = mesh.areas[:, None, None] * _REF_MASS[None]
    return _scatter(mesh, local)


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    g = mesh.grads
    local = mesh.areas[:, None, None] * np.einsum("tid,tjd->tij", g, g)
    return _scatter(mesh, local)


def _field_at_quadrature(mesh: Mesh, field: VectorField, degree: int):
    rule = triangle_rule(degree)
    xq = mesh.barycentric_to_physical(rule.points)  # (nt, q, 2)
    wq = mesh.areas[:, None] * rule.weights[None, :]  # (nt, q)
    return rule, field.eval(xq), wq


def assemble_AX(mesh: Mesh, field: VectorField, degree: int = COEFF_DEGREE) -> sp.csr_matrix:
    """(A_X)_ij = (grad psi_j . X, grad psi_i . X)."""
    _, fe, wq = _field_at_quadrature(mesh, field, degree)
    gx = np.einsum("tid,tqd->tqi", mesh.grads, fe.X)  # grad psi_i . X at points
    local = np.einsum("tq,tqi,tqj->tij", wq, gx, gx)
    return _scatter(mesh, local)


def assemble_C1(mesh: Mesh, field: VectorField, degree: int = COEFF_DEGREE) -> sp.csr_matrix:
    """(C1)_ij = ((div B - b) . grad psi_j, psi_i); nonsymmetric."""
    rule, fe, wq = _field_at_quadrature(mesh, field, degree)
    cj = np.einsum("tjd,tqd->tqj", mesh.grads, fe.divB_minus_b)
    local = np.einsum("tq,qi,tqj->tij", wq, rule.points, cj)
    return _scatter(mesh, local)


def assemble_C2(mesh: Mesh, field: VectorField, degree: int = COEFF_DEGREE) -> sp.csr_matrix:
    """(C2)_ij = (grad psi_j . X, psi_i), so that C2 u represents (grad u_h . X, psi_i)."""
    rule, fe, wq = _field_at_quadrature(mesh, field, degree)
    cj = np.einsum("tjd,tqd->tqj", mesh.grads, fe.X)
    local = np.einsum("tq,qi,tqj->tij", wq, rule.points, cj)
    return _scatter(mesh, local)


class NonlinearOperator:
    """N(u)_i = int u_h^3 psi_i and its Jacobian, via the degree-4 rule.

    Holds contiguous copies of the connectivity so the kernels can be called
    in a tight loop without conversions.
    """

    def __init__(self, mesh: Mesh, backend=None):
        rule = triangle_rule(NONLINEAR_DEGREE)
        self.mesh = mesh
        self._tri = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
        self._areas = np.ascontiguousarray(mesh.areas, dtype=float)
        self._bary = np.ascontiguousarray(rule.points)
        self._w = np.ascontiguousarray(rule.weights)
        self._k = kernels if backend is None else kernels.get_backend(backend)
        self._jac_pattern = None

    def __call__(self, u, out=None):
        if out is None:
            out = np.empty(self.mesh.num_vertices)
        u = np.ascontiguousarray(u, dtype=float)
        return self._k.nonlinear_load(u, self._tri, self._areas, self._bary, self._w, out)

    def jacobian(self, u) -> sp.csr_matrix:
        """Matrix of int 3 u_h^2 psi_j psi_i."""
        u = np.ascontiguousarray(u, dtype=float)
        local = self._k.cubic_jacobian_values(u, self._tri, self._areas, self._bary, self._w)
        return _scatter(self.mesh, local)

    def power_integrals(self, u):
        u = np.ascontiguousarray(u, dtype=float)
        return self._k.power_integrals(u, self._tri, self._areas, self._bary, self._w)


def assemble_nonlinear(mesh: Mesh, u) -> np.ndarray:
    return NonlinearOperator(mesh)(u)


def assemble_load(mesh: Mesh, f, degree: int = LOAD_DEGREE) -> np.ndarray:
    """load_i = int f psi_i for a vectorized ``f(x, y)``."""
    rule = triangle_rule(degree)
    xq = mesh.barycentric_to_physical(rule.points)
    fq = np.asarray(f(xq[..., 0], xq[..., 1]), dtype=float)
    fq = np.broadcast_to(fq, xq.shape[:2])
    local = ((fq * rule.weights) @ rule.points) * mesh.areas[:, None]
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.num_vertices)


def l2_project(mesh: Mesh, f, mass: sp.csr_matrix | None = None, degree: int = LOAD_DEGREE) -> np.ndarray:
    """Coefficients c of the L2 projection: M c = (f, psi_i)."""
    if mass is None:
        mass = assemble_mass(mesh)
    load = assemble_load(mesh, f, degree)
    c = spla.spsolve(mass.tocsc(), load)
    scale = max(np.abs(load).max(), np.finfo(float).tiny)
    if not np.all(np.isfinite(c)) or np.abs(mass @ c - load).max() > 1e-10 * scale:
        raise SolverError("L2 projection solve failed")
    return c


@dataclass(frozen=True)
class SystemMatrices:
    """The five matrices of the discrete scheme; immutable and shareable."""

    M: sp.csr_matrix
    A: sp.csr_matrix
    AX: sp.csr_matrix
    C1: sp.csr_matrix
    C2: sp.csr_matrix

    def items(self):
        return [("M", self.M), ("A", self.A), ("AX", self.AX), ("C1", self.C1), ("C2", self.C2)]


def assemble_system(mesh: Mesh, field: VectorField, degree: int = COEFF_DEGREE) -> SystemMatrices:
    return SystemMatrices(
        M=assemble_mass(mesh),
        A=assemble_stiffness(mesh),
        AX=assemble_AX(mesh, field, degree),
        C1=assemble_C1(mesh, field, degree),
        C2=assemble_C2(mesh, field, degree),
    )
