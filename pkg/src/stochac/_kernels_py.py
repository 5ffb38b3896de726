"""Pure numpy implementations of the hot element kernels.

Signatures mirror the compiled ``_kernels`` module exactly; ``kernels``
picks one at import time.
"""
import numpy as np


def _values_at_points(u, triangles, bary):
    # (nt, q) values of the P1 field at the rule points of each element
    return u[triangles] @ bary.T


def nonlinear_load(u, triangles, areas, bary, weights, out):
    """out[i] = sum over elements of int (u_h)^3 psi_i, accumulated in place."""
    uq = _values_at_points(u, triangles, bary)
    f = (uq * uq * uq) * weights  # (nt, q)
    local = (f @ bary) * areas[:, None]  # (nt, 3)
    out[:] = np.bincount(triangles.ravel(), weights=local.ravel(), minlength=out.shape[0])
    return out


def cubic_jacobian_values(u, triangles, areas, bary, weights):
    """Element matrices int 3 u_h^2 psi_j psi_i, shape (nt, 3, 3)."""
    uq = _values_at_points(u, triangles, bary)
    f = 3.0 * uq * uq * weights * areas[:, None]
    return np.einsum("tq,qi,qj->tij", f, bary, bary)


def power_integrals(u, triangles, areas, bary, weights):
    """Return (int u_h^2, int u_h^4) over the mesh."""
    uq = _values_at_points(u, triangles, bary)
    u2 = uq * uq
    s2 = float(np.sum((u2 @ weights) * areas))
    s4 = float(np.sum(((u2 * u2) @ weights) * areas))
    return s2, s4
