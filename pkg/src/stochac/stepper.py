"""One-step maps for the fully discrete stochastic Allen-Cahn schemes.

Per step we solve, for the coefficient vector u of u_h^{n+1},

    K u + a Nterm(u) = RHS(u_n, dW),        a = tau / eps^2,

with K = M + tau (A + delta^2/2 A_X) (plus tau delta^2/2 C1 when the
convection term is taken implicitly).  For the convex-splitting nonlinearity
Nterm(u) = N(u) and RHS carries (1 + a) M u_n; for the fully implicit one
Nterm(u) = N(u) - M u and RHS carries M u_n.

The default solver is a fixed-point iteration on a single matrix that is
factored once and reused for every step and every Monte Carlo sample.  The
iteration is shifted by ``stabilization`` times a M on both sides, which
leaves the solution unchanged but keeps the map contractive when
3 tau / eps^2 > 1.  Newton's method is available for cross-checks.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import NonlinearOperator, SystemMatrices, assemble_system
from .errors import DivergenceError, InvalidArgument, NonconvergenceError, SolverError
from .mesh import Mesh
from .noise import BrownianPath, macro_increments
from .vector_field import VectorField

DIVERGENCE_THRESHOLD = 1e6


class Nonlinearity(str, Enum):
    FULLY_IMPLICIT = "fully_implicit"
    CONVEX_SPLITTING = "convex_splitting"


class Convection(str, Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class SolverConfig:
    kind: str = "fixed_point"
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if self.kind not in ("fixed_point", "newton"):
            raise InvalidArgument(f"unknown solver {self.kind!r}")
        if not self.tol > 0:
            raise InvalidArgument("solver tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidArgument("solver max_iter must be an integer >= 1")


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of one time-stepping scheme.

    ``stabilization=None`` picks the shift automatically (1.5 for convex
    splitting, 0.5 for fully implicit: the midpoints of the slope ranges of
    Nterm on [-1, 1]).  ``stabilization=0`` is the plain, unshifted iteration.
    """

    epsilon: float
    delta: float
    tau: float
    nonlinearity: Nonlinearity = Nonlinearity.CONVEX_SPLITTING
    convection: Convection = Convection.EXPLICIT
    solver: SolverConfig = field(default_factory=SolverConfig)
    stabilization: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "nonlinearity", Nonlinearity(self.nonlinearity))
        object.__setattr__(self, "convection", Convection(self.convection))
        if not self.epsilon > 0:
            raise InvalidArgument("epsilon must be positive")
        if not self.delta >= 0:
            raise InvalidArgument("delta must be non-negative")
        if not self.tau > 0:
            raise InvalidArgument("tau must be positive")
        if self.stabilization is not None and self.stabilization < 0:
            raise InvalidArgument("stabilization must be non-negative")
        if self.nonlinearity is Nonlinearity.FULLY_IMPLICIT:
            if self.tau > self.epsilon**2 * (1 + 1e-12):
                raise InvalidArgument(
                    f"fully implicit scheme needs tau <= eps^2 (tau={self.tau}, eps^2={self.epsilon**2})"
                )
            limit = 1.0 / (self.epsilon**-2 + self.delta**4)
        else:
            limit = 1.0 / (1.0 + self.delta**4)
        if self.tau > limit:
            warnings.warn(
                f"tau={self.tau} exceeds the step restriction {limit:.4g} under which "
                "the strong error estimate is proved",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def ratio(self) -> float:
        """tau / eps^2."""
        return self.tau / self.epsilon**2

    @property
    def shift(self) -> float:
        if self.stabilization is not None:
            return float(self.stabilization)
        return 1.5 if self.nonlinearity is Nonlinearity.CONVEX_SPLITTING else 0.5

    def replace(self, **changes) -> "SchemeConfig":
        from dataclasses import replace

        return replace(self, **changes)


class Factorization:
    """Factor once, solve many times.

    Symmetric positive definite matrices get a banded Cholesky factor while
    the bandwidth is small (the lexicographic vertex numbering keeps it at
    n + 2); wider SPD matrices and nonsymmetric ones go to SuperLU, with a
    symmetric minimum-degree ordering in the SPD case.
    """

    BANDED_LIMIT = 160

    def __init__(self, K: sp.spmatrix, symmetric: bool, method: str = "auto"):
        self.symmetric = symmetric
        self.n = K.shape[0]
        coo = sp.tril(K).tocoo()
        kd = int((coo.row - coo.col).max()) if coo.nnz else 0
        if method == "auto":
            method = "cholesky" if symmetric and kd <= self.BANDED_LIMIT else "lu"
        if method == "cholesky":
            if not symmetric:
                raise InvalidArgument("Cholesky needs a symmetric matrix")
            ab = np.zeros((kd + 1, self.n))
            ab[coo.row - coo.col, coo.col] = coo.data
            try:
                self._cb = sla.cholesky_banded(ab, lower=True, check_finite=False)
            except sla.LinAlgError as exc:
                raise SolverError(f"Cholesky factorization failed: {exc}") from exc
        elif method == "lu":
            opts = {"permc_spec": "MMD_AT_PLUS_A", "options": {"SymmetricMode": True}} if symmetric else {"permc_spec": "COLAMD"}
            try:
                self._lu = spla.splu(sp.csc_matrix(K), **opts)
            except RuntimeError as exc:
                raise SolverError(f"LU factorization failed: {exc}") from exc
            if symmetric and np.any(self._lu.U.diagonal() <= 0):
                raise SolverError("matrix is not positive definite")
        else:
            raise InvalidArgument(f"unknown factorization method {method!r}")
        self.kind = method

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.kind == "cholesky":
            return sla.cho_solve_banded((self._cb, True), b, check_finite=False)
        return self._lu.solve(b)


class StepWorkspace:
    """Matrices and the factored iteration operator for one (mesh, config).

    Immutable after construction; :meth:`step` allocates its own scratch so a
    workspace can be shared by several samples.
    """

    def __init__(self, mesh: Mesh, config: SchemeConfig, system: SystemMatrices | None = None,
                 field: VectorField | None = None, nonlinear: NonlinearOperator | None = None):
        if system is None:
            system = assemble_system(mesh, field if field is not None else VectorField())
        self.mesh = mesh
        self.config = config
        self.system = system
        self.nonlinear = nonlinear if nonlinear is not None else NonlinearOperator(mesh)

        cfg = config
        M, A, AX, C1, C2 = system.M, system.A, system.AX, system.C1, system.C2
        a = cfg.ratio
        half = 0.5 * cfg.delta**2
        K = M + cfg.tau * (A + half * AX)
        implicit = cfg.convection is Convection.IMPLICIT
        if implicit:
            K = K + cfg.tau * half * C1
        K = sp.csr_matrix(K)
        K.sort_indices()
        self.K = K

        fully_implicit = cfg.nonlinearity is Nonlinearity.FULLY_IMPLICIT
        rhs = M * (1.0 if fully_implicit else 1.0 + a)
        if not implicit:
            rhs = rhs - cfg.tau * half * C1
        self.rhs_op = sp.csr_matrix(rhs)
        self.noise_op = sp.csr_matrix(cfg.delta * C2)
        self.M = M

        self.sigma = cfg.shift
        # shift on Nterm's linear part: FI has Nterm = N - M u
        self._mshift = self.sigma + (1.0 if fully_implicit else 0.0)
        self._fully_implicit = fully_implicit
        K_iter = sp.csr_matrix(K + (self.sigma * a) * M)
        self.factorization = Factorization(K_iter, symmetric=not implicit)

    # -- pieces of the discrete equation ----------------------------------

    def rhs(self, u_n: np.ndarray, dW: float) -> np.ndarray:
        out = self.rhs_op @ u_n
        if dW != 0.0 and self.config.delta != 0.0:
            out += dW * (self.noise_op @ u_n)
        return out

    def nterm(self, u: np.ndarray, Nu: np.ndarray | None = None) -> np.ndarray:
        if Nu is None:
            Nu = self.nonlinear(u)
        if self._fully_implicit:
            return Nu - self.M @ u
        return Nu

    def equation_residual(self, u: np.ndarray, rhs: np.ndarray, Nu: np.ndarray | None = None) -> np.ndarray:
        return self.K @ u + self.config.ratio * self.nterm(u, Nu) - rhs

    # -- solvers -----------------------------------------------------------

    def step(self, u_n: np.ndarray, dW: float) -> tuple[np.ndarray, int]:
        u_n = np.asarray(u_n, dtype=float)
        rhs = self.rhs(u_n, dW)
        if self.config.solver.kind == "newton":
            return self._newton(u_n, rhs)
        return self._fixed_point(u_n, rhs)

    def _scaled(self, r: np.ndarray, rhs: np.ndarray) -> float:
        scale = np.abs(rhs).max()
        res = np.abs(r).max()
        if scale == 0.0:
            return float(res)
        return float(res / scale)

    def _fixed_point(self, u_n, rhs):
        cfg = self.config
        tol, max_iter = cfg.solver.tol, cfg.solver.max_iter
        a = cfg.ratio
        solve = self.factorization.solve
        M = self.M
        u = u_n.copy()
        Nu = self.nonlinear(u)
        res = np.inf
        for k in range(1, max_iter + 1):
            b = rhs - a * Nu
            if self._mshift != 0.0:
                b += (a * self._mshift) * (M @ u)
            u_new = solve(b)
            size = np.abs(u_new).max()
            if not np.isfinite(size) or size > DIVERGENCE_THRESHOLD:
                raise DivergenceError(
                    f"fixed-point iterate exceeded {DIVERGENCE_THRESHOLD:g} after {k} iterations; "
                    "check tau <= eps^2 (fully implicit) and the step restriction",
                    iterate=u_new,
                    iterations=k,
                )
            inc = np.abs(u_new - u).max()
            u = u_new
            Nu = self.nonlinear(u)
            if inc <= tol:
                res = self._scaled(self.equation_residual(u, rhs, Nu), rhs)
                if res <= 10.0 * tol:
                    return u, k
        raise NonconvergenceError(
            f"fixed-point iteration did not converge in {max_iter} iterations "
            f"(last increment {inc:.3e}, residual {res:.3e})",
            iterate=u,
            residual=res,
            iterations=max_iter,
        )

    def _newton(self, u_n, rhs):
        cfg = self.config
        tol, max_iter = cfg.solver.tol, cfg.solver.max_iter
        a = cfg.ratio
        u = u_n.copy()
        res = np.inf
        for k in range(1, max_iter + 1):
            Nu = self.nonlinear(u)
            G = self.equation_residual(u, rhs, Nu)
            J = self.K + a * self.nonlinear.jacobian(u)
            if self._fully_implicit:
                J = J - a * self.M
            try:
                du = spla.splu(sp.csc_matrix(J)).solve(-G)
            except RuntimeError as exc:
                raise SolverError(f"Newton linear solve failed: {exc}") from exc
            u = u + du
            size = np.abs(u).max()
            if not np.isfinite(size) or size > DIVERGENCE_THRESHOLD:
                raise DivergenceError("Newton iterate diverged", iterate=u, iterations=k)
            if np.abs(du).max() <= tol:
                res = self._scaled(self.equation_residual(u, rhs), rhs)
                if res <= 10.0 * tol:
                    return u, k
        raise NonconvergenceError(
            f"Newton did not converge in {max_iter} iterations (residual {res:.3e})",
            iterate=u,
            residual=res,
            iterations=max_iter,
        )


def build_workspace(mesh: Mesh, field: VectorField | None, config: SchemeConfig,
                    system: SystemMatrices | None = None) -> StepWorkspace:
    return StepWorkspace(mesh, config, system=system, field=field)


def step(u_n, dW: float, ws: StepWorkspace, config: SchemeConfig | None = None):
    """Advance one step; returns ``(u_next, iterations)``."""
    if config is not None and config != ws.config:
        raise InvalidArgument("workspace was built for a different configuration")
    return ws.step(u_n, dW)


def residual(u_next, u_n, dW: float, ws: StepWorkspace, config: SchemeConfig | None = None) -> float:
    """||K u + a Nterm(u) - RHS||_inf / ||RHS||_inf for a proposed step."""
    rhs = ws.rhs(np.asarray(u_n, dtype=float), dW)
    return ws._scaled(ws.equation_residual(np.asarray(u_next, dtype=float), rhs), rhs)


def eval_scheme_energy(v, u_n, dW: float, ws: StepWorkspace, config: SchemeConfig | None = None) -> float:
    """Value of the convex functional minimized by one step.

    Fully implicit: I(v); convex splitting: H(v).  The quadratic noise term
    carries tau delta^2 / 4 so that the gradient reproduces the scheme's
    tau delta^2 / 2 A_X exactly.  Only the explicit-convection scheme is a
    minimization; the implicit variant raises.
    """
    cfg = ws.config
    if cfg.convection is not Convection.EXPLICIT:
        raise InvalidArgument("the implicit-convection step is not a minimization problem")
    v = np.asarray(v, dtype=float)
    u_n = np.asarray(u_n, dtype=float)
    s = ws.system
    Mv = s.M @ v
    quad = 0.5 * v @ Mv + 0.5 * cfg.tau * v @ (s.A @ v) + 0.25 * cfg.tau * cfg.delta**2 * v @ (s.AX @ v)
    s2, s4 = ws.nonlinear.power_integrals(v)
    area = float(ws.mesh.areas.sum())
    if cfg.nonlinearity is Nonlinearity.FULLY_IMPLICIT:
        potential = 0.25 * (s4 - 2.0 * s2 + area)
        coupling = 1.0
    else:
        potential = 0.25 * (s4 + area)
        coupling = 1.0 + cfg.ratio
    linear = -coupling * (Mv @ u_n)
    linear += 0.5 * cfg.tau * cfg.delta**2 * (v @ (s.C1 @ u_n))
    linear -= cfg.delta * dW * (v @ (s.C2 @ u_n))
    return float(quad + cfg.ratio * potential + linear)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), num_vertices)
    iterations: np.ndarray  # per step


def run_trajectory(u0, path: BrownianPath | np.ndarray | None, ws: StepWorkspace, T: float,
                   stride: int = 1) -> Trajectory:
    """March ``u0`` to time ``T``, keeping every ``stride``-th state.

    ``path`` may be a Brownian path, an array of macro increments, or None
    (deterministic run).
    """
    tau = ws.config.tau
    nsteps = int(round(T / tau))
    if nsteps < 1 or abs(T / tau - nsteps) > 1e-6 * max(1.0, T / tau):
        raise InvalidArgument(f"T={T!r} is not a multiple of tau={tau!r}")
    if int(stride) != stride or stride < 1:
        raise InvalidArgument("stride must be a positive integer")
    if path is None:
        dW = np.zeros(nsteps)
    elif isinstance(path, BrownianPath):
        dW = macro_increments(path, tau).dW
    else:
        dW = np.asarray(path, dtype=float)
    if dW.shape[0] < nsteps:
        raise InvalidArgument("Brownian path is shorter than the time horizon")
    u = np.array(u0, dtype=float)
    keep = [0]
    states = [u.copy()]
    iters = np.empty(nsteps, dtype=np.int64)
    for n in range(nsteps):
        u, iters[n] = ws.step(u, float(dW[n]))
        if (n + 1) % stride == 0 or n + 1 == nsteps:
            keep.append(n + 1)
            states.append(u.copy())
    return Trajectory(times=np.array(keep) * tau, states=np.array(states), iterations=iters)
