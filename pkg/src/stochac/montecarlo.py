"""Monte Carlo ensembles, strong errors against a common-path reference, and
convergence tables.

Every sample draws one Brownian path keyed by ``(master_seed, sample_id)``
and runs each requested step size on that path.  Per-sample results are
reduced in sample-id order, so the statistics do not depend on how many
worker processes produced them.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import NonlinearOperator, SystemMatrices, assemble_system, l2_project
from .errors import InvalidArgument, StochACError, UndefinedOrderError
from .initial import make_initial
from .mesh import Mesh, generate_uniform
from .noise import DEFAULT_DT_MICRO, generate_path, refine, refinement_factor, standard_normals
from .observables import EnergyFunctional, l2_norm
from .stepper import SchemeConfig, StepWorkspace, run_trajectory
from .vector_field import VectorField


class EnsembleError(StochACError):
    """One or more samples failed; ``failures`` maps sample id to the error."""

    def __init__(self, failures):
        ids = ", ".join(str(k) for k in sorted(failures))
        super().__init__(f"{len(failures)} sample(s) failed: {ids}")
        self.failures = failures


class Welford:
    """Streaming mean and variance of equally shaped arrays, mergeable."""

    def __init__(self, shape=()):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def add(self, x):
        x = np.asarray(x, dtype=float)
        self.count += 1
        d = x - self.mean
        self.mean = self.mean + d / self.count
        self.m2 = self.m2 + d * (x - self.mean)

    def merge(self, other: "Welford") -> "Welford":
        out = Welford(np.shape(self.mean))
        n = self.count + other.count
        if n == 0:
            return out
        d = other.mean - self.mean
        out.count = n
        out.mean = self.mean + d * (other.count / n)
        out.m2 = self.m2 + other.m2 + d * d * (self.count * other.count / n)
        return out

    @property
    def variance(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        return self.m2 / (self.count - 1)

    @property
    def stderr(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.variance / self.count)


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to reproduce an ensemble.

    ``scheme.tau`` is the step used for the field statistics.  ``ladder``
    lists the step sizes whose strong errors are measured against the
    reference step ``tau_ref`` (default: smallest ladder step / 4).
    """

    scheme: SchemeConfig
    M: int = 100
    master_seed: int = 0
    T: float = 0.048
    n: int = 64
    initial: str = "test1"
    initial_params: tuple = ()
    dt_micro: float = DEFAULT_DT_MICRO
    ladder: tuple = ()
    tau_ref: float | None = None
    stride: int = 1
    bump_denominator: str = "squared_radius"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise InvalidArgument("M must be a positive integer")
        if not self.T > 0:
            raise InvalidArgument("T must be positive")
        ladder = tuple(float(t) for t in self.ladder)
        object.__setattr__(self, "ladder", ladder)
        for big, small in zip(ladder, ladder[1:]):
            if not small < big or abs(big / small - round(big / small)) > 1e-9:
                raise InvalidArgument("ladder must be descending, each step dividing the previous")
        if ladder and self.tau_ref is None:
            object.__setattr__(self, "tau_ref", ladder[-1] / 4.0)
        if ladder and self.tau_ref is not None:
            r = ladder[-1] / self.tau_ref
            if r < 1 or abs(r - round(r)) > 1e-9:
                raise InvalidArgument("tau_ref must divide the smallest ladder step")
        for tau in self.all_taus():
            if abs(self.T / tau - round(self.T / tau)) > 1e-6 * max(1.0, self.T / tau):
                raise InvalidArgument(f"T={self.T} is not a multiple of tau={tau}")
        # raises if the steps cannot be put on a common refinement of the micro grid
        refinement_factor(self.all_taus(), self.dt_micro)

    def all_taus(self):
        taus = {self.scheme.tau}
        taus.update(self.ladder)
        if self.tau_ref is not None and self.ladder:
            taus.add(self.tau_ref)
        return sorted(taus, reverse=True)


@dataclass
class SampleResult:
    sample_id: int
    times: np.ndarray
    states: np.ndarray  # states at scheme.tau, every stride steps
    energy: np.ndarray
    l2: np.ndarray
    errors: dict  # tau -> max_n ||u_ref(t_n) - u_tau(t_n)||_L2
    iterations: int


@dataclass
class EnsembleStats:
    config: EnsembleConfig
    times: np.ndarray
    field: Welford
    energy: np.ndarray  # (M, len(times))
    l2: np.ndarray
    errors: dict = field(default_factory=dict)  # tau -> Welford over samples
    iterations: int = 0

    @property
    def mean_field(self) -> np.ndarray:
        return self.field.mean


class _Context:
    """Per-process state: mesh, matrices, factored workspaces, initial data."""

    def __init__(self, cfg: EnsembleConfig, mesh=None, system=None, u0=None):
        self.cfg = cfg
        self.mesh = mesh if mesh is not None else generate_uniform(cfg.n)
        self.system = system if system is not None else assemble_system(
            self.mesh, VectorField(cfg.bump_denominator)
        )
        if u0 is None:
            f = make_initial(cfg.initial, cfg.scheme.epsilon, **dict(cfg.initial_params))
            u0 = l2_project(self.mesh, f, self.system.M)
        self.u0 = np.asarray(u0, dtype=float)
        self.workspaces = {}
        shared = NonlinearOperator(self.mesh)
        for tau in cfg.all_taus():
            scheme = cfg.scheme if tau == cfg.scheme.tau else cfg.scheme.replace(tau=tau)
            self.workspaces[tau] = StepWorkspace(self.mesh, scheme, system=self.system, nonlinear=shared)
        self.refine = refinement_factor(cfg.all_taus(), cfg.dt_micro)
        ws = self.workspaces[cfg.scheme.tau]
        self.energy = EnergyFunctional(self.mesh, self.system.A, ws.nonlinear)

    def run_sample(self, sample_id: int) -> SampleResult:
        cfg = self.cfg
        M = self.system.M
        base = generate_path(cfg.T, cfg.dt_micro, cfg.master_seed, sample_id)
        path = refine(base, self.refine)
        runs = {}
        iters = 0
        for tau, ws in self.workspaces.items():
            stride = cfg.stride if tau == cfg.scheme.tau else 1
            tr = run_trajectory(self.u0, path, ws, cfg.T, stride=stride)
            runs[tau] = tr
            iters += int(tr.iterations.sum())
        main = runs[cfg.scheme.tau]
        eps = cfg.scheme.epsilon
        en = np.array([self.energy(u, eps) for u in main.states])
        l2 = np.array([l2_norm(u, M) for u in main.states])
        errors = {}
        if cfg.ladder:
            ref = runs[cfg.tau_ref].states
            for tau in cfg.ladder:
                k = int(round(tau / cfg.tau_ref))
                d = ref[::k] - runs[tau].states
                errors[tau] = float(np.sqrt(np.max(np.einsum("ti,ti->t", d, (M @ d.T).T))))
        return SampleResult(sample_id, main.times, main.states, en, l2, errors, iters)


_WORKER_CTX = None


def _init_worker(cfg):
    global _WORKER_CTX
    _WORKER_CTX = _Context(cfg)


def _run_in_worker(sample_id):
    try:
        return sample_id, _WORKER_CTX.run_sample(sample_id), None
    except StochACError as exc:
        return sample_id, None, exc


def iter_samples(cfg: EnsembleConfig, workers: int = 1, mesh: Mesh | None = None,
                 system: SystemMatrices | None = None, u0=None):
    """Yield ``(sample_id, SampleResult or None, error or None)`` in id order."""
    ids = range(cfg.M)
    if workers <= 1:
        ctx = _Context(cfg, mesh, system, u0)
        for i in ids:
            try:
                yield i, ctx.run_sample(i), None
            except StochACError as exc:
                yield i, None, exc
        return
    if mesh is not None or system is not None or u0 is not None:
        raise InvalidArgument("precomputed mesh/system/u0 are only supported with workers=1")
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(cfg,)) as pool:
        yield from pool.map(_run_in_worker, ids, chunksize=max(1, cfg.M // (4 * workers)))


def run_ensemble(cfg: EnsembleConfig, workers: int = 1, mesh: Mesh | None = None,
                 system: SystemMatrices | None = None, u0=None) -> EnsembleStats:
    """Run all samples and reduce them in sample-id order.

    Any failed sample aborts the ensemble with :class:`EnsembleError`; no
    sample is silently dropped.
    """
    acc = None
    energies, l2s = [], []
    errors = {tau: Welford() for tau in cfg.ladder}
    failures = {}
    times = None
    iterations = 0
    for sid, res, err in iter_samples(cfg, workers, mesh, system, u0):
        if err is not None:
            failures[sid] = err
            continue
        if acc is None:
            acc = Welford(res.states.shape)
            times = res.times
        acc.add(res.states)
        energies.append(res.energy)
        l2s.append(res.l2)
        for tau, e in res.errors.items():
            errors[tau].add(e)
        iterations += res.iterations
    if failures:
        raise EnsembleError(failures)
    return EnsembleStats(cfg, times, acc, np.array(energies), np.array(l2s), errors, iterations)


@dataclass(frozen=True)
class ErrorRow:
    tau: float
    error: float
    stderr: float
    order: float | None


def convergence_orders(errors, taus=None) -> list:
    """Observed orders log(e_k / e_{k+1}) / log(tau_k / tau_{k+1})."""
    errors = [float(e) for e in errors]
    if len(errors) < 2:
        raise InvalidArgument("need at least two levels")
    if any(not e > 0 for e in errors):
        raise UndefinedOrderError("errors must be strictly positive")
    if taus is None:
        ratios = [2.0] * (len(errors) - 1)
    else:
        ratios = [taus[k] / taus[k + 1] for k in range(len(errors) - 1)]
    return [math.log(errors[k] / errors[k + 1]) / math.log(ratios[k]) for k in range(len(errors) - 1)]


def strong_error(cfg: EnsembleConfig, workers: int = 1, stats: EnsembleStats | None = None, **kwargs) -> list:
    """Mean over samples of max_n ||u_ref(t_n) - u_tau(t_n)||_L2 for each ladder step."""
    if not cfg.ladder:
        raise InvalidArgument("strong_error needs a ladder")
    if stats is None:
        stats = run_ensemble(cfg, workers, **kwargs)
    errs = [stats.errors[tau].mean.item() for tau in cfg.ladder]
    ses = [stats.errors[tau].stderr.item() for tau in cfg.ladder]
    orders = [None]
    if all(e > 0 for e in errs) and len(errs) > 1:
        orders += convergence_orders(errs, cfg.ladder)
    else:
        orders += [None] * (len(errs) - 1)
    return [ErrorRow(t, e, s, o) for t, e, s, o in zip(cfg.ladder, errs, ses, orders)]


def noise_term_samples(C2, u, delta: float, tau: float, count: int, master_seed: int = 0):
    """``count`` draws of delta * dW * (C2 u) with dW ~ N(0, tau), one per row."""
    z = standard_normals(master_seed, 0, count) * np.sqrt(tau)
    return delta * z[:, None] * (C2 @ np.asarray(u, dtype=float))[None, :]
