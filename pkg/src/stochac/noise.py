"""Brownian paths on a fixed micro-step with exact aggregation to coarser grids.

Each path is keyed by ``(master_seed, sample_id)`` through a Philox
counter-based generator, so any sample can be regenerated independently of
how work is scheduled.  Uniforms come from the raw 64-bit Philox stream and
are mapped to Gaussians with the Box-Muller transform; both choices are
pinned so a path is reproducible from its key alone.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

DEFAULT_DT_MICRO = 1e-4
GAUSSIAN_METHOD = "box-muller"
GENERATOR = "philox4x64"

_MAGIC = b"SACW"
_VERSION = 1
_HEADER = struct.Struct("<4sIdQQQ")


def _check_u64(value, name):
    if int(value) != value or not 0 <= int(value) < 2**64:
        raise InvalidArgument(f"{name} must be an unsigned 64-bit integer, got {value!r}")
    return int(value)


def standard_normals(master_seed: int, sample_id: int, count: int, stream: int = 0) -> np.ndarray:
    """``count`` N(0, 1) draws from the stream keyed by (seed, id).

    ``stream`` selects a disjoint substream by starting the Philox counter at
    ``stream * 2**192``.
    """
    master_seed = _check_u64(master_seed, "master_seed")
    sample_id = _check_u64(sample_id, "sample_id")
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    bitgen = np.random.Philox(counter=counter, key=np.array([master_seed, sample_id], dtype=np.uint64))
    npairs = (count + 1) // 2
    raw = bitgen.random_raw(2 * npairs)
    # 53-bit uniforms in (0, 1]; zero is excluded for the logarithm
    uni = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)
    u1 = uni[0::2]
    u2 = uni[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * npairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


@dataclass(frozen=True)
class BrownianPath:
    dt_micro: float
    increments: np.ndarray
    master_seed: int
    sample_id: int

    @property
    def T(self) -> float:
        return self.increments.shape[0] * self.dt_micro

    def __eq__(self, other):
        if not isinstance(other, BrownianPath):
            return NotImplemented
        return (
            self.dt_micro == other.dt_micro
            and self.master_seed == other.master_seed
            and self.sample_id == other.sample_id
            and np.array_equal(self.increments, other.increments)
        )

    def save(self, path) -> None:
        inc = np.ascontiguousarray(self.increments, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(
                _HEADER.pack(_MAGIC, _VERSION, self.dt_micro, inc.shape[0], self.master_seed, self.sample_id)
            )
            fh.write(inc.tobytes())

    @classmethod
    def load(cls, path) -> "BrownianPath":
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                raise InvalidArgument("truncated path file")
            magic, version, dt, count, seed, sid = _HEADER.unpack(head)
            if magic != _MAGIC:
                raise InvalidArgument(f"bad magic {magic!r}")
            if version != _VERSION:
                raise InvalidArgument(f"unsupported path file version {version}")
            body = fh.read()
        if len(body) != 8 * count:
            raise InvalidArgument(f"expected {count} increments, found {len(body) // 8}")
        inc = np.frombuffer(body, dtype="<f8").astype(np.float64)
        return cls(dt_micro=dt, increments=inc, master_seed=seed, sample_id=sid)


@dataclass(frozen=True)
class MacroIncrements:
    tau: float
    dW: np.ndarray


def generate_path(T: float, dt_micro: float = DEFAULT_DT_MICRO, master_seed: int = 0, sample_id: int = 0) -> BrownianPath:
    if not T > 0 or not dt_micro > 0:
        raise InvalidArgument("T and dt_micro must be positive")
    ratio = T / dt_micro
    count = int(round(ratio))
    if count < 1 or abs(ratio - count) > 1e-6 * max(1.0, ratio):
        raise InvalidArgument(f"T={T!r} is not commensurate with dt_micro={dt_micro!r}")
    inc = standard_normals(master_seed, sample_id, count) * np.sqrt(dt_micro)
    inc.setflags(write=False)
    return BrownianPath(dt_micro=float(dt_micro), increments=inc, master_seed=int(master_seed), sample_id=int(sample_id))


def steps_per(tau: float, dt_micro: float) -> int:
    """Number of micro-steps in one scheme step; tau must be a multiple."""
    ratio = tau / dt_micro
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-6 * max(1.0, ratio):
        raise InvalidArgument(f"tau={tau!r} is not a multiple of dt_micro={dt_micro!r}")
    return k


def macro_increments(path: BrownianPath, tau: float) -> MacroIncrements:
    """W(t_{n+1}) - W(t_n) on the grid of step ``tau``."""
    k = steps_per(tau, path.dt_micro)
    n = path.increments.shape[0]
    if n % k:
        raise InvalidArgument(f"tau={tau!r} does not divide the path length")
    blocks = path.increments.reshape(n // k, k)
    dW = _pairwise_left_to_right(blocks)
    dW.setflags(write=False)
    return MacroIncrements(tau=float(tau), dW=dW)


def _pairwise_left_to_right(blocks: np.ndarray) -> np.ndarray:
    # Fixed summation tree: write k = m * 2**p with m odd, add each run of m
    # increments left to right, then combine adjacent partial sums pairwise.
    # Two grids whose step counts differ by a factor of two share every node
    # of this tree, so the coarsening identity holds bit for bit.
    k = blocks.shape[1]
    m = k
    while m % 2 == 0:
        m //= 2
    runs = blocks.reshape(blocks.shape[0], k // m, m)
    acc = runs[:, :, 0].copy()
    for j in range(1, m):
        acc += runs[:, :, j]
    while acc.shape[1] > 1:
        acc = acc[:, 0::2] + acc[:, 1::2]
    return acc[:, 0].copy()


def refine(path: BrownianPath, factor: int) -> BrownianPath:
    """Brownian-bridge refinement onto a grid ``factor`` times finer.

    Each micro increment d is split into ``factor`` pieces with the exact
    conditional law given their sum: z_j - mean(z) + d / factor, z_j iid
    N(0, dt / factor).  The pieces sum to d up to rounding, so the refined
    path is the same Brownian motion observed more finely.  The extra
    randomness comes from the sample's own key on a separate Philox
    substream, so it never overlaps the base increments.
    """
    if int(factor) != factor or factor < 1:
        raise InvalidArgument(f"refinement factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return path
    n = path.increments.shape[0]
    dt = path.dt_micro / factor
    z = standard_normals(path.master_seed, path.sample_id, n * factor, stream=factor)
    z = z.reshape(n, factor) * np.sqrt(dt)
    z = z - z.mean(axis=1, keepdims=True) + path.increments[:, None] / factor
    inc = z.ravel()
    inc.setflags(write=False)
    return BrownianPath(dt_micro=dt, increments=inc, master_seed=path.master_seed, sample_id=path.sample_id)


def refinement_factor(taus, dt_micro: float, max_factor: int = 64) -> int:
    """Smallest f such that every tau is a multiple of dt_micro / f."""
    for f in range(1, max_factor + 1):
        fine = dt_micro / f
        if all(abs(t / fine - round(t / fine)) <= 1e-6 * max(1.0, t / fine) for t in taus):
            return f
    raise InvalidArgument(f"steps {list(taus)} are not commensurate with dt_micro={dt_micro!r}")
