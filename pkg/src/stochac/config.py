"""Run configuration: flat ``section.key = value`` text files.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Every value is validated as it is read, and all diagnostics carry the line
number of the offending key.  :func:`serialize` writes every key in a fixed
order with round-trip exact float formatting, so ``parse(serialize(c)) == c``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import warnings
from dataclasses import dataclass

from .errors import ConfigError, StochACError
from .montecarlo import EnsembleConfig
from .noise import DEFAULT_DT_MICRO
from .stepper import Convection, Nonlinearity, SchemeConfig, SolverConfig

INITIAL_KINDS = ("test1", "test2", "circle", "constant", "expression")
OUTPUT_FORMATS = ("csv", "vtk")


def _float(text):
    return float(text)


def _int(text):
    value = int(text, 0)
    return value


def _floats(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(t) for t in text.split(","))


def _optional_float(text):
    text = text.strip()
    return None if text in ("", "auto", "none") else float(text)


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return conv


def _formats(text):
    items = tuple(t.strip() for t in text.split(",") if t.strip())
    for t in items:
        if t not in OUTPUT_FORMATS:
            raise ValueError(f"unknown output format {t!r}; expected {', '.join(OUTPUT_FORMATS)}")
    return items


def _str(text):
    return text


# key -> (attribute, converter, default)
FIELDS = {
    "mesh.n": ("n", _int, 64),
    "scheme.epsilon": ("epsilon", _float, 0.1),
    "scheme.delta": ("delta", _float, 1.0),
    "scheme.tau": ("tau", _float, 0.001),
    "scheme.nonlinearity": ("nonlinearity", _choice([e.value for e in Nonlinearity]), "convex_splitting"),
    "scheme.convection": ("convection", _choice([e.value for e in Convection]), "explicit"),
    "scheme.stabilization": ("stabilization", _optional_float, None),
    "solver.kind": ("solver_kind", _choice(["fixed_point", "newton"]), "fixed_point"),
    "solver.tol": ("solver_tol", _float, 1e-10),
    "solver.max_iter": ("solver_max_iter", _int, 100),
    "noise.dt_micro": ("dt_micro", _float, DEFAULT_DT_MICRO),
    "noise.master_seed": ("master_seed", _int, 0),
    "ensemble.M": ("M", _int, 100),
    "ensemble.T": ("T", _float, 0.048),
    "ensemble.ladder": ("ladder", _floats, ()),
    "ensemble.tau_ref": ("tau_ref", _optional_float, None),
    "ensemble.workers": ("workers", _int, 1),
    "field.bump": ("bump", _choice(["squared_radius", "literal"]), "squared_radius"),
    "initial.kind": ("initial", _choice(INITIAL_KINDS), "test1"),
    "initial.value": ("initial_value", _float, 1.0),
    "initial.radius": ("initial_radius", _float, 0.25),
    "initial.variant": ("initial_variant", _choice(["corrected", "verbatim"]), "corrected"),
    "initial.expression": ("initial_expression", _str, ""),
    "output.directory": ("out_dir", _str, "out"),
    "output.stride": ("stride", _int, 1),
    "output.formats": ("formats", _formats, ("csv",)),
    "levelset.times": ("levelset_times", _floats, ()),
    "levelset.level": ("level", _float, 0.0),
}
_ATTR_TO_KEY = {attr: key for key, (attr, _, _) in FIELDS.items()}


@dataclass(frozen=True)
class RunConfig:
    n: int = 64
    epsilon: float = 0.1
    delta: float = 1.0
    tau: float = 0.001
    nonlinearity: str = "convex_splitting"
    convection: str = "explicit"
    stabilization: float | None = None
    solver_kind: str = "fixed_point"
    solver_tol: float = 1e-10
    solver_max_iter: int = 100
    dt_micro: float = DEFAULT_DT_MICRO
    master_seed: int = 0
    M: int = 100
    T: float = 0.048
    ladder: tuple = ()
    tau_ref: float | None = None
    workers: int = 1
    bump: str = "squared_radius"
    initial: str = "test1"
    initial_value: float = 1.0
    initial_radius: float = 0.25
    initial_variant: str = "corrected"
    initial_expression: str = ""
    out_dir: str = "out"
    stride: int = 1
    formats: tuple = ("csv",)
    levelset_times: tuple = ()
    level: float = 0.0

    def scheme(self) -> SchemeConfig:
        solver = SolverConfig(self.solver_kind, self.solver_tol, self.solver_max_iter)
        return SchemeConfig(self.epsilon, self.delta, self.tau, self.nonlinearity, self.convection,
                            solver, self.stabilization)

    def initial_params(self) -> tuple:
        if self.initial == "constant":
            return (("value", self.initial_value),)
        if self.initial == "circle":
            return (("radius", self.initial_radius),)
        if self.initial == "test2":
            return (("variant", self.initial_variant),)
        if self.initial == "expression":
            return (("expression", self.initial_expression),)
        return ()

    def ensemble(self, with_ladder: bool = False) -> EnsembleConfig:
        return EnsembleConfig(
            scheme=self.scheme(), M=self.M, master_seed=self.master_seed, T=self.T, n=self.n,
            initial=self.initial, initial_params=self.initial_params(), dt_micro=self.dt_micro,
            ladder=self.ladder if with_ladder else (), tau_ref=self.tau_ref if with_ladder else None,
            stride=self.stride, bump_denominator=self.bump,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    lines = []
    section = None
    for key, (attr, _, _) in FIELDS.items():
        sec = key.split(".")[0]
        if sec != section:
            if section is not None:
                lines.append("")
            section = sec
        lines.append(f"{key} = {_format(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"


# keys that change where or how fast a run happens but not what it computes
EXECUTION_KEYS = ("output.directory", "ensemble.workers")


def config_hash(cfg: RunConfig) -> str:
    """Hash of the serialized config, ignoring the execution-only keys."""
    text = "".join(ln + "\n" for ln in serialize(cfg).splitlines()
                   if ln.split(" = ")[0] not in EXECUTION_KEYS)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def valid_keys() -> str:
    return ", ".join(FIELDS)


def parse(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse config text; ``overrides`` maps keys to strings applied on top."""
    values = {}
    where = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        _set(values, where, key, value, lineno)
    for key, value in (overrides or {}).items():
        _set(values, where, key, str(value), None)
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:  # pragma: no cover - keys are checked above
        raise ConfigError(str(exc)) from exc
    _validate(cfg, where)
    return cfg


def _set(values, where, key, value, lineno):
    if key not in FIELDS:
        raise ConfigError(f"unknown key {key!r}; valid keys: {valid_keys()}", line=lineno)
    attr, conv, _ = FIELDS[key]
    if attr in values and lineno is not None and where.get(attr) is not None:
        raise ConfigError(f"duplicate key {key!r} (first set on line {where[attr]})", line=lineno)
    try:
        values[attr] = conv(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}", line=lineno) from exc
    where[attr] = lineno


def _validate(cfg: RunConfig, where: dict):
    def fail(attr, msg):
        raise ConfigError(f"{_ATTR_TO_KEY[attr]}: {msg}", line=where.get(attr))

    if cfg.n < 1:
        fail("n", "must be >= 1")
    if cfg.M < 1:
        fail("M", "must be >= 1")
    if cfg.workers < 1:
        fail("workers", "must be >= 1")
    if cfg.stride < 1:
        fail("stride", "must be >= 1")
    if not 0 <= cfg.master_seed < 2**64:
        fail("master_seed", "must be an unsigned 64-bit integer")
    if not cfg.dt_micro > 0:
        fail("dt_micro", "must be positive")
    if not cfg.T > 0:
        fail("T", "must be positive")
    if cfg.initial == "expression" and not cfg.initial_expression:
        fail("initial", "expression initial condition needs initial.expression")
    # the remaining checks are delegated to the model objects; attribute
    # their failures to the most specific key we can
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            cfg.scheme()
        except StochACError as exc:
            msg = str(exc)
            for attr in ("tau", "epsilon", "delta", "stabilization", "solver_tol", "solver_max_iter"):
                if _ATTR_TO_KEY[attr].split(".")[1] in msg or attr in msg:
                    fail(attr, msg)
            fail("tau", msg)
        try:
            cfg.ensemble(with_ladder=bool(cfg.ladder))
        except StochACError as exc:
            msg = str(exc)
            attr = "ladder" if "ladder" in msg else "tau_ref" if "tau_ref" in msg else "T" if "T=" in msg else "dt_micro"
            fail(attr, msg)
    if cfg.initial == "expression":
        from .initial import expression

        try:
            expression(cfg.initial_expression, cfg.epsilon)
        except StochACError as exc:
            fail("initial_expression", str(exc))


def load(path, overrides: dict | None = None) -> RunConfig:
    with open(path) as fh:
        return parse(fh.read(), overrides)
