"""Command-line entry point.

    stochac run       --config cfg.txt --out out/
    stochac converge  --config cfg.txt --ladder 0.008,0.004,0.002,0.001
    stochac levelset  --config cfg.txt --times 0.01,0.02
    stochac energy    --config cfg.txt
    stochac matrices  --config cfg.txt

Exit status is 0 on success, 2 for usage and configuration errors and 1 for
failures during the computation.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

import numpy as np

from . import io
from .assembly import assemble_system
from .config import RunConfig, config_hash, load, parse, serialize, valid_keys
from .errors import ConfigError, StochACError
from .mesh import generate_uniform
from .montecarlo import run_ensemble, strong_error
from .observables import level_set
from .vector_field import VectorField

log = logging.getLogger("stochac")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (section.key = value lines)")
    common.add_argument("--seed", type=int, help="master seed (overrides noise.master_seed)")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count (overrides ensemble.M)")
    common.add_argument("--threads", type=int, help="worker processes (overrides ensemble.workers)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="stochac", description=__doc__.split("\n")[0] if __doc__ else None,
                                epilog=f"configuration keys: {valid_keys()}")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run an ensemble and write mean fields and observables")
    run.add_argument("--stride", type=int, help="keep every STRIDE-th step (overrides output.stride)")
    conv = sub.add_parser("converge", parents=[common], help="strong errors and orders over a step-size ladder")
    conv.add_argument("--ladder", help="comma-separated descending step sizes")
    conv.add_argument("--tau-ref", help="reference step size")
    ls = sub.add_parser("levelset", parents=[common], help="zero-level sets of the mean field")
    ls.add_argument("--times", help="comma-separated output times")
    ls.add_argument("--level", help="contour level")
    sub.add_parser("energy", parents=[common], help="mean energy time series")
    mat = sub.add_parser("matrices", parents=[common], help="write M, A, A_X, C1, C2 in Matrix Market format")
    mat.add_argument("--n", help="mesh subdivisions (overrides mesh.n)")
    return p


def _overrides(args) -> dict:
    ov = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        ov[k.strip()] = v.strip()
    flags = {
        "seed": "noise.master_seed", "out": "output.directory", "samples": "ensemble.M",
        "threads": "ensemble.workers", "stride": "output.stride", "ladder": "ensemble.ladder",
        "tau_ref": "ensemble.tau_ref", "times": "levelset.times", "level": "levelset.level", "n": "mesh.n",
    }
    for attr, key in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            ov[key] = str(value)
    return ov


def _load_config(args) -> RunConfig:
    ov = _overrides(args)
    if args.config:
        return load(args.config, ov)
    return parse("", ov)


def _prepare(cfg: RunConfig):
    os.makedirs(cfg.out_dir, exist_ok=True)
    meta = io.provenance(config_hash(cfg), cfg.master_seed)
    with open(os.path.join(cfg.out_dir, "config.txt"), "w", newline="\n") as fh:
        fh.write(f"# {meta}\n")
        fh.write(serialize(cfg))
    return meta


def _path(cfg, name):
    return os.path.join(cfg.out_dir, name)


def cmd_run(cfg: RunConfig) -> None:
    meta = _prepare(cfg)
    stats = run_ensemble(cfg.ensemble(), workers=cfg.workers)
    mesh = generate_uniform(cfg.n)
    var = stats.field.variance
    for k, t in enumerate(stats.times):
        m = f"{meta} t={_fmt(t)}"
        if "csv" in cfg.formats:
            io.write_nodal(_path(cfg, f"mean_field_{k:04d}.csv"), mesh,
                           {"mean": stats.field.mean[k], "variance": var[k]}, m)
        if "vtk" in cfg.formats:
            io.write_vtk(_path(cfg, f"mean_field_{k:04d}.vtk"), mesh,
                         {"mean": stats.field.mean[k], "variance": var[k]}, m)
    io.write_time_series(_path(cfg, "energy.csv"), stats.times, stats.energy.mean(axis=0), meta)
    io.write_time_series(_path(cfg, "l2.csv"), stats.times, stats.l2.mean(axis=0), meta)


def cmd_converge(cfg: RunConfig) -> None:
    if not cfg.ladder:
        raise ConfigError("converge needs ensemble.ladder (or --ladder)")
    meta = _prepare(cfg)
    ecfg = cfg.ensemble(with_ladder=True)
    rows = strong_error(ecfg, workers=cfg.workers)
    io.write_convergence(_path(cfg, "convergence.csv"), rows, cfg.M, cfg.master_seed, f"{meta} tau_ref={_fmt(ecfg.tau_ref)}")
    for r in rows:
        order = "" if r.order is None else f"  order {r.order:.4f}"
        print(f"tau {r.tau:<8g} error {r.error:.5f} +- {r.stderr:.5f}{order}")


def cmd_levelset(cfg: RunConfig) -> None:
    if not cfg.levelset_times:
        raise ConfigError("levelset needs levelset.times (or --times)")
    meta = _prepare(cfg)
    stats = run_ensemble(cfg.ensemble(), workers=cfg.workers)
    mesh = generate_uniform(cfg.n)
    for k, t in enumerate(cfg.levelset_times):
        idx = int(np.argmin(np.abs(stats.times - t)))
        if abs(stats.times[idx] - t) > 1e-9 * max(1.0, t):
            raise ConfigError(f"levelset time {t} is not on the stored grid (tau * stride)")
        lines = level_set(stats.field.mean[idx], mesh, cfg.level)
        io.write_levelset(_path(cfg, f"levelset_{k:03d}.csv"), lines, f"{meta} t={_fmt(t)} level={_fmt(cfg.level)}")


def cmd_energy(cfg: RunConfig) -> None:
    meta = _prepare(cfg)
    stats = run_ensemble(cfg.ensemble(), workers=cfg.workers)
    io.write_time_series(_path(cfg, "energy.csv"), stats.times, stats.energy.mean(axis=0), meta)


def cmd_matrices(cfg: RunConfig) -> None:
    meta = _prepare(cfg)
    mesh = generate_uniform(cfg.n)
    system = assemble_system(mesh, VectorField(cfg.bump))
    for name, mat in system.items():
        io.write_matrix_market(_path(cfg, f"{name}.mtx"), mat, meta)


def _fmt(x) -> str:
    return repr(float(x))


COMMANDS = {
    "run": cmd_run,
    "converge": cmd_converge,
    "levelset": cmd_levelset,
    "energy": cmd_energy,
    "matrices": cmd_matrices,
}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"stochac: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"stochac: configuration error: {exc}", file=sys.stderr)
        return 2
    except (StochACError, OSError) as exc:
        print(f"stochac: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
