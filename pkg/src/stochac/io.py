"""File output: CSV tables, legacy VTK fields, Matrix Market dumps.

Every file starts with a comment line carrying the package version, the
config hash and the master seed, so any output can be traced back to the run
that produced it.  Floats are written in shortest round-trip form, so output is
byte-for-byte reproducible.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.io

from . import __version__
from .mesh import Mesh


def provenance(config_hash: str = "", seed=None) -> str:
    parts = [f"stochac {__version__}"]
    if config_hash:
        parts.append(f"config_hash={config_hash}")
    if seed is not None:
        parts.append(f"seed={seed}")
    return " ".join(parts)


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows, meta: str = "") -> None:
    """Write rows under ``header``; ``meta`` becomes a leading ``# `` comment."""
    with open(path, "w", newline="\n") as fh:
        if meta:
            fh.write(f"# {meta}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_num(v) for v in row) + "\n")


def read_csv(path):
    """Return (header, rows as float array) skipping comment lines."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    data = [[float(v) if v else np.nan for v in ln.split(",")] for ln in lines[1:]]
    return header, np.array(data).reshape(len(data), len(header))


def write_time_series(path, times, values, meta: str = "") -> None:
    write_csv(path, ("t", "value"), zip(times, values), meta)


def write_convergence(path, rows, M: int, seed: int, meta: str = "") -> None:
    write_csv(path, ("tau", "error", "order", "stderr", "M", "seed"),
              ((r.tau, r.error, r.order, r.stderr, M, seed) for r in rows), meta)


def write_levelset(path, polylines, meta: str = "") -> None:
    rows = ((k, i, x, y) for k, poly in enumerate(polylines) for i, (x, y) in enumerate(poly.points))
    write_csv(path, ("polyline_id", "point_index", "x", "y"), rows, meta)


def write_nodal(path, mesh: Mesh, columns: dict, meta: str = "") -> None:
    """CSV of nodal values: vertex, x, y and one column per entry of ``columns``."""
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    rows = ((i, mesh.points[i, 0], mesh.points[i, 1], *(c[i] for c in cols)) for i in range(mesh.num_vertices))
    write_csv(path, ("vertex", "x", "y", *names), rows, meta)


def write_vtk(path, mesh: Mesh, point_data: dict, meta: str = "") -> None:
    """Legacy ASCII VTK 3.0 unstructured grid with scalar point data."""
    nv, nt = mesh.num_vertices, mesh.num_triangles
    title = (meta or "stochac field").replace("\n", " ")[:255]
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    out += [f"{_num(x)} {_num(y)} 0" for x, y in mesh.points]
    out.append(f"CELLS {nt} {4 * nt}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    out.append(f"CELL_TYPES {nt}")
    out += ["5"] * nt  # VTK_TRIANGLE
    out.append(f"POINT_DATA {nv}")
    for name, values in point_data.items():
        values = np.asarray(values, dtype=float)
        out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out += [_num(v) for v in values]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def write_matrix_market(path, matrix, meta: str = "") -> None:
    """Coordinate Matrix Market file, always with ``general`` symmetry."""
    scipy.io.mmwrite(os.fspath(path), matrix.tocoo(), comment=f" {meta}" if meta else "", field="real",
                     precision=17, symmetry="general")
