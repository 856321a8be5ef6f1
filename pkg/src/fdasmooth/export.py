"""JSON and CSV writers (and matching readers) for estimation artifacts.

Floats are written with ``repr`` so files round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np


def _floats(a):
    return [float(v) for v in np.ravel(a)]


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, allow_nan=False) + "\n", encoding="utf-8")


def _csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    return repr(float(x))


def _is_csv(path):
    return str(path).lower().endswith(".csv")


def write_curve(grid, values, path, **meta):
    """One-dimensional estimate: JSON ``{grid, values, ...}`` or CSV ``t,value``."""
    if _is_csv(path):
        rows = [("t", "value")] + [(_fmt(t), _fmt(v)) for t, v in zip(grid.points, values)]
        Path(path).write_text(_csv_text(rows), encoding="utf-8")
    else:
        _dump_json({**meta, "grid": _floats(grid.points), "values": _floats(values)}, path)


def read_curve(path):
    if _is_csv(path):
        rows = list(csv.reader(Path(path).read_text(encoding="utf-8").splitlines()))
        if rows[0] != ["t", "value"]:
            raise ValueError(f"{path}: unexpected header {rows[0]}")
        arr = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return arr[:, 0], arr[:, 1]
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return np.array(d["grid"]), np.array(d["values"])


def write_surface(grid, values, path, **meta):
    """Surface on ``grid x grid``: JSON ``{grid, values}`` or a CSV matrix.

    The CSV's first row and first column hold the grid points.
    """
    values = np.asarray(values)
    if _is_csv(path):
        rows = [["s\\t"] + [_fmt(t) for t in grid.points]]
        rows += [[_fmt(s)] + [_fmt(v) for v in row] for s, row in zip(grid.points, values)]
        Path(path).write_text(_csv_text(rows), encoding="utf-8")
    else:
        _dump_json({**meta, "grid": _floats(grid.points), "values": [_floats(r) for r in values]}, path)


def read_surface(path):
    if _is_csv(path):
        rows = list(csv.reader(Path(path).read_text(encoding="utf-8").splitlines()))
        grid = np.array([float(v) for v in rows[0][1:]])
        row_grid = np.array([float(r[0]) for r in rows[1:]])
        if not np.array_equal(grid, row_grid):
            raise ValueError(f"{path}: row and column grids differ")
        return grid, np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return np.array(d["grid"]), np.array(d["values"])


def write_eigen(eig, path, **meta):
    """Eigen-system: JSON ``{eigenvalues, grid, eigenfunctions}`` or CSV.

    The CSV has a ``t`` column followed by one ``psi_j`` column per
    component; eigenvalues go in the JSON form only.
    """
    if _is_csv(path):
        header = ["t"] + [f"psi_{j + 1}" for j in range(eig.n_components)]
        rows = [header] + [
            [_fmt(t)] + [_fmt(v) for v in col] for t, col in zip(eig.grid.points, eig.eigenfunctions.T)
        ]
        Path(path).write_text(_csv_text(rows), encoding="utf-8")
    else:
        _dump_json(
            {
                **meta,
                "eigenvalues": _floats(eig.eigenvalues),
                "grid": _floats(eig.grid.points),
                "eigenfunctions": [_floats(p) for p in eig.eigenfunctions],
            },
            path,
        )


def read_eigen(path):
    """Returns ``(eigenvalues or None, grid, eigenfunctions)``."""
    if _is_csv(path):
        rows = list(csv.reader(Path(path).read_text(encoding="utf-8").splitlines()))
        arr = np.array([[float(v) for v in r] for r in rows[1:]])
        return None, arr[:, 0], arr[:, 1:].T
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return np.array(d["eigenvalues"]), np.array(d["grid"]), np.array(d["eigenfunctions"])


def write_sigma2(est, path, **meta):
    _dump_json(
        {
            **meta,
            "sigma2": float(est.sigma2),
            "integral_v": float(est.integral_v),
            "integral_c_diag": float(est.integral_c_diag),
            "negative": bool(est.negative),
        },
        path,
    )
