"""Trajectory CSV files and JSON manifests."""

import csv
import json
import platform
import time
from pathlib import Path

import numpy as np

__all__ = ["VALUE_COLUMNS", "SchemaError", "trajectory_columns", "write_trajectory", "read_trajectory",
           "write_table", "write_manifest", "read_manifest", "versions"]

VALUE_COLUMNS = ("rho_pp", "rho_mm", "rho_pm_re", "rho_pm_im", "p_pp", "p_pm", "p_mp", "p_mm")


class SchemaError(ValueError):
    """Files do not share the trajectory schema."""


def _fmt(x):
    return format(float(x), ".17g")


def trajectory_columns(rho, p=None):
    """Map (nt, 2, 2) arrays to the named value columns.

    ``p_pm`` is the probability of + at t having started in -, i.e. ``p[:, 0, 1]``.
    """
    nt = rho.shape[0]
    p = np.full((nt, 2, 2), np.nan) if p is None else p
    return {
        "rho_pp": rho[:, 0, 0].real,
        "rho_mm": rho[:, 1, 1].real,
        "rho_pm_re": rho[:, 0, 1].real,
        "rho_pm_im": rho[:, 0, 1].imag,
        "p_pp": p[:, 0, 0],
        "p_pm": p[:, 0, 1],
        "p_mp": p[:, 1, 0],
        "p_mm": p[:, 1, 1],
    }


def write_table(path, columns):
    """Write an ordered mapping of equal-length columns with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float).ravel() for k in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([_fmt(x) for x in row])
    return path


def write_trajectory(path, times, rho, p=None, rho_stderr=None, p_stderr=None, extra=None):
    """Write a trajectory CSV; stderr columns and `extra` columns are appended when given."""
    cols = {"t": np.asarray(times, dtype=float)}
    cols.update(trajectory_columns(np.asarray(rho), p))
    if rho_stderr is not None:
        err = trajectory_columns(np.asarray(rho_stderr), p_stderr)
        # stderr of real and imaginary parts are stored in the real/imag slots
        cols.update({f"{k}_stderr": v for k, v in err.items()})
    cols.update(extra or {})
    return write_table(path, cols)


def read_trajectory(path):
    """Read a CSV written by :func:`write_trajectory` into a dict of arrays."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    head, body = rows[0], rows[1:]
    if not head or head[0] != "t":
        raise SchemaError(f"{path}: first column must be 't'")
    try:
        data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(head))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    return {k: data[:, i] for i, k in enumerate(head)}


def versions():
    import scipy

    from .. import __version__

    return {"rmrelax": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_manifest(path, config, **extra):
    """JSON sidecar with the full config echo, versions, and anything in `extra`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config": _jsonable(config), "versions": versions(),
           "created": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    doc.update(_jsonable(extra))
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
