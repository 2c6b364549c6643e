"""CSV grid functions and plain-text reports.

A solution CSV has the header ``x,y,u`` (``x,y,z,u`` in 3D) and one row per
node of the closed domain, in C order of the bounding-box lattice.  Nodes
on the boundary carry ``u = 0``.  Floats are written with 17 significant
digits, so reading a file back reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, is_dataclass

import numpy as np

AXES = ("x", "y", "z")


def _fmt(v):
    return "%.17g" % v


def write_csv(path, grid, u):
    u = np.asarray(u, dtype=float)
    full = np.zeros(grid.box_coords.shape[0])
    full[grid.interior] = u
    rows = np.flatnonzero(grid.box_closure)
    header = ",".join(AXES[: grid.d] + ("u",))
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for i in rows:
            fh.write(",".join(_fmt(v) for v in grid.box_coords[i]) + "," + _fmt(full[i]) + "\n")


def read_csv(path, grid):
    """Values at the unknowns of ``grid`` from a solution CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expect = list(AXES[: grid.d]) + ["u"]
        if [h.strip() for h in header] != expect:
            raise ValueError(f"expected header {','.join(expect)}, got {','.join(header)}")
        data = np.array([[float(x) for x in row] for row in reader if row], dtype=float)
    if data.ndim != 2 or data.shape[1] != grid.d + 1:
        raise ValueError("malformed solution CSV")
    keys = np.rint((data[:, : grid.d] + 1.0) / grid.h).astype(np.int64)
    if np.any(np.abs(keys * grid.h - 1.0 - data[:, : grid.d]) > 1e-9) or np.any((keys < 0) | (keys >= grid.n)):
        raise ValueError("CSV coordinates do not lie on the grid")
    flat = np.ravel_multi_index(keys.T, (grid.n,) * grid.d)
    full = np.full(grid.box_coords.shape[0], math.nan)
    full[flat] = data[:, grid.d]
    u = full[grid.interior]
    if np.any(np.isnan(u)):
        raise ValueError("CSV does not cover every interior node")
    return u


def _value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _fmt(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return ", ".join(_value(x) for x in v)
    return str(v)


def format_section(name, fields):
    """``[name]`` followed by ``key = value`` lines."""
    if is_dataclass(fields):
        fields = asdict(fields)
    lines = [f"[{name}]"]
    lines += [f"{k} = {_value(v)}" for k, v in fields.items()]
    return "\n".join(lines)


def parse_report(text):
    """Inverse of :func:`format_section` for a whole report: ``{section: {key: str}}``."""
    out = {}
    section = None
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = out.setdefault(line[1:-1], {})
        elif section is not None and "=" in line:
            k, v = line.split("=", 1)
            section[k.strip()] = v.strip()
    return out
