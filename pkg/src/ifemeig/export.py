"""Field export for plotting: legacy VTK (ASCII) and CSV.

Each sub-triangle of the cut mesh is written with its own three vertices, so
values on either side of the interface chord and across nonconforming edges
are kept separate.
"""

from __future__ import annotations

import os

import numpy as np

from .assembly import DofMap
from .exceptions import InvalidParameterError


def field_samples(bases, u):
    """Sub-triangle geometry with the discrete function evaluated at its corners.

    Returns ``(points (3s, 2), values (3s,), cells (s, 3))``.
    """
    mesh = bases.mesh
    u = DofMap(mesh).expand(u)
    cut = bases.cut
    xy = cut.sub_xy                                      # (s, 3, 2)
    C = bases.sub_coefficients()                         # (s, 3 basis, 3 coef)
    U = u[mesh.tri_edges[cut.sub_elem]]                  # (s, 3)
    pieces = np.einsum("si,sic->sc", U, C)               # one affine function per sub-triangle
    vals = pieces[:, None, 0] + pieces[:, None, 1] * xy[..., 0] + pieces[:, None, 2] * xy[..., 1]
    s = len(xy)
    return xy.reshape(-1, 2), vals.reshape(-1), np.arange(3 * s).reshape(s, 3)


def write_vtk(path, bases, u, name="u", title="ifemeig field"):
    """Write a legacy-VTK ASCII unstructured grid with point scalars ``name``.

    Cell data ``side`` holds -1/+1 for the interface side of every sub-triangle.
    """
    pts, vals, cells = field_samples(bases, u)
    side = bases.cut.sub_side
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(pts)} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in pts]
    lines.append(f"CELLS {len(cells)} {4 * len(cells)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += ["5"] * len(cells)
    lines.append(f"CELL_DATA {len(cells)}")
    lines += ["SCALARS side int 1", "LOOKUP_TABLE default"]
    lines += [str(int(s)) for s in side]
    lines.append(f"POINT_DATA {len(pts)}")
    lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines += [f"{v:.17g}" for v in vals]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return os.fspath(path)


def write_csv(path, bases, u):
    """Write ``x,y,value`` for every exported vertex."""
    pts, vals, _ = field_samples(bases, u)
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for (x, y), v in zip(pts, vals):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")
    return os.fspath(path)


def read_vtk_points(path):
    """Points and point scalars of a file written by :func:`write_vtk`."""
    with open(path) as fh:
        tok = fh.read().split("\n")
    i = next(j for j, t in enumerate(tok) if t.startswith("POINTS"))
    n = int(tok[i].split()[1])
    pts = np.array([[float(v) for v in t.split()[:2]] for t in tok[i + 1:i + 1 + n]])
    j = next(j for j, t in enumerate(tok) if t.startswith("POINT_DATA"))
    vals = np.array([float(t) for t in tok[j + 3:j + 3 + n]])
    return pts, vals


def export_field(path, bases, u, name="u", fmt=None):
    """Write ``u`` to ``path``; format from ``fmt`` or the file suffix (.vtk/.csv)."""
    fmt = fmt or ("csv" if os.fspath(path).endswith(".csv") else "vtk")
    if fmt == "vtk":
        return write_vtk(path, bases, u, name)
    if fmt == "csv":
        return write_csv(path, bases, u)
    raise InvalidParameterError(f"unknown export format {fmt!r}")
