"""Legacy ASCII VTK output (DataFile version 3.0) plus a minimal reader.

Surface triangle meshes are written as POLYDATA, boundary curves as POLYDATA
with LINES, and disk meshes as UNSTRUCTURED_GRID; one scalar field per file
as POINT_DATA.  The reader parses only what the writer emits and exists for
structural round-trip checks.
"""
from __future__ import annotations

import numpy as np

from .errors import UsageError

_HEADER = "# vtk DataFile Version 3.0\n{title}\nASCII\n"


def _format_points(points: np.ndarray) -> str:
    pts = np.asarray(points, dtype=float)
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    lines = [f"POINTS {len(pts)} double"]
    lines += [" ".join(repr(float(c)) for c in row) for row in pts]
    return "\n".join(lines) + "\n"


def _format_scalars(name: str, values: np.ndarray) -> str:
    values = np.asarray(values, dtype=float)
    lines = [
        f"POINT_DATA {len(values)}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    lines += [repr(float(v)) for v in values]
    return "\n".join(lines) + "\n"


def write_surface_vtk(path, points, triangles, values, name="solution", title="surface"):
    """Triangle surface mesh with one vertex scalar field, as POLYDATA."""
    tris = np.asarray(triangles, dtype=np.int64)
    with open(path, "w") as f:
        f.write(_HEADER.format(title=title))
        f.write("DATASET POLYDATA\n")
        f.write(_format_points(points))
        f.write(f"POLYGONS {len(tris)} {4 * len(tris)}\n")
        for t in tris:
            f.write(f"3 {t[0]} {t[1]} {t[2]}\n")
        f.write(_format_scalars(name, values))


def write_curve_vtk(path, points, segments, values, name="solution", title="curve"):
    """Polyline (boundary curve) with one vertex scalar field, as POLYDATA."""
    segs = np.asarray(segments, dtype=np.int64)
    with open(path, "w") as f:
        f.write(_HEADER.format(title=title))
        f.write("DATASET POLYDATA\n")
        f.write(_format_points(points))
        f.write(f"LINES {len(segs)} {3 * len(segs)}\n")
        for s in segs:
            f.write(f"2 {s[0]} {s[1]}\n")
        f.write(_format_scalars(name, values))


def write_bulk_vtk(path, points, triangles, values, name="solution", title="bulk"):
    """Planar triangle mesh with one vertex scalar, as UNSTRUCTURED_GRID."""
    tris = np.asarray(triangles, dtype=np.int64)
    with open(path, "w") as f:
        f.write(_HEADER.format(title=title))
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(_format_points(points))
        f.write(f"CELLS {len(tris)} {4 * len(tris)}\n")
        for t in tris:
            f.write(f"3 {t[0]} {t[1]} {t[2]}\n")
        f.write(f"CELL_TYPES {len(tris)}\n")
        f.write("\n".join(["5"] * len(tris)) + "\n")
        f.write(_format_scalars(name, values))


def read_vtk(path):
    """Parse a file written by this module.

    Returns a dict with 'points' (N, 3), 'cells' (list of index lists),
    'cell_kind' ('POLYGONS' | 'LINES' | 'CELLS') and 'point_data'
    {name: (N,) array}.
    """
    with open(path) as f:
        tokens = f.read().split("\n")
    out = {"points": None, "cells": [], "cell_kind": None, "point_data": {}}
    i = 0
    while i < len(tokens):
        line = tokens[i].split()
        if not line:
            i += 1
            continue
        key = line[0]
        if key == "POINTS":
            n = int(line[1])
            pts = [
                [float(c) for c in tokens[i + 1 + j].split()] for j in range(n)
            ]
            out["points"] = np.array(pts)
            i += n + 1
        elif key in ("POLYGONS", "LINES", "CELLS"):
            n = int(line[1])
            out["cell_kind"] = key
            for j in range(n):
                row = [int(c) for c in tokens[i + 1 + j].split()]
                if row[0] != len(row) - 1:
                    raise UsageError(f"malformed cell row in {path}")
                out["cells"].append(row[1:])
            i += n + 1
        elif key == "SCALARS":
            name = line[1]
            n = len(out["points"])
            vals = [float(tokens[i + 2 + j]) for j in range(n)]
            out["point_data"][name] = np.array(vals)
            i += n + 2
        else:
            i += 1
    if out["points"] is None:
        raise UsageError(f"no POINTS section found in {path}")
    return out
