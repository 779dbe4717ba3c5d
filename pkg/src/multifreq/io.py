"""Field CSV, legacy-VTK and deterministic JSON output."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .mesh import Mesh

FIELD_COLUMNS = ("vertex_id", "x", "y", "re", "im")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj) -> str:
    """JSON with sorted keys, NaN mapped to null; byte-stable for equal input."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_field_csv(path, mesh: Mesh, values, vertex_ids=None) -> Path:
    """Columns ``vertex_id, x, y, re, im``; ``vertex_ids`` restricts the rows."""
    values = np.asarray(values, complex)
    ids = np.arange(mesh.n_vertices) if vertex_ids is None else np.asarray(vertex_ids)
    if len(values) != len(ids):
        raise ValueError("one value per listed vertex required")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELD_COLUMNS)
        for i, z in zip(ids, values):
            x, y = mesh.vertices[i]
            w.writerow([int(i), repr(float(x)), repr(float(y)), repr(float(z.real)),
                        repr(float(z.imag))])
    return path


def read_field_csv(path):
    """Returns ``(vertex_ids, points, values)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0].astype(np.int64), data[:, 1:3], data[:, 3] + 1j * data[:, 4]


def write_table_csv(path, columns: dict) -> Path:
    """Plain CSV from equal-length named columns."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(v.item()) if isinstance(v, np.generic) else repr(v) for v in row])
    return path


def write_vtk(path, mesh: Mesh, point_data: dict, title: str = "multifreq") -> Path:
    """Legacy ASCII VTK unstructured grid; complex arrays split into ``_re`` / ``_im``."""
    n = mesh.n_vertices
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist()]
    m = mesh.n_triangles
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {m}")
    lines += ["5"] * m
    arrays = {}
    for name, vals in point_data.items():
        vals = np.asarray(vals)
        if len(vals) != n:
            raise ValueError(f"point data {name!r} has {len(vals)} entries, mesh has {n}")
        if np.iscomplexobj(vals):
            arrays[f"{name}_re"] = vals.real
            arrays[f"{name}_im"] = vals.imag
        else:
            arrays[name] = vals.astype(float)
    if arrays:
        lines.append(f"POINT_DATA {n}")
        for name, vals in arrays.items():
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [repr(float(v)) if np.isfinite(v) else "nan" for v in vals]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
