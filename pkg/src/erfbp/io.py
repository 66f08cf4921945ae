"""Deterministic serialization of results to CSV and JSON.

All floats are written with repr-precision ("%.17g"), keys are sorted, and
content is fully assembled in memory before any file is touched, so a given
input always produces byte-identical files and failures never leave partial
output behind.
"""

from __future__ import annotations

import json
import os

import numpy as np

__all__ = [
    "fmt",
    "curve_csv",
    "trajectory_csv",
    "region_map_csv",
    "region_map_json",
    "equilibria_json",
    "equilibria_csv",
    "write_text",
]


def fmt(x):
    """Shortest round-trip decimal form of a float."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def to_json(payload):
    return json.dumps(_jsonable(payload), sort_keys=True, indent=1) + "\n"


def curve_csv(curve):
    """CSV polyline with the defining-equation header line."""
    lines = [curve.header(), "m1,m2"]
    for v in curve.vertices:
        lines.append(f"{fmt(v[0])},{fmt(v[1])}")
    return "\n".join(lines) + "\n"


def trajectory_csv(traj):
    lines = ["t,x,y,vx,vy,C"]
    for t, s, c in zip(traj.times, traj.states, traj.jacobi):
        lines.append(",".join(fmt(v) for v in (t, s[0], s[1], s[2], s[3], c)))
    return "\n".join(lines) + "\n"


def region_map_csv(rmap):
    rows = rmap.to_rows()
    if not rows:
        return "m1,m2\n"
    cols = list(rows[0])
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(fmt(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def region_map_json(rmap):
    return to_json(rmap.summary())


def equilibria_json(eqset, reports=None):
    payload = eqset.to_dict()
    if reports is not None:
        for rec, rep in zip(payload["points"], reports):
            rec["stability"] = rep.to_dict()
    return to_json(payload)


def equilibria_csv(eqset, reports=None):
    cols = ["label", "x", "y", "grad_norm", "degeneracy"]
    if reports is not None:
        cols += ["classification", "c2", "c0", "discriminant", "omega1", "omega2"]
    lines = [",".join(cols)]
    for k, p in enumerate(eqset.points):
        row = [p.label or "", fmt(p.x), fmt(p.y), fmt(p.grad_norm), fmt(p.degeneracy)]
        if reports is not None:
            r = reports[k]
            row += [r.classification, fmt(r.c2), fmt(r.c0), fmt(r.discriminant),
                    fmt(r.omega1), fmt(r.omega2)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_text(path, content):
    """Atomic write: assemble fully, then replace."""
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(content)
    os.replace(tmp, path)
