"""CSV and JSON output with full double precision."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "%.17g"


def write_csv(path, columns: dict) -> Path:
    """Write equal-length 1-D columns; the header is the dict's key order."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n]).ravel() for n in names]
    n = {len(d) for d in data}
    if len(n) != 1:
        raise ValueError(f"columns have different lengths: {dict(zip(names, map(len, data)))}")
    table = np.column_stack([d.astype(float) for d in data]) if data else np.empty((0, 0))
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, table, delimiter=",", header=",".join(names), comments="", fmt=FLOAT_FORMAT)
    return path


def read_csv(path) -> dict:
    """Read a CSV written by :func:`write_csv` back into named float columns."""
    path = Path(path)
    with path.open() as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {n: data[:, i] for i, n in enumerate(names)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
