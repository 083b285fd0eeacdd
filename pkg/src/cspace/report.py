"""Deterministic JSON/CSV output helpers."""
from __future__ import annotations

import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

SIG_DIGITS = 4


def sig(x, digits: int = SIG_DIGITS):
    """Round to ``digits`` significant digits (floats only)."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x) or x == 0.0:
        return 0.0 if x == 0.0 else x
    return float(f"{x:.{digits - 1}e}")


def clean(obj):
    """Convert numpy scalars/arrays recursively and round floats."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return sig(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> None:
    text = dumps(obj)
    if path is None or str(path) == "-":
        print(text, end="")
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def mesh_hash(vertices: np.ndarray, triangles: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(vertices, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(triangles, dtype="<i8").tobytes())
    return h.hexdigest()[:16]
