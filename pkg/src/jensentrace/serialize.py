"""JSON round-trips for matrices, decompositions and instances.

Floats are written with ``repr`` precision by :mod:`json`, so
``matrix_from_json(matrix_to_json(x))`` reproduces ``x`` bit for bit.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .spectral import JointSpectralDecomposition


def matrix_to_json(x) -> dict:
    """``{"dim", "re", "im"}`` with flat row-major real and imaginary parts."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got {x.shape}")
    x = x.astype(complex)
    return {
        "dim": int(x.shape[0]),
        "re": [float(v) for v in x.real.ravel()],
        "im": [float(v) for v in x.imag.ravel()],
    }


def matrix_from_json(doc: dict) -> np.ndarray:
    d = int(doc["dim"])
    re = np.array(doc["re"], dtype=float)
    im = np.array(doc["im"], dtype=float)
    if re.size != d * d or im.size != d * d:
        raise ValueError(f"matrix payload does not match dim {d}")
    return (re + 1j * im).reshape(d, d)


def tuple_to_json(members) -> list[dict]:
    return [matrix_to_json(m) for m in members]


def tuple_from_json(docs) -> list[np.ndarray]:
    return [matrix_from_json(d) for d in docs]


def decomposition_to_json(dec: JointSpectralDecomposition) -> dict:
    return {
        "method": dec.method,
        "basis": matrix_to_json(dec.basis),
        "table": [[float(v) for v in row] for row in np.asarray(dec.table)],
    }


def decomposition_from_json(doc: dict) -> JointSpectralDecomposition:
    table = np.array(doc["table"], dtype=float)
    return JointSpectralDecomposition(matrix_from_json(doc["basis"]), table, doc["method"])


def _default(obj: Any):
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and obj.shape[0] == obj.shape[1] and np.iscomplexobj(obj):
            return matrix_to_json(obj)
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, **kw) -> str:
    """``json.dumps`` that understands numpy scalars and complex matrices."""
    return json.dumps(obj, default=_default, **kw)
