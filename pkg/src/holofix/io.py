"""JSON conventions: complex numbers as {"re", "im"}, canonical key order,
non-finite floats as the strings "inf", "-inf", "nan"."""

import dataclasses
import json
import math

import numpy as np


def complex_to_json(c) -> dict:
    c = complex(c)
    return {"re": _float(c.real), "im": _float(c.imag)}


def complex_from_json(d) -> complex:
    if isinstance(d, (int, float)):
        return complex(d)
    return complex(_unfloat(d["re"]), _unfloat(d.get("im", 0.0)))


def point_to_json(z) -> list:
    return [complex_to_json(c) for c in np.atleast_1d(z)]


def point_from_json(p) -> np.ndarray:
    return np.array([complex_from_json(c) for c in p], dtype=np.complex128)


def points_to_json(Z) -> list:
    return [point_to_json(z) for z in np.atleast_2d(Z)]


def points_from_json(data) -> np.ndarray:
    if isinstance(data, dict):
        data = data["points"]
    return np.array([point_from_json(p) for p in data], dtype=np.complex128)


def _float(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _unfloat(x):
    return float(x) if isinstance(x, str) else x


def jsonable(obj):
    """Recursively convert numpy, complex and dataclass values to plain JSON types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return jsonable(obj.to_dict())
        return jsonable(dataclasses.asdict(obj))
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    return obj


def dumps(obj, indent=2) -> str:
    """Deterministic JSON text for an artifact."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=indent, allow_nan=False) + "\n"
