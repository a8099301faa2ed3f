import json
import math

import numpy as np

SIGNIFICANT_DIGITS = 17


def format_float(value):
    """17 significant digits, enough for a bit-exact decimal round trip"""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def parse_float(text):
    return float(text.strip())


def jsonable(obj):
    """
    Convert numpy values, tuples and non-finite floats into plain JSON data

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else format_float(value)
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def canonical_json(data):
    """Deterministic JSON text: sorted keys, fixed separators"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def pretty_json(data):
    return json.dumps(jsonable(data), sort_keys=True, indent=2, allow_nan=False)


def json_float(value):
    """Inverse of jsonable for one float field ("inf" strings included)"""
    return float(value)


def format_vector(x):
    return "[" + ", ".join(f"{v:.6g}" for v in np.atleast_1d(x)) + "]"
