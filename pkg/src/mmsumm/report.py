"""Deterministic JSON report serialization.

Keys are sorted and every float is written with 17 significant digits, so
``loads(dumps(r)) == r`` holds exactly and equal reports produce equal bytes.
Floats always keep a decimal point or exponent so they parse back as floats.
Non-finite numbers are rejected.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import errors

_str = json.JSONEncoder(ensure_ascii=False).encode


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise errors.NonFinite(f"report value {x!r} is not finite")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _to_plain(obj):
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _emit(obj, out: list[str], indent: int, level: int):
    obj = _to_plain(obj)
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(_str(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        keys = list(obj)
        if not all(isinstance(k, str) for k in keys):
            raise TypeError("report keys must be strings")
        out.append("{")
        for n, k in enumerate(sorted(keys)):
            if n:
                out.append(",")
            out.append(pad)
            out.append(_str(k))
            out.append(": " if indent else ":")
            _emit(obj[k], out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for n, v in enumerate(obj):
            if n:
                out.append(",")
            out.append(pad)
            _emit(v, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} in a report")


def dumps(report, indent: int = 2) -> str:
    out: list[str] = []
    _emit(report, out, indent, 0)
    return "".join(out) + "\n"


def loads(text: str):
    return json.loads(text)
