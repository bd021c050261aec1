"""Schema-stable JSON serialization for the toolkit's wire formats.

Floats are always written with 17 significant digits so output files are
byte-stable across runs and platforms and round-trip exactly.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any, Iterator, TextIO

import numpy as np

from .groups import ComplexMatrix, Group, ParamMatrix

__all__ = [
    "SchemaError",
    "dumps",
    "param_matrix_to_obj",
    "param_matrix_from_obj",
    "complex_matrix_to_obj",
    "complex_matrix_from_obj",
    "iter_jsonl",
]


class SchemaError(ValueError):
    """Input object does not match the declared schema."""


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    return format(x, ".17g")


def _write(obj: Any, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(_fmt_float(obj))
    elif isinstance(obj, Fraction):
        parts.append(json.dumps(str(obj)))
    elif isinstance(obj, (np.floating,)):
        parts.append(_fmt_float(float(obj)))
    elif isinstance(obj, (np.integer,)):
        parts.append(str(int(obj)))
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                parts.append(",")
            if not isinstance(k, str):
                raise TypeError("JSON object keys must be strings")
            parts.append(json.dumps(k))
            parts.append(":")
            _write(v, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        parts.append("[")
        for i, v in enumerate(seq):
            if i:
                parts.append(",")
            _write(v, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    parts: list[str] = []
    _write(obj, parts)
    return "".join(parts)


def _float_grid(rows: Any, d: int | None = None) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"expected a numeric grid: {exc}") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise SchemaError("grid must be square")
    if d is not None and arr.shape[0] != d:
        raise SchemaError(f"grid is {arr.shape[0]}x{arr.shape[0]}, header says d={d}")
    return arr


def param_matrix_to_obj(params: ParamMatrix) -> dict:
    """``{"group": "U"|"SU", "d": d, "lambda": [[...]]}`` (row-major;
    the (d, d) slot is written as 0.0 and ignored for SU)."""
    return {
        "group": params.group.json_tag,
        "d": params.d,
        "lambda": [[float(v) for v in row] for row in params.lam],
    }


def param_matrix_from_obj(obj: Any) -> ParamMatrix:
    if not isinstance(obj, dict):
        raise SchemaError("parameter object must be a JSON object")
    try:
        group = Group.from_tag(obj["group"])
        d = int(obj["d"])
        grid = _float_grid(obj["lambda"], d)
    except KeyError as exc:
        raise SchemaError(f"missing field {exc}") from exc
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    try:
        return ParamMatrix(group, grid)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def complex_matrix_to_obj(matrix: ComplexMatrix | np.ndarray) -> dict:
    arr = matrix.entries if isinstance(matrix, ComplexMatrix) else np.asarray(matrix)
    return {
        "d": arr.shape[0],
        "re": [[float(v) for v in row] for row in arr.real],
        "im": [[float(v) for v in row] for row in arr.imag],
    }


def complex_matrix_from_obj(obj: Any) -> ComplexMatrix:
    if not isinstance(obj, dict):
        raise SchemaError("matrix object must be a JSON object")
    try:
        d = int(obj["d"])
        re = _float_grid(obj["re"], d)
        im = _float_grid(obj["im"], d)
    except KeyError as exc:
        raise SchemaError(f"missing field {exc}") from exc
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    try:
        return ComplexMatrix(re + 1j * im)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def iter_jsonl(fp: TextIO) -> Iterator[Any]:
    for line in fp:
        line = line.strip()
        if not line:
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON line: {exc}") from exc
