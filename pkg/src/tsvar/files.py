"""JSON and CSV formats read and written by the command line tool.

Floats are always written with 17 significant digits so that every double
survives a write/read round trip.  Non-finite values are written as the
strings ``"nan"``, ``"inf"`` and ``"-inf"``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .expr import parse
from .sturm import SLProblem
from .timescale import Interval, Points, TimeScale, build
from .variational import IsoProblem, SolverOptions


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def dumps(obj, indent=2) -> str:
    """JSON text with 17-significant-digit floats and stable key order."""
    return _dump(obj, indent, 0) + "\n"


def _dump(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_scalar(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    return _scalar(obj)


def _scalar(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        text = fmt(v)
        return text if math.isfinite(v) else json.dumps(text)
    return json.dumps(str(v))


def loads(text: str):
    return json.loads(text)


def read_json(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise InvalidSpec(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InvalidSpec(f"{path}: expected a JSON object")
    return data


def _number(spec, key, where):
    try:
        val = spec[key]
    except KeyError:
        raise InvalidSpec(f"{where}: missing field {key!r}") from None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InvalidSpec(f"{where}: field {key!r} must be a number")
    return float(val)


def timescale_from_dict(spec: dict) -> TimeScale:
    blocks = spec.get("blocks") if isinstance(spec, dict) else None
    if not isinstance(blocks, list) or not blocks:
        raise InvalidSpec("time scale spec needs a non-empty 'blocks' list")
    parsed = []
    for k, blk in enumerate(blocks):
        where = f"blocks[{k}]"
        kind = blk.get("kind") if isinstance(blk, dict) else None
        if kind == "interval":
            parsed.append(Interval(_number(blk, "a", where), _number(blk, "b", where),
                                   _number(blk, "h", where)))
        elif kind == "points":
            values = blk.get("values")
            if not isinstance(values, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
            ):
                raise InvalidSpec(f"{where}: 'values' must be a list of numbers")
            parsed.append(Points(values))
        else:
            raise InvalidSpec(f"{where}: kind must be 'interval' or 'points', got {kind!r}")
    return build(parsed)


def timescale_to_dict(ts: TimeScale) -> dict:
    out = []
    for blk in ts.blocks:
        if isinstance(blk, Interval):
            out.append({"kind": "interval", "a": blk.a, "b": blk.b, "h": blk.h})
        else:
            out.append({"kind": "points", "values": list(blk.values)})
    return {"blocks": out}


def read_timescale(path) -> TimeScale:
    return timescale_from_dict(read_json(path))


def _scale_of(spec: dict, base: Path) -> TimeScale:
    if "timescale" in spec:
        return timescale_from_dict(spec["timescale"])
    if "timescale_file" in spec:
        return read_timescale(base / spec["timescale_file"])
    raise InvalidSpec("problem needs 'timescale' or 'timescale_file'")


def _text(spec, key):
    val = spec.get(key)
    if not isinstance(val, str):
        raise InvalidSpec(f"field {key!r} must be an expression string")
    return parse(val)


def read_problem(path) -> tuple[IsoProblem, SolverOptions]:
    path = Path(path)
    spec = read_json(path)
    scale = _scale_of(spec, path.parent)
    problem = IsoProblem(
        scale,
        _text(spec, "lagrangian"),
        _text(spec, "constraint"),
        _number(spec, "ya", "problem"),
        _number(spec, "yb", "problem"),
        _number(spec, "l", "problem"),
        spec.get("sense", "min"),
    )
    solver = spec.get("solver", {})
    if not isinstance(solver, dict):
        raise InvalidSpec("'solver' must be an object")
    unknown = set(solver) - {"tol", "max_iter", "lambda0", "init", "init_values"}
    if unknown:
        raise InvalidSpec(f"unknown solver options {sorted(unknown)}")
    opts = SolverOptions()
    if "tol" in solver:
        opts.tol = _number(solver, "tol", "solver")
    if "max_iter" in solver:
        if not isinstance(solver["max_iter"], int) or solver["max_iter"] < 1:
            raise InvalidSpec("solver.max_iter must be a positive integer")
        opts.max_iter = solver["max_iter"]
    if "lambda0" in solver:
        opts.lambda0 = _number(solver, "lambda0", "solver")
    if "init" in solver:
        if solver["init"] not in ("linear", "values"):
            raise InvalidSpec("solver.init must be 'linear' or 'values'")
        opts.init = solver["init"]
    if opts.init == "values":
        vals = solver.get("init_values")
        if not isinstance(vals, list) or len(vals) != len(scale):
            raise InvalidSpec(f"solver.init_values must list {len(scale)} numbers")
        opts.init_values = np.array(vals, dtype=float)
    return problem, opts


def read_sl_problem(path) -> SLProblem:
    path = Path(path)
    spec = read_json(path)
    scale = _scale_of(spec, path.parent)
    k = spec.get("k", 1)
    if isinstance(k, bool) or not isinstance(k, int):
        raise InvalidSpec("'k' must be an integer")
    return SLProblem(scale, _text(spec, "q"), k)


def write_csv(header, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def read_trajectory(path, scale: TimeScale) -> np.ndarray:
    """Values of a ``t,y`` CSV; its ``t`` column must match the grid."""
    path = Path(path)
    try:
        rows = list(csv.reader(path.read_text().splitlines()))
    except FileNotFoundError:
        raise InvalidSpec(f"{path}: no such file") from None
    if not rows or [c.strip() for c in rows[0]] != ["t", "y"]:
        raise InvalidSpec(f"{path}: expected header 't,y'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    except ValueError:
        raise InvalidSpec(f"{path}: rows must hold two numbers") from None
    if len(data) != len(scale) or not np.allclose(data[:, 0], scale.points, rtol=0, atol=1e-9):
        raise InvalidSpec(f"{path}: t column does not match the problem's time scale")
    return data[:, 1]
