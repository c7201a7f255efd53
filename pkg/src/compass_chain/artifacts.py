"""CSV and JSON artifacts with embedded config hashes, plus a file comparator."""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version as _dist_version
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError

try:
    VERSION = _dist_version("artifact")
except PackageNotFoundError:  # running from a source checkout
    VERSION = "0.1.0"


@dataclass
class Curve:
    name: str
    columns: list[str]
    rows: list[tuple]


@dataclass
class ExperimentResult:
    curves: list[Curve]
    fits: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def write_csv(path: Path, curve: Curve, provenance: dict) -> None:
    lines = [f"# {k}: {v}" for k, v in provenance.items()]
    lines.append(",".join(curve.columns))
    for row in curve.rows:
        if len(row) != len(curve.columns):
            raise ValueError(f"row width {len(row)} != {len(curve.columns)} columns")
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Returns (comment key/values, column names, float data)."""
    comments, rows, header = {}, [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(":")
            comments[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ConfigError(f"{path} has no header row")
    data = np.array(rows, float).reshape(len(rows), len(header))
    return comments, header, data


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def compare_csv(a, b, tolerance: float = 0.0) -> dict:
    """Max abs difference per column of two artifacts produced by the same config."""
    ca, ha, da = read_csv(a)
    cb, hb, db = read_csv(b)
    hash_a, hash_b = ca.get("config_hash"), cb.get("config_hash")
    if hash_a is None or hash_b is None:
        raise ConfigError("both files must carry a config_hash comment")
    if hash_a != hash_b:
        raise ConfigError(f"config hash mismatch: {hash_a} vs {hash_b}")
    if ha != hb or da.shape != db.shape:
        raise ConfigError("files differ in columns or row count")
    diffs = {c: float(np.nanmax(np.abs(da[:, k] - db[:, k]), initial=0.0)) for k, c in enumerate(ha)}
    return {"config_hash": hash_a, "max_abs_diff": diffs,
            "within_tolerance": all(v <= tolerance for v in diffs.values())}
