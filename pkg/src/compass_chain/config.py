"""Experiment configuration: strict JSON parsing, flag overrides and hashing.

Precedence, lowest first: experiment defaults, the ``--config`` JSON file,
command-line flags.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
import copy
import hashlib
import json

import numpy as np

from .errors import ConfigError
from .model import ModelParams

EXPERIMENTS = (
    "gs-energy",
    "spectrum",
    "gap",
    "fidelity-map",
    "fs-scan",
    "fs-scaling",
    "concurrence",
    "entropy",
    "correlator",
    "magnetization",
    "oracle-validate",
    "ising-check",
)

TOP_KEYS = {"experiment", "params", "sweep", "fit", "options", "output", "seed"}
PARAM_KEYS = {"n_cells", "alpha", "h", "J", "beta", "bc"}
GRID_KEYS = {"start", "stop", "count"}
FIT_KEYS = {"window", "tolerance"}


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if isinstance(self.count, bool) or int(self.count) != self.count or self.count < 1:
            raise ConfigError(f"grid count must be an integer >= 1, got {self.count!r}")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "stop", float(self.stop))
        if self.count > 1 and self.start == self.stop:
            raise ConfigError("grid with count > 1 needs start != stop")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count)

    @classmethod
    def parse(cls, obj) -> "GridSpec":
        if isinstance(obj, str):
            parts = obj.split(":")
            if len(parts) != 3:
                raise ConfigError(f"grid must be start:stop:count, got {obj!r}")
            try:
                return cls(float(parts[0]), float(parts[1]), int(parts[2]))
            except ValueError as exc:
                raise ConfigError(f"bad grid {obj!r}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError(f"grid spec must be an object, got {obj!r}")
        _reject_unknown(obj, GRID_KEYS, "sweep grid")
        missing = GRID_KEYS - obj.keys()
        if missing:
            raise ConfigError(f"grid spec missing {sorted(missing)}")
        return cls(obj["start"], obj["stop"], obj["count"])


@dataclass(frozen=True)
class ExperimentSchema:
    """Defaults and the keys an experiment accepts."""

    params: dict
    sweep: dict
    sweep_vars: frozenset
    options: dict
    fit: dict = field(default_factory=dict)


def _grid(start, stop, count):
    return {"start": start, "stop": stop, "count": count}


SCHEMAS: dict[str, ExperimentSchema] = {
    "gs-energy": ExperimentSchema(
        {"n_cells": 4, "h": 0.8, "bc": "PBC"}, {"alpha": _grid(-2, 2, 41)},
        frozenset({"alpha", "h"}), {"oracle": None}),
    "spectrum": ExperimentSchema(
        {"n_cells": 2, "alpha": 1.0, "h": 0.8}, {}, frozenset(), {"oracle": None}),
    "gap": ExperimentSchema(
        {"n_cells": 6, "alpha": 1.0}, {"h": _grid(0, 2, 21)},
        frozenset({"alpha", "h"}), {"oracle": None}),
    "fidelity-map": ExperimentSchema(
        {"n_cells": 100}, {"alpha": _grid(-2, 2, 41), "h": _grid(-2, 2, 41)},
        frozenset({"alpha", "h"}), {"delta": 1e-4, "lift": "field"}),
    "fs-scan": ExperimentSchema(
        {"n_cells": 100, "alpha": 1.0}, {"h": _grid(-0.1, 0.1, 201)},
        frozenset({"alpha", "h"}),
        {"direction": "h", "delta": 1e-4, "richardson": False, "lift": "field"}),
    "fs-scaling": ExperimentSchema(
        {"n_cells": 100, "alpha": 1.0}, {"h": _grid(0, 0.1, 101)}, frozenset({"h"}),
        {"sizes": [100, 200, 300, 400], "delta": 1e-4, "nu_range": [0.5, 2.0],
         "lift": "field", "synthetic_nu": None, "noise": 0.0},
        {"window": None}),
    "concurrence": ExperimentSchema(
        {"n_cells": 256, "alpha": 1.0}, {"h": _grid(-1, 1, 41)}, frozenset({"h"}),
        {"alphas": [0.6, 1.0, 1.4], "pair": [0, 1], "d_alpha": 1e-3, "lift": "field"}),
    "entropy": ExperimentSchema(
        {"n_cells": 256, "alpha": 1.0}, {}, frozenset(),
        {"block_sizes": None, "lift": "field", "saturation_threshold": 0.05},
        {"window": None}),
    "correlator": ExperimentSchema(
        {"n_cells": 512, "alpha": 1.0}, {}, frozenset(),
        {"r_max": 64, "lift": "field"}, {"window": [8, 64]}),
    "magnetization": ExperimentSchema(
        {"n_cells": 256, "alpha": 1.0}, {"h": _grid(-1, 1, 81)}, frozenset({"h"}),
        {"fit_points": 41, "lift": "field"}, {"window": [1e-3, 1e-1]}),
    "oracle-validate": ExperimentSchema(
        {"n_cells": 6, "alpha": 1.0, "h": 0.3}, {}, frozenset(),
        {"pair": [0, 1], "block": 4, "lift": "field"}, {"tolerance": 1e-8}),
    "ising-check": ExperimentSchema(
        {"n_cells": 4}, {"h": _grid(0.1, 3.0, 30)}, frozenset({"h"}),
        {"oracle": None, "fit_cells": 256, "fit_points": 41, "lift": "field"},
        {"window": [1e-3, 1e-1], "tolerance": 0.05}),
}


def _reject_unknown(obj: dict, allowed, what: str):
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(f"unknown {what} key(s): {sorted(extra)}")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict
    sweep: dict
    fit: dict
    options: dict
    output: str = "."
    seed: int | None = None

    def model_params(self, **overrides) -> ModelParams:
        kw = dict(self.params)
        kw.update(overrides)
        return ModelParams(**kw)

    def grid(self, var: str) -> np.ndarray | None:
        """Swept values of ``var``; a fixed parameter counts as a one-point grid."""
        spec = self.sweep.get(var)
        if spec is not None:
            return GridSpec.parse(spec).values()
        if var in self.params:
            return np.array([float(self.params[var])])
        return None

    def canonical(self) -> dict:
        """Everything that determines the numbers (the output directory does not)."""
        d = asdict(self)
        d.pop("output")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_config(experiment: str, file_data: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge defaults, file contents and flag overrides, validating every key."""
    file_data = copy.deepcopy(file_data or {})
    overrides = overrides or {}
    if not isinstance(file_data, dict):
        raise ConfigError("config file must hold a JSON object")
    _reject_unknown(file_data, TOP_KEYS, "top-level")
    exp = file_data.get("experiment", experiment)
    if experiment and exp != experiment:
        raise ConfigError(f"config file is for {exp!r}, command is {experiment!r}")
    if exp not in SCHEMAS:
        raise ConfigError(f"unknown experiment {exp!r}; choose from {list(EXPERIMENTS)}")
    schema = SCHEMAS[exp]

    params = dict(schema.params)
    user_params = set()
    for src in (file_data.get("params", {}), overrides.get("params", {})):
        _reject_unknown(src, PARAM_KEYS, "params")
        params.update(src)
        user_params |= set(src)

    # a fixed value given by the user replaces a default sweep of that variable
    sweep = {v: s for v, s in copy.deepcopy(schema.sweep).items() if v not in user_params}
    for src in (file_data.get("sweep", {}), overrides.get("sweep", {})):
        _reject_unknown(src, schema.sweep_vars, f"sweep ({exp})")
        for var, spec in src.items():
            g = GridSpec.parse(spec)
            sweep[var] = {"start": g.start, "stop": g.stop, "count": g.count}
            params.pop(var, None)
    for var, spec in sweep.items():
        GridSpec.parse(spec)
        params.pop(var, None)

    fit = dict(schema.fit)
    for src in (file_data.get("fit", {}), overrides.get("fit", {})):
        _reject_unknown(src, set(schema.fit) & FIT_KEYS, f"fit ({exp})")
        fit.update(src)
    if fit.get("window") is not None:
        w = fit["window"]
        if not (isinstance(w, (list, tuple)) and len(w) == 2 and float(w[0]) < float(w[1])):
            raise ConfigError(f"fit window must be [lo, hi] with lo < hi, got {w!r}")
        fit["window"] = [float(w[0]), float(w[1])]

    options = copy.deepcopy(schema.options)
    for src in (file_data.get("options", {}), overrides.get("options", {})):
        _reject_unknown(src, schema.options, f"options ({exp})")
        options.update(src)

    output = overrides.get("output") or file_data.get("output") or "."
    seed = overrides.get("seed", file_data.get("seed"))
    if seed is not None and (isinstance(seed, bool) or int(seed) != seed):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    params = {k: _normalize_param(k, v) for k, v in sorted(params.items())}
    cfg = ExperimentConfig(exp, params, sweep, fit, options, str(output),
                           None if seed is None else int(seed))
    # fail early on bad model parameters (swept values are checked per point)
    probe = {v: GridSpec.parse(s).start for v, s in sweep.items() if v in PARAM_KEYS}
    cfg.model_params(**probe)
    return cfg


def _normalize_param(key: str, value):
    try:
        if key == "n_cells":
            if isinstance(value, bool) or int(value) != float(value):
                raise ValueError
            return int(value)
        if key == "bc":
            return str(value).upper()
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {value!r}") from None


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
