"""Experiment configuration: strict YAML/JSON parsing with named-field errors.

Layout::

    scenario: ground-state
    params: {d: 1, s: 0.8, alpha: 4.0, radial: false}
    grid: {N: 1024, L: 32.0}
    seed: 0
    inputs: {ground_state: runs/gs}      # upstream artifacts, scenario dependent
    options: {...}                       # scenario knobs, defaults below
    assertions: {...}                    # pass/fail thresholds, defaults below
    sweep: {"params.alpha": [3.0, 4.0]}  # optional, one run per value
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field as dc_field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .spectral import ParamError, derive_params

SCENARIOS = ("ground-state", "gn-check", "evolve", "blowup", "concentration", "virial",
             "profiles", "limiting-profile")


class ConfigError(ValueError):
    """Raised with the dotted name of the offending field."""


_INITIAL = {"kind": "gaussian", "width": 1.0, "amp": 1.0}

OPTIONS: Dict[str, dict] = {
    "ground-state": {"kind": "sobolev", "max_iter": 5000, "tol": 1e-7, "box_sensitivity": False},
    "gn-check": {"samples": 1000, "max_bumps": 4},
    "evolve": {"initial": _INITIAL, "dt": 1e-3, "t_end": 1.0, "record_stride": 10,
               "tail_threshold": 1e-6, "strang_check": False, "strang_t_end": 0.1, "strang_grid": None},
    "virial": {"initial": _INITIAL, "dt": 5e-4, "t_end": 0.08, "R": 3.9, "record_stride": 1,
               "tail_threshold": 1e-3},
    "blowup": {"initial": _INITIAL, "dt0": 2e-3, "t_end": 1.0, "adapt": "inverse-sup", "c_adapt": 1.0,
               "record_stride": 10, "snapshot_stride": 2, "keep_last": 24, "hs_factor": 2.2,
               "spectral_guard": 1e-3, "tail_threshold": 1e-4, "growth_from": 1.2, "min_records": 20},
    "concentration": {"A": None, "beta": 0.8, "last": 10},
    "profiles": {"mode": "planted", "separations": [8.0, 16.0, 32.0], "second": {"width": 1.0, "amp": 1.0},
                 "noise": 0.0, "combine": "mean", "window": 2.0, "threshold": 0.05,
                 "shifts": [-3.0, 5.0, 11.0]},
    "limiting-profile": {"theta": 0.7, "x0": [1.234], "lam": 2.5},
}

ASSERTIONS: Dict[str, dict] = {
    "ground-state": {"residual_rel": 1e-6, "pohozaev": 1e-5, "energy": 1e-5, "agn_routes": 1e-6},
    "gn-check": {"margin": 1e-6, "equality": 1e-4},
    "evolve": {"mass_drift": 1e-10, "energy_drift": 1e-7, "strang_ratio": [3.6, 4.4]},
    "virial": {"defect": 1e-3},
    "blowup": {"stop_reason": "Hs-threshold", "fit_R2": 0.99, "exponent_fraction": 0.8},
    "concentration": {"fraction": 0.9},
    "profiles": {"profile_error": 0.05, "shift_cells": 1.0, "pythagoras": 0.02, "remainder": 0.05,
                 "bound_ratio": 0.02},
    "limiting-profile": {"theta": 1e-6, "lam": 1e-6, "x0_cells": 1.0},
}

INPUTS: Dict[str, tuple] = {
    "ground-state": (), "evolve": (), "virial": (), "blowup": (),
    "gn-check": ("ground_state",),
    "concentration": ("ground_state", "snapshots"),
    "profiles": ("ground_state",),
    "limiting-profile": ("ground_state",),
}

TOP = {"scenario", "params", "grid", "seed", "inputs", "options", "assertions", "sweep"}


@dataclass
class ExperimentConfig:
    scenario: str
    params: dict
    grid: dict
    seed: int = 0
    inputs: Dict[str, str] = dc_field(default_factory=dict)
    options: dict = dc_field(default_factory=dict)
    assertions: dict = dc_field(default_factory=dict)
    sweep: Dict[str, List[Any]] = dc_field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "params": self.params, "grid": self.grid, "seed": self.seed,
                "inputs": self.inputs, "options": self.options, "assertions": self.assertions,
                "sweep": self.sweep}

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def model(self):
        p = self.params
        return derive_params(p["d"], p["s"], p["alpha"], p.get("radial", False))


def _merge(defaults: dict, given: dict, where: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{where}: expected a mapping")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if k not in defaults:
            raise ConfigError(f"{where}.{k}: unknown key")
        if isinstance(defaults[k], dict) and defaults[k]:
            out[k] = _merge(defaults[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


def _number(v, where, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}: expected an integer")
    if positive and not v > 0:
        raise ConfigError(f"{where}: must be positive")
    return int(v) if integer else float(v)


def validate(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a mapping at top level")
    for k in raw:
        if k not in TOP:
            raise ConfigError(f"{k}: unknown key")
    sc = raw.get("scenario")
    if sc not in SCENARIOS:
        raise ConfigError(f"scenario: must be one of {', '.join(SCENARIOS)}")
    for req in ("params", "grid"):
        if req not in raw:
            raise ConfigError(f"{req}: missing")
    params = _merge({"d": None, "s": None, "alpha": None, "radial": False}, raw["params"], "params")
    for k in ("d", "s", "alpha"):
        if params[k] is None:
            raise ConfigError(f"params.{k}: missing")
    params["d"] = _number(params["d"], "params.d", positive=True, integer=True)
    params["s"] = _number(params["s"], "params.s")
    params["alpha"] = _number(params["alpha"], "params.alpha")
    if not isinstance(params["radial"], bool):
        raise ConfigError("params.radial: expected true or false")
    grid = _merge({"N": None, "L": None}, raw["grid"], "grid")
    grid["N"] = _number(grid["N"], "grid.N", positive=True, integer=True)
    grid["L"] = _number(grid["L"], "grid.L", positive=True)
    if grid["N"] % 2:
        raise ConfigError("grid.N: must be even")
    seed = _number(raw.get("seed", 0), "seed", integer=True)
    inputs = raw.get("inputs", {}) or {}
    if not isinstance(inputs, dict):
        raise ConfigError("inputs: expected a mapping")
    for k, v in inputs.items():
        if k not in INPUTS[sc] and not (sc == "limiting-profile" and k == "snapshots"):
            raise ConfigError(f"inputs.{k}: unknown key for scenario {sc}")
        if not isinstance(v, str):
            raise ConfigError(f"inputs.{k}: expected a path")
    for k in INPUTS[sc]:
        if k not in inputs:
            raise ConfigError(f"inputs.{k}: required by scenario {sc}")
    options = _merge(OPTIONS[sc], raw.get("options", {}) or {}, "options")
    assertions = _merge(ASSERTIONS[sc], raw.get("assertions", {}) or {}, "assertions")
    sweep = raw.get("sweep", {}) or {}
    if not isinstance(sweep, dict) or not all(isinstance(v, list) and v for v in sweep.values()):
        raise ConfigError("sweep: expected a mapping of dotted keys to non-empty lists")
    if len({len(v) for v in sweep.values()}) > 1:
        raise ConfigError("sweep: all value lists must have equal length")
    cfg = ExperimentConfig(sc, params, grid, seed, dict(inputs), options, assertions, dict(sweep))
    try:
        cfg.model()
    except ParamError as e:
        raise ConfigError(f"params.{e}") from None
    return cfg


def load(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config: not valid YAML/JSON ({e})") from None
    return validate(raw)


def preset_names() -> List[str]:
    root = resources.files("fnlslab") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> ExperimentConfig:
    root = resources.files("fnlslab") / "presets"
    f = root / f"{name}.yaml"
    if not f.is_file():
        raise ConfigError(f"preset: unknown preset {name!r} (available: {', '.join(preset_names())})")
    return validate(yaml.safe_load(f.read_text()))


def with_override(cfg: ExperimentConfig, key: str, value) -> ExperimentConfig:
    """Return a copy with a dotted key such as ``params.alpha`` replaced, revalidated."""
    raw = copy.deepcopy(cfg.as_dict())
    raw.pop("sweep")
    node = raw
    parts = key.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"sweep.{key}: no such field")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"sweep.{key}: no such field")
    node[parts[-1]] = value
    return validate(raw)
