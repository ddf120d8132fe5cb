"""Experiment configuration: defaults, validation and resolution.

A configuration is a JSON object.  Shared keys (``box``, ``resolution``,
``structure``, ``seed``, ``jets``, ``tolerances``, ``out``, ``format``)
apply to every subcommand; the remaining keys are subcommand specific.
Unknown keys, unknown tolerance names and values of the wrong type are
rejected before any computation starts.
"""

from __future__ import annotations

import copy
import json

import numpy as np

from .core import Box


class ConfigError(ValueError):
    pass


SHARED = {
    "box": {"center": 0.0, "radius": 0.5},
    "resolution": 17,
    "structure": "jst",
    "seed": 0,
    "jets": "analytic",
    "tolerances": {},
    "out": None,
    "format": "csv",
}

QUADRATIC = "x1^2 + y1^2 + x2^2 + y2^2"

COMMANDS = {
    "identities": {
        "keys": {"forms": 8, "degree": 2, "points": 32, "steps": [0.02, 0.01]},
        "tolerances": {"residual": 1e-8, "ratio_low": 3.5, "ratio_high": 4.5},
    },
    "integrability": {
        "keys": {"points": 64},
        "tolerances": {"integrable": 1e-7, "zeta1_a": 1e-9},
    },
    "tj": {
        "keys": {"points": 8, "closed_form": "printed"},
        "tolerances": {"closed_form": 1e-6, "zero": 1e-7},
    },
    "pointmass": {
        "keys": {"ks": [4, 8, 16, 32, 64], "A": 0.0, "panels": 8, "order": 8,
                 "sphere": [8, 16]},
        "tolerances": {"each": 0.02, "limit": 0.01, "closed_form": 1e-9},
    },
    "wedge": {
        "keys": {"pairs": 20, "steps": [0.005, 0.0025], "radius": 0.4, "power": 6, "degree": 3,
                 "scale": 0.3},
        "tolerances": {"ratio_low": 3.0, "ratio_high": 5.0, "symmetry_factor": 2.0},
    },
    "mameasure": {
        "keys": {"fields": [QUADRATIC, f"2*({QUADRATIC}) - 0.09"],
                 "widths": [0.08 * 2.0 ** -j for j in range(8)], "radius": 0.6,
                 "breakpoints": "radial", "burn_in": 2},
        "tolerances": {"final": 1e-3, "negative": 1e-8},
    },
    "smooth": {
        "keys": {"u": f"{QUADRATIC} + 0.15*abs(x1)", "h": 0.3,
                 "K_lower": [-0.1, -0.05, -0.05, -0.05], "K_upper": [0.1, 0.05, 0.05, 0.05],
                 "r_U": 0.25, "r_V": 0.075, "sigma": 0.08, "backend": "patch",
                 "smooth_profile": False, "refine": False},
        "tolerances": {"band": 1e-12, "d2_ratio": 1.5},
        "shared": {"box": {"center": 0.0, "radius": 0.45}},
    },
    "dirichlet": {
        "keys": {"ball": {"center": 0.0, "radius": 0.8},
                 "exact": f"{QUADRATIC} + 0.25*(x1^2 + y1^2)^2", "phi": None, "f": None,
                 "resolutions": [9, 17], "max_iter": 40},
        "tolerances": {"residual": 1e-9, "psd": 1e-9, "match": 1e-12, "boundary": 1e-12,
                       "ratio_low": 3.0, "ratio_high": 5.0, "exact_floor": 1e-9},
        "shared": {"box": {"center": 0.0, "radius": 1.0}},
    },
    "compare": {
        "keys": {"u": QUADRATIC, "v": f"1.1*({QUADRATIC}) - 0.1", "H": None,
                 "ball": {"center": 0.0, "radius": 0.8}, "flavor": "C2", "modulus_max": 1e3},
        "tolerances": {"comparison": 1e-6},
        "shared": {"box": {"center": 0.0, "radius": 1.0}},
    },
    "sobolev": {
        "keys": {"js": [1, 2, 3, 4, 5, 6, 7, 8], "A": 0.0, "radius": 0.5,
                 "probes": ["1", QUADRATIC], "center": [0.0, 0.0, 0.0, 0.0],
                 "radii": [0.05, 0.1, 0.2, 0.4]},
        "tolerances": {"decay": 1e-2, "exponent": 1.7},
    },
}

_NULLABLE = {"out", "phi", "f", "H"}


def _check_type(key, value, default):
    if key in _NULLABLE and value is None:
        return value
    if default is None:
        if not isinstance(value, (str, int, float)) or isinstance(value, bool):
            raise ConfigError(f"{key}: expected an expression or a number")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
    elif isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{key}: expected a non-empty list, got {value!r}")
    elif isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected an object, got {value!r}")
    return value


def _check_ball(key, value):
    extra = set(value) - {"center", "radius"}
    if extra:
        raise ConfigError(f"{key}: unknown keys {sorted(extra)}")
    c = value.get("center", 0.0)
    if not (isinstance(c, (int, float)) and not isinstance(c, bool)
            or isinstance(c, list) and len(c) == 4):
        raise ConfigError(f"{key}.center: expected a number or four numbers")
    r = value.get("radius")
    if isinstance(r, bool) or not isinstance(r, (int, float)) or not r > 0:
        raise ConfigError(f"{key}.radius: expected a positive number")
    return {"center": c, "radius": float(r)}


def _check_box(value):
    keys = set(value)
    if keys <= {"center", "radius"} and "radius" in keys:
        return _check_ball("box", value)
    if keys == {"lower", "upper"}:
        for k in ("lower", "upper"):
            v = value[k]
            if not (isinstance(v, (int, float)) or isinstance(v, list) and len(v) == 4):
                raise ConfigError(f"box.{k}: expected a number or four numbers")
        return dict(value)
    raise ConfigError(f"box: expected {{center, radius}} or {{lower, upper}}, got keys {sorted(keys)}")


def resolve(command: str, data: dict | None = None, overrides: dict | None = None) -> dict:
    """Fully resolved configuration for ``command``.

    ``data`` comes from the config file and ``overrides`` from command-line
    flags (which win).  Raises :class:`ConfigError` on anything unknown.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown subcommand {command!r}")
    spec = COMMANDS[command]
    cfg = copy.deepcopy(SHARED)
    cfg.update(copy.deepcopy(spec.get("shared", {})))
    cfg.update(copy.deepcopy(spec["keys"]))
    defaults = copy.deepcopy(cfg)
    tol = dict(spec["tolerances"])
    merged = {}
    for source in (data or {}, overrides or {}):
        if not isinstance(source, dict):
            raise ConfigError("configuration must be a JSON object")
        merged.update({k: v for k, v in source.items()})
    if "subcommand" in merged:
        if merged.pop("subcommand") != command:
            raise ConfigError(f"config file is for another subcommand, not {command!r}")
    unknown = set(merged) - set(cfg)
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {sorted(unknown)}")
    for key, value in merged.items():
        if key == "tolerances":
            _check_type(key, value, {})
            bad = set(value) - set(tol)
            if bad:
                raise ConfigError(f"unknown tolerances for {command}: {sorted(bad)}; "
                                  f"known: {sorted(tol)}")
            for k, v in value.items():
                tol[k] = _check_type(f"tolerances.{k}", v, 0.0)
            continue
        cfg[key] = _check_type(key, value, defaults[key])
    cfg["tolerances"] = tol
    cfg["box"] = _check_box(cfg["box"])
    if "ball" in cfg:
        cfg["ball"] = _check_ball("ball", cfg["ball"])
    if cfg["jets"] not in ("analytic", "grid"):
        raise ConfigError(f"jets must be 'analytic' or 'grid', got {cfg['jets']!r}")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be 'csv' or 'json', got {cfg['format']!r}")
    if cfg["resolution"] < 5:
        raise ConfigError("resolution must be at least 5")
    return cfg


def load(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    return data


def build_box(cfg: dict, resolution: int | None = None) -> Box:
    n = cfg["resolution"] if resolution is None else resolution
    b = cfg["box"]
    if "radius" in b:
        return Box.cube(b.get("center", 0.0), b["radius"], n)
    lo = np.broadcast_to(np.asarray(b["lower"], float), (4,))
    hi = np.broadcast_to(np.asarray(b["upper"], float), (4,))
    try:
        return Box(tuple(lo), tuple(hi), (n,) * 4)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
