"""Experiment configuration: defaults, validation, resolution and hashing.

A single JSON document drives every pipeline. All defaults are
materialized into the resolved configuration before hashing, so the hash
echoed into each output file pins the complete parameter set.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from typing import Optional

from .errors import ConfigError
from .model import ModelConfig

_WINDOW_THETA = (2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)

DEFAULTS = {
    "seed": 20240817,
    "output_dir": "out",
    "model": {"m": 3, "R": 1.4, "sigma": 1.0 / 3.0},
    "classical": {
        "E": 0.5,
        "R0": 1.0,
        "rtol": 1e-10,
        "atol": 1e-12,
        "crossing_tol": 1e-12,
        "time_budget_factor": 1000.0,
        "escape_vmin": 1e-4,
        "drift_tol": 1e-8,
    },
    "dimension": {
        "N0": 10000,
        "N1": 100,
        "k0": 6,
        "window": {
            "theta": [_WINDOW_THETA[0], _WINDOW_THETA[1]],
            "ptheta": [-0.5, 0.5],
        },
        "R_values": [1.4, 1.45, 1.5, 1.55, 1.6, 1.65, 1.7],
        "E_values": [0.4, 0.5, 0.6],
    },
    "quantum": {
        "grid": {"V_min": 1e-4, "factor": 1.6, "E_center": 0.5},
        "solver": {
            "a": 1.0,
            "nev": None,
            "subspace": None,
            "ritz_tol": 1e-8,
            "inner_tol": 1e-6,
            "inner_max_iter": 400,
            "max_restarts": 40,
        },
        "alpha": {"count": 3, "step_deg": 1.0, "scale": 1.0},
        "hbar_values": [0.025, 0.022702, 0.020616, 0.018721, 0.017],
        "R_values": [1.4, 1.45, 1.5, 1.55, 1.6, 1.65, 1.7],
        "box": {"E0": 0.4, "E1": 0.6},
        "match_tol_factor": 0.05,
    },
    "validate": {
        "hbar_values": [0.035, 0.030391, 0.026388, 0.022913, 0.019895, 0.017275, 0.015],
        "alpha_scale": 2.0,
        "gamma_max_factor": 2.5,
    },
}


def _merge(defaults, override, path, raw_text):
    out = copy.deepcopy(defaults)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(_with_line(raw_text, key, f"unknown configuration key '{here}'"))
        if isinstance(defaults[key], dict) and not isinstance(value, dict):
            raise ConfigError(_with_line(raw_text, key, f"'{here}' must be an object"))
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, here, raw_text)
        else:
            out[key] = value
    return out


def _with_line(raw_text, key, message):
    if raw_text:
        for lineno, line in enumerate(raw_text.splitlines(), start=1):
            if f'"{key}"' in line:
                return f"line {lineno}: {message}"
    return message


def _check(condition, raw_text, key, message):
    if not condition:
        raise ConfigError(_with_line(raw_text, key, message))


def resolve(overrides=None, raw_text=""):
    """Merge overrides into the defaults and validate cross-references."""
    cfg = _merge(DEFAULTS, overrides or {}, "", raw_text)

    m = cfg["model"]
    _check(isinstance(m["m"], int) and m["m"] >= 2, raw_text, "m",
           f"model.m must be an integer >= 2, got {m['m']!r}")
    _check(m["R"] > 0, raw_text, "R", "model.R must be positive")
    _check(m["sigma"] > 0, raw_text, "sigma", "model.sigma must be positive")

    cl = cfg["classical"]
    _check(cl["E"] > 0, raw_text, "E", "classical.E must be positive")
    gap = m["R"] * math.sin(math.pi / m["m"])
    _check(cl["R0"] < gap, raw_text, "R0",
           f"classical.R0={cl['R0']} leaves the section circles overlapping "
           f"(need R0 < {gap:.6g})")

    dim = cfg["dimension"]
    _check(dim["N0"] >= 2, raw_text, "N0", "dimension.N0 must be at least 2")
    _check(dim["N1"] >= 2, raw_text, "N1", "dimension.N1 must be at least 2")
    _check(dim["k0"] >= 1, raw_text, "k0", "dimension.k0 must be at least 1")
    win = dim["window"]
    _check(win["theta"][0] < win["theta"][1], raw_text, "theta",
           "dimension window theta range is empty")
    _check(win["ptheta"][0] < win["ptheta"][1], raw_text, "ptheta",
           "dimension window p_theta range is empty")

    q = cfg["quantum"]
    box = q["box"]
    _check(box["E0"] < box["E1"], raw_text, "E0", "quantum.box needs E0 < E1")
    ec = q["grid"]["E_center"]
    _check(box["E0"] <= ec <= box["E1"], raw_text, "E_center",
           f"quantum.grid.E_center={ec} must lie inside the counting box "
           f"[{box['E0']}, {box['E1']}]")
    _check(0 < q["grid"]["V_min"] < 1, raw_text, "V_min",
           "quantum.grid.V_min must lie in (0, 1)")
    _check(q["grid"]["factor"] > 0, raw_text, "factor",
           "quantum.grid.factor must be positive")
    sol = q["solver"]
    _check(sol["a"] > 0, raw_text, "a", "quantum.solver.a must be positive")
    _check(q["alpha"]["count"] >= 2, raw_text, "count",
           "quantum.alpha.count must be at least 2 for invariance filtering")
    _check(q["match_tol_factor"] > 0, raw_text, "match_tol_factor",
           "quantum.match_tol_factor must be positive")
    for h in q["hbar_values"]:
        _check(h > 0, raw_text, "hbar_values", f"hbar must be positive, got {h}")

    v = cfg["validate"]
    _check(v["alpha_scale"] > 0, raw_text, "alpha_scale",
           "validate.alpha_scale must be positive")
    _check(v["gamma_max_factor"] > 0, raw_text, "gamma_max_factor",
           "validate.gamma_max_factor must be positive")
    return cfg


def load(path):
    """Read, resolve and validate a JSON configuration file."""
    with open(path) as fh:
        raw_text = fh.read()
    try:
        overrides = json.loads(raw_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(overrides, dict):
        raise ConfigError("configuration root must be a JSON object")
    return resolve(overrides, raw_text)


def config_hash(cfg):
    """Stable hash of the fully resolved configuration."""
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def model_config(cfg, R=None):
    m = cfg["model"]
    return ModelConfig(m=m["m"], R=m["R"] if R is None else float(R), sigma=m["sigma"])
