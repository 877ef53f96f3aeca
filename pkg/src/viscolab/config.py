"""
Run configuration
=================

A run is described by one TOML file::

    seed = 0
    output = "out"

    [flux]
    family = "burgers"

    [grid]
    kind = "line"
    x_left = -40.0
    x_right = 40.0
    n_cells = 1280

    [tolerances]
    detect_tol = 1e-7

    [[experiments]]
    name = "shock_stability"
    [experiments.params]
    alpha = 0.5

The file is validated against :data:`SCHEMA` (unknown keys are rejected and
named in the error).  Fourier coefficients are lists of
``[k, cos_coeff, sin_coeff]`` triples.
"""

import copy
import sys

import jsonschema
import numpy as np

from .cell import CellTolerances
from .errors import ConfigError
from .evolve import Grid1D
from .flux import (FourierSeries, burgers_flux, make_linear_flux, make_polynomial_flux,
                   make_separable_convex_flux)
from .shock import ShockTolerances

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM = {"type": "number"}
_FOURIER = {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}}
_COEFF = {"oneOf": [_NUM, _FOURIER]}

FLUX_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": ["burgers", "linear", "separable_convex", "polynomial"]},
        "a": _COEFF,
        "V": _COEFF,
        "a_minus": _POS,
        "a_plus": _POS,
        "threshold": _POS,
        "coefficients": {"type": "array", "items": _COEFF, "minItems": 1},
    },
}

GRID_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["periodic", "line"]},
        "x_left": _NUM,
        "x_right": _NUM,
        "n_cells": {"type": "integer", "minimum": 8},
    },
}

TOLERANCE_KEYS = ("period_tol", "mean_tol", "ode_rtol", "ode_atol", "residual_tol", "detect_tol",
                  "sign_tol", "mass_rtol", "eps_clamp", "cfl", "theta", "gamma_step")

TOLERANCE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {k: _POS for k in TOLERANCE_KEYS},
}

INITIAL_KINDS = ("constant", "sine", "gaussian", "dipole", "odd_gaussian", "step", "spike",
                 "random", "shock")

_INITIAL_ONE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(INITIAL_KINDS)},
        "value": _NUM, "mean": _NUM, "amplitude": _NUM, "k": {"type": "integer", "minimum": 1},
        "center": _NUM, "width": _POS, "separation": _POS, "left": _NUM, "right": _NUM,
        "position": _NUM, "base": _NUM, "height": _NUM, "modes": {"type": "integer", "minimum": 1},
    },
}
INITIAL_SCHEMA = {"oneOf": [_INITIAL_ONE, {"type": "array", "items": _INITIAL_ONE, "minItems": 1}]}


def experiment_schema(param_schema):
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["name"],
        "properties": {
            "name": {"type": "string"},
            "label": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
            "grid": GRID_SCHEMA,
            "params": param_schema,
        },
    }


def build_schema(catalog):
    """Full run schema; each experiment entry is checked against its own parameters."""
    exp = {"oneOf": [
        {**experiment_schema(entry["params"]),
         "properties": {**experiment_schema(entry["params"])["properties"],
                        "name": {"const": name}}}
        for name, entry in catalog.items()]}
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "seed": {"type": "integer", "minimum": 0},
            "output": {"type": "string"},
            "flux": FLUX_SCHEMA,
            "grid": GRID_SCHEMA,
            "tolerances": TOLERANCE_SCHEMA,
            "cell_table": {"type": "object", "additionalProperties": False, "properties": {
                "p_min": _NUM, "p_max": _NUM, "n_points": {"type": "integer", "minimum": 3}}},
            "shock": {"type": "object", "additionalProperties": False, "properties": {
                "alpha": _NUM, "xi0": _NUM, "half_length": _POS,
                "p_min": _NUM, "p_max": _NUM}},
            "experiments": {"type": "array", "items": exp},
        },
    }


def _best_error(err):
    # oneOf failures hide the useful message; dig for the deepest one
    best = err
    if err.context:
        best = max(err.context, key=lambda e: (len(e.absolute_path), -len(e.message)))
        best = _best_error(best)
    return best


def validate(cfg, catalog):
    """Validate a parsed config; raises :class:`ConfigError` naming the offending key."""
    schema = build_schema(catalog)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        # match experiment entries by name to report the relevant sub-error
        err = errors[0]
        path = list(err.absolute_path)
        if len(path) >= 2 and path[0] == "experiments" and err.validator == "oneOf":
            entry = cfg["experiments"][path[1]]
            name = entry.get("name") if isinstance(entry, dict) else None
            if name in catalog:
                sub = jsonschema.Draft202012Validator(experiment_schema(catalog[name]["params"]))
                suberrs = list(sub.iter_errors(entry))
                if suberrs:
                    e = suberrs[0]
                    where = "/".join(map(str, path + list(e.absolute_path)))
                    raise ConfigError(f"{where}: {e.message}")
            elif name is not None:
                raise ConfigError(f"experiments/{path[1]}/name: unknown experiment {name!r}")
        err = _best_error(err)
        where = "/".join(map(str, err.absolute_path)) or "<root>"
        raise ConfigError(f"{where}: {err.message}")
    if "flux" in cfg:
        # family-specific keys are checked by building the flux once
        build_flux(cfg["flux"])
    return cfg


def load(path, catalog):
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML in {path}: {err}") from err
    return validate(cfg, catalog)


def _coeff(value):
    if isinstance(value, (int, float)):
        return float(value)
    return FourierSeries(tuple(tuple(t) for t in value))


def build_flux(desc):
    """Flux model from a validated ``[flux]`` table."""
    desc = dict(desc or {"family": "burgers"})
    fam = desc["family"]
    need = {"linear": ("a",), "separable_convex": ("V", "a_minus", "a_plus", "threshold"),
            "polynomial": ("coefficients",), "burgers": ()}[fam]
    missing = [k for k in need if k not in desc]
    if missing:
        raise ConfigError(f"flux/{missing[0]}: required for family {fam!r}")
    extra = [k for k in desc if k != "family" and k not in need]
    if extra:
        raise ConfigError(f"flux/{extra[0]}: not a parameter of family {fam!r}")
    if fam == "burgers":
        return burgers_flux()
    if fam == "linear":
        return make_linear_flux(_coeff(desc["a"]))
    if fam == "separable_convex":
        return make_separable_convex_flux(_coeff(desc["V"]), desc["a_minus"], desc["a_plus"],
                                          desc["threshold"])
    return make_polynomial_flux([_coeff(c) for c in desc["coefficients"]])


DEFAULT_GRID = {"kind": "periodic", "x_left": 0.0, "x_right": 1.0, "n_cells": 256}


def build_grid(desc, default=None):
    g = dict(DEFAULT_GRID)
    g.update(default or {})
    g.update(desc or {})
    try:
        return Grid1D(g["kind"], float(g["x_left"]), float(g["x_right"]), int(g["n_cells"]))
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from err


def tolerances(desc):
    """``(CellTolerances, ShockTolerances, extras)`` from a ``[tolerances]`` table."""
    desc = desc or {}
    cell_kw = {"period_tol": "period_tol", "mean_tol": "mean_tol", "ode_rtol": "rtol",
               "ode_atol": "atol", "residual_tol": "residual_tol"}
    shock_kw = {"detect_tol": "detect_tol", "sign_tol": "sign_tol", "mass_rtol": "mass_rtol",
                "eps_clamp": "eps_clamp"}
    ct = CellTolerances(**{v: desc[k] for k, v in cell_kw.items() if k in desc})
    st = ShockTolerances(**{v: desc[k] for k, v in shock_kw.items() if k in desc})
    extras = {"cfl": desc.get("cfl", 0.45), "theta": desc.get("theta", 0.1),
              "gamma_step": desc.get("gamma_step", 1e-4)}
    if not extras["cfl"] < 1:
        raise ConfigError("tolerances/cfl: must be below 1")
    return ct, st, extras


def initial_values(desc, x, rng=None, shock=None):
    """Sample an initial datum described by one desc or a list of descriptions (summed)."""
    if isinstance(desc, list):
        return sum(initial_values(s, x, rng, shock) for s in desc)
    kind = desc["kind"]
    g = desc.get
    if kind == "constant":
        return np.full_like(x, g("value", 0.0))
    if kind == "sine":
        return g("mean", 0.0) + g("amplitude", 1.0) * np.sin(2 * np.pi * g("k", 1) * x)
    if kind == "gaussian":
        return g("amplitude", 1.0) * np.exp(-((x - g("center", 0.0)) / g("width", 1.0)) ** 2)
    if kind == "dipole":
        c, s, w = g("center", 0.0), g("separation", 1.0), g("width", 0.3)
        return g("amplitude", 1.0) * (np.exp(-((x - c + s / 2) / w) ** 2)
                                      - np.exp(-((x - c - s / 2) / w) ** 2))
    if kind == "odd_gaussian":
        c, w = g("center", 0.0), g("width", 1.0)
        return g("amplitude", 1.0) * (x - c) / w * np.exp(-((x - c) / w) ** 2)
    if kind == "step":
        return np.where(x < g("position", 0.5), g("left", 1.0), g("right", -1.0))
    if kind == "spike":
        return g("base", 0.0) + g("height", 1.0) * np.exp(-((x - g("center", 0.5)) / g("width", 0.05)) ** 2)
    if kind == "random":
        rng = rng or np.random.default_rng(0)
        n = g("modes", 4)
        coef = rng.normal(size=(n, 2)) / np.arange(1, n + 1)[:, None]
        k = np.arange(1, n + 1)[:, None]
        out = coef[:, :1] * np.cos(2 * np.pi * k * x) + coef[:, 1:] * np.sin(2 * np.pi * k * x)
        return g("mean", 0.0) + g("amplitude", 1.0) * out.sum(axis=0)
    if kind == "shock":
        if shock is None:
            raise ConfigError("initial kind 'shock' needs a shock context")
        return np.asarray(shock(x), dtype=float)
    raise ConfigError(f"unknown initial kind {kind!r}")


def merged_params(entry, catalog):
    params = copy.deepcopy(catalog[entry["name"]]["defaults"])
    params.update(entry.get("params", {}))
    return params
