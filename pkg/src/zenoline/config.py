"""Run configuration: JSON schema, defaults, dotted overrides and model builders."""
from __future__ import annotations

import copy
import hashlib
import json
from typing import Any

import jsonschema

from .core_model import (
    ExcitationState,
    HamiltonianMatrix,
    ModeGrid,
    assemble_hamiltonian,
    build_coupling,
    build_mode_grid,
    initial_pulse,
)
from .qnd_device import QndDeviceModel

__all__ = [
    "ConfigError",
    "SCHEMA",
    "DEFAULTS",
    "parse_config",
    "load_config",
    "dump_config",
    "config_hash",
    "set_dotted",
    "get_dotted",
    "build_model",
    "build_device",
]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_posint = {"type": "integer", "minimum": 1}
_complex = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_grid = _obj({"count": _posint, "omega_min": _num, "omega_max": _num}, ["count", "omega_min", "omega_max"])

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "zenoline run configuration",
    **_obj(
        {
            "model": _obj(
                {
                    "photon": _grid,
                    "phonon": _grid,
                    "coupling": _obj(
                        {
                            "kind": {"enum": ["flat", "ohmic", "lorentzian", "custom"]},
                            "g": _num,
                            "center": _num,
                            "width": _pos,
                            "cutoff": _pos,
                            "values": {"type": "array", "items": {"type": "array", "items": _complex}},
                        },
                        ["kind", "g"],
                    ),
                    "pulse": _obj(
                        {
                            "shape": {"enum": ["single_mode", "gaussian"]},
                            "mode": {"type": "integer", "minimum": 0},
                            "center": _num,
                            "width": _pos,
                        },
                        ["shape"],
                    ),
                    "polarization": _obj({"alpha": _complex, "beta": _complex}, ["alpha", "beta"]),
                },
                ["photon", "phonon", "coupling"],
            ),
            "protocol": _obj(
                {
                    "tau": _pos,
                    "N": _posint,
                    "trials": {"type": "integer", "minimum": 0},
                    "seed": {"type": "integer"},
                    "t_final": _pos,
                    "n_steps": _posint,
                    "method": {"enum": ["eig", "rk4"]},
                    "use_device": {"type": "boolean"},
                }
            ),
            "device": _obj(
                {"theta": _num, "alpha_p": _complex, "eta": _prob, "eps": _prob, "delta": _num}
            ),
            "analysis": _obj(
                {
                    "quad_window": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "exp_window": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "tolerance": _pos,
                    "lengths": {"type": "array", "items": _pos},
                    "v_f": _pos,
                    "n_baseline": {"type": "integer", "minimum": 2},
                    "transmission_csv": {"type": "string"},
                    "quadrature_angle": {"oneOf": [_num, {"const": "optimal"}]},
                }
            ),
            "plan": _obj(
                {
                    "L": _pos,
                    "v_f": _pos,
                    "T_q": _pos,
                    "M": {"oneOf": [{"type": "integer", "minimum": 0}, {"const": "optimize"}]},
                    "gamma": _nonneg,
                    "gamma_exp": _nonneg,
                    "m_max": {"type": "integer", "minimum": 0},
                    "segment_transmission": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "loop_time": _pos,
                    "K": _posint,
                }
            ),
            "output": _obj(
                {
                    "directory": {"type": "string"},
                    "formats": {"type": "array", "items": {"enum": ["csv", "json"]}, "uniqueItems": True},
                }
            ),
        },
        ["model"],
    ),
}

DEFAULTS: dict = {
    "model": {
        "pulse": {"shape": "single_mode", "mode": 0},
        "polarization": {"alpha": [1.0, 0.0], "beta": [0.0, 0.0]},
    },
    "protocol": {
        "tau": 0.1,
        "N": 100,
        "trials": 0,
        "seed": 0,
        "t_final": 10.0,
        "n_steps": 1000,
        "method": "eig",
        "use_device": False,
    },
    "analysis": {
        "quad_window": 0.1,
        "exp_window": 0.5,
        "tolerance": 0.01,
        "v_f": 1.0,
        "quadrature_angle": "optimal",
    },
    "plan": {"v_f": 1.0, "M": "optimize", "m_max": 10000, "segment_transmission": 1.0, "K": 100},
    "output": {"directory": "out", "formats": ["csv", "json"]},
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(given)
    for k, v in defaults.items():
        if k not in out:
            out[k] = copy.deepcopy(v)
        elif isinstance(v, dict) and isinstance(out[k], dict):
            out[k] = _merge(v, out[k])
    return out


def _error_key(err: jsonschema.ValidationError) -> str:
    path = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path += extra[:1]
    elif err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        path += missing[:1]
    return ".".join(path) or "<root>"


def validate(cfg: dict) -> None:
    errors = sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise ConfigError(f"config key '{_error_key(e)}': {e.message}")


def parse_config(raw: dict) -> dict:
    """Validate `raw` and fill defaults. The result validates again unchanged."""
    if not isinstance(raw, dict):
        raise ConfigError("config key '<root>': must be a JSON object")
    validate(raw)
    cfg = _merge(DEFAULTS, raw)
    validate(cfg)
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, indent=2)


def config_hash(cfg: dict) -> str:
    """Short SHA-256 of the canonical config, ignoring where outputs are written."""
    physics = {k: v for k, v in cfg.items() if k != "output"}
    canon = json.dumps(physics, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def get_dotted(cfg: dict, key: str) -> Any:
    node = cfg
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"config key '{key}' is not set")
        node = node[part]
    return node


def set_dotted(cfg: dict, key: str, value: Any) -> dict:
    """Return a copy of `cfg` with the dotted `key` set; values parse as JSON when possible."""
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass
    out = copy.deepcopy(cfg)
    parts = key.split(".")
    if not all(parts):
        raise ConfigError(f"config key '{key}' is malformed")
    node = out
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"config key '{key}' does not address an object")
    node[parts[-1]] = value
    return out


def _c(pair) -> complex:
    return complex(pair[0], pair[1])


def build_model(cfg: dict) -> tuple[ModeGrid, ModeGrid, HamiltonianMatrix, ExcitationState]:
    m = cfg["model"]
    try:
        pg = build_mode_grid(m["photon"]["count"], m["photon"]["omega_min"], m["photon"]["omega_max"], "photon")
        bg = build_mode_grid(m["phonon"]["count"], m["phonon"]["omega_min"], m["phonon"]["omega_max"], "phonon")
    except ValueError as exc:
        raise ConfigError(f"config key 'model.photon/phonon': {exc}") from exc
    c = m["coupling"]
    try:
        values = None
        if "values" in c:
            values = [[_c(x) for x in row] for row in c["values"]]
        coupling = build_coupling(
            c["kind"], c["g"], pg, bg,
            center=c.get("center"), width=c.get("width"), cutoff=c.get("cutoff"), values=values,
        )
    except ValueError as exc:
        raise ConfigError(f"config key 'model.coupling': {exc}") from exc
    H = assemble_hamiltonian(pg, bg, coupling)
    p = m["pulse"]
    pol = m["polarization"]
    try:
        state = initial_pulse(
            pg, bg.count, p["shape"],
            alpha=_c(pol["alpha"]), beta=_c(pol["beta"]),
            mode=p.get("mode", 0), center=p.get("center"), width=p.get("width"),
        )
    except ValueError as exc:
        raise ConfigError(f"config key 'model.pulse': {exc}") from exc
    return pg, bg, H, state


def build_device(cfg: dict) -> QndDeviceModel:
    try:
        return QndDeviceModel.from_dict(cfg.get("device", {}))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config key 'device': {exc}") from exc
