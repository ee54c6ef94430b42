"""Run configuration: JSON schema, validation and dotted-key overrides."""
from __future__ import annotations

import json
from dataclasses import asdict, fields

import jsonschema

from .flow import RunConfig

_NUM = {"type": "number"}
_OPT_NUM = {"type": ["number", "null"]}

PHI_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["power_sum", "log1p", "expm1", "sum_of"]},
        "terms": {
            "type": "array", "minItems": 1,
            "items": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                      "minItems": 2, "maxItems": 2},
        },
        "parts": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/phi"}},
    },
    "required": ["kind"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"const": "power_sum"}}}, "then": {"required": ["terms"]}},
        {"if": {"properties": {"kind": {"const": "sum_of"}}}, "then": {"required": ["parts"]}},
    ],
}

SCHEMA = {
    "$defs": {"phi": PHI_SCHEMA},
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 2},
        "f": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["arithmetic_mean", "geometric_mean", "rms", "harmonic_mean", "power_mean"]},
                "p": _NUM,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "phi": {"$ref": "#/$defs/phi"},
        "shape": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["sphere", "spheroid", "perturbed_sphere", "coeffs"]},
                "R": {"type": "number", "exclusiveMinimum": 0},
                "a": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number", "exclusiveMinimum": 0},
                "eps": _NUM,
                "m": {"type": "integer", "minimum": 0},
                "coeffs": {"type": "array", "items": _NUM, "minItems": 1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "modes": {"type": "integer", "minimum": 4},
        "c_safe": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "r_stop": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "sigma": _OPT_NUM,
        "delta": _OPT_NUM,
        "lam": _OPT_NUM,
        "monitor_stride": {"type": "integer", "minimum": 1},
        "snapshot_stride": {"type": "integer", "minimum": 0},
        "max_steps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "override_classification": {"type": "boolean"},
    },
    "required": ["n", "f", "phi", "shape"],
    "additionalProperties": False,
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class ConfigError(ValueError):
    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def validate(data) -> None:
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if not errors:
        return
    err = errors[0]
    path = list(err.absolute_path)
    if err.validator == "additionalProperties":
        allowed = err.schema.get("properties", {})
        extra = sorted(k for k in err.instance if k not in allowed)
        if extra:
            raise ConfigError(f"unknown key {extra[0]!r}", _pointer(path + [extra[0]]))
    raise ConfigError(err.message, _pointer(path))


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``a.b=value`` pairs; values are parsed as JSON when possible."""
    out = json.loads(json.dumps(data))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"cannot descend into {p!r}", _pointer(parts[: parts.index(p) + 1]))
            node = nxt
        node[parts[-1]] = _coerce(value.strip())
    return out


def parse_config(text: str, overrides=()) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    data = apply_overrides(data, overrides)
    validate(data)
    if data["f"]["kind"] == "power_mean" and "p" not in data["f"]:
        raise ConfigError("power_mean needs an exponent", "/f/p")
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in data.items() if k in known})


def load_config(path, overrides=()) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def effective_config(cfg: RunConfig) -> dict:
    """The full configuration with defaults filled in, valid under ``SCHEMA``."""
    return asdict(cfg)
