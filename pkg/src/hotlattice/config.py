"""Run configuration: JSON schema, parsing and canonical echo.

Angles are numbers in radians or strings such as ``"0.14pi"``, ``"pi"``,
``"-0.5*pi"`` (multiples of pi) or ``"0.15rad"`` (explicit radians).
Frequencies ``b`` are numbers, ``"mu/nu"`` strings (declared rational, must
be coprime) or ``"golden"`` for ``(sqrt(5) + 1) / 2``.
"""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema

from .errors import ConfigError, DomainError
from .lattice import GOLDEN, AxisModulation, LatticeSpec, Open, Twisted

SCHEMA_VERSION = 1

_ANGLE = {"oneOf": [{"type": "number"}, {"type": "string"}]}
_ANGLE_LIST = {
    "oneOf": [
        {"type": "array", "items": _ANGLE, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _ANGLE, "stop": _ANGLE, "num": {"type": "integer", "minimum": 1}},
            "required": ["start", "stop", "num"],
            "additionalProperties": False,
        },
    ]
}
_OPT_ANGLE_LIST = {"oneOf": [{"type": "null"}, _ANGLE_LIST]}
_GRID2 = {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2, "maxItems": 2}
_CLASSIFY = {
    "edge_width": {"type": "integer", "minimum": 1},
    "weight_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hotlattice run configuration",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "axes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "t": {"type": "number", "exclusiveMinimum": 0},
                    "lambda": {"type": "number"},
                    "b": {"oneOf": [{"type": "number"}, {"type": "string"}]},
                    "phi": _ANGLE,
                    "n_sites": {"type": "integer", "minimum": 2},
                    "bond_origin": {"type": "integer"},
                    "boundary": {
                        "oneOf": [
                            {"const": "open"},
                            {
                                "type": "object",
                                "properties": {"twisted": _ANGLE},
                                "required": ["twisted"],
                                "additionalProperties": False,
                            },
                        ]
                    },
                    "repeat": {"type": "integer", "minimum": 1},
                },
                "required": ["t", "lambda", "b", "n_sites"],
                "additionalProperties": False,
            },
        },
        "spectrum": {
            "type": "object",
            "properties": {"phis": _OPT_ANGLE_LIST, "symmetrize": {"type": "boolean"}, **_CLASSIFY},
            "additionalProperties": False,
        },
        "dos": {
            "type": "object",
            "properties": {
                "eta": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "kernel": {"enum": ["lorentzian", "gaussian"]},
                "num": {"type": "integer", "minimum": 2},
                "margin": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "chern": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["vector", "abelian"]},
                "grid": _GRID2,
                "subsets": {
                    "oneOf": [
                        {"const": "auto"},
                        {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "items": {
                                    "type": "array",
                                    "items": {"type": "integer", "minimum": 0},
                                    "minItems": 2,
                                    "maxItems": 2,
                                },
                            },
                        },
                    ]
                },
                "n_subsets": {"type": "integer", "minimum": 1},
                "bands": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 0}},
                "refine": {"type": "boolean"},
                "max_grid": {"type": "integer", "minimum": 2},
                "check_refinement": {"type": "boolean"},
                "flux_csv": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "assemble": {
            "type": "object",
            "properties": {
                "states": {
                    "type": ["array", "null"],
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {
                            "pattern": {
                                "type": "array",
                                "items": {"enum": ["left", "right", "both", "symmetric",
                                                  "antisymmetric", "edge", "extended"]},
                                "minItems": 1,
                                "maxItems": 3,
                            },
                            "gap": {"type": ["integer", "null"], "minimum": 0},
                            "extended_index": {
                                "oneOf": [
                                    {"type": "null"},
                                    {"type": "integer", "minimum": 0},
                                    {"type": "array", "items": {"type": ["integer", "null"]}},
                                ]
                            },
                        },
                        "required": ["pattern"],
                        "additionalProperties": False,
                    },
                },
                "compare_dense": {"type": "boolean"},
                **_CLASSIFY,
            },
            "additionalProperties": False,
        },
        "evolve": {
            "type": "object",
            "properties": {
                "injections": {
                    "type": ["array", "null"],
                    "minItems": 1,
                    "items": {
                        "oneOf": [
                            {"type": "string"},
                            {"type": "array", "items": {"type": "integer", "minimum": 0},
                             "minItems": 1, "maxItems": 3},
                        ]
                    },
                },
                "z": {"type": ["array", "null"], "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "l": {"type": "integer", "minimum": 0},
                "phis": _OPT_ANGLE_LIST,
            },
            "additionalProperties": False,
        },
    },
    "required": ["axes"],
    "additionalProperties": False,
}

DEFAULTS = {
    "spectrum": {"phis": None, "symmetrize": True, "edge_width": 2, "weight_threshold": 0.5},
    "dos": {"eta": None, "kernel": "lorentzian", "num": 2001, "margin": 100.0},
    "chern": {
        "mode": "vector", "grid": [40, 40], "subsets": "auto", "n_subsets": 3, "bands": None,
        "refine": True, "max_grid": 320, "check_refinement": True, "flux_csv": False,
    },
    "assemble": {"states": None, "compare_dense": True, "edge_width": 2, "weight_threshold": 0.5},
    "evolve": {"injections": None, "z": None, "l": 3, "phis": None},
}

_PI_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-])?\s*\*?\s*pi\s*$")
_RAD_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*rad\s*$")
_FRAC_RE = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")


def parse_angle(value, path=()) -> float:
    """Radians from a number, ``"<x>pi"`` or ``"<x>rad"``."""
    if isinstance(value, bool):
        raise ConfigError("angle must be a number or string", path)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            coef = m.group(1)
            if coef in ("+", "-"):
                coef += "1"
            return (float(coef) if coef else 1.0) * math.pi
        m = _RAD_RE.match(value)
        if m:
            return float(m.group(1))
    raise ConfigError(f"cannot parse angle {value!r}; use radians, '<x>pi' or '<x>rad'", path)


def parse_frequency(value, path=()):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        if value.strip().lower() == "golden":
            return GOLDEN
        m = _FRAC_RE.match(value)
        if m:
            mu, nu = int(m.group(1)), int(m.group(2))
            if nu == 0:
                raise ConfigError("denominator must be nonzero", path)
            if math.gcd(mu, nu) != 1:
                raise ConfigError(f"rational b = {mu}/{nu} must be in lowest terms", path)
            return Fraction(mu, nu)
    raise ConfigError(f"cannot parse frequency {value!r}; use a number, 'mu/nu' or 'golden'", path)


def _angle_list(value, path):
    if value is None:
        return None
    if isinstance(value, dict):
        start = parse_angle(value["start"], path + ("start",))
        stop = parse_angle(value["stop"], path + ("stop",))
        n = value["num"]
        return [start + (stop - start) * i / (n - 1) if n > 1 else start for i in range(n)]
    return [parse_angle(v, path + (i,)) for i, v in enumerate(value)]


def _axis(raw: dict, path) -> AxisModulation:
    boundary = raw.get("boundary", "open")
    bnd = Open() if boundary == "open" else Twisted(parse_angle(boundary["twisted"], path + ("boundary", "twisted")))
    try:
        return AxisModulation(
            t=float(raw["t"]),
            lam=float(raw["lambda"]),
            b=parse_frequency(raw["b"], path + ("b",)),
            phi=parse_angle(raw.get("phi", 0.0), path + ("phi",)),
            n_sites=raw["n_sites"],
            bond_origin=raw.get("bond_origin", 1),
            boundary=bnd,
        )
    except DomainError as exc:
        raise ConfigError(str(exc), path) from exc


def axis_to_dict(ax: AxisModulation) -> dict:
    b = f"{ax.b.numerator}/{ax.b.denominator}" if isinstance(ax.b, Fraction) else float(ax.b)
    boundary = "open" if isinstance(ax.boundary, Open) else {"twisted": float(ax.boundary.theta)}
    return {
        "t": float(ax.t), "lambda": float(ax.lam), "b": b, "phi": float(ax.phi),
        "n_sites": ax.n_sites, "bond_origin": ax.bond_origin, "boundary": boundary,
    }


@dataclass
class RunConfig:
    spec: LatticeSpec
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections[name]

    def to_dict(self) -> dict:
        """Canonical form; re-parses to an equal configuration."""
        out = {"schema_version": SCHEMA_VERSION, "axes": [axis_to_dict(a) for a in self.spec.axes]}
        for name in DEFAULTS:
            out[name] = copy.deepcopy(self.sections[name])
        return out


def _validate_schema(raw):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if error is not None:
        path = tuple(error.absolute_path)
        if error.validator == "additionalProperties":
            extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
            raise ConfigError(f"unknown key(s) {', '.join(map(repr, extra))}", path)
        raise ConfigError(error.message, path)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    if "axes" in raw and raw["axes"] == []:
        raise ConfigError("at least one axis is required", ("axes",))
    _validate_schema(raw)
    axes = []
    for i, ax in enumerate(raw["axes"]):
        axes.extend([_axis(ax, ("axes", i))] * ax.get("repeat", 1))
    if len(axes) > 3:
        raise ConfigError(f"at most 3 axes are supported, got {len(axes)}", ("axes",))
    spec = LatticeSpec(tuple(axes))

    sections = {}
    for name, defaults in DEFAULTS.items():
        sec = {**copy.deepcopy(defaults), **copy.deepcopy(raw.get(name, {}))}
        path = (name,)
        if name in ("spectrum", "evolve"):
            sec["phis"] = _angle_list(sec["phis"], path + ("phis",))
        if name == "evolve" and sec["z"] is not None:
            sec["z"] = [float(z) for z in sec["z"]]
        if name == "evolve" and sec["injections"] is not None:
            sec["injections"] = [inj if isinstance(inj, str) else list(inj) for inj in sec["injections"]]
        if name == "dos":
            sec["margin"] = float(sec["margin"])
            if sec["eta"] is not None:
                sec["eta"] = float(sec["eta"])
        if name == "assemble" and sec["states"] is not None:
            sec["states"] = [{"gap": 0, "extended_index": None, **s} for s in sec["states"]]
            for i, s in enumerate(sec["states"]):
                if len(s["pattern"]) != spec.ndim:
                    raise ConfigError(
                        f"pattern has {len(s['pattern'])} entries for a {spec.ndim}D lattice",
                        path + ("states", i, "pattern"),
                    )
        if name == "chern" and isinstance(sec["subsets"], list) and len(sec["subsets"]) != spec.ndim:
            raise ConfigError(f"need subsets for {spec.ndim} axes", path + ("subsets",))
        if name in ("spectrum", "assemble"):
            sec["weight_threshold"] = float(sec["weight_threshold"])
        sections[name] = sec
    return RunConfig(spec, sections)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return parse_config(raw)
