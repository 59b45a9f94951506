"""Run configuration: a single JSON document validated against ``CONFIG_SCHEMA``.

Unknown keys are rejected.  Missing optional values are filled from the
schema defaults, and the fully resolved document is what every run records
in its manifest.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from .chart import ChartParams, CostSpec, ProcessSpec
from .distributions import GenericComponentMoments, MixtureShiftSpec
from .errors import ConfigError, MixChartError
from .optimize import SearchSpace

__all__ = ["CONFIG_SCHEMA", "RunConfig", "load_config", "parse_config", "resolve_defaults"]

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}


def _obj(props, required=(), **extra):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False, **extra}


_AXIS = _obj(
    {"min": _NUM, "max": _NUM, "count": {"type": "integer", "minimum": 1}, "step": _POS},
    required=("min", "max"),
    oneOf=[{"required": ["count"]}, {"required": ["step"]}],
)

CONFIG_SCHEMA: dict[str, Any] = _obj(
    {
        "process": _obj(
            {
                "mu0": {**_NUM, "default": 0.0},
                "sigma": {**_POS, "default": 1.0},
                "s": _NONNEG,
                "repair_residual": {"type": "number", "minimum": 0, "exclusiveMaximum": 1, "default": 0.0},
            },
            required=("s",),
        ),
        "shift": {
            "oneOf": [
                _obj(
                    {
                        "kind": {"const": "mixture"},
                        "zeta": {"type": "number", "minimum": 0, "maximum": 1},
                        "xi": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "delta": _POS,
                        "jump_scale": {**_POS, "default": 1.0},
                    },
                    required=("kind", "zeta", "xi", "delta"),
                ),
                _obj(
                    {
                        "kind": {"const": "generic"},
                        "m_x": _NONNEG,
                        "v_x": _NONNEG,
                        "m_y": _NONNEG,
                        "v_y": _NONNEG,
                        "zeta": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                    required=("kind", "m_x", "v_x", "m_y", "v_y", "zeta"),
                ),
            ]
        },
        "costs": _obj({name: {**_NONNEG, "default": 0.0} for name in ("c_s", "c_f", "c_rb", "c_rs", "c_os", "c_ob")}),
        "chart": _obj(
            {
                "h": {"oneOf": [_POS, _AXIS]},
                "K": {"oneOf": [_NUM, _AXIS]},
            },
            required=("h", "K"),
        ),
        "interval": _obj({"h": _POS, "j": {**_NONNEG, "default": 0.0}}),
        "numerics": _obj(
            {
                "grid_step": {**_POS, "default": 0.05},
                "v_max": {**_POS, "default": 24.0},
                "scheme": {"enum": ["nearest", "floor"], "default": "nearest"},
                "k_max": {"type": ["integer", "null"], "minimum": 1, "default": None},
                "n_quad": {"type": "integer", "minimum": 2, "default": 64},
                "n_paths": {"type": "integer", "minimum": 1000, "default": 100000},
                "batch_size": {"type": "integer", "minimum": 1, "default": 10000},
                "n_intervals": {"type": "integer", "minimum": 10000, "default": 100000},
                "n_chains": {"type": "integer", "minimum": 2, "default": 400},
                "burn_in": {"type": "integer", "minimum": 0, "default": 200},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1, "default": 0},
                "rtol": {**_POS, "default": 1e-8},
                "stationary_tol": {**_POS, "default": 1e-12},
            }
        ),
    },
    required=("process", "shift"),
)


def _fill(schema, value):
    if schema.get("type") != "object" or not isinstance(value, dict):
        return value
    out = dict(value)
    for key, sub in schema.get("properties", {}).items():
        if key not in out and "default" in sub:
            out[key] = copy.deepcopy(sub["default"])
        if key in out:
            out[key] = _fill(sub, out[key])
    return out


def resolve_defaults(doc: dict) -> dict:
    """Return a copy of ``doc`` with every schema default filled in."""
    doc = copy.deepcopy(doc)
    doc.setdefault("costs", {})
    doc.setdefault("numerics", {})
    doc = _fill(CONFIG_SCHEMA, doc)
    shift = doc["shift"]
    if shift.get("kind") == "mixture":
        shift.setdefault("jump_scale", 1.0)
    return doc


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of the key at ``path`` in the JSON source."""
    pos = 0
    found = None
    for key in path:
        if not isinstance(key, str):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            break
        pos = m.end()
        found = m.start()
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _describe(error: jsonschema.ValidationError, text: str | None) -> str:
    path = list(error.absolute_path)
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        allowed = set(error.schema.get("properties", {}))
        extra = sorted(k for k in error.instance if k not in allowed)
        if extra:
            path.append(extra[0])
            msg = f"unknown key {extra[0]!r}"
        else:
            msg = error.message
    else:
        best = jsonschema.exceptions.best_match(error.context) if error.context else None
        msg = best.message if best is not None and error.validator == "oneOf" else error.message
    where = "/".join(str(p) for p in path) or "<root>"
    line = _line_of(text, path) if text else None
    prefix = f"line {line}: " if line else ""
    return f"{prefix}{where}: {msg}"


@dataclass(frozen=True)
class RunConfig:
    process: ProcessSpec
    shift: MixtureShiftSpec | GenericComponentMoments
    costs: CostSpec
    chart: ChartParams | SearchSpace | None
    interval_h: float | None
    interval_j: float
    numerics: dict
    raw: dict

    @property
    def seed(self) -> int:
        return self.numerics["seed"]


def parse_config(doc: dict, text: str | None = None) -> RunConfig:
    """Validate a config document and build the domain objects."""
    if isinstance(doc, dict) and "manifest_version" in doc:
        doc = doc.get("config", {})
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError("; ".join(_describe(e, text) for e in errors))
    doc = resolve_defaults(doc)
    try:
        process = ProcessSpec(**doc["process"])
        shift_doc = dict(doc["shift"])
        kind = shift_doc.pop("kind")
        shift = MixtureShiftSpec(**shift_doc) if kind == "mixture" else GenericComponentMoments(**shift_doc)
        costs = CostSpec(**doc["costs"])
        chart = None
        if "chart" in doc:
            h, K = doc["chart"]["h"], doc["chart"]["K"]
            if isinstance(h, dict) or isinstance(K, dict):
                chart = SearchSpace.from_ranges(
                    h if isinstance(h, dict) else {"min": h, "max": h, "count": 1},
                    K if isinstance(K, dict) else {"min": K, "max": K, "count": 1},
                )
            else:
                chart = ChartParams(h=float(h), K=float(K))
    except MixChartError as exc:
        raise ConfigError(str(exc)) from exc
    interval = doc.get("interval", {})
    interval_h = interval.get("h")
    if interval_h is None and isinstance(chart, ChartParams):
        interval_h = chart.h
    return RunConfig(
        process=process,
        shift=shift,
        costs=costs,
        chart=chart,
        interval_h=interval_h,
        interval_j=float(interval.get("j", 0.0)),
        numerics=doc["numerics"],
        raw=doc,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("line 1: config must be a JSON object")
    return parse_config(doc, text)
