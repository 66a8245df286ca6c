from __future__ import annotations

import json
from importlib import resources
from typing import Any, Dict, List, Mapping, Optional

from pydantic import ValidationError

from . import schema
from .errors import ConfigError

DATA = resources.files(__package__)


def load_json(rel_path: str) -> Dict[str, Any]:
    """Read a JSON file shipped inside the package, e.g. ``data/rules.json``."""
    p = DATA
    for part in rel_path.split("/"):
        p = p.joinpath(part)
    with p.open("r", encoding="utf-8") as f:
        return json.load(f)


def load_presets() -> Dict[str, Dict[str, Any]]:
    return load_json("data/presets.json")


def load_preset(name: str) -> Dict[str, Any]:
    presets = load_presets()
    if name not in presets:
        raise ConfigError(
            f"unknown preset {name!r}",
            [{"loc": ["preset"], "msg": f"choose one of {sorted(presets)}", "type": "unknown_preset"}],
        )
    return dict(presets[name])


def _issues(exc: ValidationError) -> List[Dict[str, Any]]:
    return [
        {"loc": [str(p) for p in e.get("loc", ())], "msg": e.get("msg", ""), "type": e.get("type", "")}
        for e in exc.errors()
    ]


def _merge(base: Dict[str, Any], top: Mapping[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in top.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(dict(out[k]), v)
        else:
            out[k] = v
    return out


def parse_config(
    text: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    preset: Optional[str] = None,
) -> schema.RunConfig:
    """Preset, then the JSON document, then non-null overrides; validated as a RunConfig."""
    doc: Dict[str, Any] = load_preset(preset) if preset else {}
    if text is not None and text.strip():
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"config is not valid JSON: {e.msg} (line {e.lineno}, column {e.colno})",
                [{"loc": [], "msg": e.msg, "type": "json_invalid"}],
            ) from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", [{"loc": [], "msg": "expected an object", "type": "dict_type"}])
        doc = _merge(doc, raw)
    doc = _merge(doc, {k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return schema.RunConfig.model_validate(doc)
    except ValidationError as e:
        issues = _issues(e)
        lines = "; ".join(f"{'.'.join(i['loc']) or '<root>'}: {i['msg']}" for i in issues)
        raise ConfigError(f"invalid configuration: {lines}", issues) from e
