from __future__ import annotations

from typing import Any, Dict, Optional

from . import load

_CACHE: Dict[str, Dict[str, Any]] = {}


def get_dict() -> Dict[str, Any]:
    if "messages" not in _CACHE:
        _CACHE["messages"] = load.load_json("data/messages.json")
    return _CACHE["messages"]


def t(key: str, default: Optional[str] = None, **fmt: Any) -> str:
    """Dotted lookup into data/messages.json, formatted with ``fmt``."""
    cur: Any = get_dict()
    for part in key.split("."):
        if isinstance(cur, dict) and part in cur:
            cur = cur[part]
        else:
            return default if default is not None else key
    text = str(cur)
    return text.format(**fmt) if fmt else text
