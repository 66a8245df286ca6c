"""Turn an experiment summary into labelled checks using the bands in data/rules.json."""
from __future__ import annotations

import math
from typing import Any, Dict, List, Optional

from .load import load_json

LEVELS = ("FAIL", "WARN")
STATUS_EXIT = {"PASS": 0, "ERROR": 1, "FAIL": 2, "INCONCLUSIVE": 3}


def load_rules() -> Dict[str, Any]:
    return load_json("data/rules.json")


def _match_when(summary: Dict[str, Any], when: Dict[str, Any]) -> bool:
    for k, v in when.items():
        if summary.get(k) != v:
            return False
    return True


def _number(x: Any) -> Optional[float]:
    if isinstance(x, bool) or x is None:
        return float(x) if isinstance(x, bool) else None
    try:
        v = float(x)
    except (TypeError, ValueError):
        return None
    return None if math.isnan(v) else v


def _resolve(bound: Any, summary: Dict[str, Any]) -> Optional[float]:
    """A bound is a number or {"ref": field, "offset": d} / {"ref": field, "scale": c}."""
    if isinstance(bound, dict):
        base = _number(summary.get(bound["ref"]))
        if base is None:
            return None
        return base * float(bound.get("scale", 1.0)) + float(bound.get("offset", 0.0))
    return _number(bound)


def check_rule(rule: Dict[str, Any], summary: Dict[str, Any]) -> Dict[str, Any]:
    value = _number(summary.get(rule["metric"]))
    lo = _resolve(rule["min"], summary) if "min" in rule else None
    hi = _resolve(rule["max"], summary) if "max" in rule else None
    if "target" in rule:
        target = _resolve(rule["target"], summary)
        if target is None:
            lo = hi = None
            missing_target = True
        else:
            missing_target = False
            tol = float(rule.get("abs_tol", 0.0)) + float(rule.get("rel_tol", 0.0)) * abs(target)
            lo, hi = target - tol, target + tol
    else:
        missing_target = False
    out = {
        "id": rule["id"],
        "level": rule.get("level", "FAIL"),
        "metric": rule["metric"],
        "value": value,
        "min": lo,
        "max": hi,
        "title": rule.get("title", rule["id"]),
    }
    if value is None or missing_target or (("min" in rule and lo is None) or ("max" in rule and hi is None)):
        out["passed"] = None
        return out
    ok = True
    if lo is not None and value < lo:
        ok = False
    if hi is not None and value > hi:
        ok = False
    out["passed"] = ok
    return out


def evaluate(experiment: str, summary: Dict[str, Any], rules: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    rules = rules if rules is not None else load_rules()
    checks: List[Dict[str, Any]] = []
    for r in rules.get("rules", []):
        if r.get("experiment") != experiment:
            continue
        if not _match_when(summary, r.get("when", {})):
            continue
        checks.append(check_rule(r, summary))
    # FAIL-level first, failures before passes
    order = {"FAIL": 0, "WARN": 1}
    checks.sort(key=lambda c: (order.get(c["level"], 9), {False: 0, None: 1, True: 2}[c["passed"]]))
    gating = [c for c in checks if c["level"] == "FAIL"]
    if any(c["passed"] is False for c in gating):
        status = "FAIL"
    elif not any(c["passed"] is not None for c in checks):
        status = "INCONCLUSIVE"
    else:
        status = "PASS"
    return {"status": status, "checks": checks}


def exit_code(status: str) -> int:
    return STATUS_EXIT.get(status, 1)
