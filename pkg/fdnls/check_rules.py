"""Consistency check of the packaged rules.json and presets.json.

Run as ``python -m fdnls.check_rules``; exits non-zero when anything is off.
"""
from __future__ import annotations

import sys
from typing import Any, Dict, List

from .engine import LEVELS, load_rules
from .errors import ConfigError
from .load import load_presets, parse_config
from .schema import EXPERIMENTS


def rule_problems(rules: Dict[str, Any]) -> List[str]:
    problems = []
    seen = set()
    for r in rules.get("rules", []):
        rid = r.get("id", "")
        if not rid:
            problems.append("rule without id")
            continue
        if rid in seen:
            problems.append(f"{rid}: duplicate id")
        seen.add(rid)
        if r.get("experiment") not in EXPERIMENTS:
            problems.append(f"{rid}: unknown experiment {r.get('experiment')!r}")
        if r.get("level", "FAIL") not in LEVELS:
            problems.append(f"{rid}: unknown level {r.get('level')!r}")
        if "metric" not in r:
            problems.append(f"{rid}: no metric")
        if not any(k in r for k in ("min", "max", "target")):
            problems.append(f"{rid}: no bound (min, max or target)")
        if "target" in r and not any(k in r for k in ("abs_tol", "rel_tol")):
            problems.append(f"{rid}: target without abs_tol or rel_tol")
    return problems


def preset_problems(presets: Dict[str, Any]) -> List[str]:
    problems = []
    for name in presets:
        try:
            parse_config(None, None, name)
        except ConfigError as e:
            problems.append(f"preset {name}: {e}")
    return problems


def main() -> int:
    problems = rule_problems(load_rules()) + preset_problems(load_presets())
    covered = {r.get("experiment") for r in load_rules().get("rules", [])}
    uncovered = [e for e in EXPERIMENTS if e not in covered]
    print("Experiments without rules:", uncovered)
    print("---")
    for p in problems:
        print(p)
    return 1 if problems or uncovered else 0


if __name__ == "__main__":
    sys.exit(main())
