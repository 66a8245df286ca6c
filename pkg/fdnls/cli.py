from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .engine import exit_code
from .errors import ConfigError, FdnlsError
from .io import write_json
from .load import parse_config
from .runner import run_experiment
from .schema import EXPERIMENTS

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdnls", description="fDNLS spectral simulator and verification lab.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--preset", help="named configuration from data/presets.json")
    p.add_argument("--alpha", type=float)
    p.add_argument("--mu", type=int, choices=(-1, 1))
    p.add_argument("--M", type=int)
    p.add_argument("--M-ref", dest="M_ref", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    g = p.add_mutually_exclusive_group()
    g.add_argument("-v", "--verbose", action="store_true")
    g.add_argument("-q", "--quiet", action="store_true")
    p.add_argument("--version", action="version", version=f"fdnls {__version__}")
    return p


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    overrides = {
        "experiment": args.experiment,
        "alpha": args.alpha,
        "mu": args.mu,
        "M": args.M,
        "M_ref": args.M_ref,
        "dt": args.dt,
        "t_end": args.t_end,
        "seed": args.seed,
        "out": str(args.out) if args.out is not None else None,
    }
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else None
        cfg = parse_config(text, overrides, args.preset)
    except OSError as e:
        logger.error("cannot read config: %s", e)
        return exit_code("ERROR")
    except ConfigError as e:
        logger.error("%s", e)
        if args.out is not None:
            # no valid config to echo; still leave a manifest behind
            write_json(args.out / "manifest.json", {
                "experiment": args.experiment, "status": "ERROR", "stage": "config", "error": e.to_record(),
            })
        return exit_code("ERROR")

    try:
        result = run_experiment(cfg, Path(cfg.out))
    except FdnlsError as e:
        logger.error("%s failed: %s", cfg.experiment, e)
        return exit_code("ERROR")
    for c in result.checks:
        mark = {True: "ok", False: "FAILED", None: "n/a"}[c["passed"]]
        logger.info("[%s] %s %s = %s (%s)", c["level"], c["id"], c["metric"], c["value"], mark)
    print(json.dumps({"experiment": cfg.experiment, "status": result.status, "out": str(result.out)}))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
