"""Command-line entry point.

    hetsense {reconstruct,select,experiment,oracle} --config PATH [--seed N] [--out DIR]

Exit codes: 0 success, 2 invalid input, 3 infeasible selection, 4 numerical
failure (including failed oracle checks).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import TASKS, load_config
from .errors import (
    DegenerateWeights,
    FactorizationError,
    ParseError,
    QuadratureNotConverged,
    SchemaError,
    ValidationError,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("hetsense")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetsense", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in TASKS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--out", type=Path, default=None, help="overrides output_dir")
    return p


def main(argv: list[str] | None = None) -> int:
    from .experiments import RUNNERS

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
        if cfg.task_name != args.command:
            raise ValidationError("task", f"config defines a {cfg.task_name!r} task, not {args.command!r}")
        if args.out is not None:
            cfg = replace(cfg, output_dir=args.out)
        result = RUNNERS[args.command](cfg)
    except (ParseError, ValidationError, SchemaError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (FactorizationError, QuadratureNotConverged, DegenerateWeights) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    for f in result.files:
        log.info("wrote %s", f)
    if not result.feasible:
        log.error("no sensor set meets the requested MSE bound")
        return EXIT_INFEASIBLE
    if not result.ok:
        log.error("oracle checks failed")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
