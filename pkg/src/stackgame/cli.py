"""Command-line entry point.

Exit codes: 0 on success, 1 on a validation/configuration error, 2 when a
run stopped early on one of the algorithm's termination conditions.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from .config import load_scenario, render_scenario
from .engine import Scenario, run_aggregate, run_device_level, terminated_early
from .model import ConfigurationError, InvalidScenarioError
from .output import OUTPUT_FILES, emit_records, fmt, write_median_relerr, prepare_dir

log = logging.getLogger("stackgame")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_TERMINATED = 2


def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stackgame",
        description="Incentive design with utility learning for a utility/consumer game.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path, help="scenario file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--iters", type=int, help="override max_iters")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    common(sub.add_parser("run-aggregate", help="aggregate-signal game (one device)"))
    p = sub.add_parser("run-devices", help="device-level game with disaggregation")
    common(p)
    p.add_argument("--epsilon", type=float, help="override the disaggregation error bound")
    p = sub.add_parser("sweep-epsilon", help="device-level runs over error bounds and seeds")
    common(p)
    p.add_argument("--epsilons", type=_float_list, required=True,
                   help="comma-separated error bounds, e.g. 0.0,0.1,0.15")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds per bound")
    return parser


def _scenario(args) -> Scenario:
    scenario = load_scenario(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.iters is not None:
        changes["max_iters"] = args.iters
    if getattr(args, "epsilon", None) is not None:
        changes["epsilon"] = args.epsilon
    return replace(scenario, **changes) if changes else scenario


def _sweep(args, base: Scenario) -> int:
    if args.seeds < 1:
        raise ConfigurationError(f"--seeds must be >= 1, got {args.seeds}")
    any_early = False
    for eps in args.epsilons:
        sub = args.out / f"eps_{fmt(eps)}"
        prepare_dir(sub, OUTPUT_FILES + ("scenario.cfg", "relerr_median.csv"), args.force)
        runs = []
        for k in range(args.seeds):
            scenario = replace(base, epsilon=eps, seed=base.seed + k)
            records = run_device_level(scenario)
            any_early |= terminated_early(records)
            runs.append(records)
            if k == 0:
                emit_records(records, sub, scenario, force=True)
                (sub / "scenario.cfg").write_text(render_scenario(scenario), encoding="utf-8")
        write_median_relerr(runs, sub / "relerr_median.csv")
        log.info("epsilon=%s: %d runs written to %s", fmt(eps), len(runs), sub)
    return EXIT_TERMINATED if any_early else EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        scenario = _scenario(args)
        if args.command == "sweep-epsilon":
            return _sweep(args, scenario)
        if args.command == "run-aggregate":
            records = run_aggregate(scenario)
        else:
            records = run_device_level(scenario)
        emit_records(records, args.out, scenario, force=args.force)
    except (ConfigurationError, InvalidScenarioError, OSError) as exc:
        print(f"stackgame: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if terminated_early(records):
        print(f"stackgame: terminated: {records[-1].stop_reason}", file=sys.stderr)
        return EXIT_TERMINATED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
