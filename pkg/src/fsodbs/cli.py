"""
Command line interface.

    fsodbs solve    [options] [--output plan.json]
    fsodbs sweep    [options] --variable delta_km --values 5,10,15,20
    fsodbs validate plan.json

Exit codes: 0 success, 1 invalid input (including a plan that fails
validation), 2 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from .broad import BroadFailure, BroadPlan, validate_plan
from .config import NetworkConfig, apply_overrides, config_keys, load_key_values
from .knapsack import GaConfig
from .qp import QpError
from .scenario import Scenario, ScenarioSpec, generate_scenario
from .sweep import ALGORITHMS, SWEEP_VARIABLES, SweepSpec, emit_results, run_algorithm, run_sweep

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2
FULL_SCALE_USERS = 500
DESK_SCALE_USERS = 100
DESK_SCALE_TRIALS = 10
DEFAULT_VALUES = {"delta_km": "5,10,15,20", "visibility_km": "1,2,3,5"}

SCENARIO_KEYS = {
    "n_users": int, "users": int, "delta_km": float, "visibility_km": float,
    "phi_mean": float, "phi_min": float, "phi_max": float,
    "poi_width": float, "poi_height": float, "seed": int, "trials": int,
    "population_size": int, "offspring_per_generation": int, "mutation_flips": int,
    "patience": int,
}

log = logging.getLogger("fsodbs")


class InputError(ValueError):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}") from exc


def _load_file_values(path: Optional[str]) -> dict[str, Any]:
    if not path:
        return {}
    try:
        return load_key_values(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def build_inputs(args: argparse.Namespace) -> tuple[ScenarioSpec, GaConfig, int]:
    """Scenario spec, GA config and seed from a config file plus flags."""
    values = _load_file_values(args.config)
    unknown = set(values) - SCENARIO_KEYS.keys() - set(config_keys())
    if unknown:
        raise InputError(f"unknown keys in {args.config}: {', '.join(sorted(unknown))}")
    try:
        config = apply_overrides(NetworkConfig(), values)
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"invalid configuration: {exc}") from exc

    n_users = values.get("n_users", values.get("users", DESK_SCALE_USERS))
    if args.full_scale:
        n_users = FULL_SCALE_USERS
    if args.users is not None:
        n_users = args.users
    delta = args.delta_km if args.delta_km is not None else values.get("delta_km", 10.0)
    vis = args.visibility_km if args.visibility_km is not None else values.get("visibility_km")
    poi = (values.get("poi_width", 500.0), values.get("poi_height", 500.0))
    spec_kw = {k: values[k] for k in ("phi_mean", "phi_min", "phi_max") if k in values}
    seed = args.seed if args.seed is not None else values.get("seed", 0)
    ga_kw = {k: values[k] for k in ("population_size", "offspring_per_generation", "mutation_flips", "patience")
             if k in values}
    try:
        spec = ScenarioSpec(n_users=int(n_users), delta_km=float(delta), poi_size=poi,
                            visibility_km=None if vis is None else float(vis), config=config, **spec_kw)
        ga = GaConfig(rng_seed=int(seed), **ga_kw)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    return spec, ga, int(seed)


def cmd_solve(args: argparse.Namespace) -> int:
    spec, ga, seed = build_inputs(args)
    scenario = generate_scenario(spec, seed)
    try:
        plan = run_algorithm(args.algorithm, scenario, ga)
        status = "ok"
    except BroadFailure as exc:
        log.error("%s", exc)
        if exc.plan is None:
            return EXIT_SOLVER
        plan, status = exc.plan, f"solver failure: {exc}"
    except (QpError, ArithmeticError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    violations = validate_plan(plan, scenario.users, scenario.mbs, scenario.config)
    document = {
        "algorithm": args.algorithm,
        "status": status,
        "scenario": scenario.to_dict(),
        "plan": plan.to_dict(),
        "violations": [str(v) for v in violations],
    }
    if args.output:
        Path(args.output).write_text(json.dumps(document, indent=1))
    p = plan.dbs_position
    print(f"algorithm        {args.algorithm}")
    print(f"users            {len(scenario.users)} (delta {spec.delta_km:g} km, seed {seed})")
    print(f"satisfied        {plan.satisfied_count}")
    print(f"dbs position     x={p.x:.1f} m  y={p.y:.1f} m  h={p.h:.1f} m")
    print(f"utilization      backhaul={plan.utilization.backhaul:.4f}  access={plan.utilization.access:.4f}")
    print(f"outer iterations {plan.iterations}")
    print(f"violations       {len(violations)}")
    return EXIT_OK if status == "ok" else EXIT_SOLVER


def cmd_sweep(args: argparse.Namespace) -> int:
    spec, ga, seed = build_inputs(args)
    values = _float_list(args.values or DEFAULT_VALUES[args.variable])
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad:
        raise InputError(f"unknown algorithms {bad}; choose from {sorted(ALGORITHMS)}")
    trials = args.trials if args.trials is not None else DESK_SCALE_TRIALS
    try:
        sweep = SweepSpec(args.variable, tuple(values), trials, seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    results = run_sweep(sweep, spec, algorithms, ga, timing=not args.no_timing, workers=args.workers)
    try:
        emit_results(results, args.format, args.output or "-")
    except OSError as exc:
        raise InputError(f"cannot write {args.output}: {exc}") from exc
    failed = [r for r in results if r.error]
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.plan).read_text())
        scenario = Scenario.from_dict(doc["scenario"])
        plan = BroadPlan.from_dict(doc["plan"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot load plan {args.plan}: {exc}") from exc
    violations = validate_plan(plan, scenario.users, scenario.mbs, scenario.config)
    for v in violations:
        print(v)
    if not violations:
        print("no violations")
    return EXIT_INPUT if violations else EXIT_OK


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file with parameter overrides")
    p.add_argument("--users", type=int, help=f"number of users (default {DESK_SCALE_USERS})")
    p.add_argument("--delta-km", type=float, help="PoI center to MBS horizontal distance")
    p.add_argument("--visibility-km", type=float, help="derive FSO attenuation from visibility")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--full-scale", action="store_true", help=f"{FULL_SCALE_USERS} users")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsodbs", description="FSO-backhauled drone base station planner")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="plan one scenario")
    _add_scenario_flags(solve)
    solve.add_argument("--algorithm", default="broad", choices=sorted(ALGORITHMS))
    solve.add_argument("--output", help="write the plan (with its scenario) as JSON")
    solve.set_defaults(func=cmd_solve)

    sweep = sub.add_parser("sweep", help="sweep distance or visibility")
    _add_scenario_flags(sweep)
    sweep.add_argument("--variable", default="delta_km", choices=SWEEP_VARIABLES)
    sweep.add_argument("--values", help="comma separated sweep values")
    sweep.add_argument("--trials", type=int, help=f"trials per value (default {DESK_SCALE_TRIALS})")
    sweep.add_argument("--algorithms", default="broad,center_fixed")
    sweep.add_argument("--output", help="destination file (default stdout)")
    sweep.add_argument("--format", default="csv", choices=("csv", "json-lines"))
    sweep.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0 for reproducible output")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.set_defaults(func=cmd_sweep)

    validate = sub.add_parser("validate", help="audit a plan file")
    validate.add_argument("plan")
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
