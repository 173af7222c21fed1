"""
Parameter sweeps over the MBS distance or the visibility, and their output.

Results are emitted as CSV or JSON lines with a fixed column set; numbers are
rendered with six significant digits so equal runs give identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable, Iterable, Optional, Sequence, Union

from .baselines import baseline_center_fixed, baseline_grid_search
from .broad import BroadFailure, BroadPlan, run_broad, validate_plan
from .knapsack import GaConfig
from .models import Position3D
from .scenario import Scenario, ScenarioSpec, generate_scenario

log = logging.getLogger(__name__)

SWEEP_VARIABLES = ("delta_km", "visibility_km")
COLUMNS = (
    "algorithm", "sweep_variable", "sweep_value", "trial", "seed", "satisfied_count",
    "backhaul_util", "access_util", "dbs_x_m", "dbs_y_m", "dbs_h_m", "runtime_ms",
)
INT_COLUMNS = {"trial", "seed", "satisfied_count"}
STR_COLUMNS = {"algorithm", "sweep_variable"}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]
    trials_per_point: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values or any(not v > 0 for v in self.values):
            raise ValueError("sweep values must be a non-empty list of positive numbers")
        if self.trials_per_point < 1:
            raise ValueError("need at least one trial per point")


@dataclass(frozen=True)
class TrialResult:
    algorithm: str
    sweep_variable: str
    sweep_value: float
    trial: int
    seed: int
    satisfied_count: int
    backhaul_util: float
    access_util: float
    dbs_x_m: float
    dbs_y_m: float
    dbs_h_m: float
    runtime_ms: float
    error: Optional[str] = None

    def row(self) -> dict:
        return {k: getattr(self, k) for k in COLUMNS}


# --- algorithms --------------------------------------------------------------


def _broad(scenario: Scenario, ga_cfg: GaConfig) -> BroadPlan:
    cx, cy = scenario.poi_center
    h0 = scenario.config.altitude.clip(50.0)
    return run_broad(scenario.users, scenario.mbs, scenario.config, ga_cfg, initial=Position3D(cx, cy, h0))


ALGORITHMS: dict[str, Callable[[Scenario, GaConfig], BroadPlan]] = {
    "broad": _broad,
    "center_fixed": baseline_center_fixed,
    "grid_search": lambda sc, ga: baseline_grid_search(sc, blocks=5, ga_cfg=ga),
}


def run_algorithm(name: str, scenario: Scenario, ga_cfg: GaConfig) -> BroadPlan:
    try:
        algo = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return algo(scenario, ga_cfg)


# --- sweeps ------------------------------------------------------------------


def _point_spec(template: ScenarioSpec, variable: str, value: float) -> ScenarioSpec:
    return dataclasses.replace(template, **{variable: value})


def _run_trial(args) -> TrialResult:
    algorithm, variable, value, trial, seed, template, ga_cfg, timing = args
    scenario = generate_scenario(_point_spec(template, variable, value), seed)
    ga = dataclasses.replace(ga_cfg, rng_seed=seed)
    error = None
    start = time.perf_counter()
    try:
        plan = run_algorithm(algorithm, scenario, ga)
    except BroadFailure as exc:
        plan, error = exc.plan, str(exc)
    except Exception as exc:  # recorded per trial; the sweep goes on
        plan, error = None, f"{type(exc).__name__}: {exc}"
    elapsed = (time.perf_counter() - start) * 1000.0 if timing else 0.0

    if plan is None:
        nan = math.nan
        return TrialResult(algorithm, variable, value, trial, seed, 0, nan, nan, nan, nan, nan, elapsed, error)
    violations = validate_plan(plan, scenario.users, scenario.mbs, scenario.config)
    if violations and error is None:
        error = "; ".join(str(v) for v in violations)
    p = plan.dbs_position
    return TrialResult(
        algorithm, variable, value, trial, seed, plan.satisfied_count,
        plan.utilization.backhaul, plan.utilization.access, p.x, p.y, p.h, elapsed, error,
    )


def run_sweep(spec: SweepSpec, template: ScenarioSpec = ScenarioSpec(),
              algorithms: Sequence[str] = ("broad", "center_fixed"),
              ga_cfg: GaConfig = GaConfig(), timing: bool = True,
              workers: int = 1) -> list[TrialResult]:
    """Every (value, trial, algorithm) combination, sorted by algorithm, value, trial.

    Trial ``k`` uses seed ``spec.base_seed + k`` for both the scenario and
    the GA, so algorithms are compared on identical users.
    """
    for name in algorithms:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    jobs = [
        (name, spec.variable, value, trial, spec.base_seed + trial, template, ga_cfg, timing)
        for name in algorithms
        for value in spec.values
        for trial in range(spec.trials_per_point)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, jobs))
    else:
        results = [_run_trial(job) for job in jobs]
    for r in results:
        if r.error:
            log.warning("%s at %s=%g trial %d: %s", r.algorithm, r.sweep_variable, r.sweep_value, r.trial, r.error)
    return sorted(results, key=lambda r: (r.algorithm, r.sweep_value, r.trial))


# --- output ------------------------------------------------------------------


def _fmt(key: str, value) -> str:
    if key in STR_COLUMNS:
        return str(value)
    if key in INT_COLUMNS:
        return str(int(value))
    return f"{float(value):.6g}"


def _json_value(key: str, value):
    if key in STR_COLUMNS:
        return str(value)
    if key in INT_COLUMNS:
        return int(value)
    v = float(f"{float(value):.6g}")
    return v if math.isfinite(v) else None


def format_results(results: Iterable[TrialResult], fmt: str = "csv") -> str:
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in results:
            writer.writerow([_fmt(k, getattr(r, k)) for k in COLUMNS])
    elif fmt == "json-lines":
        for r in results:
            buf.write(json.dumps({k: _json_value(k, getattr(r, k)) for k in COLUMNS}) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return buf.getvalue()


def emit_results(results: Iterable[TrialResult], fmt: str = "csv",
                 destination: Union[str, Path, IO[str]] = "-") -> None:
    text = format_results(results, fmt)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    if str(destination) == "-":
        import sys

        sys.stdout.write(text)
        return
    Path(destination).write_text(text)


def parse_results(text: str, fmt: str = "csv") -> list[TrialResult]:
    if fmt == "csv":
        rows = list(csv.DictReader(io.StringIO(text)))
    elif fmt == "json-lines":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    else:
        raise ValueError(f"unknown format {fmt!r}")
    out = []
    for row in rows:
        kw = {}
        for k in COLUMNS:
            v = row[k]
            if k in STR_COLUMNS:
                kw[k] = str(v)
            elif k in INT_COLUMNS:
                kw[k] = int(v)
            else:
                kw[k] = math.nan if v is None else float(v)
        out.append(TrialResult(**kw))
    return out
