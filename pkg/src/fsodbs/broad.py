"""
Backhaul-aware bandwidth allocation and DBS placement (BROAD).

Alternates user access control (knapsack GA at a fixed DBS position) and DBS
placement (SQP for the current satisfied set) until the satisfied-user count
stops growing, then returns the best plan seen.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .config import NetworkConfig
from .knapsack import GaConfig, KnapsackInstance, run_ga
from .models import (
    Position3D,
    UserSet,
    access_rate,
    average_pathloss_db,
    fso_rate,
    required_bandwidth,
)
from .placement import UtilizationPair, sqp_solve
from .qp import QpError

log = logging.getLogger(__name__)

MAX_OUTER_ITERATIONS = 25
INITIAL_ALTITUDE = 50.0
REL_TOL = 1e-9


@dataclass
class BroadPlan:
    dbs_position: Position3D
    z: np.ndarray
    per_user_bandwidth: np.ndarray
    satisfied_count: int
    utilization: UtilizationPair
    iterations: int
    history: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dbs_position": dataclasses.asdict(self.dbs_position),
            "z": [int(v) for v in self.z],
            "per_user_bandwidth": [float(v) for v in self.per_user_bandwidth],
            "satisfied_count": int(self.satisfied_count),
            "utilization": dataclasses.asdict(self.utilization),
            "iterations": int(self.iterations),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BroadPlan":
        return cls(
            dbs_position=Position3D(**data["dbs_position"]),
            z=np.asarray(data["z"], dtype=np.int8),
            per_user_bandwidth=np.asarray(data["per_user_bandwidth"], dtype=float),
            satisfied_count=int(data["satisfied_count"]),
            utilization=UtilizationPair(**data["utilization"]),
            iterations=int(data.get("iterations", 1)),
        )


class BroadFailure(RuntimeError):
    """An inner solver failed; ``plan`` is the best plan found before that."""

    def __init__(self, message: str, plan: Optional[BroadPlan]):
        super().__init__(message)
        self.plan = plan


def bandwidth_requirements(dbs: Position3D, users: UserSet, config: NetworkConfig) -> np.ndarray:
    if len(users) == 0:
        return np.zeros(0)
    pl = average_pathloss_db(dbs, users, config.access)
    return np.asarray(required_bandwidth(users, pl, config.access), dtype=float)


def access_control(dbs: Position3D, users: UserSet, mbs: Position3D, config: NetworkConfig,
                   ga_cfg: GaConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """Satisfied-user selection at a fixed DBS position.

    Returns ``(z, b, r_fso)`` with ``b`` the exact per-user bandwidth need.
    """
    b = bandwidth_requirements(dbs, users, config)
    r_fso = fso_rate(mbs, dbs, config.fso)
    if len(users) == 0:
        return np.zeros(0, dtype=np.int8), b, r_fso
    inst = KnapsackInstance(b, users.phi, config.access.B, r_fso)
    return run_ga(inst, ga_cfg), b, r_fso


def make_plan(dbs: Position3D, z: np.ndarray, b: np.ndarray, r_fso: float, users: UserSet,
              config: NetworkConfig, iterations: int) -> BroadPlan:
    z = np.asarray(z, dtype=np.int8)
    sel = z.astype(bool)
    util = UtilizationPair(
        float(users.phi[sel].sum() / r_fso) if len(users) else 0.0,
        float(b[sel].sum() / config.access.B) if len(users) else 0.0,
    )
    return BroadPlan(
        dbs_position=dbs,
        z=z,
        per_user_bandwidth=np.where(sel, b, 0.0),
        satisfied_count=int(z.sum()),
        utilization=util,
        iterations=iterations,
    )


def run_broad(users: UserSet, mbs: Position3D, config: NetworkConfig,
              ga_cfg: GaConfig = GaConfig(), nu: float = 1e-5,
              initial: Optional[Position3D] = None,
              max_outer: int = MAX_OUTER_ITERATIONS,
              sink: Optional[Callable[[dict], None]] = None) -> BroadPlan:
    """Joint placement and access control; returns the best plan seen.

    ``initial`` defaults to 50 m above the centroid of the user positions
    (the PoI center for uniformly placed users is passed explicitly by the
    simulation harness). Outer iteration ``k`` seeds the GA with
    ``ga_cfg.rng_seed + k``.
    """
    if initial is None:
        cx = float(users.x.mean()) if len(users) else 0.0
        cy = float(users.y.mean()) if len(users) else 0.0
        initial = Position3D(cx, cy, INITIAL_ALTITUDE)
    alt = config.altitude
    if not alt.h_min <= initial.h <= alt.h_max:
        raise ValueError(f"initial altitude {initial.h} outside [{alt.h_min}, {alt.h_max}]")

    history: list[dict] = []

    def record(it, pos, z, count, best_count, util):
        entry = {"iteration": it, "count": count, "best_count": best_count,
                 "position": pos, "utilization": util}
        history.append(entry)
        if sink is not None:
            sink(entry)

    pos = initial
    z, b, r = access_control(pos, users, mbs, config, ga_cfg)
    g = int(z.sum())
    best = make_plan(pos, z, b, r, users, config, iterations=1)
    record(0, pos, z, g, g, best.utilization)
    g_opt = 0
    iterations = 1

    while g > g_opt and iterations < max_outer:
        g_opt = g
        best = make_plan(pos, z, b, r, users, config, iterations=iterations)
        try:
            result = sqp_solve(pos, z, users, mbs, config, nu=nu)
            pos = result.position
            seed = ga_cfg.rng_seed + iterations
            z, b, r = access_control(pos, users, mbs, config, dataclasses.replace(ga_cfg, rng_seed=seed))
        except (QpError, ArithmeticError, ValueError) as exc:
            best.history = history
            raise BroadFailure(f"solver failure in outer iteration {iterations}: {exc}", best) from exc
        g = int(z.sum())
        iterations += 1
        record(iterations - 1, pos, z, g, max(g, g_opt), make_plan(pos, z, b, r, users, config, iterations).utilization)

    if g > g_opt:
        # iteration cap reached while still improving
        best = make_plan(pos, z, b, r, users, config, iterations=iterations)
    best.iterations = iterations
    best.history = history
    return best


# --- plan audit --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    constraint: str  # bandwidth | backhaul | rate | altitude | binary | count | shape
    message: str

    def __str__(self) -> str:
        return f"{self.constraint}: {self.message}"


def validate_plan(plan: BroadPlan, users: UserSet, mbs: Position3D,
                  config: NetworkConfig, rel_tol: float = REL_TOL) -> list[Violation]:
    """Audit a plan against every constraint of the joint problem."""
    out: list[Violation] = []
    n = len(users)
    z = np.asarray(plan.z)
    b = np.asarray(plan.per_user_bandwidth, dtype=float)
    if len(z) != n or len(b) != n:
        return [Violation("shape", f"plan covers {len(z)} users, scenario has {n}")]
    if not np.all((z == 0) | (z == 1)):
        out.append(Violation("binary", "selection entries must be 0 or 1"))
    sel = z == 1
    if int(sel.sum()) != plan.satisfied_count:
        out.append(Violation("count", f"satisfied_count {plan.satisfied_count} != {int(sel.sum())} selected"))

    B = config.access.B
    used = float(b[sel].sum())
    if used > B * (1 + rel_tol):
        out.append(Violation("bandwidth", f"allocated {used:.6g} Hz exceeds budget {B:.6g} Hz"))

    alt = config.altitude
    h = plan.dbs_position.h
    if h < alt.h_min * (1 - rel_tol) or h > alt.h_max * (1 + rel_tol):
        out.append(Violation("altitude", f"h = {h:.6g} m outside [{alt.h_min:.6g}, {alt.h_max:.6g}]"))

    if sel.any():
        pl = average_pathloss_db(plan.dbs_position, users, config.access)
        rates = np.asarray(access_rate(np.maximum(b, 0.0), pl, config.access))
        short = sel & (rates < users.phi * (1 - rel_tol))
        if short.any():
            out.append(Violation("rate", f"{int(short.sum())} selected users below their requirement "
                                         f"(first: user {int(np.flatnonzero(short)[0])})"))
        r_fso = fso_rate(mbs, plan.dbs_position, config.fso)
        # a user downloads at most its own demand
        carried = float(np.minimum(rates, users.phi)[sel].sum())
        if carried > r_fso * (1 + rel_tol):
            out.append(Violation("backhaul", f"access traffic {carried:.6g} bit/s exceeds backhaul {r_fso:.6g} bit/s"))
    return out
