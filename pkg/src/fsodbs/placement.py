"""
DBS placement for a fixed set of satisfied users.

Minimizes the path utilization ``max(backhaul, access)`` over the DBS
position by sequential quadratic programming on the epigraph form::

    min  s   s.t.  s >= backhaul(x, y, h),  s >= access(x, y, h),
                   s <= 1,  h_min <= h <= h_max

Each iteration linearizes the constraints, solves the QP with
:func:`fsodbs.qp.active_set_solve`, and updates a BFGS approximation of the
Lagrangian Hessian. Steps are safeguarded by a backtracking line search on
an l1 merit function.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import NetworkConfig
from .models import (
    Position3D,
    UserSet,
    fso_rate_at_distance,
    los_probability,
    pathloss_from,
    required_bandwidth,
)
from .qp import InfeasibleQP, QpSubproblem, active_set_solve

log = logging.getLogger(__name__)

MERIT_PENALTY = 10.0
LENGTH_SCALE = 1000.0  # meters per unit of the initial Hessian
N_CONSTRAINTS = 5


@dataclass(frozen=True)
class UtilizationPair:
    backhaul: float
    access: float

    @property
    def max(self) -> float:
        return max(self.backhaul, self.access)


@dataclass
class PlacementIterate:
    u: np.ndarray  # (x, y, h, s) in meters / dimensionless
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(N_CONSTRAINTS))
    hessian: Optional[np.ndarray] = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.hessian is None:
            self.hessian = initial_hessian()

    @property
    def position(self) -> Position3D:
        return Position3D(float(self.u[0]), float(self.u[1]), float(self.u[2]))


def initial_hessian(length_scale: float = LENGTH_SCALE) -> np.ndarray:
    """Identity in coordinates where lengths are measured in ``length_scale``."""
    return np.diag([length_scale ** -2] * 3 + [1.0])


class PathModel:
    """Utilization of the MBS -> DBS -> satisfied-users path, vectorized."""

    def __init__(self, z, users: UserSet, mbs: Position3D, config: NetworkConfig):
        z = np.asarray(z, dtype=bool).reshape(-1)
        if len(z) != len(users):
            raise ValueError("selection length does not match user count")
        self.mbs = mbs
        self.config = config
        self.users = UserSet(users.x[z], users.y[z], users.phi[z]) if z.any() else UserSet.empty()
        self.total_rate = float(self.users.phi.sum())

    def backhaul_capacity(self, x: float, y: float, h: float) -> float:
        L = math.sqrt((x - self.mbs.x) ** 2 + (y - self.mbs.y) ** 2 + (h - self.mbs.h) ** 2)
        return fso_rate_at_distance(L, self.config.fso)

    def bandwidths(self, x: float, y: float, h: float) -> np.ndarray:
        if len(self.users) == 0:
            return np.zeros(0)
        dbs = Position3D(x, y, h)
        acc = self.config.access
        l = np.hypot(x - self.users.x, y - self.users.y)
        d = np.hypot(l, h)
        rho = los_probability(dbs, self.users, acc)
        return required_bandwidth(self.users, pathloss_from(d, rho, acc), acc)

    def utilization(self, x: float, y: float, h: float) -> UtilizationPair:
        if len(self.users) == 0:
            return UtilizationPair(0.0, 0.0)
        cap = self.backhaul_capacity(x, y, h)
        if not cap > 0:
            raise ZeroDivisionError("backhaul capacity is zero")
        return UtilizationPair(
            self.total_rate / cap,
            float(self.bandwidths(x, y, h).sum()) / self.config.access.B,
        )

    def backhaul(self, u: np.ndarray) -> float:
        return self.utilization(u[0], u[1], u[2]).backhaul

    def access(self, u: np.ndarray) -> float:
        return self.utilization(u[0], u[1], u[2]).access


def path_utilization(dbs: Position3D, z, users: UserSet, mbs: Position3D,
                     config: NetworkConfig) -> UtilizationPair:
    return PathModel(z, users, mbs, config).utilization(dbs.x, dbs.y, dbs.h)


def _constraints(u: np.ndarray, util: UtilizationPair, config: NetworkConfig) -> np.ndarray:
    s, h = u[3], u[2]
    alt = config.altitude
    return np.array([s - util.backhaul, s - util.access, 1.0 - s, alt.h_max - h, h - alt.h_min])


def constraint_values(u, z, users: UserSet, mbs: Position3D, config: NetworkConfig) -> np.ndarray:
    """Epigraph constraints at ``u``; all entries >= 0 iff feasible."""
    u = np.asarray(u, dtype=float)
    return _constraints(u, path_utilization(Position3D(*u[:3]), z, users, mbs, config), config)


def fd_steps(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    floor = np.array([1e-3, 1e-3, 1e-3, 1e-6])[: len(u)]
    return np.maximum(1e-4 * np.abs(u), floor)


def numerical_gradient(f: Callable[[np.ndarray], float], u, steps=None) -> np.ndarray:
    """Central-difference gradient of a scalar field."""
    u = np.asarray(u, dtype=float)
    steps = fd_steps(u) if steps is None else np.broadcast_to(np.asarray(steps, dtype=float), u.shape)
    grad = np.empty_like(u)
    for k in range(len(u)):
        e = np.zeros_like(u)
        e[k] = steps[k]
        hi, lo = f(u + e), f(u - e)
        if not (math.isfinite(hi) and math.isfinite(lo)):
            raise FloatingPointError(f"non-finite function value near coordinate {k}")
        grad[k] = (hi - lo) / (2.0 * steps[k])
    return grad


def _utilization_gradients(model: PathModel, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of backhaul and access utilization over (x, y, h, s)."""
    if len(model.users) == 0:
        return np.zeros(4), np.zeros(4)
    steps = fd_steps(u)
    gb, ga = np.zeros(4), np.zeros(4)
    for k in range(3):
        e = np.zeros(3)
        e[k] = steps[k]
        hi = model.utilization(*(u[:3] + e))
        lo = model.utilization(*(u[:3] - e))
        gb[k] = (hi.backhaul - lo.backhaul) / (2.0 * steps[k])
        ga[k] = (hi.access - lo.access) / (2.0 * steps[k])
    return gb, ga


def build_qp(state: PlacementIterate, model: PathModel, util: Optional[UtilizationPair] = None,
             grads: Optional[tuple[np.ndarray, np.ndarray]] = None) -> QpSubproblem:
    """Local QP: ``min 0.5 d'Hd + d_s`` s.t. linearized constraints >= 0."""
    u = state.u
    if util is None:
        util = model.utilization(*u[:3])
    gb, ga = _utilization_gradients(model, u) if grads is None else grads
    e_s = np.array([0.0, 0.0, 0.0, 1.0])
    normals = np.vstack([
        e_s - gb,
        e_s - ga,
        -e_s,
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    return QpSubproblem(
        hessian=state.hessian,
        gradient=e_s,
        constraint_normals=normals,
        constraint_offsets=_constraints(u, util, model.config),
    )


def bfgs_update(H: np.ndarray, delta_u: np.ndarray, grad_L_new: np.ndarray,
                grad_L_old: np.ndarray) -> np.ndarray:
    """BFGS update with Powell damping; the result stays positive definite."""
    s = np.asarray(delta_u, dtype=float)
    q = np.asarray(grad_L_new, dtype=float) - np.asarray(grad_L_old, dtype=float)
    Hs = H @ s
    sHs = float(s @ Hs)
    if sHs <= 0:
        return H.copy()
    sq = float(s @ q)
    if sq < 0.2 * sHs:
        theta = 0.8 * sHs / (sHs - sq)
        q = theta * q + (1.0 - theta) * Hs
        sq = float(s @ q)
    H_new = H + np.outer(q, q) / sq - np.outer(Hs, Hs) / sHs
    return 0.5 * (H_new + H_new.T)


def _lagrangian_gradient(mult: np.ndarray, gb: np.ndarray, ga: np.ndarray) -> np.ndarray:
    e_s = np.array([0.0, 0.0, 0.0, 1.0])
    normals = np.vstack([e_s - gb, e_s - ga, -e_s, [0, 0, -1.0, 0], [0, 0, 1.0, 0]])
    return e_s - normals.T @ mult


def merit(u: np.ndarray, util: UtilizationPair, config: NetworkConfig) -> float:
    viol = np.maximum(0.0, -_constraints(u, util, config))
    return float(u[3] + MERIT_PENALTY * viol.sum())


@dataclass
class SqpResult:
    position: Position3D
    utilization: UtilizationPair
    iterations: int
    converged: bool
    varsigma: float


def sqp_solve(start: Position3D, z, users: UserSet, mbs: Position3D, config: NetworkConfig,
              nu: float = 1e-5, max_iter: int = 200,
              trace: Optional[Callable[[dict], None]] = None) -> SqpResult:
    """Locally minimize the path utilization starting from ``start``.

    ``trace`` receives one record per iteration with keys ``t``, ``u``,
    ``varsigma``, ``merit``, ``step_norm`` and ``hessian``. The best point seen is
    returned; ``converged`` is False when the iteration cap was hit.
    """
    model = PathModel(z, users, mbs, config)
    alt = config.altitude
    x, y, h = start.x, start.y, alt.clip(start.h)
    util = model.utilization(x, y, h)
    state = PlacementIterate(np.array([x, y, h, util.max]))
    cur_merit = merit(state.u, util, config)
    best = (util.max, state.u.copy(), util)
    grads = _utilization_gradients(model, state.u)
    converged = False

    t = 0
    for t in range(max_iter):
        qp = build_qp(state, model, util, grads)
        if state.u[3] > 1.0:
            # s <= 1 is unattainable locally; drop it until back under
            qp = _without_row(qp, 2)
        try:
            step, mult = active_set_solve(qp)
        except InfeasibleQP:
            qp = _without_row(qp, 2)
            step, mult = active_set_solve(qp)
        if len(mult) < N_CONSTRAINTS:
            mult = np.insert(mult, 2, 0.0)

        if abs(step[3]) <= nu:
            converged = True
            _emit(trace, t, state.u, cur_merit, 0.0, state.hessian)
            break

        # backtracking on the l1 merit
        alpha, accepted = 1.0, None
        for _ in range(21):
            trial = state.u + alpha * step
            trial[2] = min(max(trial[2], alt.h_min), alt.h_max)
            trial_util = model.utilization(*trial[:3])
            trial_merit = merit(trial, trial_util, config)
            if trial_merit <= cur_merit - 1e-4 * alpha * abs(step[3]):
                accepted = (trial, trial_util)
                break
            alpha *= 0.5
        if accepted is None:
            converged = True
            _emit(trace, t, state.u, cur_merit, 0.0, state.hessian)
            break

        new_u, new_util = accepted
        new_u[3] = new_util.max  # epigraph variable back onto the surface
        new_grads = _utilization_gradients(model, new_u)
        H = bfgs_update(
            state.hessian,
            new_u - state.u,
            _lagrangian_gradient(mult, *new_grads),
            _lagrangian_gradient(mult, *grads),
        )
        step_norm = float(np.linalg.norm(new_u - state.u))
        state = PlacementIterate(new_u, mult, H)
        util, grads = new_util, new_grads
        cur_merit = merit(state.u, util, config)
        _emit(trace, t, state.u, cur_merit, step_norm, H)
        if util.max < best[0]:
            best = (util.max, state.u.copy(), util)
    else:
        log.warning("SQP hit the iteration cap of %d", max_iter)

    _, u_best, util_best = best
    return SqpResult(
        position=Position3D(float(u_best[0]), float(u_best[1]), float(u_best[2])),
        utilization=util_best,
        iterations=t + 1,
        converged=converged,
        varsigma=util_best.max,
    )


def _without_row(qp: QpSubproblem, row: int) -> QpSubproblem:
    keep = [j for j in range(len(qp.constraint_offsets)) if j != row]
    return QpSubproblem(qp.hessian, qp.gradient, qp.constraint_normals[keep], qp.constraint_offsets[keep])


def _emit(trace, t, u, merit_value, step_norm, hessian):
    if trace is not None:
        trace({"t": t, "u": u.copy(), "varsigma": float(u[3]), "merit": merit_value,
               "step_norm": step_norm, "hessian": hessian.copy()})
