"""Reference placement strategies for comparison with BROAD."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .broad import BroadPlan, access_control, make_plan
from .knapsack import GaConfig
from .models import Position3D
from .scenario import Scenario


def _best_over(candidates: Iterable[Position3D], scenario: Scenario, ga_cfg: GaConfig) -> Optional[BroadPlan]:
    best, best_key = None, None
    for pos in candidates:
        z, b, r = access_control(pos, scenario.users, scenario.mbs, scenario.config, ga_cfg)
        plan = make_plan(pos, z, b, r, scenario.users, scenario.config, iterations=1)
        key = (-plan.satisfied_count, plan.utilization.max)
        if best_key is None or key < best_key:
            best, best_key = plan, key
    return best


def altitude_grid(scenario: Scenario, n: int) -> np.ndarray:
    alt = scenario.config.altitude
    return np.linspace(alt.h_min, alt.h_max, n)


def baseline_center_fixed(scenario: Scenario, ga_cfg: GaConfig = GaConfig(),
                          n_altitudes: int = 101) -> BroadPlan:
    """DBS over the PoI center; only the altitude is searched.

    Stands in for access-network-only placement schemes, which keep the DBS
    near the PoI center regardless of the backhaul.
    """
    cx, cy = scenario.poi_center
    cands = (Position3D(cx, cy, float(h)) for h in altitude_grid(scenario, n_altitudes))
    return _best_over(cands, scenario, ga_cfg)


def block_centers(scenario: Scenario, blocks: int) -> list[tuple[float, float]]:
    if blocks < 1:
        raise ValueError("need at least one block per axis")
    (cx, cy), (w, h) = scenario.poi_center, scenario.poi_size
    xs = cx - w / 2 + (np.arange(blocks) + 0.5) * w / blocks
    ys = cy - h / 2 + (np.arange(blocks) + 0.5) * h / blocks
    return [(float(x), float(y)) for x in xs for y in ys]


def baseline_grid_search(scenario: Scenario, blocks: int = 5, ga_cfg: GaConfig = GaConfig(),
                         n_altitudes: int = 11) -> BroadPlan:
    """Brute force over block centers of the PoI and an altitude grid."""
    hs = altitude_grid(scenario, n_altitudes)
    cands = (Position3D(x, y, float(h)) for x, y in block_centers(scenario, blocks) for h in hs)
    return _best_over(cands, scenario, ga_cfg)
