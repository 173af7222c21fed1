"""Placement and access control for an FSO-backhauled drone base station."""

from .broad import BroadFailure, BroadPlan, Violation, run_broad, validate_plan
from .config import NetworkConfig
from .knapsack import GaConfig, KnapsackInstance, run_ga, solve_lp_dual
from .models import (
    AccessChannelParams,
    AltitudeBounds,
    FsoLinkParams,
    Position3D,
    UserProfile,
    UserSet,
    fso_rate,
)
from .placement import SqpResult, sqp_solve
from .scenario import Scenario, ScenarioSpec, generate_scenario
from .sweep import SweepSpec, TrialResult, format_results, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AccessChannelParams", "AltitudeBounds", "BroadFailure", "BroadPlan", "FsoLinkParams",
    "GaConfig", "KnapsackInstance", "NetworkConfig", "Position3D", "Scenario", "ScenarioSpec",
    "SqpResult", "SweepSpec", "TrialResult", "UserProfile", "UserSet", "Violation",
    "format_results", "fso_rate", "generate_scenario", "run_broad", "run_ga", "run_sweep",
    "solve_lp_dual", "sqp_solve", "validate_plan",
]
