"""Scenario generation for the PoI simulations."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .config import NetworkConfig
from .models import Position3D, UserSet

KBPS = 1e3
MBPS = 1e6


@dataclass(frozen=True)
class ScenarioSpec:
    """Knobs of the simulated deployment.

    ``visibility_km`` set to a number derives the FSO attenuation from
    visibility; ``None`` keeps the configured fixed attenuation.
    """

    n_users: int = 100
    delta_km: float = 10.0
    poi_size: tuple[float, float] = (500.0, 500.0)
    phi_mean: float = 5 * MBPS
    phi_min: float = 500 * KBPS
    phi_max: float = 500 * MBPS
    visibility_km: Optional[float] = None
    config: NetworkConfig = field(default_factory=NetworkConfig)

    def __post_init__(self):
        if self.n_users < 0:
            raise ValueError("n_users must be >= 0")
        if not self.delta_km >= 0:
            raise ValueError("delta_km must be >= 0")
        if not (self.poi_size[0] > 0 and self.poi_size[1] > 0):
            raise ValueError("PoI size must be positive")
        if not 0 < self.phi_min < self.phi_max:
            raise ValueError("need 0 < phi_min < phi_max")
        if not self.phi_mean > 0:
            raise ValueError("phi_mean must be positive")
        if self.visibility_km is not None and not self.visibility_km > 0:
            raise ValueError("visibility must be positive")

    def effective_config(self) -> NetworkConfig:
        if self.visibility_km is None:
            return self.config
        return self.config.replace(visibility=float(self.visibility_km), gamma=None)


@dataclass(frozen=True)
class Scenario:
    users: UserSet
    mbs: Position3D
    poi_center: tuple[float, float]
    poi_size: tuple[float, float]
    config: NetworkConfig
    seed: int

    @property
    def center_position(self) -> Position3D:
        return Position3D(self.poi_center[0], self.poi_center[1], self.config.altitude.h_min)

    def to_dict(self) -> dict[str, Any]:
        return {
            "users": {"x": self.users.x.tolist(), "y": self.users.y.tolist(), "phi": self.users.phi.tolist()},
            "mbs": dataclasses.asdict(self.mbs),
            "poi_center": list(self.poi_center),
            "poi_size": list(self.poi_size),
            "config": self.config.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        u = data["users"]
        return cls(
            users=UserSet(np.asarray(u["x"], float), np.asarray(u["y"], float), np.asarray(u["phi"], float)),
            mbs=Position3D(**data["mbs"]),
            poi_center=tuple(data["poi_center"]),
            poi_size=tuple(data["poi_size"]),
            config=NetworkConfig.from_dict(data["config"]),
            seed=int(data["seed"]),
        )


def truncated_exponential(rng: np.random.Generator, mean: float, low: float, high: float,
                          size: int) -> np.ndarray:
    """Exponential draws restricted to ``[low, high]`` by rejection."""
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        draw = rng.exponential(mean, size=max(2 * need, 16))
        draw = draw[(draw >= low) & (draw <= high)][:need]
        out[filled:filled + len(draw)] = draw
        filled += len(draw)
    return out


def generate_scenario(spec: ScenarioSpec, seed: int) -> Scenario:
    """Uniform users over the PoI centered at the origin; MBS at (delta, 0)."""
    rng = np.random.default_rng(seed)
    w, h = spec.poi_size
    n = spec.n_users
    x = rng.uniform(-w / 2, w / 2, size=n)
    y = rng.uniform(-h / 2, h / 2, size=n)
    phi = truncated_exponential(rng, spec.phi_mean, spec.phi_min, spec.phi_max, n)
    config = spec.effective_config()
    return Scenario(
        users=UserSet(x, y, phi),
        mbs=Position3D(spec.delta_km * 1000.0, 0.0, config.h_m),
        poi_center=(0.0, 0.0),
        poi_size=(float(w), float(h)),
        config=config,
        seed=seed,
    )
