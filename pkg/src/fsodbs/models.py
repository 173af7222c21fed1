"""
Channel and link models
=======================

Geometry, air-to-ground pathloss, access-link rate, bandwidth sizing and the
FSO backhaul rate. Every function works on scalars and, where a user argument
is taken, on a :class:`UserSet` of arrays as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s
PLANCK = 6.626e-34  # J*s


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


# --- domain types -----------------------------------------------------------


@dataclass(frozen=True)
class Position3D:
    """A point in meters; ``h`` is altitude above ground."""

    x: float
    y: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.h)):
            raise ValueError(f"non-finite coordinate in {self!r}")
        if self.h < 0:
            raise ValueError(f"altitude must be >= 0, got {self.h}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.h], dtype=float)


@dataclass(frozen=True)
class UserProfile:
    """A ground user at (x, y) meters requiring ``phi`` bits/second."""

    x: float
    y: float
    phi: float

    def __post_init__(self):
        if not self.phi > 0:
            raise ValueError(f"rate requirement must be positive, got {self.phi}")


@dataclass(frozen=True, eq=False)
class UserSet:
    """Column-oriented collection of users, used by the vectorized paths."""

    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "phi"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.x) == len(self.y) == len(self.phi)):
            raise ValueError("user columns differ in length")
        if np.any(self.phi <= 0):
            raise ValueError("rate requirements must be positive")

    @classmethod
    def from_profiles(cls, users: Sequence[UserProfile]) -> "UserSet":
        return cls(
            np.array([u.x for u in users], dtype=float),
            np.array([u.y for u in users], dtype=float),
            np.array([u.phi for u in users], dtype=float),
        )

    @classmethod
    def empty(cls) -> "UserSet":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0))

    def __len__(self) -> int:
        return len(self.phi)

    def __iter__(self) -> Iterator[UserProfile]:
        for x, y, phi in zip(self.x, self.y, self.phi):
            yield UserProfile(float(x), float(y), float(phi))

    def __getitem__(self, i: int) -> UserProfile:
        return UserProfile(float(self.x[i]), float(self.y[i]), float(self.phi[i]))

    def __eq__(self, other):
        if not isinstance(other, UserSet):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.phi, other.phi)
        )


Users = Union[UserProfile, UserSet]


@dataclass(frozen=True)
class AccessChannelParams:
    f_c: float = 2e9
    xi_los: float = 1.0
    xi_nlos: float = 20.0
    alpha: float = 9.6
    beta: float = 0.28
    p_d: float = 0.1
    n0: float = field(default_factory=lambda: dbm_to_watts(-104.0))
    B: float = 20e6
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.f_c > 0:
            raise ValueError("carrier frequency must be positive")
        if not self.xi_nlos >= self.xi_los >= 0:
            raise ValueError("need xi_nlos >= xi_los >= 0")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("environment parameters must be positive")
        if not (self.p_d > 0 and self.n0 > 0 and self.B > 0 and self.c > 0):
            raise ValueError("powers, bandwidth and c must be positive")


@dataclass(frozen=True)
class FsoLinkParams:
    """FSO transmitter/receiver constants.

    ``gamma`` is a fixed attenuation in dB/km. When it is ``None`` the
    attenuation is derived from ``visibility`` (km) instead.
    """

    p_fso: float = 1e-3
    tau_tx: float = 0.9
    tau_rx: float = 0.7
    aperture_diameter: float = 42.5e-3
    divergence: float = 60e-6
    wavelength: float = 1550e-9
    planck: float = PLANCK
    receiver_sensitivity: float = 67885.0
    visibility: float = 20.0
    gamma: float | None = 1.0
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        positives = (
            self.p_fso, self.tau_tx, self.tau_rx, self.aperture_diameter,
            self.divergence, self.wavelength, self.planck,
            self.receiver_sensitivity, self.visibility, self.c,
        )
        if not all(v > 0 for v in positives):
            raise ValueError("FSO parameters must be strictly positive")
        if self.tau_tx > 1 or self.tau_rx > 1:
            raise ValueError("optical efficiencies must lie in (0, 1]")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("attenuation must be non-negative")


@dataclass(frozen=True)
class AltitudeBounds:
    h_min: float = 50.0
    h_max: float = 500.0

    def __post_init__(self):
        if not 0 < self.h_min <= self.h_max:
            raise ValueError("need 0 < h_min <= h_max")

    def clip(self, h: float) -> float:
        return float(min(max(h, self.h_min), self.h_max))


# --- geometry and access link ------------------------------------------------


def horizontal_distance(dbs: Position3D, user: Users):
    return np.hypot(dbs.x - user.x, dbs.y - user.y)


def distance_3d(dbs: Position3D, user: Users):
    """Slant range between the DBS and the user(s), in meters."""
    return np.hypot(horizontal_distance(dbs, user), dbs.h)


def elevation_deg(dbs: Position3D, user: Users):
    # arctan2 maps a zero horizontal offset to 90 degrees
    return np.degrees(np.arctan2(dbs.h, horizontal_distance(dbs, user)))


def los_probability(dbs: Position3D, user: Users, params: AccessChannelParams):
    l = horizontal_distance(dbs, user)
    if np.any((l == 0) & (dbs.h == 0)):
        raise ValueError("DBS co-located with a user: elevation undefined")
    theta = np.degrees(np.arctan2(dbs.h, l))
    return 1.0 / (1.0 + params.alpha * np.exp(-params.beta * (theta - params.alpha)))


def free_space_pathloss_db(d, params: AccessChannelParams):
    return 20.0 * np.log10(4.0 * np.pi * params.f_c * d / params.c)


def average_pathloss_db(dbs: Position3D, user: Users, params: AccessChannelParams):
    """Free-space loss plus the LoS/NLoS-weighted excess loss, in dB."""
    d = distance_3d(dbs, user)
    if np.any(d <= 0):
        raise ValueError("zero DBS-user distance")
    rho = los_probability(dbs, user, params)
    return pathloss_from(d, rho, params)


def pathloss_from(d, rho, params: AccessChannelParams):
    return free_space_pathloss_db(d, params) + rho * params.xi_los + (1.0 - rho) * params.xi_nlos


def snr(pathloss_db, params: AccessChannelParams):
    return params.p_d * 10.0 ** (-np.asarray(pathloss_db) / 10.0) / params.n0


def access_rate(bandwidth, pathloss_db, params: AccessChannelParams):
    """Shannon rate over ``bandwidth`` Hz at the given pathloss."""
    if np.any(np.asarray(bandwidth) < 0):
        raise ValueError("bandwidth must be non-negative")
    return bandwidth * np.log2(1.0 + snr(pathloss_db, params))


def required_bandwidth(user: Users, pathloss_db, params: AccessChannelParams):
    """Smallest bandwidth at which the access rate meets ``user.phi``."""
    gain = snr(pathloss_db, params)
    if np.any(gain <= 0):
        raise ValueError("non-positive SNR")
    return user.phi / np.log2(1.0 + gain)


# --- FSO backhaul ------------------------------------------------------------


def scattering_exponent_q(visibility: float) -> float:
    """Kim's particle size exponent as a function of visibility in km."""
    v = visibility
    if v < 0:
        raise ValueError("visibility must be non-negative")
    if v > 50:
        return 1.6
    if v > 6:
        return 1.3
    if v > 1:
        return 0.16 * v + 0.34
    if v > 0.5:
        return v - 0.5
    return 0.0


def attenuation_gamma(params: FsoLinkParams) -> float:
    """Atmospheric attenuation in dB/km from the visibility distance."""
    v = params.visibility
    if not v > 0:
        raise ValueError("visibility must be positive")
    q = scattering_exponent_q(v)
    wavelength_nm = params.wavelength * 1e9
    return (3.91 / v) * (wavelength_nm / 550.0) ** (-q)


def effective_gamma(params: FsoLinkParams) -> float:
    return params.gamma if params.gamma is not None else attenuation_gamma(params)


def photon_energy(params: FsoLinkParams) -> float:
    return params.planck * params.c / params.wavelength


def fso_rate_at_distance(L_m, params: FsoLinkParams, gamma: float | None = None):
    """Backhaul rate (bit/s) at a slant range of ``L_m`` meters.

    Attenuation uses the range in km, geometric spreading uses meters.
    """
    if gamma is None:
        gamma = effective_gamma(params)
    L_m = np.asarray(L_m, dtype=float)
    if np.any(L_m <= 0):
        raise ValueError("MBS and DBS are co-located")
    received = (
        params.p_fso * params.tau_tx * params.tau_rx
        * 10.0 ** (-gamma * (L_m / 1000.0) / 10.0)
        * params.aperture_diameter ** 2
    )
    spread = np.pi * (params.divergence / 2.0) ** 2 * L_m ** 2
    rate = received / (spread * photon_energy(params) * params.receiver_sensitivity)
    return float(rate) if rate.ndim == 0 else rate


def mbs_dbs_distance(mbs: Position3D, dbs: Position3D) -> float:
    return math.sqrt((dbs.x - mbs.x) ** 2 + (dbs.y - mbs.y) ** 2 + (dbs.h - mbs.h) ** 2)


def fso_rate(mbs: Position3D, dbs: Position3D, params: FsoLinkParams) -> float:
    return fso_rate_at_distance(mbs_dbs_distance(mbs, dbs), params)
