"""Overhead constellation sampling and per-link delay/Doppler geometry.

Earth is a sphere; satellites are frozen snapshots (position + velocity, no
propagation). Positions are in km in an Earth-centred frame, velocities in
km/s. Doppler is positive for an approaching satellite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import EARTH_RADIUS_KM, SPEED_OF_LIGHT, SPEED_OF_LIGHT_KM_S

__all__ = [
    "EcefVector",
    "SatelliteState",
    "GroundTerminal",
    "ConstellationSpec",
    "LinkObservables",
    "sample_constellation",
    "slant_range",
    "link_observables",
    "delay_doppler_profile",
    "feasibility_mask",
]


@dataclass(frozen=True)
class EcefVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite vector component: {self}")

    @classmethod
    def from_array(cls, a) -> "EcefVector":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return float(np.linalg.norm(self.array()))


@dataclass(frozen=True)
class SatelliteState:
    id: int
    position: EcefVector  # km
    velocity: EcefVector  # km/s

    def tangency_residual(self) -> float:
        """|v.p| / (|v||p|); zero for motion tangent to the orbital sphere."""
        p, v = self.position.array(), self.velocity.array()
        vn = np.linalg.norm(v)
        if vn == 0.0:
            return 0.0
        return float(abs(v @ p) / (vn * np.linalg.norm(p)))


@dataclass(frozen=True)
class GroundTerminal:
    position: EcefVector  # km
    earth_radius: float = EARTH_RADIUS_KM

    def __post_init__(self):
        r = self.position.norm()
        if abs(r - self.earth_radius) > 1e-9 * self.earth_radius:
            raise ValueError(
                f"terminal not on the Earth sphere: |p|={r} km, R={self.earth_radius} km"
            )

    @classmethod
    def from_latlon(
        cls, lat_deg: float, lon_deg: float, earth_radius: float = EARTH_RADIUS_KM
    ) -> "GroundTerminal":
        lat, lon = math.radians(lat_deg), math.radians(lon_deg)
        p = earth_radius * np.array(
            [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
        )
        # exact renormalisation keeps |p| == R to the last ulp or so
        p *= earth_radius / np.linalg.norm(p)
        return cls(EcefVector.from_array(p), earth_radius)


@dataclass(frozen=True)
class ConstellationSpec:
    count: int = 200
    altitude: float = 600.0  # km
    speed: float = 7.5  # km/s
    zenith_min: float = 0.0  # deg
    zenith_max: float = 5.0  # deg
    earth_radius: float = EARTH_RADIUS_KM
    seed: int = 0

    def validate(self) -> None:
        if self.count < 1:
            raise ValueError("constellation count must be >= 1")
        if self.altitude <= 0:
            raise ValueError("altitude must be positive")
        if self.speed < 0:
            raise ValueError("speed must be nonnegative")
        # zenith_min == zenith_max is accepted as a degenerate (zero-extent) cap
        if not (0.0 <= self.zenith_min <= self.zenith_max <= 90.0):
            raise ValueError(
                f"invalid zenith cap [{self.zenith_min}, {self.zenith_max}] deg"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class LinkObservables:
    range: float  # km
    delay: float  # s
    doppler: float  # Hz, positive when approaching
    zenith_angle: float  # deg, seen from the terminal


def _local_frame(up: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plane orthogonal to ``up``."""
    ref = np.array([0.0, 0.0, 1.0])
    if abs(up @ ref) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    e1 = np.cross(ref, up)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(up, e1)
    return e1, e2


def slant_range(zenith_deg: float, altitude: float, earth_radius: float = EARTH_RADIUS_KM) -> float:
    """Distance from a ground point to a shell of height ``altitude`` along a
    ray at ``zenith_deg`` from the local vertical (km)."""
    if altitude < 0:
        raise ValueError("altitude must be nonnegative")
    if not 0.0 <= zenith_deg <= 90.0:
        raise ValueError("zenith angle must lie in [0, 90] deg")
    th = math.radians(zenith_deg)
    r, rs = earth_radius, earth_radius + altitude
    return math.sqrt(rs * rs - (r * math.sin(th)) ** 2) - r * math.cos(th)


def sample_constellation(spec: ConstellationSpec, ue: GroundTerminal) -> list[SatelliteState]:
    """Scatter ``spec.count`` satellites over the zenith cap above ``ue``.

    Directions from the terminal are uniform in solid angle (cos-zenith and
    azimuth uniform); each satellite sits where that ray meets the orbital
    shell. Velocities point along a uniformly random tangent direction.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    u_zen = rng.random(spec.count)
    u_az = rng.random(spec.count)
    u_vel = rng.random(spec.count)

    p_ue = ue.position.array()
    up = p_ue / np.linalg.norm(p_ue)
    east, north = _local_frame(up)
    cmin = math.cos(math.radians(spec.zenith_max))
    cmax = math.cos(math.radians(spec.zenith_min))
    shell = spec.earth_radius + spec.altitude
    R = spec.earth_radius

    cos_z = cmax - u_zen * (cmax - cmin)
    sin_z = np.sqrt(np.maximum(0.0, 1.0 - cos_z * cos_z))
    az = 2.0 * math.pi * u_az
    d = (sin_z * np.cos(az))[:, None] * east + (sin_z * np.sin(az))[:, None] * north
    d += cos_z[:, None] * up
    # slant range along each ray, same closed form as slant_range()
    rho = np.sqrt(shell * shell - (R * sin_z) ** 2) - R * cos_z
    pos = p_ue + rho[:, None] * d
    pos[sin_z == 0.0] = up * shell  # exact zenith

    radial = pos / np.linalg.norm(pos, axis=1, keepdims=True)
    ref = np.where(
        (np.abs(radial[:, 2]) > 0.9)[:, None], np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])
    )
    t1 = np.cross(ref, radial)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(radial, t1)
    psi = 2.0 * math.pi * u_vel
    vel = spec.speed * (np.cos(psi)[:, None] * t1 + np.sin(psi)[:, None] * t2)
    # strip any residual radial component left by rounding
    vel -= np.sum(vel * radial, axis=1, keepdims=True) * radial
    vn = np.linalg.norm(vel, axis=1, keepdims=True)
    vel = np.where(vn > 0, vel * (spec.speed / np.where(vn > 0, vn, 1.0)), vel)
    return [
        SatelliteState(i, EcefVector.from_array(pos[i]), EcefVector.from_array(vel[i]))
        for i in range(spec.count)
    ]


def link_observables(sat: SatelliteState, ue: GroundTerminal, fc: float) -> LinkObservables:
    p_sat, p_ue = sat.position.array(), ue.position.array()
    if np.linalg.norm(p_sat) <= ue.earth_radius:
        raise ValueError(f"satellite {sat.id} is not above the Earth surface")
    los = p_sat - p_ue
    rng_km = float(np.linalg.norm(los))
    if rng_km == 0.0:
        raise ValueError("satellite and terminal positions coincide")
    v = sat.velocity.array()
    dot = float(los @ v)
    # a dot product below its own rounding floor is an orthogonal pair, not motion
    if abs(dot) <= 8.0 * np.finfo(float).eps * rng_km * float(np.linalg.norm(v)):
        dot = 0.0
    range_rate = dot / rng_km  # km/s
    doppler = -fc * range_rate / SPEED_OF_LIGHT_KM_S
    up = p_ue / np.linalg.norm(p_ue)
    cos_z = float(np.clip(los @ up / rng_km, -1.0, 1.0))
    return LinkObservables(
        range=rng_km,
        delay=rng_km * 1e3 / SPEED_OF_LIGHT,
        doppler=doppler,
        zenith_angle=math.degrees(math.acos(cos_z)),
    )


def delay_doppler_profile(
    sats: Sequence[SatelliteState], ue: GroundTerminal, fc: float
) -> list[tuple[float, float]]:
    """(differential delay, Doppler) per satellite, relative to the earliest arrival."""
    if not sats:
        raise ValueError("empty satellite list")
    obs = [link_observables(s, ue, fc) for s in sats]
    t0 = min(o.delay for o in obs)
    return [(o.delay - t0, o.doppler) for o in obs]


def feasibility_mask(
    profile: Sequence[tuple[float, float]], cp: float, scs: float, doppler_factor: float = 0.1
) -> list[tuple[bool, bool]]:
    if cp <= 0 or scs <= 0:
        raise ValueError("cyclic prefix and subcarrier spacing must be positive")
    if not 0.0 < doppler_factor <= 1.0:
        raise ValueError("doppler_factor must lie in (0, 1]")
    limit = doppler_factor * scs
    return [(dd <= cp, abs(fd) <= limit) for dd, fd in profile]
