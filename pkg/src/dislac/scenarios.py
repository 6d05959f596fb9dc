"""Seeded multi-satellite downlink instances for the beamforming experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, NoiseModel, StatisticalCsi, build_csi
from .geometry import ConstellationSpec, GroundTerminal, sample_constellation

__all__ = ["DownlinkScenario", "downlink_instance"]


@dataclass(frozen=True)
class DownlinkScenario:
    altitude: float = 600.0  # km
    speed: float = 7.5  # km/s
    zenith_max: float = 30.0  # deg, satellite cap above the service-area centre
    user_radius: float = 300.0  # km, users uniform in a disc around the centre
    center_lat: float = 0.0
    center_lon: float = 0.0
    fc: float = 2e9
    n_elements: int = 8
    element_spacing: float = 0.5
    rician_k_db: float = 10.0
    tx_power_w: float = 10.0  # per satellite
    tx_gain_db: float = 6.0  # per element
    rx_gain_db: float = 0.0
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 7.0

    def noise(self) -> NoiseModel:
        return NoiseModel.thermal(self.bandwidth_hz, self.noise_figure_db)


def _disc_users(center: GroundTerminal, radius_km: float, count: int, rng) -> list[GroundTerminal]:
    p = center.position.array()
    up = p / np.linalg.norm(p)
    ref = np.array([0.0, 0.0, 1.0]) if abs(up[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(ref, up)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(up, e1)
    R = center.earth_radius
    users = []
    for _ in range(count):
        # area-uniform in the disc, then mapped onto the sphere along a great circle
        rho = radius_km * math.sqrt(rng.random())
        az = 2.0 * math.pi * rng.random()
        ang = rho / R
        d = math.cos(az) * e1 + math.sin(az) * e2
        q = R * (math.cos(ang) * up + math.sin(ang) * d)
        q *= R / np.linalg.norm(q)
        users.append(GroundTerminal.from_latlon(*_latlon(q), earth_radius=R))
    return users


def _latlon(q: np.ndarray) -> tuple[float, float]:
    r = np.linalg.norm(q)
    return math.degrees(math.asin(q[2] / r)), math.degrees(math.atan2(q[1], q[0]))


def downlink_instance(
    scenario: DownlinkScenario, n_sats: int, n_users: int, seed: int
) -> tuple[StatisticalCsi, NoiseModel, np.ndarray]:
    """Statistics, noise model and per-satellite powers for one seeded draw."""
    center = GroundTerminal.from_latlon(scenario.center_lat, scenario.center_lon)
    spec = ConstellationSpec(
        count=n_sats,
        altitude=scenario.altitude,
        speed=scenario.speed,
        zenith_min=0.0,
        zenith_max=scenario.zenith_max,
        seed=seed,
    )
    sats = sample_constellation(spec, center)
    rng = np.random.default_rng([seed, 1])
    users = _disc_users(center, scenario.user_radius, n_users, rng)
    geom = ArrayGeometry(scenario.n_elements, scenario.element_spacing)
    kappa = 10 ** (scenario.rician_k_db / 10)
    csi = build_csi(sats, users, geom, scenario.fc, kappa, scenario.tx_gain_db, scenario.rx_gain_db)
    powers = np.full(n_sats, scenario.tx_power_w)
    return csi, scenario.noise(), powers
