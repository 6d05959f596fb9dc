"""Statistical CSI (Rician, isotropic scattering) and the hardening-bound rate.

Each satellite-user link is summarised by a mean vector (the LoS part, with
its carrier phase) and an isotropic covariance ``cov_scale * I``. Rates treat
the mean as known at the receiver and every fluctuation as interference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import BOLTZMANN, SPEED_OF_LIGHT
from .geometry import GroundTerminal, SatelliteState, _local_frame

__all__ = [
    "ArrayGeometry",
    "ChannelStats",
    "StatisticalCsi",
    "NoiseModel",
    "path_gain",
    "steering_vector",
    "channel_stats",
    "build_csi",
    "hardening_rate",
    "hardening_rates",
]


@dataclass(frozen=True)
class ArrayGeometry:
    n_elements: int = 16
    element_spacing: float = 0.5  # wavelengths

    def __post_init__(self):
        if self.n_elements < 1 or self.element_spacing <= 0:
            raise ValueError("need n_elements >= 1 and positive spacing")


@dataclass(frozen=True)
class ChannelStats:
    mean: np.ndarray  # complex, length N_t
    cov_scale: float
    gain: float
    rician_k: float

    @classmethod
    def rician(cls, steering: np.ndarray, gain: float, rician_k: float) -> "ChannelStats":
        """Split ``gain`` between a LoS mean along ``steering`` and isotropic scatter."""
        if rician_k < 0 or gain < 0:
            raise ValueError("gain and rician_k must be nonnegative")
        if math.isinf(rician_k):
            los_frac, cov = 1.0, 0.0
        else:
            los_frac, cov = rician_k / (1.0 + rician_k), gain / (1.0 + rician_k)
        mean = math.sqrt(gain * los_frac) * np.asarray(steering, dtype=complex)
        return cls(mean=mean, cov_scale=cov, gain=gain, rician_k=rician_k)


@dataclass(frozen=True)
class NoiseModel:
    noise_power: float  # W
    bandwidth: float  # Hz

    def __post_init__(self):
        if self.noise_power <= 0 or self.bandwidth <= 0:
            raise ValueError("noise power and bandwidth must be positive")

    @classmethod
    def thermal(cls, bandwidth: float, noise_figure_db: float = 0.0, temperature: float = 290.0):
        return cls(BOLTZMANN * temperature * bandwidth * 10 ** (noise_figure_db / 10), bandwidth)


class StatisticalCsi:
    """Stacked statistics for S satellites and U users.

    ``means`` has shape (S, U, N_t), ``cov`` shape (S, U).
    """

    def __init__(self, means: np.ndarray, cov: np.ndarray, gains: np.ndarray | None = None):
        means = np.asarray(means, dtype=complex)
        cov = np.asarray(cov, dtype=float)
        if means.ndim != 3 or cov.shape != means.shape[:2]:
            raise ValueError(f"shape mismatch: means {means.shape}, cov {cov.shape}")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(cov))):
            raise ValueError("non-finite channel statistics")
        self.means = means
        self.cov = cov
        if gains is None:
            gains = np.sum(np.abs(means) ** 2, axis=2) / means.shape[2] + cov
        self.gains = np.asarray(gains, dtype=float)

    @classmethod
    def from_stats(cls, grid: Sequence[Sequence[ChannelStats]]) -> "StatisticalCsi":
        """``grid[s][u]`` is the statistics of satellite s towards user u."""
        means = np.array([[st.mean for st in row] for row in grid])
        cov = np.array([[st.cov_scale for st in row] for row in grid])
        gains = np.array([[st.gain for st in row] for row in grid])
        return cls(means, cov, gains)

    @property
    def n_sats(self) -> int:
        return self.means.shape[0]

    @property
    def n_users(self) -> int:
        return self.means.shape[1]

    @property
    def n_elements(self) -> int:
        return self.means.shape[2]

    def subset(self, sats: Sequence[int], users: Sequence[int]) -> "StatisticalCsi":
        ix = np.ix_(list(sats), list(users))
        return StatisticalCsi(self.means[ix], self.cov[ix], self.gains[ix])

    def scaled(self, amplitude: float) -> "StatisticalCsi":
        """Statistics of the channel multiplied by ``amplitude`` (power by its square)."""
        return StatisticalCsi(self.means * amplitude, self.cov * amplitude**2, self.gains * amplitude**2)


def path_gain(range_km: float, fc: float, tx_gain_db: float = 0.0, rx_gain_db: float = 0.0) -> float:
    """Free-space power gain including antenna gains (linear)."""
    if range_km <= 0:
        raise ValueError("range must be positive")
    fspl = (SPEED_OF_LIGHT / (4.0 * math.pi * range_km * 1e3 * fc)) ** 2
    return fspl * 10 ** ((tx_gain_db + rx_gain_db) / 10)


def steering_vector(cos_angle: float, geom: ArrayGeometry) -> np.ndarray:
    """Unit-modulus ULA response; ``cos_angle`` is measured from the array axis."""
    n = np.arange(geom.n_elements) - (geom.n_elements - 1) / 2
    return np.exp(2j * np.pi * geom.element_spacing * n * cos_angle)


def _array_axis(sat: SatelliteState) -> np.ndarray:
    v = sat.velocity.array()
    p = sat.position.array()
    radial = p / np.linalg.norm(p)
    v = v - (v @ radial) * radial
    if np.linalg.norm(v) > 0:
        return v / np.linalg.norm(v)
    return _local_frame(radial)[0]


def channel_stats(
    sat: SatelliteState,
    ue: GroundTerminal,
    geom: ArrayGeometry,
    fc: float,
    rician_k: float,
    tx_gain_db: float = 0.0,
    rx_gain_db: float = 0.0,
) -> ChannelStats:
    """Rician statistics of one link. The ULA lies along the satellite's
    along-track direction; the mean carries the LoS carrier phase."""
    los = ue.position.array() - sat.position.array()
    d = float(np.linalg.norm(los))
    g = path_gain(d, fc, tx_gain_db, rx_gain_db)
    cos_angle = float(_array_axis(sat) @ los / d)
    # cycles over the path, reduced before forming the phase to keep precision
    cycles = math.fmod(d * 1e3 * fc / SPEED_OF_LIGHT, 1.0)
    a = steering_vector(cos_angle, geom) * np.exp(-2j * np.pi * cycles)
    return ChannelStats.rician(a, g, rician_k)


def build_csi(
    sats: Sequence[SatelliteState],
    users: Sequence[GroundTerminal],
    geom: ArrayGeometry,
    fc: float,
    rician_k: float,
    tx_gain_db: float = 0.0,
    rx_gain_db: float = 0.0,
) -> StatisticalCsi:
    grid = [
        [channel_stats(s, ue, geom, fc, rician_k, tx_gain_db, rx_gain_db) for ue in users]
        for s in sats
    ]
    return StatisticalCsi.from_stats(grid)


def _check_dims(beamformers: np.ndarray, csi: StatisticalCsi) -> np.ndarray:
    w = np.asarray(beamformers, dtype=complex)
    expected = (csi.n_sats, csi.n_elements, csi.n_users)
    if w.shape != expected:
        raise ValueError(f"beamformer shape {w.shape} does not match {expected}")
    return w


def hardening_rates(beamformers: np.ndarray, csi: StatisticalCsi, noise: NoiseModel) -> np.ndarray:
    """Per-user hardening-bound rates (bit/s) for beamformers of shape (S, N_t, U)."""
    w = _check_dims(beamformers, csi)
    # coupling[u, v] = m_u^H w_v summed over satellites
    coupling = np.einsum("sun,snv->uv", csi.means.conj(), w)
    # fluct[u] = sum_v w_v^H C_u w_v
    fluct = np.einsum("su,snv->u", csi.cov, np.abs(w) ** 2)
    power = np.abs(coupling) ** 2
    signal = np.diag(power)
    interference = power.sum(axis=1) - signal + fluct + noise.noise_power
    return noise.bandwidth * np.log2(1.0 + signal / interference)


def hardening_rate(
    user: int, beamformers: np.ndarray, csi: StatisticalCsi, noise: NoiseModel
) -> float:
    """Hardening-bound rate of one user (bit/s)."""
    w = _check_dims(beamformers, csi)
    m = csi.means[:, user, :]
    num = abs(np.vdot(m.ravel(), w[:, :, user].ravel())) ** 2
    cross = sum(
        abs(np.vdot(m.ravel(), w[:, :, v].ravel())) ** 2 for v in range(csi.n_users) if v != user
    )
    fluct = float(np.sum(csi.cov[:, user] * np.sum(np.abs(w) ** 2, axis=(1, 2))))
    return noise.bandwidth * math.log2(1.0 + num / (fluct + cross + noise.noise_power))
