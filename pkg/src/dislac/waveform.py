"""OFDM radar metrics for monostatic sensing and their inversion.

All range quantities use the two-way (monostatic) convention. ``t_pri`` is the
slow-time sampling interval that sets the Doppler axis; it is kept separate from
``1/delta_f`` even though the two are often tied.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .constants import SPEED_OF_LIGHT

__all__ = [
    "OfdmConfig",
    "RadarMetrics",
    "radar_metrics",
    "metrics_sweep",
    "required_config",
    "label_matches",
]


@dataclass(frozen=True)
class OfdmConfig:
    delta_f: float = 1.5e3  # Hz
    n_subcarriers: int = 1024
    n_symbols: int = 1
    t_pri: float = 1.5e-6  # s
    fc: float = 1e9  # Hz
    cp: float = 1.6e-6  # s
    scs: float = 60e3  # Hz

    def __post_init__(self):
        if self.delta_f <= 0 or self.t_pri <= 0 or self.fc <= 0:
            raise ValueError("delta_f, t_pri and fc must be positive")
        if self.n_subcarriers < 1 or self.n_symbols < 1:
            raise ValueError("n_subcarriers and n_symbols must be >= 1")


@dataclass(frozen=True)
class RadarMetrics:
    r_max: float  # km
    delta_r: float  # km
    v_max: float  # km/s
    delta_v: float  # m/s


def radar_metrics(cfg: OfdmConfig, c: float = SPEED_OF_LIGHT) -> RadarMetrics:
    """Unambiguous range/velocity and their resolutions for ``cfg``.

    ``c`` is overridable because published tables are often computed with the
    rounded 3e8 m/s.
    """
    return RadarMetrics(
        r_max=c / (2.0 * cfg.delta_f) / 1e3,
        delta_r=c / (2.0 * cfg.n_subcarriers * cfg.delta_f) / 1e3,
        v_max=c / (4.0 * cfg.fc * cfg.t_pri) / 1e3,
        delta_v=c / (2.0 * cfg.fc * cfg.n_symbols * cfg.t_pri),
    )


def metrics_sweep(
    delta_f_min: float,
    delta_f_max: float,
    levels: int,
    template: OfdmConfig,
    c: float = SPEED_OF_LIGHT,
) -> list[tuple[float, RadarMetrics]]:
    """Log-spaced subband-spacing sweep with ``t_pri = 1/delta_f`` at every level."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    if not 0 < delta_f_min < delta_f_max:
        raise ValueError("need 0 < delta_f_min < delta_f_max")
    rows = []
    for df in np.geomspace(delta_f_min, delta_f_max, levels):
        df = float(df)
        cfg = replace(template, delta_f=df, t_pri=1.0 / df)
        rows.append((df, radar_metrics(cfg, c)))
    return rows


def required_config(
    r_max_target: float | None = None,
    v_max_target: float | None = None,
    fc: float | None = None,
    c: float = SPEED_OF_LIGHT,
) -> tuple[float | None, float | None]:
    """Largest subband spacing (Hz) and slow-time interval (s) meeting the
    unambiguous range (km) and velocity (km/s) targets.

    Either target may be omitted; the matching output is then ``None``.
    """
    df_max = t_max = None
    if r_max_target is not None:
        if r_max_target <= 0:
            raise ValueError("r_max_target must be positive")
        df_max = c / (2.0 * r_max_target * 1e3)
    if v_max_target is not None:
        if v_max_target <= 0 or fc is None or fc <= 0:
            raise ValueError("v_max_target and fc must be positive")
        t_max = c / (4.0 * fc * v_max_target * 1e3)
    return df_max, t_max


def label_matches(value: float, label: str) -> bool:
    """True if ``value`` rounds to the printed ``label``.

    A value sitting exactly on a rounding tie matches either neighbour, since
    the tie direction of a plotted label is not recoverable.
    """
    decimals = len(label.split(".")[1]) if "." in label else 0
    half_unit = 0.5 * 10.0 ** (-decimals)
    return abs(value - float(label)) <= half_unit * (1.0 + 1e-9)


def level_indices(levels: int, picks: int) -> list[int]:
    """Evenly spread level indices, endpoints included (e.g. 10, 4 -> 0,3,6,9)."""
    return [round(i * (levels - 1) / (picks - 1)) for i in range(picks)]

