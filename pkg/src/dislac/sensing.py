"""Multistatic OFDM sensing bench in a 2D plane (positions in km).

Each node illuminates the target with its own orthogonal OFDM burst and
receives the monostatic echo on an N-element ULA:

    Y[n, m, k] = alpha * a_k(phi) * exp(-j 2 pi n' df tau) * exp(+j 2 pi m' T f) + noise

with n', m' and the array index measured from the centre of their spans.
``tau = 2 d / c``, ``f = 2 fc (v_rel . u) / c`` (positive when closing) and
``alpha = A exp(-j 4 pi fc d / c)``. Noise is unit-variance circular Gaussian,
so ``A**2`` is the per-element SNR.

Three position estimators:

* single node: the local fix of node 0;
* LEF: local (range, bearing) fixes fused by inverse-covariance least squares;
* DFE: coherent sum of all nodes' matched filters over a (position, velocity)
  grid. It assumes phase-synchronised nodes, i.e. each link's carrier phase
  is calibrated and removed before combining.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channel import ArrayGeometry
from .constants import SPEED_OF_LIGHT
from .geometry import EcefVector, SatelliteState
from .seeding import derive_seed
from .waveform import OfdmConfig, radar_metrics

__all__ = [
    "EstimatorKind",
    "SensingNode",
    "SensingGrids",
    "SensingScene",
    "EchoData",
    "LocalEstimate",
    "SensingResult",
    "OutOfGridError",
    "default_scene",
    "simulate_echoes",
    "estimate_local",
    "fuse_lef",
    "estimate_dfe",
    "dfe_objective",
    "monte_carlo_rmse",
    "run_bench",
]


class EstimatorKind(str, enum.Enum):
    SINGLE = "single"
    LEF = "lef"
    DFE = "dfe"


class OutOfGridError(ValueError):
    """The true target parameters fall outside a search grid."""


@dataclass(frozen=True)
class SensingNode:
    state: SatelliteState  # plane coordinates in x, y; z ignored
    n_antennas: int = 4
    boresight_deg: float = 0.0  # array normal, measured from +x
    element_spacing: float = 0.5

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")

    @property
    def array(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_antennas, self.element_spacing)

    @property
    def xy(self) -> np.ndarray:
        p = self.state.position
        return np.array([p.x, p.y])

    @property
    def vxy(self) -> np.ndarray:
        v = self.state.velocity
        return np.array([v.x, v.y])


@dataclass(frozen=True)
class SensingGrids:
    delay_oversample: int = 4  # range step = delta_r / 4
    doppler_oversample: int = 4  # Doppler step = 1 / (4 M T)
    bearing_span_deg: float = 60.0
    bearing_step_deg: float = 0.5
    dfe_halfwidth: float = 4.0  # in units of delta_r
    dfe_step: float = 0.25  # in units of delta_r
    dfe_velocity_halfwidth: float = 4.0  # km/s
    dfe_velocity_step: float = 2.0  # km/s


@dataclass(frozen=True)
class SensingScene:
    target_position: tuple[float, float]  # km
    target_velocity: tuple[float, float]  # km/s
    nodes: tuple[SensingNode, ...]
    waveform: OfdmConfig
    snr_db: float = -10.0
    grids: SensingGrids = field(default_factory=SensingGrids)
    prior_position: tuple[float, float] | None = None  # DFE grid centre
    prior_velocity: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("scene needs at least one sensing node")
        t = np.asarray(self.target_position, dtype=float)
        for nd in self.nodes:
            if np.linalg.norm(nd.xy - t) == 0.0:
                raise ValueError(f"target coincides with node {nd.state.id}")

    @property
    def delta_r(self) -> float:
        return radar_metrics(self.waveform).delta_r

    def with_antennas(self, n: int) -> "SensingScene":
        return replace(self, nodes=tuple(replace(nd, n_antennas=n) for nd in self.nodes))

    def with_nodes(self, count: int) -> "SensingScene":
        return replace(self, nodes=self.nodes[:count])


@dataclass(frozen=True)
class LinkTruth:
    range: float  # km
    delay: float  # s
    doppler: float  # Hz
    bearing: float  # rad, from boresight
    amplitude: complex


@dataclass
class EchoData:
    node: int
    tensor: np.ndarray  # (N_sc, M, N)
    truth: LinkTruth
    carrier_phase: float  # rad; known only to phase-synchronised processing


@dataclass(frozen=True)
class LocalEstimate:
    delay: float
    doppler: float
    bearing: float
    range: float
    fix: np.ndarray  # (2,) km
    covariance: np.ndarray  # (2, 2) km^2
    valid: bool = True


@dataclass(frozen=True)
class SensingResult:
    estimator: EstimatorKind
    rmse_over_delta_r: float
    trials: int
    n_antennas: int
    discarded: int = 0


# --- geometry helpers ---------------------------------------------------------


def _unit(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def _link(scene: SensingScene, node: SensingNode, p: np.ndarray, v: np.ndarray):
    """(range km, delay s, doppler Hz, bearing rad) for a target at p moving at v."""
    rel = np.asarray(p) - node.xy
    d = float(np.linalg.norm(rel))
    toward_node = -rel / d
    closing = float((np.asarray(v) - node.vxy) @ toward_node)  # km/s
    fc = scene.waveform.fc
    doppler = 2.0 * fc * closing * 1e3 / SPEED_OF_LIGHT
    bearing = _wrap(math.atan2(rel[1], rel[0]) - math.radians(node.boresight_deg))
    return d, 2.0 * d * 1e3 / SPEED_OF_LIGHT, doppler, bearing


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def _centered(n: int) -> np.ndarray:
    return np.arange(n) - (n - 1) / 2


def _phase_ramp(theta: np.ndarray, count: int) -> np.ndarray:
    """``exp(1j * theta[:, None] * n)`` for centred indices n, by recurrence.

    Much cheaper than a full complex exp; the accumulated rounding over a
    few dozen steps stays near 1e-13.
    """
    out = np.empty((len(theta), count), dtype=complex)
    step = np.exp(1j * theta)
    out[:, 0] = np.exp(-0.5j * (count - 1) * theta)
    for i in range(1, count):
        np.multiply(out[:, i - 1], step, out=out[:, i])
    return out


def _carrier_phase(range_km: float, fc: float) -> float:
    cycles = math.fmod(2.0 * range_km * 1e3 * fc / SPEED_OF_LIGHT, 1.0)
    return -2.0 * math.pi * cycles


def default_scene(
    n_antennas: int = 4,
    n_nodes: int = 4,
    snr_db: float = -10.0,
    distance_km: float = 60.0,
    angles_deg: Sequence[float] = (270.0, 0.0, 135.0, 200.0),
    target_velocity: tuple[float, float] = (2.0, -1.0),
    waveform: OfdmConfig | None = None,
) -> SensingScene:
    """Target at the origin, nodes on a circle around it with arrays facing it."""
    if waveform is None:
        waveform = OfdmConfig(
            delta_f=1.5e3, n_subcarriers=32, n_symbols=4, t_pri=1.5e-6, fc=6.67e9
        )
    nodes = []
    for i, ang in enumerate(list(angles_deg)[:n_nodes]):
        a = math.radians(ang)
        pos = EcefVector(distance_km * math.cos(a), distance_km * math.sin(a), 0.0)
        nodes.append(
            SensingNode(
                SatelliteState(i, pos, EcefVector(0.0, 0.0, 0.0)),
                n_antennas=n_antennas,
                boresight_deg=(ang + 180.0) % 360.0,
            )
        )
    return SensingScene((0.0, 0.0), target_velocity, tuple(nodes), waveform, snr_db)


# --- echo model ---------------------------------------------------------------


def _template(scene: SensingScene, node: SensingNode, delay, doppler, bearing) -> np.ndarray:
    w = scene.waveform
    n = _centered(w.n_subcarriers)
    m = _centered(w.n_symbols)
    k = _centered(node.n_antennas)
    d_part = np.exp(-2j * np.pi * n * w.delta_f * delay)
    f_part = np.exp(2j * np.pi * m * w.t_pri * doppler)
    a_part = np.exp(2j * np.pi * node.element_spacing * k * math.sin(bearing))
    return d_part[:, None, None] * f_part[None, :, None] * a_part[None, None, :]


def simulate_echoes(
    scene: SensingScene, trial_seed: int | None, noise: bool = True
) -> list[EchoData]:
    """Monostatic echoes at every node; ``noise=False`` (or SNR = +inf) gives clean data."""
    rng = np.random.default_rng(trial_seed)
    p = np.asarray(scene.target_position, dtype=float)
    v = np.asarray(scene.target_velocity, dtype=float)
    amp = math.sqrt(10 ** (scene.snr_db / 10)) if math.isfinite(scene.snr_db) else 1.0
    add_noise = noise and math.isfinite(scene.snr_db)
    out = []
    for idx, nd in enumerate(scene.nodes):
        d, tau, fd, phi = _link(scene, nd, p, v)
        phase = _carrier_phase(d, scene.waveform.fc)
        alpha = amp * complex(math.cos(phase), math.sin(phase))
        y = alpha * _template(scene, nd, tau, fd, phi)
        if add_noise:
            y = y + (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)) / math.sqrt(2)
        out.append(EchoData(idx, y, LinkTruth(d, tau, fd, phi, alpha), phase))
    return out


# --- local estimation ---------------------------------------------------------


def _bearing_grid(grids: SensingGrids) -> np.ndarray:
    half = int(round(grids.bearing_span_deg / grids.bearing_step_deg))
    return np.radians(np.arange(-half, half + 1) * grids.bearing_step_deg)


def _parabola(lm: float, l0: float, lp: float) -> tuple[float, float]:
    """Vertex offset (in steps) and second difference of three samples."""
    den = lm - 2.0 * l0 + lp
    if den >= 0.0:
        return 0.0, den
    return 0.5 * (lm - lp) / den, den


def _check_local_truth(scene, echo: EchoData, bearings: np.ndarray) -> None:
    w = scene.waveform
    t = echo.truth
    if not 0.0 <= t.delay < 1.0 / w.delta_f:
        raise OutOfGridError(f"node {echo.node}: delay {t.delay:.3e} s beyond unambiguous window")
    if abs(t.doppler) >= 0.5 / w.t_pri:
        raise OutOfGridError(f"node {echo.node}: Doppler {t.doppler:.3e} Hz is ambiguous")
    if not bearings[0] <= t.bearing <= bearings[-1]:
        raise OutOfGridError(f"node {echo.node}: bearing outside the search span")


def _grid_peak(cells: np.ndarray, steer: np.ndarray, shape: tuple[int, int]):
    """Exact argmax of |cells @ steer|**2 over all (cell, bearing) pairs.

    Cauchy-Schwarz bounds each cell's best bearing power by N * ||cell||**2,
    so cells are scanned in decreasing bound order until no remaining cell
    can beat the incumbent. Ties go to the lowest (cell, bearing) index.
    """
    n_ant = cells.shape[1]
    bound = n_ant * np.sum(cells.real**2 + cells.imag**2, axis=1)
    order = np.argsort(-bound, kind="stable")
    best, best_cell, best_b = -1.0, 0, 0
    chunk = 64
    for start in range(0, len(order), chunk):
        idx = order[start : start + chunk]
        if bound[idx[0]] < best:
            break
        x = cells[idx] @ steer
        pw = x.real**2 + x.imag**2
        r, c = np.unravel_index(int(np.argmax(pw)), pw.shape)
        val = pw[r, c]
        cand = int(idx[r])
        if val > best or (val == best and (cand, c) < (best_cell, best_b)):
            best, best_cell, best_b = val, cand, int(c)
    i, j = np.unravel_index(best_cell, shape)
    return int(i), int(j), best_b


def estimate_local(
    echo: EchoData, scene: SensingScene, check_truth: bool = True
) -> LocalEstimate:
    """Grid matched filter over (delay, Doppler, bearing) with parabolic refinement.

    Delay and Doppler grids cover the full unambiguous windows through
    zero-padded FFTs; bearings are scanned explicitly. The returned covariance
    is the inverse curvature of the normalised matched-filter power
    ``|c|**2 / (N_sc M N)`` at its peak, mapped from (range, bearing) to x-y.
    """
    w = scene.waveform
    nd = scene.nodes[echo.node]
    g = scene.grids
    bearings = _bearing_grid(g)
    if check_truth:
        _check_local_truth(scene, echo, bearings)
    n_sc, n_sym, n_ant = echo.tensor.shape
    kd = g.delay_oversample * n_sc
    km = g.doppler_oversample * n_sym
    # delay: sum_n Y e^{+j 2 pi n i / kd}; Doppler: sum_m Y e^{-j 2 pi m j / km}
    cube = np.fft.ifft(echo.tensor, n=kd, axis=0) * kd
    cube = np.fft.fft(cube, n=km, axis=1)
    k = _centered(n_ant)
    steer = np.exp(-2j * np.pi * nd.element_spacing * np.outer(k, np.sin(bearings)))
    norm = 1.0 / (n_sc * n_sym * n_ant)
    i, j, b = _grid_peak(cube.reshape(-1, n_ant), steer, cube.shape[:2])

    def power(ii, jj, bb):
        return float(abs(cube[ii % kd, jj] @ steer[:, bb]) ** 2) * norm

    h_tau = 1.0 / (kd * w.delta_f)
    p0 = power(i, j, b)
    off_d, curv_d = _parabola(power(i - 1, j, b), p0, power(i + 1, j, b))
    tau = (i + off_d) * h_tau

    h_phi = bearings[1] - bearings[0] if len(bearings) > 1 else 1.0
    nb = len(bearings)
    if 0 < b < nb - 1:
        off_b, curv_b = _parabola(power(i, j, b - 1), p0, power(i, j, b + 1))
    else:
        # peak on the span edge: no refinement, curvature from the nearest interior triple
        c = min(max(b, 1), nb - 2)
        off_b, (_, curv_b) = 0.0, _parabola(power(i, j, c - 1), power(i, j, c), power(i, j, c + 1))
    phi = float(bearings[b] + off_b * h_phi)

    fd = float(np.fft.fftfreq(km, d=w.t_pri)[j])
    rng_km = SPEED_OF_LIGHT * tau / 2.0 / 1e3
    theta = math.radians(nd.boresight_deg) + phi
    fix = nd.xy + rng_km * _unit(theta)

    valid = curv_d < 0 and curv_b < 0
    if valid:
        var_tau = -h_tau**2 / curv_d
        var_r = (SPEED_OF_LIGHT / 2.0 / 1e3) ** 2 * var_tau
        var_phi = -h_phi**2 / curv_b
        jac = np.column_stack([_unit(theta), rng_km * _unit(theta + math.pi / 2)])
        cov = jac @ np.diag([var_r, var_phi]) @ jac.T
    else:
        cov = np.full((2, 2), np.nan)
    return LocalEstimate(tau, fd, phi, rng_km, fix, cov, valid)


def fuse_lef(
    fixes: Sequence[np.ndarray],
    covariances: Sequence[np.ndarray],
    max_iter: int = 20,
    step_tol: float = 1e-9,
) -> np.ndarray:
    """Inverse-covariance weighted least squares over local position fixes.

    Solved by Gauss-Newton from the plain mean; with linear residuals it stops
    after the first correction.
    """
    if len(fixes) < 2:
        raise ValueError("LEF fusion needs at least two local fixes")
    xs = [np.asarray(x, dtype=float) for x in fixes]
    infos = []
    for c in covariances:
        c = np.asarray(c, dtype=float)
        if not np.all(np.isfinite(c)):
            infos.append(None)
            continue
        try:
            infos.append(np.linalg.inv(c))
        except np.linalg.LinAlgError:
            infos.append(None)
    if all(i is None for i in infos):
        raise np.linalg.LinAlgError("all local covariances are singular")
    pairs = [(x, info) for x, info in zip(xs, infos) if info is not None]
    p = np.mean([x for x, _ in pairs], axis=0)
    for _ in range(max_iter):
        # residual r_i = x_i - p, Jacobian -I
        H = sum(info for _, info in pairs)
        grad = sum(info @ (x - p) for x, info in pairs)
        step = np.linalg.solve(H, grad)
        p = p + step
        if np.linalg.norm(step) < step_tol:
            break
    return p


# --- DFE ----------------------------------------------------------------------


def _dfe_axes(scene: SensingScene):
    g = scene.grids
    dr = scene.delta_r
    half = int(round(g.dfe_halfwidth / g.dfe_step))
    offs = np.arange(-half, half + 1) * g.dfe_step * dr
    centre = np.asarray(scene.prior_position or scene.target_position, dtype=float)
    vhalf = int(round(g.dfe_velocity_halfwidth / g.dfe_velocity_step))
    voffs = np.arange(-vhalf, vhalf + 1) * g.dfe_velocity_step
    vcentre = np.asarray(scene.prior_velocity or scene.target_velocity, dtype=float)
    return centre[0] + offs, centre[1] + offs, vcentre[0] + voffs, vcentre[1] + voffs


def _node_contrib(scene, nd, echo, pts: np.ndarray, vxs: np.ndarray, vys: np.ndarray) -> np.ndarray:
    """Phase-compensated matched-filter values c_s on a position x velocity grid.

    ``pts`` is (P, 2); velocities form the regular grid ``vxs x vys``. Result
    has shape (P, len(vxs), len(vys)).
    """
    w = scene.waveform
    rel = pts - nd.xy
    d = np.linalg.norm(rel, axis=1)
    tau = 2.0 * d * 1e3 / SPEED_OF_LIGHT
    phi = _wrap(np.arctan2(rel[:, 1], rel[:, 0]) - math.radians(nd.boresight_deg))
    toward = -rel / d[:, None]

    k = _centered(nd.n_antennas)
    dconj = _phase_ramp(2.0 * np.pi * w.delta_f * tau, w.n_subcarriers)  # (P, N_sc)
    aconj = np.exp(-2j * np.pi * nd.element_spacing * np.outer(np.sin(phi), k))  # (P, N)
    y = echo.tensor
    z = (dconj @ y.reshape(y.shape[0], -1)).reshape(len(pts), y.shape[1], y.shape[2])
    z = np.einsum("pmk,pk->pm", z, aconj)  # (P, M)

    # Doppler phase is linear in velocity, so it splits into x and y factors
    scale = -2.0 * np.pi * w.t_pri * 2.0 * w.fc * 1e3 / SPEED_OF_LIGHT
    v0 = nd.vxy
    n_pts, n_sym = len(pts), w.n_symbols
    ex = _phase_ramp(scale * np.outer(toward[:, 0], vxs - v0[0]).ravel(), n_sym)
    ey = _phase_ramp(scale * np.outer(toward[:, 1], vys - v0[1]).ravel(), n_sym)
    ex = ex.reshape(n_pts, len(vxs), n_sym)
    ey = ey.reshape(n_pts, len(vys), n_sym)
    c = np.matmul(z[:, None, :] * ex, ey.transpose(0, 2, 1))
    return c * np.exp(-1j * echo.carrier_phase)


def dfe_objective(
    scene: SensingScene,
    echoes: Sequence[EchoData],
    pts,
    vxs,
    vys,
    coherent: bool = True,
) -> np.ndarray:
    """``|sum_s c_s|**2`` (coherent) or ``sum_s |c_s|**2`` on a position x velocity grid.

    Each ``c_s`` is normalised by N_sc M N, so a clean echo matched exactly
    contributes its amplitude A. Result shape is (P, len(vxs), len(vys)).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    vxs = np.atleast_1d(np.asarray(vxs, dtype=float))
    vys = np.atleast_1d(np.asarray(vys, dtype=float))
    total = None
    for e in echoes:
        nd = scene.nodes[e.node]
        c = _node_contrib(scene, nd, e, pts, vxs, vys) / e.tensor.size
        term = c if coherent else np.abs(c) ** 2
        total = term if total is None else total + term
    return np.abs(total) ** 2 if coherent else total


def _quadratic_step(f: np.ndarray, h: float) -> np.ndarray:
    """Newton step to the vertex of the quadratic through a 3 x 3 stencil ``f``.

    Falls back to per-axis parabolic offsets when the fitted Hessian is not
    negative definite. The step is clipped to the stencil.
    """
    gx = (f[2, 1] - f[0, 1]) / (2 * h)
    gy = (f[1, 2] - f[1, 0]) / (2 * h)
    hxx = (f[2, 1] - 2 * f[1, 1] + f[0, 1]) / h**2
    hyy = (f[1, 2] - 2 * f[1, 1] + f[1, 0]) / h**2
    hxy = (f[2, 2] - f[2, 0] - f[0, 2] + f[0, 0]) / (4 * h**2)
    det = hxx * hyy - hxy * hxy
    if hxx < 0 and det > 0:
        step = -np.array([hyy * gx - hxy * gy, hxx * gy - hxy * gx]) / det
    else:
        step = np.array(
            [
                _parabola(f[0, 1], f[1, 1], f[2, 1])[0] * h,
                _parabola(f[1, 0], f[1, 1], f[1, 2])[0] * h,
            ]
        )
    return np.clip(step, -h, h)


def estimate_dfe(
    echoes: Sequence[EchoData],
    scene: SensingScene,
    check_truth: bool = True,
    refine_rounds: int = 8,
) -> np.ndarray:
    """Coherent (position, velocity) grid search, then position refinement.

    Refinement fits a quadratic to the coherent objective on a 3 x 3 stencil
    around the current estimate, moves to its vertex, and repeats with the
    stencil shrunk 4x each round (velocity stays at its grid value). A single
    round is plain parabolic interpolation on the grid; the extra rounds remove
    its bias, so a clean echo is recovered to rounding precision.
    """
    xs, ys, vxs, vys = _dfe_axes(scene)
    if check_truth:
        tx, ty = scene.target_position
        tvx, tvy = scene.target_velocity
        if not (xs[0] <= tx <= xs[-1] and ys[0] <= ty <= ys[-1]):
            raise OutOfGridError("target position outside the DFE grid")
        if not (vxs[0] <= tvx <= vxs[-1] and vys[0] <= tvy <= vys[-1]):
            raise OutOfGridError("target velocity outside the DFE grid")
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    obj = dfe_objective(scene, echoes, pts, vxs, vys)
    obj = obj.reshape(len(xs), len(ys), len(vxs), len(vys))
    ix, iy, ia, ib = np.unravel_index(int(np.argmax(obj)), obj.shape)
    est = np.array([xs[ix], ys[iy]])
    if len(xs) < 2:
        return est
    h = xs[1] - xs[0]
    offs = np.array([-1.0, 0.0, 1.0])
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    stencil = np.column_stack([ox.ravel(), oy.ravel()])
    va, vb = [vxs[ia]], [vys[ib]]
    for r in range(refine_rounds):
        if r == 0 and 0 < ix < len(xs) - 1 and 0 < iy < len(ys) - 1:
            f = obj[ix - 1 : ix + 2, iy - 1 : iy + 2, ia, ib]
        else:
            f = dfe_objective(scene, echoes, est + h * stencil, va, vb).reshape(3, 3)
        est = est + _quadratic_step(f, h)
        h /= 4.0
    return est


# --- Monte Carlo ----------------------------------------------------------------


def _trial_errors(scene: SensingScene, seed: int, kinds: Sequence[EstimatorKind]):
    """Squared position errors (km^2) per estimator; None marks a discarded trial."""
    echoes = simulate_echoes(scene, seed)
    truth = np.asarray(scene.target_position, dtype=float)
    out: dict[EstimatorKind, float | None] = {}
    locals_: list[LocalEstimate | None] | None = None
    if EstimatorKind.SINGLE in kinds or EstimatorKind.LEF in kinds:
        locals_ = []
        for e in echoes:
            try:
                locals_.append(estimate_local(e, scene))
            except OutOfGridError:
                locals_.append(None)
    for kind in kinds:
        if kind is EstimatorKind.SINGLE:
            le = locals_[0]
            out[kind] = None if le is None else float(np.sum((le.fix - truth) ** 2))
        elif kind is EstimatorKind.LEF:
            good = [le for le in locals_ if le is not None and le.valid]
            if len(good) < 2:
                out[kind] = None
                continue
            try:
                p = fuse_lef([le.fix for le in good], [le.covariance for le in good])
            except np.linalg.LinAlgError:
                out[kind] = None
                continue
            out[kind] = float(np.sum((p - truth) ** 2))
        else:
            try:
                p = estimate_dfe(echoes, scene)
            except OutOfGridError:
                out[kind] = None
                continue
            out[kind] = float(np.sum((p - truth) ** 2))
    return out


def run_bench(
    scene: SensingScene,
    kinds: Sequence[EstimatorKind | str],
    trials: int,
    master_seed: int,
    label: str = "sensing-mc",
    max_discard_frac: float = 0.10,
    workers: int = 1,
) -> dict[EstimatorKind, SensingResult]:
    """Monte Carlo RMSE for several estimators on shared per-trial echoes.

    Trial ``i`` draws its noise from ``derive_seed(master_seed, label, i)``;
    errors are accumulated in trial order whatever ``workers`` is.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kinds = [EstimatorKind(k) for k in kinds]
    seeds = [derive_seed(master_seed, label, i) for i in range(trials)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(_trial_errors, [scene] * trials, seeds, [kinds] * trials))
    else:
        per_trial = [_trial_errors(scene, s, kinds) for s in seeds]

    dr = scene.delta_r
    n_ant = scene.nodes[0].n_antennas
    results = {}
    for kind in kinds:
        acc, used, dropped = 0.0, 0, 0
        for errs in per_trial:
            e = errs[kind]
            if e is None:
                dropped += 1
            else:
                acc += e
                used += 1
        if dropped > max_discard_frac * trials:
            raise RuntimeError(
                f"{kind.value}: {dropped}/{trials} trials discarded (limit {max_discard_frac:.0%})"
            )
        rmse = math.sqrt(acc / used) / dr
        results[kind] = SensingResult(kind, rmse, used, n_ant, dropped)
    return results


def monte_carlo_rmse(
    scene: SensingScene, estimator_kind: EstimatorKind | str, trials: int, master_seed: int
) -> SensingResult:
    kind = EstimatorKind(estimator_kind)
    return run_bench(scene, [kind], trials, master_seed)[kind]
