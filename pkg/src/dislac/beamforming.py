"""Collaborative WMMSE beamforming over statistical CSI.

The objective is the hardening-bound sum rate. Every scheme shares one
per-satellite block update: given MMSE receivers ``a`` and weights ``lam``,
satellite s minimises the weighted MSE over its own N_t x U block subject to
its power budget, with the dual variable found by bisection. What a
satellite needs from the others is only

* the U x U coupling matrix ``G[u, v] = sum_s m_{s,u}^H w_{s,v}``, and
* the per-user scatter power ``q[u] = sum_s c_{s,u} ||W_s||^2``,

so decentralized schedules exchange these aggregates (plus ``a`` and ``lam``
on a Ring) and never raw channel statistics.

Schedules:

* centralized - Gauss-Seidel sweeps over all blocks until the inner problem
  settles, per outer iteration;
* Ring - one Gauss-Seidel sweep per iteration, the running aggregate passed
  node to node along ``order``;
* Star - Jacobi best responses from a hub-broadcast aggregate, each block
  moving 1/S of the way (keeps the weighted MSE monotone).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import NoiseModel, StatisticalCsi, hardening_rates

__all__ = [
    "TopologyKind",
    "Topology",
    "WmmseConfig",
    "OverheadLedger",
    "Role",
    "wmmse_centralized",
    "wmmse_decentralized",
    "s3_baseline",
    "overhead_model",
    "ring_payload",
    "star_payload",
    "power_feasible",
]

_BISECTION_TOL = 1e-10
_INNER_SWEEPS = 50
_INNER_TOL = 1e-10


class TopologyKind(str, enum.Enum):
    CENTRALIZED = "centralized"
    RING = "ring"
    STAR = "star"
    S3 = "s3"


class Role(str, enum.Enum):
    EDGE = "edge"
    CENTRAL = "central"


@dataclass(frozen=True)
class Topology:
    kind: TopologyKind
    hub: int | None = None
    order: tuple[int, ...] | None = None

    @classmethod
    def ring(cls, n_sats: int, order: Sequence[int] | None = None) -> "Topology":
        return cls(TopologyKind.RING, order=tuple(order) if order is not None else tuple(range(n_sats)))

    @classmethod
    def star(cls, hub: int = 0) -> "Topology":
        return cls(TopologyKind.STAR, hub=hub)

    def validate(self, n_sats: int) -> None:
        if self.kind is TopologyKind.STAR:
            if self.hub is None or not 0 <= self.hub < n_sats:
                raise ValueError("Star topology needs a hub inside the constellation")
        elif self.kind is TopologyKind.RING:
            if self.order is None or sorted(self.order) != list(range(n_sats)):
                raise ValueError("Ring order must be a permutation of all satellite ids")


@dataclass(frozen=True)
class WmmseConfig:
    max_iters: int = 100
    rel_tol: float = 1e-8
    init: str = "matched_filter"  # or "random"
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1 or self.rel_tol <= 0:
            raise ValueError("need max_iters >= 1 and rel_tol > 0")
        if self.init not in ("matched_filter", "random"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class OverheadLedger:
    """Real scalars crossing inter-satellite links."""

    n_nodes: int
    sent: np.ndarray = field(init=False)
    received: np.ndarray = field(init=False)
    link_messages: dict[tuple[int, int], int] = field(default_factory=dict)
    iterations: int = 0
    hops: int = 0  # sequential message hops, a latency proxy

    def __post_init__(self):
        self.sent = np.zeros(self.n_nodes, dtype=np.int64)
        self.received = np.zeros(self.n_nodes, dtype=np.int64)

    def record(self, src: int, dst: int, n_reals: int) -> None:
        self.sent[src] += n_reals
        self.received[dst] += n_reals
        self.link_messages[(src, dst)] = self.link_messages.get((src, dst), 0) + 1

    def node_total(self, node: int) -> int:
        return int(self.sent[node] + self.received[node])

    def is_zero(self) -> bool:
        return not (self.sent.any() or self.received.any() or self.link_messages)


def ring_payload(n_users: int) -> int:
    """Reals per Ring message: coupling (2U^2), scatter (U), receivers (2U), weights (U)."""
    return 2 * n_users * n_users + 4 * n_users


def star_payload(n_users: int) -> int:
    """Reals per Star message: coupling (2U^2) and scatter power (U)."""
    return 2 * n_users * n_users + n_users


# --- shared WMMSE core ------------------------------------------------------


def _local(csi: StatisticalCsi, w: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Satellite s's contribution to the coupling matrix and scatter power."""
    g = csi.means[s].conj() @ w[s]
    q = csi.cov[s] * np.sum(np.abs(w[s]) ** 2)
    return g, q


def _aggregate(csi: StatisticalCsi, w: np.ndarray, order: Sequence[int]):
    g = q = None
    for s in order:
        gs, qs = _local(csi, w, s)
        g = gs if g is None else g + gs
        q = qs if q is None else q + qs
    return g, q


def _receivers(g: np.ndarray, q: np.ndarray):
    """MMSE receivers, MSE weights and SINRs for unit noise power."""
    sig = np.abs(np.diag(g)) ** 2
    total = np.sum(np.abs(g) ** 2, axis=1) + q + 1.0
    a = np.diag(g) / total
    sinr = sig / (total - sig)
    lam = 1.0 + sinr  # 1 / MSE
    return a, lam, sinr


def _block_update(
    csi: StatisticalCsi, s: int, a: np.ndarray, lam: np.ndarray, others: np.ndarray, power: float
) -> np.ndarray:
    """Weighted-MSE minimiser for satellite s's block under ||W_s||^2 <= power.

    ``others[u, v]`` is the coupling contributed by every other satellite.
    """
    m = csi.means[s]  # (U, N)
    beta = lam * np.abs(a) ** 2
    n = m.shape[1]
    A = (m.T * beta) @ m.conj() + np.sum(beta * csi.cov[s]) * np.eye(n)
    B = m.T @ (beta[:, None] * others) - m.T * (lam * a)[None, :]
    A = 0.5 * (A + A.conj().T)
    evals, vecs = np.linalg.eigh(A)
    C = vecs.conj().T @ B
    c2 = np.sum(np.abs(C) ** 2, axis=1)
    if not c2.any():
        return np.zeros_like(B)

    def pw(mu: float) -> float:
        return float(np.sum(c2 / (evals + mu) ** 2))

    floor = 1e-12 * max(evals[-1], 1e-300)
    if evals[0] > floor and pw(0.0) <= power:
        mu = 0.0
    else:
        lo, hi = 0.0, float(np.sqrt(c2.sum() / power))
        for _ in range(500):
            p_hi = pw(hi)
            if power - p_hi <= _BISECTION_TOL * power:
                break
            mid = 0.5 * (lo + hi)
            if pw(mid) > power:
                lo = mid
            else:
                hi = mid
        mu = hi
    return -vecs @ (C / (evals + mu)[:, None])


def _sum_rate(csi: StatisticalCsi, w: np.ndarray, bandwidth: float) -> float:
    g, q = _aggregate(csi, w, range(csi.n_sats))
    _, _, sinr = _receivers(g, q)
    return float(bandwidth * np.sum(np.log2(1.0 + sinr)))


def _normalise(csi: StatisticalCsi, noise: NoiseModel, powers) -> tuple[StatisticalCsi, np.ndarray]:
    powers = np.broadcast_to(np.asarray(powers, dtype=float), (csi.n_sats,)).copy()
    if not np.all(np.isfinite(powers)) or np.any(powers <= 0):
        raise ValueError("per-satellite powers must be positive and finite")
    if csi.n_sats < 1 or csi.n_users < 1:
        raise ValueError("need at least one satellite and one user")
    return csi.scaled(1.0 / np.sqrt(noise.noise_power)), powers


def _initial(csi: StatisticalCsi, powers: np.ndarray, cfg: WmmseConfig) -> np.ndarray:
    S, U, N = csi.means.shape
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        w = rng.standard_normal((S, N, U)) + 1j * rng.standard_normal((S, N, U))
    else:
        w = np.empty((S, N, U), dtype=complex)
        for s in range(S):
            for u in range(U):
                m = csi.means[s, u]
                nrm = np.linalg.norm(m)
                w[s, :, u] = m / nrm if nrm > 0 else np.ones(N) / np.sqrt(N)
    for s in range(S):
        w[s] *= np.sqrt(powers[s] / np.sum(np.abs(w[s]) ** 2))
    return w


def power_feasible(w: np.ndarray, powers, tol: float = 1e-9) -> bool:
    p = np.sum(np.abs(np.asarray(w)) ** 2, axis=(1, 2))
    return bool(np.all(p <= np.asarray(powers) * (1 + tol) + tol))


def _converged(trace: list[float], prev: float, rel_tol: float) -> bool:
    return abs(trace[-1] - prev) <= rel_tol * max(abs(prev), 1e-300)


# --- schemes ------------------------------------------------------------------


def wmmse_centralized(
    csi: StatisticalCsi, noise: NoiseModel, powers, cfg: WmmseConfig = WmmseConfig()
) -> tuple[np.ndarray, list[float]]:
    """Joint WMMSE with global statistics.

    Returns beamformers of shape (S, N_t, U) and the sum rate (bit/s) after
    each iteration.
    """
    ncsi, powers = _normalise(csi, noise, powers)
    S = ncsi.n_sats
    w = _initial(ncsi, powers, cfg)
    prev = _sum_rate(ncsi, w, noise.bandwidth)
    trace: list[float] = []
    for _ in range(cfg.max_iters):
        g, q = _aggregate(ncsi, w, range(S))
        a, lam, _ = _receivers(g, q)
        for _sweep in range(_INNER_SWEEPS):
            change = 0.0
            for s in range(S):
                g_old, q_old = _local(ncsi, w, s)
                new = _block_update(ncsi, s, a, lam, g - g_old, powers[s])
                change = max(change, np.linalg.norm(new - w[s]) / max(np.sqrt(powers[s]), 1e-300))
                w[s] = new
                g_new, q_new = _local(ncsi, w, s)
                g = g - g_old + g_new
                q = q - q_old + q_new
            if S == 1 or change < _INNER_TOL:
                break
        trace.append(_sum_rate(ncsi, w, noise.bandwidth))
        if _converged(trace, prev, cfg.rel_tol):
            break
        prev = trace[-1]
    return w, trace


def wmmse_decentralized(
    topology: Topology,
    csi: StatisticalCsi,
    noise: NoiseModel,
    powers,
    cfg: WmmseConfig = WmmseConfig(max_iters=16),
) -> tuple[np.ndarray, list[float], OverheadLedger]:
    """WMMSE where each satellite updates only its own block from exchanged aggregates.

    Ring: the aggregate circulates along ``topology.order`` and every node
    updates in turn. Star: edges report local terms to the hub, which sums them
    in satellite-id order and broadcasts the total; all nodes then update
    together.
    """
    ncsi, powers = _normalise(csi, noise, powers)
    S, U = ncsi.n_sats, ncsi.n_users
    if topology.kind not in (TopologyKind.RING, TopologyKind.STAR):
        raise ValueError(f"decentralized WMMSE needs a Ring or Star topology, got {topology.kind}")
    topology.validate(S)
    ledger = OverheadLedger(S)
    w = _initial(ncsi, powers, cfg)
    prev = _sum_rate(ncsi, w, noise.bandwidth)
    trace: list[float] = []

    if topology.kind is TopologyKind.RING:
        order = list(topology.order)
        g, q = _aggregate(ncsi, w, order)
        # the initial aggregate is built by one pass around the ring
        for i in range(S - 1):
            ledger.record(order[i], order[i + 1], star_payload(U))
            ledger.hops += 1
        if S > 1:
            ledger.record(order[-1], order[0], star_payload(U))
            ledger.hops += 1
        for _ in range(cfg.max_iters):
            a, lam, _ = _receivers(g, q)
            for i, s in enumerate(order):
                g_old, q_old = _local(ncsi, w, s)
                w[s] = _block_update(ncsi, s, a, lam, g - g_old, powers[s])
                g_new, q_new = _local(ncsi, w, s)
                g = g - g_old + g_new
                q = q - q_old + q_new
                if S > 1:
                    ledger.record(s, order[(i + 1) % S], ring_payload(U))
                    ledger.hops += 1
            ledger.iterations += 1
            trace.append(_sum_rate(ncsi, w, noise.bandwidth))
            if _converged(trace, prev, cfg.rel_tol):
                break
            prev = trace[-1]
        return w, trace, ledger

    hub = topology.hub
    edges = [s for s in range(S) if s != hub]
    step = 1.0 / S
    for _ in range(cfg.max_iters):
        for s in edges:
            ledger.record(s, hub, star_payload(U))
        g, q = _aggregate(ncsi, w, range(S))
        for s in edges:
            ledger.record(hub, s, star_payload(U))
        if edges:
            ledger.hops += 2
        a, lam, _ = _receivers(g, q)
        # best responses all see the same broadcast aggregate
        targets = []
        for s in range(S):
            g_s, _ = _local(ncsi, w, s)
            targets.append(_block_update(ncsi, s, a, lam, g - g_s, powers[s]))
        for s in range(S):
            # a lone hub takes its best response outright, exactly as centralized does
            w[s] = targets[s] if S == 1 else w[s] + step * (targets[s] - w[s])
        ledger.iterations += 1
        trace.append(_sum_rate(ncsi, w, noise.bandwidth))
        if _converged(trace, prev, cfg.rel_tol):
            break
        prev = trace[-1]
    return w, trace, ledger


def s3_baseline(
    csi: StatisticalCsi, noise: NoiseModel, powers, cfg: WmmseConfig = WmmseConfig()
) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Single-satellite service: every user is served by its strongest satellite.

    Returns the user-to-satellite assignment, per-user rates (bit/s) evaluated
    with full cross-satellite interference, and the beamformers.
    """
    _, powers = _normalise(csi, noise, powers)
    S, U, N = csi.means.shape
    # large-scale gain decides; argmax keeps the lowest id on ties
    assignment = [int(np.argmax(csi.gains[:, u])) for u in range(U)]
    w = np.zeros((S, N, U), dtype=complex)
    for s in range(S):
        users = [u for u in range(U) if assignment[u] == s]
        if not users:
            continue
        ws, _ = wmmse_centralized(csi.subset([s], users), noise, powers[s], cfg)
        w[s][:, users] = ws[0]
    rates = hardening_rates(w, csi, noise)
    return assignment, rates, w


def overhead_model(topology_kind, role, n_sats: int, n_users: int) -> int:
    """Reference signaling-overhead counts per node.

    Per-link load is ``1024 * U * (U + 2)`` real scalars. Ring nodes and Star
    edges carry one link's worth; the Star hub carries one per edge.
    """
    kind = TopologyKind(topology_kind)
    role = Role(role)
    if n_users < 1:
        raise ValueError("need at least one user")
    per_link = 1024 * n_users * (n_users + 2)
    if kind is TopologyKind.RING:
        if role is not Role.EDGE:
            raise ValueError("Ring nodes are all peers; use role='edge'")
        return per_link
    if kind is TopologyKind.STAR:
        if role is Role.EDGE:
            return per_link
        if n_sats < 2:
            raise ValueError("a Star hub needs at least one edge (S >= 2)")
        return (n_sats - 1) * per_link
    raise ValueError(f"no overhead model for topology {kind.value!r}")
