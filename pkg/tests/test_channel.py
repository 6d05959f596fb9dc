import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislac.channel import (
    ArrayGeometry,
    ChannelStats,
    NoiseModel,
    StatisticalCsi,
    build_csi,
    channel_stats,
    hardening_rate,
    hardening_rates,
    path_gain,
    steering_vector,
)
from dislac.constants import SPEED_OF_LIGHT
from dislac.geometry import ConstellationSpec, GroundTerminal, sample_constellation

NOISE = NoiseModel(1e-13, 20e6)


def _db(x):
    return 10 * math.log10(x)


def _random_csi(rng, S=3, U=4, N=5):
    means = rng.standard_normal((S, U, N)) + 1j * rng.standard_normal((S, U, N))
    cov = rng.random((S, U))
    return StatisticalCsi(means * 1e-6, cov * 1e-12)


def _random_w(rng, csi):
    S, U, N = csi.means.shape
    return rng.standard_normal((S, N, U)) + 1j * rng.standard_normal((S, N, U))


def _rates_by_matrices(w, csi, noise):
    """Reference bound with stacked vectors and explicit block-diagonal covariances."""
    S, U, N = csi.means.shape
    out = []
    for u in range(U):
        m = csi.means[:, u, :].reshape(-1)
        C = np.zeros((S * N, S * N))
        for s in range(S):
            C[s * N : (s + 1) * N, s * N : (s + 1) * N] = csi.cov[s, u] * np.eye(N)
        ws = [w[:, :, v].reshape(-1) for v in range(U)]
        sig = abs(m.conj() @ ws[u]) ** 2
        den = sum(np.real(wv.conj() @ C @ wv) for wv in ws)
        den += sum(abs(m.conj() @ ws[v]) ** 2 for v in range(U) if v != u)
        out.append(noise.bandwidth * math.log2(1 + sig / (den + noise.noise_power)))
    return np.array(out)


def test_path_gain_600km():
    assert _db(path_gain(600.0, 2e9)) == pytest.approx(-154.0, abs=0.1)
    ref = -20 * math.log10(4 * math.pi * 600e3 * 2e9 / SPEED_OF_LIGHT)
    assert _db(path_gain(600.0, 2e9)) == pytest.approx(ref, abs=1e-9)


def test_path_gain_scaling():
    assert _db(path_gain(1200.0, 2e9)) - _db(path_gain(600.0, 2e9)) == pytest.approx(-6.0206, abs=1e-4)
    assert _db(path_gain(600.0, 4e9)) - _db(path_gain(600.0, 2e9)) == pytest.approx(-6.0206, abs=1e-4)
    assert _db(path_gain(600.0, 2e9, 6.0, 3.0)) - _db(path_gain(600.0, 2e9)) == pytest.approx(9.0)


def test_path_gain_rejects_zero_range():
    with pytest.raises(ValueError):
        path_gain(0.0, 2e9)


def test_rician_limits():
    a = steering_vector(0.3, ArrayGeometry(16))
    los = ChannelStats.rician(a, 2.0, math.inf)
    assert los.cov_scale == 0.0
    assert np.sum(np.abs(los.mean) ** 2) == pytest.approx(2.0 * 16, rel=1e-12)
    nlos = ChannelStats.rician(a, 2.0, 0.0)
    assert np.all(nlos.mean == 0)
    assert nlos.cov_scale == 2.0


def test_rician_k10_mean_energy():
    a = steering_vector(-0.7, ArrayGeometry(16))
    st_ = ChannelStats.rician(a, 3e-15, 10.0)
    assert np.sum(np.abs(st_.mean) ** 2) == pytest.approx(3e-15 * 16 * 10 / 11, rel=1e-12)
    assert st_.cov_scale == pytest.approx(3e-15 / 11, rel=1e-15)


def test_steering_is_unit_modulus():
    a = steering_vector(0.41, ArrayGeometry(7, 0.5))
    np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-15)
    # centred indexing makes the response conjugate-symmetric
    np.testing.assert_allclose(a, a[::-1].conj(), atol=1e-15)


def test_channel_stats_from_geometry():
    ue = GroundTerminal.from_latlon(0.0, 0.0)
    sats = sample_constellation(ConstellationSpec(count=6, zenith_max=40.0, seed=2), ue)
    geom = ArrayGeometry(8)
    kappa = 10.0
    for s in sats:
        cs = channel_stats(s, ue, geom, 2e9, kappa)
        d = np.linalg.norm(ue.position.array() - s.position.array())
        g = path_gain(d, 2e9)
        assert cs.gain == pytest.approx(g, rel=1e-12)
        assert cs.cov_scale == pytest.approx(g / (1 + kappa), rel=1e-12)
        assert np.sum(np.abs(cs.mean) ** 2) <= g * geom.n_elements * (1 + 1e-12)


def test_build_csi_shapes():
    ue = [GroundTerminal.from_latlon(0.0, 0.0), GroundTerminal.from_latlon(1.0, 0.0)]
    sats = sample_constellation(ConstellationSpec(count=3, zenith_max=30.0, seed=1), ue[0])
    csi = build_csi(sats, ue, ArrayGeometry(4), 2e9, 10.0)
    assert (csi.n_sats, csi.n_users, csi.n_elements) == (3, 2, 4)
    sub = csi.subset([2], [1])
    np.testing.assert_array_equal(sub.means[0, 0], csi.means[2, 1])


def test_zero_beamformers_give_zero_rate():
    csi = _random_csi(np.random.default_rng(0))
    w = np.zeros((3, 5, 4), dtype=complex)
    assert np.all(hardening_rates(w, csi, NOISE) == 0.0)
    assert hardening_rate(2, w, csi, NOISE) == 0.0


def test_matched_filter_closed_form():
    g, N, P = 4e-15, 16, 10.0
    a = steering_vector(0.2, ArrayGeometry(N))
    csi = StatisticalCsi.from_stats([[ChannelStats.rician(a, g, math.inf)]])
    m = csi.means[0, 0]
    w = (math.sqrt(P) * m / np.linalg.norm(m)).reshape(1, N, 1)
    expected = NOISE.bandwidth * math.log2(1 + P * g * N / NOISE.noise_power)
    assert hardening_rate(0, w, csi, NOISE) == pytest.approx(expected, rel=1e-12)


def test_symmetric_users_have_equal_rates():
    a = steering_vector(0.0, ArrayGeometry(4))
    st_ = ChannelStats.rician(a, 1e-14, 10.0)
    csi = StatisticalCsi.from_stats([[st_, st_]])
    w = np.stack([a, a], axis=1)[None] * 0.5
    r = hardening_rates(w, csi, NOISE)
    assert r[0] == r[1]


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_vectorised_rates_match_matrix_reference(seed):
    rng = np.random.default_rng(seed)
    csi = _random_csi(rng)
    w = _random_w(rng, csi)
    ref = _rates_by_matrices(w, csi, NOISE)
    np.testing.assert_allclose(hardening_rates(w, csi, NOISE), ref, rtol=1e-10)
    for u in range(csi.n_users):
        assert hardening_rate(u, w, csi, NOISE) == pytest.approx(ref[u], rel=1e-10)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * math.pi), st.integers(0, 3))
def test_rate_invariant_to_beamformer_phase(seed, phase, user):
    rng = np.random.default_rng(seed)
    csi = _random_csi(rng)
    w = _random_w(rng, csi)
    w2 = w.copy()
    w2[:, :, user] *= np.exp(1j * phase)
    np.testing.assert_allclose(hardening_rates(w2, csi, NOISE), hardening_rates(w, csi, NOISE), rtol=1e-9)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * math.pi))
def test_rate_invariant_to_common_channel_phase(seed, phase):
    rng = np.random.default_rng(seed)
    csi = _random_csi(rng)
    w = _random_w(rng, csi)
    rotated = StatisticalCsi(csi.means * np.exp(1j * phase), csi.cov)
    np.testing.assert_allclose(hardening_rates(w, rotated, NOISE), hardening_rates(w, csi, NOISE), rtol=1e-9)


@given(st.integers(0, 2**32 - 1), st.floats(1.01, 100.0))
def test_rate_strictly_decreasing_in_noise(seed, factor):
    rng = np.random.default_rng(seed)
    csi = _random_csi(rng)
    w = _random_w(rng, csi)
    lo = hardening_rates(w, csi, NOISE)
    hi = hardening_rates(w, csi, NoiseModel(NOISE.noise_power * factor, NOISE.bandwidth))
    assert np.all(hi < lo)


def test_rate_nondecreasing_in_signal_gain():
    # scaling only user 0's own beam towards its mean raises |m^H w|^2;
    # single satellite, single user so nothing else moves
    a = steering_vector(0.1, ArrayGeometry(4))
    csi = StatisticalCsi.from_stats([[ChannelStats.rician(a, 1e-14, math.inf)]])
    rates = [hardening_rate(0, (s * a).reshape(1, 4, 1), csi, NOISE) for s in (0.1, 0.5, 1.0, 2.0)]
    assert all(x < y for x, y in zip(rates, rates[1:]))


def test_dimension_mismatch_raises():
    csi = _random_csi(np.random.default_rng(1))
    with pytest.raises(ValueError):
        hardening_rates(np.zeros((3, 4, 4)), csi, NOISE)


def test_nonfinite_statistics_rejected():
    with pytest.raises(ValueError):
        StatisticalCsi(np.full((1, 1, 2), np.nan), np.zeros((1, 1)))


def test_thermal_noise():
    nm = NoiseModel.thermal(20e6, 7.0)
    assert nm.noise_power == pytest.approx(1.380649e-23 * 290 * 20e6 * 10**0.7, rel=1e-12)
    with pytest.raises(ValueError):
        NoiseModel(0.0, 1.0)
