import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dislac.constants import SPEED_OF_LIGHT
from dislac.waveform import (
    OfdmConfig,
    label_matches,
    level_indices,
    metrics_sweep,
    radar_metrics,
    required_config,
)

REFERENCE_LABELS = {
    "r_max": ["150.0", "25.6", "4.4", "0.7"],
    "delta_r": ["0.146", "0.025", "0.004", "0.001"],
    "v_max": ["0.08", "0.44", "2.56", "15.00"],
}


def _cfg(df, **kw):
    base = dict(delta_f=df, n_subcarriers=1024, n_symbols=1, t_pri=1.0 / df, fc=1e9)
    base.update(kw)
    return OfdmConfig(**base)


def test_one_khz_example():
    m = radar_metrics(_cfg(1e3), c=3e8)
    assert m.r_max == pytest.approx(150.0)
    assert m.delta_r == pytest.approx(0.146, abs=5e-4)
    assert m.v_max == pytest.approx(0.075)
    assert label_matches(m.v_max, "0.08")


def test_two_hundred_khz_example():
    m = radar_metrics(_cfg(200e3))
    assert m.r_max == pytest.approx(0.75, abs=2e-3)
    assert m.delta_r == pytest.approx(0.00073, abs=5e-6)
    assert m.v_max == pytest.approx(14.99, abs=5e-3)


def test_closed_forms_exact_c():
    cfg = OfdmConfig(delta_f=15e3, n_subcarriers=64, n_symbols=8, t_pri=2e-6, fc=2.4e9)
    m = radar_metrics(cfg)
    c = SPEED_OF_LIGHT
    assert m.r_max == pytest.approx(c / (2 * 15e3) / 1e3, rel=1e-15)
    assert m.delta_r == pytest.approx(c / (2 * 64 * 15e3) / 1e3, rel=1e-15)
    assert m.v_max == pytest.approx(c / (4 * 2.4e9 * 2e-6) / 1e3, rel=1e-15)
    assert m.delta_v == pytest.approx(c / (2 * 2.4e9 * 8 * 2e-6), rel=1e-15)


def test_single_subcarrier_resolution_is_range():
    m = radar_metrics(_cfg(3e3, n_subcarriers=1))
    assert m.delta_r == m.r_max


def test_sweep_reproduces_reference_labels():
    table = metrics_sweep(1e3, 200e3, 10, _cfg(1e3), c=3e8)
    picks = level_indices(10, 4)
    assert picks == [0, 3, 6, 9]
    for j, i in enumerate(picks):
        m = table[i][1]
        assert label_matches(m.r_max, REFERENCE_LABELS["r_max"][j])
        assert label_matches(m.delta_r, REFERENCE_LABELS["delta_r"][j])
        assert label_matches(m.v_max, REFERENCE_LABELS["v_max"][j])


def test_sweep_with_exact_c_misses_some_labels():
    # the reference labels only all round correctly with c = 3e8
    table = metrics_sweep(1e3, 200e3, 10, _cfg(1e3))
    assert not label_matches(table[0][1].r_max, "150.0")


def test_sweep_two_levels_gives_endpoints():
    table = metrics_sweep(1e3, 200e3, 2, _cfg(1e3))
    assert [df for df, _ in table] == [1e3, 200e3]


@given(st.floats(1.0, 1e5), st.floats(1.01, 1e3), st.integers(2, 30))
def test_sweep_is_monotone(lo, ratio, levels):
    table = metrics_sweep(lo, lo * ratio, levels, _cfg(lo))
    r = [m.r_max for _, m in table]
    v = [m.v_max for _, m in table]
    assert all(a > b for a, b in zip(r, r[1:]))
    assert all(a < b for a, b in zip(v, v[1:]))


def test_sweep_rejects_bad_arguments():
    with pytest.raises(ValueError):
        metrics_sweep(1e3, 2e3, 1, _cfg(1e3))
    with pytest.raises(ValueError):
        metrics_sweep(2e3, 1e3, 5, _cfg(1e3))


@given(
    st.floats(1.0, 1e7),
    st.integers(1, 4096),
    st.integers(1, 256),
    st.floats(1e-7, 1e-2),
    st.floats(1e6, 1e11),
    st.floats(0.01, 100.0),
)
def test_metric_identities(df, n, m_sym, t_pri, fc, k):
    cfg = OfdmConfig(delta_f=df, n_subcarriers=n, n_symbols=m_sym, t_pri=t_pri, fc=fc)
    m = radar_metrics(cfg)
    assert m.r_max / m.delta_r == pytest.approx(n, rel=1e-14)
    assert m.v_max * 1e3 / m.delta_v == pytest.approx(m_sym / 2, rel=1e-14)
    scaled = radar_metrics(OfdmConfig(delta_f=k * df, n_subcarriers=n, n_symbols=m_sym, t_pri=t_pri, fc=fc))
    assert scaled.r_max == pytest.approx(m.r_max / k, rel=1e-14)
    assert scaled.delta_r == pytest.approx(m.delta_r / k, rel=1e-14)
    assert min(m.r_max, m.delta_r, m.v_max, m.delta_v) > 0


def test_required_config_hundred_km():
    df, t = required_config(100.0)
    assert t is None
    assert df == pytest.approx(1498.96229, rel=1e-9)
    assert abs(df - 1.5e3) / 1.5e3 < 1e-3
    assert round(df / 1e3, 3) == 1.499


def test_required_config_definitional_inversion():
    df, _ = required_config(SPEED_OF_LIGHT / 2 / 1e3)
    assert df == pytest.approx(1.0, rel=1e-15)


def test_required_config_velocity():
    _, t = required_config(None, 7.5, 1e9)
    assert t == pytest.approx(SPEED_OF_LIGHT / (4 * 1e9 * 7500.0), rel=1e-15)
    assert t * 1e6 == pytest.approx(9.99, abs=0.005)


@given(st.floats(0.01, 1e5), st.floats(1e-3, 100.0), st.floats(1e8, 1e11))
def test_required_config_round_trip(r_target, v_target, fc):
    df, t = required_config(r_target, v_target, fc)
    m = radar_metrics(OfdmConfig(delta_f=df, t_pri=t, fc=fc))
    assert m.r_max >= r_target * (1 - 1e-12)
    assert m.v_max >= v_target * (1 - 1e-12)
    assert math.isclose(m.r_max, r_target, rel_tol=1e-12)


@pytest.mark.parametrize("args", [(0.0,), (-5.0,), (None, 0.0, 1e9), (None, 1.0, None)])
def test_required_config_rejects_nonpositive(args):
    with pytest.raises(ValueError):
        required_config(*args)


def test_config_validation():
    with pytest.raises(ValueError):
        OfdmConfig(delta_f=0.0)
    with pytest.raises(ValueError):
        OfdmConfig(n_symbols=0)


def test_label_matching_rules():
    assert label_matches(25.649, "25.6")
    assert not label_matches(25.66, "25.6")
    assert label_matches(0.75, "0.7")  # exact tie accepted either way
    assert label_matches(0.75, "0.8")
