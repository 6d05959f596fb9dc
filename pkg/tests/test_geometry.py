import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislac.constants import EARTH_RADIUS_KM, SPEED_OF_LIGHT
from dislac.geometry import (
    ConstellationSpec,
    EcefVector,
    GroundTerminal,
    SatelliteState,
    delay_doppler_profile,
    feasibility_mask,
    link_observables,
    sample_constellation,
    slant_range,
)

R = EARTH_RADIUS_KM
UE = GroundTerminal.from_latlon(0.0, 0.0)


def _ray_sphere(zenith_deg, altitude, radius=R):
    """Bisection along the ray from the ground point until it reaches the shell."""
    th = math.radians(zenith_deg)
    d = np.array([math.sin(th), math.cos(th)])
    origin = np.array([0.0, radius])
    lo, hi = 0.0, 10.0 * (radius + altitude)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(origin + mid * d) < radius + altitude:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _doppler_bound(fc, speed, zenith_max, altitude):
    return fc * speed * 1e3 * (R * math.sin(math.radians(zenith_max)) / (R + altitude)) / SPEED_OF_LIGHT


# --- slant range ---


def test_slant_range_zenith_is_altitude():
    assert slant_range(0.0, 600.0, R) == pytest.approx(600.0, abs=1e-9)


def test_slant_range_five_degrees_matches_ray_intersection():
    got = slant_range(5.0, 600.0, R)
    assert got == pytest.approx(_ray_sphere(5.0, 600.0), abs=1e-6)
    assert got == pytest.approx(602.09, abs=0.01)


def test_slant_range_horizon():
    assert slant_range(90.0, 600.0, R) == pytest.approx(math.sqrt(6971.0**2 - 6371.0**2), abs=1e-9)
    assert slant_range(90.0, 600.0, R) == pytest.approx(2829.3, abs=0.1)


@given(st.floats(0.0, 90.0), st.floats(1.0, 2000.0))
def test_slant_range_matches_bisection(zen, alt):
    assert slant_range(zen, alt) == pytest.approx(_ray_sphere(zen, alt), rel=1e-9, abs=1e-7)


def test_slant_range_rejects_bad_input():
    with pytest.raises(ValueError):
        slant_range(10.0, -1.0)
    with pytest.raises(ValueError):
        slant_range(95.0, 600.0)


# --- sampling ---


def test_two_hundred_satellite_cap():
    spec = ConstellationSpec(count=200, altitude=600.0, speed=7.5, zenith_min=0.0, zenith_max=5.0, seed=11)
    sats = sample_constellation(spec, UE)
    assert len(sats) == 200
    for s in sats:
        assert s.tangency_residual() < 1e-9
        assert s.velocity.norm() == pytest.approx(7.5, rel=1e-9)
        assert s.position.norm() == pytest.approx(R + 600.0, rel=1e-12)
        assert 0.0 <= link_observables(s, UE, 2e9).zenith_angle <= 5.0 + 1e-9


def test_degenerate_cap_puts_satellite_at_zenith():
    ue = GroundTerminal.from_latlon(37.0, -122.0)
    (sat,) = sample_constellation(ConstellationSpec(count=1, zenith_min=0.0, zenith_max=0.0), ue)
    expected = ue.position.array() / R * (R + 600.0)
    np.testing.assert_allclose(sat.position.array(), expected, rtol=1e-15)


def test_cos_zenith_is_uniform_in_solid_angle():
    n = 100_000
    sats = sample_constellation(ConstellationSpec(count=n, zenith_max=5.0, seed=2024), UE)
    up = UE.position.array() / R
    p = np.array([s.position.array() for s in sats]) - UE.position.array()
    cz = np.sort(p @ up / np.linalg.norm(p, axis=1))
    lo = math.cos(math.radians(5.0))
    cdf = (cz - lo) / (1.0 - lo)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    ks = max(np.max(ecdf_hi - cdf), np.max(cdf - ecdf_lo))
    assert ks < 0.01


def test_sampling_is_deterministic():
    spec = ConstellationSpec(count=50, seed=99)
    assert sample_constellation(spec, UE) == sample_constellation(spec, UE)
    assert sample_constellation(spec, UE) != sample_constellation(ConstellationSpec(count=50, seed=98), UE)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(count=0),
        dict(zenith_min=6.0, zenith_max=5.0),
        dict(zenith_max=91.0),
        dict(zenith_min=-1.0),
        dict(altitude=0.0),
    ],
)
def test_invalid_specs_raise(kwargs):
    with pytest.raises(ValueError):
        sample_constellation(ConstellationSpec(**kwargs), UE)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 2**64 - 1),
    st.floats(0.0, 60.0),
    st.floats(0.1, 30.0),
    st.floats(-80.0, 80.0),
    st.floats(-180.0, 180.0),
)
def test_sampled_states_respect_the_cap(seed, zmin, width, lat, lon):
    ue = GroundTerminal.from_latlon(lat, lon)
    spec = ConstellationSpec(count=25, zenith_min=zmin, zenith_max=zmin + width, seed=seed)
    for s in sample_constellation(spec, ue):
        assert s.tangency_residual() < 1e-9
        assert s.velocity.norm() == pytest.approx(spec.speed, rel=1e-9)
        z = link_observables(s, ue, 2e9).zenith_angle
        assert zmin - 1e-6 <= z <= zmin + width + 1e-6


# --- link observables ---


def test_radial_approach_example():
    sat = SatelliteState(0, EcefVector(0.0, 0.0, 6971.0), EcefVector(0.0, 0.0, -7.5))
    ue = GroundTerminal(EcefVector(0.0, 0.0, 6371.0))
    obs = link_observables(sat, ue, 2e9)
    assert obs.delay == 600e3 / SPEED_OF_LIGHT
    assert obs.delay * 1e3 == pytest.approx(2.001385, abs=1e-6)
    assert obs.doppler == pytest.approx(2e9 * 7500.0 / SPEED_OF_LIGHT, rel=1e-12)
    assert obs.doppler == pytest.approx(50034.6, abs=0.05)
    assert obs.zenith_angle == 0.0


def test_receding_satellite_has_negative_doppler():
    sat = SatelliteState(0, EcefVector(0.0, 0.0, 6971.0), EcefVector(0.0, 0.0, 7.5))
    ue = GroundTerminal(EcefVector(0.0, 0.0, 6371.0))
    assert link_observables(sat, ue, 2e9).doppler < 0


@pytest.mark.parametrize("lat,lon", [(0.0, 0.0), (37.2, -122.1), (80.0, 10.0), (-89.0, 3.0)])
def test_zenith_doppler_is_exactly_zero(lat, lon):
    ue = GroundTerminal.from_latlon(lat, lon)
    sats = sample_constellation(ConstellationSpec(count=8, zenith_min=0.0, zenith_max=0.0, seed=5), ue)
    assert all(link_observables(s, ue, 2e9).doppler == 0.0 for s in sats)


def test_delay_is_range_over_c():
    sats = sample_constellation(ConstellationSpec(count=20, seed=4), UE)
    for s in sats:
        obs = link_observables(s, UE, 2e9)
        assert obs.delay == obs.range * 1e3 / SPEED_OF_LIGHT
        assert obs.range > 0


def test_doppler_bound_over_many_samples():
    for zmax in (5.0, 30.0):
        spec = ConstellationSpec(count=100_000, zenith_max=zmax, seed=7)
        sats = sample_constellation(spec, UE)
        bound = _doppler_bound(2e9, 7.5, zmax, 600.0)
        worst = max(abs(link_observables(s, UE, 2e9).doppler) for s in sats)
        assert worst <= bound * (1 + 1e-12)
        assert worst > 0.95 * bound  # the bound is nearly attained


def test_doppler_bound_value_at_five_degrees():
    assert _doppler_bound(2e9, 7.5, 5.0, 600.0) <= 3.99e3


def test_coincident_positions_raise():
    with pytest.raises(ValueError):
        link_observables(SatelliteState(0, UE.position, EcefVector(0, 0, 0)), UE, 2e9)


def test_nonfinite_vector_rejected():
    with pytest.raises(ValueError):
        EcefVector(0.0, float("nan"), 0.0)


def test_terminal_must_be_on_sphere():
    with pytest.raises(ValueError):
        GroundTerminal(EcefVector(0.0, 0.0, 6372.0))


# --- profile and mask ---


def test_profile_single_satellite():
    (sat,) = sample_constellation(ConstellationSpec(count=1, seed=1), UE)
    ((dd, fd),) = delay_doppler_profile([sat], UE, 2e9)
    assert dd == 0.0
    assert fd == link_observables(sat, UE, 2e9).doppler


def test_profile_zenith_and_five_degrees():
    up = UE.position.array() / R
    east = np.array([0.0, 1.0, 0.0])
    th = math.radians(5.0)
    p5 = UE.position.array() + slant_range(5.0, 600.0) * (math.sin(th) * east + math.cos(th) * up)
    zero = EcefVector(0.0, 0.0, 0.0)
    sats = [
        SatelliteState(0, EcefVector.from_array(up * (R + 600.0)), zero),
        SatelliteState(1, EcefVector.from_array(p5), zero),
    ]
    prof = delay_doppler_profile(sats, UE, 2e9)
    assert prof[0][0] == 0.0
    assert prof[1][0] * 1e6 == pytest.approx(6.97, abs=0.05)
    assert prof[1][0] == pytest.approx((slant_range(5.0, 600.0) - 600.0) * 1e3 / SPEED_OF_LIGHT, rel=1e-9)


def test_profile_delay_bound_and_pairing():
    sats = sample_constellation(ConstellationSpec(count=200, seed=3), UE)
    prof = delay_doppler_profile(sats, UE, 2e9)
    dd = np.array([p[0] for p in prof])
    assert dd.min() == 0.0
    bound = (slant_range(5.0, 600.0) - 600.0) * 1e3 / SPEED_OF_LIGHT
    assert dd.max() <= bound
    assert dd.max() * 1e6 <= 7.0 + 0.1
    for s, (_, fd) in zip(sats, prof):
        assert fd == link_observables(s, UE, 2e9).doppler


def test_profile_rejects_empty():
    with pytest.raises(ValueError):
        delay_doppler_profile([], UE, 2e9)


def test_feasibility_examples():
    assert feasibility_mask([(0.0, 0.0)], 1.6e-6, 60e3, 0.1) == [(True, True)]
    assert feasibility_mask([(2.0e-6, 0.0)], 1.6e-6, 60e3, 0.1) == [(False, True)]
    assert feasibility_mask([(0.0, 5.0e3)], 1.6e-6, 60e3, 0.1) == [(True, True)]
    assert feasibility_mask([(0.0, -6.5e3)], 1.6e-6, 60e3, 0.1) == [(True, False)]
    # thresholds are inclusive
    assert feasibility_mask([(1.6e-6, 6.0e3)], 1.6e-6, 60e3, 0.1) == [(True, True)]


@pytest.mark.parametrize("cp,scs,factor", [(0.0, 60e3, 0.1), (1e-6, 0.0, 0.1), (1e-6, 60e3, 0.0), (1e-6, 60e3, 1.5)])
def test_feasibility_rejects_bad_thresholds(cp, scs, factor):
    with pytest.raises(ValueError):
        feasibility_mask([(0.0, 0.0)], cp, scs, factor)
