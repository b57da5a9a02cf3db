import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from grouptrack.channel import (
    NoiseProfile,
    PathLossParams,
    invert_rssi,
    rssi_expected,
    sample_gps_fix,
    sample_rssi,
    sample_rssi_distances,
)

PL = PathLossParams()


def test_reference_distance_power():
    assert rssi_expected(1.0, PL) == pytest.approx(-33.44)


def test_expected_power_at_10m():
    # -33.44 - 10 * 3.567 * log10(10)
    assert rssi_expected(10.0, PL) == pytest.approx(-69.11)


def test_expected_power_at_100m():
    assert rssi_expected(100.0, PL) == pytest.approx(-104.78)


@pytest.mark.parametrize("d", [0.0, -1.0, -1e-9])
def test_rejects_nonpositive_distance(d):
    with pytest.raises(ValueError):
        rssi_expected(d, PL)
    with pytest.raises(ValueError):
        sample_rssi(d, 1.0, PL, np.random.default_rng(0))


def test_invert_at_reference_power():
    assert invert_rssi(-33.44, PL) == pytest.approx(1.0)


def test_invert_back_to_10m():
    assert invert_rssi(-69.11, PL) == pytest.approx(10.0)


def test_round_trip_at_57_3m():
    assert invert_rssi(rssi_expected(57.3, PL), PL) == pytest.approx(57.3, rel=1e-9)


@given(st.floats(min_value=1e-3, max_value=1e6))
def test_round_trip_identity(d):
    assert invert_rssi(rssi_expected(d, PL), PL) == pytest.approx(d, rel=1e-9)


@given(
    st.floats(min_value=1e-3, max_value=1e6),
    st.floats(min_value=1.0001, max_value=10.0),
)
def test_power_strictly_decreasing(d, factor):
    assert rssi_expected(d * factor, PL) < rssi_expected(d, PL)


def test_zero_noise_sample_is_expected_power():
    rng = np.random.default_rng(7)
    assert sample_rssi(25.0, 0.0, PL, rng) == rssi_expected(25.0, PL)


def test_sample_mean_matches_model():
    rng = np.random.default_rng(42)
    n = 10**5
    samples = np.array([sample_rssi(10.0, 3.0, PL, rng) for _ in range(n)])
    se = 3.0 / math.sqrt(n)
    assert abs(samples.mean() - (-69.11)) < 3 * se


def test_sample_variance_matches_model():
    rng = np.random.default_rng(43)
    draws = -69.11 + 3.0 * rng.standard_normal(10**5)
    assert np.var(draws) == pytest.approx(9.0, rel=0.05)


def test_gps_fix_zero_noise_is_exact():
    rng = np.random.default_rng(0)
    pos = np.array([123.4, -56.7])
    assert np.array_equal(sample_gps_fix(pos, 0.0, rng), pos)


def test_gps_fix_moments():
    rng = np.random.default_rng(11)
    fixes = np.array([sample_gps_fix(np.zeros(2), 5.0, rng) for _ in range(10**5)])
    se = 5.0 / math.sqrt(10**5)
    assert np.all(np.abs(fixes.mean(axis=0)) < 3 * se)
    assert np.allclose(fixes.var(axis=0), 25.0, rtol=0.05)


def test_vectorized_ranging_matches_scalar_model():
    # Same log-normal law: mean of d~ must be d * exp(u^2 sigma^2 / 4).
    rng = np.random.default_rng(5)
    d, sigma = 20.0, 3.0
    draws = sample_rssi_distances(np.full(10**5, d), np.full(10**5, sigma), PL, rng)
    expected = d * math.exp(PL.u**2 * sigma**2 / 4.0)
    assert draws.mean() == pytest.approx(expected, rel=0.01)


def test_vectorized_ranging_rejects_nonpositive():
    with pytest.raises(ValueError):
        sample_rssi_distances(np.array([1.0, 0.0]), np.array([1.0, 1.0]), PL,
                              np.random.default_rng(0))


def test_noise_profile_validation():
    with pytest.raises(ValueError):
        NoiseProfile(sigma_a=-1.0)
    with pytest.raises(ValueError):
        NoiseProfile(sigma_p=-0.1)


def test_path_loss_validation():
    with pytest.raises(ValueError):
        PathLossParams(d0=0.0)
    with pytest.raises(ValueError):
        PathLossParams(eta=-2.0)


def test_u_is_derived_from_eta():
    params = PathLossParams(eta=2.0)
    assert params.u == pytest.approx(math.log(10) / (5 * math.sqrt(2) * 2.0))
