import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grouptrack.channel import PathLossParams
from grouptrack.multilat import (
    AnchorObservation,
    DegenerateGeometryError,
    InsufficientAnchorsError,
    Variant,
    bias_vector,
    build_system,
    estimate_position,
    estimate_positions_batch,
    regularize,
    solve,
    var_squared_distance,
    var_squared_norm,
    wlsr_covariance,
    wlsrp_covariance,
)

PL = PathLossParams()


def obs(pos, d, sa=0.0, sp=0.0):
    return AnchorObservation(tuple(pos), float(d), sa, sp)


def exact_anchors(anchor_pos, blind, sa=0.0, sp=0.0):
    return [
        obs(p, np.linalg.norm(np.asarray(p, float) - np.asarray(blind, float)), sa, sp)
        for p in anchor_pos
    ]


TRIANGLE = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)]


def circle_anchors(n=6, radius=100.0, center=(0.0, 0.0), phase=0.1):
    angles = phase + 2 * np.pi * np.arange(n) / n
    return np.c_[center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)]


# -- system construction -----------------------------------------------------


def test_build_system_hand_example():
    anchors = exact_anchors(TRIANGLE, (3.0, 4.0))
    system = build_system(anchors, PL, Variant.WLSR)
    assert np.allclose(system.A, [[10.0, 0.0], [0.0, 10.0]])
    assert np.allclose(system.b, [60.0, 80.0])
    assert np.allclose(system.k_tilde, [0.0, 100.0, 100.0])


def test_bias_vector_vanishes_without_noise():
    anchors = exact_anchors(TRIANGLE, (3.0, 4.0))
    system = build_system(anchors, PL, Variant.WLSRP)
    assert np.allclose(system.c, 0.0)


def test_two_anchors_rejected():
    anchors = exact_anchors(TRIANGLE[:2], (3.0, 4.0))
    with pytest.raises(InsufficientAnchorsError):
        build_system(anchors, PL, Variant.WLSR)
    with pytest.raises(InsufficientAnchorsError):
        estimate_position(anchors, PL, Variant.WLSR)


# -- covariances --------------------------------------------------------------


def test_wlsr_covariance_zero_noise_is_zero():
    anchors = exact_anchors(TRIANGLE, (3.0, 4.0), sp=0.0)
    assert np.all(wlsr_covariance(anchors, PL) == 0.0)


def test_wlsr_covariance_structure():
    anchors = exact_anchors(circle_anchors(5), (5.0, -3.0), sp=2.0)
    S = wlsr_covariance(anchors, PL)
    shared = var_squared_distance(
        np.array([anchors[0].d_tilde]), np.array([2.0]), PL
    )[0]
    off_diag = S[~np.eye(4, dtype=bool)]
    assert np.allclose(off_diag, shared)
    assert np.all(np.diag(S) > shared)
    assert np.allclose(S, S.T)


def test_wlsrp_covariance_reduces_to_wlsr_without_position_noise():
    anchors = exact_anchors(circle_anchors(6), (10.0, 20.0), sa=0.0, sp=1.5)
    assert np.allclose(wlsrp_covariance(anchors, PL), wlsr_covariance(anchors, PL))


def test_wlsrp_covariance_position_noise_only():
    anchors = exact_anchors(circle_anchors(6), (10.0, 20.0), sa=5.0, sp=0.0)
    S = wlsrp_covariance(anchors, PL)
    assert np.all(np.diag(S) > 0)
    assert np.all(np.linalg.eigvalsh(regularize(S)) > 0)


def test_var_squared_norm_closed_form():
    # Var((x+n)^2 + (y+n)^2) = 4 sa^2 (x^2+y^2) + 4 sa^4
    assert var_squared_norm(np.array([100.0**2]), np.array([5.0]))[0] == pytest.approx(
        4 * 25 * 10000 + 4 * 625
    )


# -- solving ------------------------------------------------------------------


def test_zero_noise_recovery():
    anchors = exact_anchors(TRIANGLE, (3.0, 4.0))
    est = solve(build_system(anchors, PL, Variant.WLSR))
    assert est.x == pytest.approx(3.0, abs=1e-9)
    assert est.y == pytest.approx(4.0, abs=1e-9)


def test_translation_equivariance_zero_noise():
    blind = np.array([3.0, 4.0])
    shift = np.array([1000.0, 2000.0])
    base = exact_anchors(TRIANGLE, blind)
    shifted = exact_anchors([tuple(np.array(p) + shift) for p in TRIANGLE], blind + shift)
    est0 = solve(build_system(base, PL, Variant.WLSR))
    est1 = solve(build_system(shifted, PL, Variant.WLSR))
    assert est1.x - est0.x == pytest.approx(1000.0, abs=1e-6)
    assert est1.y - est0.y == pytest.approx(2000.0, abs=1e-6)


def test_collinear_anchors_degenerate():
    anchors = [obs((float(x), 0.0), 5.0) for x in (0.0, 10.0, 20.0)]
    with pytest.raises(DegenerateGeometryError):
        solve(build_system(anchors, PL, Variant.WLSR))


def test_estimate_position_circle_zero_noise():
    blind = (7.0, -2.0)
    anchors = exact_anchors(circle_anchors(6, center=blind), blind)
    for variant in Variant:
        est = estimate_position(anchors, PL, variant)
        assert est.x == pytest.approx(blind[0], abs=1e-9)
        assert est.y == pytest.approx(blind[1], abs=1e-9)


def test_variant_reduction_with_zero_sigmas():
    anchors = exact_anchors(circle_anchors(6, phase=0.7), (12.0, 9.0))
    est_r = estimate_position(anchors, PL, Variant.WLSR)
    est_p = estimate_position(anchors, PL, Variant.WLSRP)
    assert est_r.x == pytest.approx(est_p.x, abs=1e-12)
    assert est_r.y == pytest.approx(est_p.y, abs=1e-12)


def test_reference_anchor_invariance_zero_noise():
    blind = (12.0, -5.0)
    positions = circle_anchors(6, phase=0.3)
    anchors = exact_anchors(positions, blind)
    baseline = estimate_position(anchors, PL, Variant.WLSR)
    for shift in range(1, 6):
        rotated = anchors[shift:] + anchors[:shift]
        est = estimate_position(rotated, PL, Variant.WLSR)
        assert est.x == pytest.approx(baseline.x, abs=1e-9)
        assert est.y == pytest.approx(baseline.y, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_regularized_covariance_is_symmetric_positive_definite(data):
    n = data.draw(st.integers(min_value=3, max_value=8))
    coords = data.draw(
        st.lists(
            st.tuples(
                st.floats(min_value=-500, max_value=500),
                st.floats(min_value=-500, max_value=500),
            ),
            min_size=n,
            max_size=n,
        )
    )
    sa = data.draw(st.floats(min_value=0.0, max_value=10.0))
    sp = data.draw(st.floats(min_value=0.0, max_value=3.0))
    anchors = [obs(p, max(np.hypot(*p), 1.0), sa, sp) for p in coords]
    for builder in (wlsr_covariance, wlsrp_covariance):
        S = builder(anchors, PL)
        assert np.allclose(S, S.T)
        assert np.all(np.linalg.eigvalsh(regularize(S)) > 0)


# -- batch path ---------------------------------------------------------------


def test_batch_matches_scalar():
    rng = np.random.default_rng(99)
    for variant in Variant:
        for _ in range(20):
            truth = rng.normal(0, 50, 2)
            apos = rng.normal(0, 80, (6, 2))
            d = np.linalg.norm(apos - truth, axis=1) * np.exp(rng.normal(0, 0.15, 6))
            sa = rng.uniform(0, 10, 6)
            sp = rng.uniform(0, 3, 6)
            anchors = [obs(apos[i], d[i], sa[i], sp[i]) for i in range(6)]
            scalar = estimate_position(anchors, PL, variant)
            batch, bad = estimate_positions_batch(apos, d[None, :], sa, sp, PL, variant)
            assert not bad[0]
            assert batch[0, 0] == pytest.approx(scalar.x, rel=1e-9, abs=1e-9)
            assert batch[0, 1] == pytest.approx(scalar.y, rel=1e-9, abs=1e-9)


def test_batch_flags_collinear_geometry():
    apos = np.array([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0], [30.0, 0.0]])
    d = np.array([[5.0, 6.0, 7.0, 8.0]])
    _, bad = estimate_positions_batch(apos, d, np.zeros(4), np.zeros(4), PL, Variant.WLSR)
    assert bad[0]


def test_batch_accepts_per_instance_anchor_sets():
    rng = np.random.default_rng(3)
    truth = np.array([5.0, 5.0])
    base = circle_anchors(6, center=truth)
    stacked = np.stack([base, base + rng.normal(0, 1, base.shape)])
    d = np.stack([
        np.linalg.norm(stacked[0] - truth, axis=1),
        np.linalg.norm(stacked[1] - truth, axis=1),
    ])
    est, bad = estimate_positions_batch(
        stacked, d, np.zeros(6), np.zeros(6), PL, Variant.WLSR
    )
    assert not bad.any()
    assert np.allclose(est[0], truth, atol=1e-9)


# -- Monte-Carlo spot checks (full-size versions live in the oracle suite) ----


def test_var_squared_distance_against_monte_carlo():
    rng = np.random.default_rng(1234)
    d, sp = 10.0, 3.0
    draws = d * 10.0 ** (rng.normal(0, sp, 10**6) / (10 * PL.eta))
    measured = np.var(draws**2)
    expected = var_squared_distance(np.array([d]), np.array([sp]), PL)[0]
    assert measured == pytest.approx(expected, rel=0.02)


def test_var_squared_norm_against_monte_carlo():
    rng = np.random.default_rng(4321)
    x, y, sa = 100.0, 0.0, 5.0
    k = (x + rng.normal(0, sa, 10**6)) ** 2 + (y + rng.normal(0, sa, 10**6)) ** 2
    expected = var_squared_norm(np.array([x * x + y * y]), np.array([sa]))[0]
    assert np.var(k) == pytest.approx(expected, rel=0.02)


def test_anchor_observation_validation():
    with pytest.raises(ValueError):
        AnchorObservation((0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        AnchorObservation((0.0, 0.0), 1.0, sigma_a=-1.0)
