import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvfreq.drem import MixedRegression
from tvfreq.generators import closed_form_phi_harmonic
from tvfreq.identifier import (
    MAX_SUBSTEPS,
    NotConvergedError,
    ValidityTracker,
    gradient_step,
    reconstruct_omega,
    recover_theta,
)

THETA = np.array([0.5, 4.0, 2.0, 1.0, 0.5])


def test_zero_delta_freezes_estimate():
    th0 = np.array([1.0, -2.0, 3.0, 0.0, 5.0])
    th, n = gradient_step(th0, MixedRegression(np.zeros(5), 0.0), 1e23, 1e-4)
    np.testing.assert_array_equal(th, th0)
    assert n == 1


def test_plain_step_matches_exponential():
    # beta Delta^2 dt = 0.05: one RK4 step, compared with the exact decay
    D, beta, dt = 1.0, 0.5, 0.1
    th, n = gradient_step(np.zeros(5), MixedRegression(D * THETA, D), beta, dt)
    assert n == 1
    expected = THETA * (1 - math.exp(-beta * D * D * dt))
    np.testing.assert_allclose(th, expected, rtol=1e-7)


def test_guard_substep_count():
    # ratio 2.5 -> 25 sub-steps
    th, n = gradient_step(np.zeros(5), MixedRegression(THETA, 1.0), 25.0, 0.1)
    assert n == 25
    np.testing.assert_allclose(th, THETA * (1 - math.exp(-2.5)), rtol=1e-6)


def test_closed_form_beyond_cap_agrees_with_substepping():
    D, dt = 1.0, 1.0
    beta = 50.0  # ratio 50 -> 500 sub-steps under the default cap
    start = np.array([3.0, -1.0, 0.0, 2.0, 1.0])
    sub, n_sub = gradient_step(start, MixedRegression(D * THETA, D), beta, dt)
    cf, n_cf = gradient_step(start, MixedRegression(D * THETA, D), beta, dt, max_substeps=10)
    assert n_sub == 500 and n_cf == 0
    np.testing.assert_allclose(cf, sub, atol=1e-12)


def test_extreme_gain_stays_finite():
    th, n = gradient_step(np.ones(5), MixedRegression(1.7e-7 * THETA, 1.7e-7), 1e23, 1e-4)
    assert n == 0
    np.testing.assert_allclose(th, THETA, rtol=1e-12)


def test_gradient_rejects_bad_parameters():
    with pytest.raises(ValueError):
        gradient_step(np.zeros(5), MixedRegression(np.zeros(5), 1.0), 0.0, 1e-4)
    with pytest.raises(ValueError):
        gradient_step(np.zeros(5), MixedRegression(np.zeros(5), 1.0), 1.0, -1e-4)


@settings(max_examples=50, deadline=None)
@given(
    D=st.floats(1e-9, 10.0),
    beta=st.floats(1e-3, 1e25),
    dt=st.floats(1e-5, 1e-1),
)
def test_exact_mixed_data_error_is_monotone(D, beta, dt):
    th = np.array([-1.0, 0.0, 7.0, 2.0, -3.0])
    err = np.abs(th - THETA)
    for _ in range(5):
        th, _ = gradient_step(th, MixedRegression(D * THETA, D), beta, dt, max_substeps=MAX_SUBSTEPS)
        new = np.abs(th - THETA)
        assert np.all(new <= err * (1 + 1e-12) + 1e-15)
        err = new


@pytest.mark.parametrize("theta_hat,expected", [
    ([0.5, 4.0, 2.0, 1.0, 0.5], (2.0, 1.0)),
    ([0.5, 16.0, 8.0, 4.0, 2.0], (4.0, 2.0)),
    ([0.0, 0.0, 0.0, 0.0, 0.0], (0.0, 0.0)),
])
def test_recover_examples(theta_hat, expected):
    assert recover_theta(theta_hat) == pytest.approx(expected)


def test_recover_negative_square_raises():
    with pytest.raises(NotConvergedError):
        recover_theta([0.5, -0.1, 0.0, 0.0, 0.0])
    # tiny negative values within tolerance clamp to zero
    assert recover_theta([0.5, -1e-12, 0, 0, 0]) == (0.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3), st.floats(-10, 10))
def test_recover_inverts_stacking_up_to_sign(t1, t2):
    Th = [t2 / t1, t1 * t1, t1 * t2, t2 * t2, t2 ** 3 / t1]
    r1, r2 = recover_theta(Th)
    s = math.copysign(1.0, t1)
    assert r1 == pytest.approx(s * t1, rel=1e-9)
    assert r2 == pytest.approx(s * t2, rel=1e-9, abs=1e-9)


def test_reconstruct_example():
    Phi = closed_form_phi_harmonic(4.0, np.array(math.pi / 4))
    assert reconstruct_omega(Phi, 2.0, 1.0) == pytest.approx(0.5, abs=1e-14)
    stack = closed_form_phi_harmonic(4.0, np.linspace(0, 3, 7))
    out = reconstruct_omega(stack, 2.0, 1.0)
    assert out.shape == (7,) and out[0] == pytest.approx(2.0)


def test_validity_tracker_latches():
    tr = ValidityTracker(ratio=1e-3, hold=0.1)
    dt = 0.01
    for _ in range(5):
        assert not tr.update(0.0, dt)
    for _ in range(9):
        assert not tr.update(1.0, dt)
    assert tr.update(1.0, dt)
    # collapse of Delta does not clear the flag
    assert tr.update(0.0, dt) and tr.valid


def test_validity_tracker_resets_hold_on_dip():
    tr = ValidityTracker(ratio=0.5, hold=0.05)
    dt = 0.01
    seq = [1.0, 1.0, 1.0, 0.1, 1.0, 1.0, 1.0, 1.0]
    assert not any(tr.update(d, dt) for d in seq)
    assert tr.update(1.0, dt)


def test_pipeline_valid_implies_positive_theta1(fig2_run):
    est, _ = fig2_run
    h = est.history_
    v = h["valid"] > 0
    assert v.any()
    assert np.all(h["theta1_hat"][v] > 0)
    # latched: once set it never clears
    first = np.argmax(v)
    assert np.all(v[first:])
    assert not v[0]


def test_pipeline_exact_data_error_monotone(fig2_exact_run, fig2):
    est, _ = fig2_exact_run
    h = est.history_
    th = np.stack([h[f"theta_hat{i}"] for i in range(1, 6)], -1)
    err = np.abs(th - fig2.theta_star)
    inc = np.diff(err, axis=0)
    assert np.max(inc) <= 1e-9
