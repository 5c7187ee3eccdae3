import math

import numpy as np
import pytest

import quaternion


def test_integrate_matches_axis_angle():
    q = quaternion.integrate(quaternion.identity(), np.array([0.0, 1.0, 0.0]), 0.5)
    expected = quaternion.from_axis_angle((0.0, 1.0, 0.0), 0.5)
    assert np.allclose(q, expected, atol=1e-12)


def test_zero_rate_leaves_orientation_unchanged():
    q = quaternion.from_axis_angle((1.0, 0.0, 0.0), 0.3)
    assert np.array_equal(quaternion.integrate(q, np.zeros(3), 0.01), q)


def test_matrix_rotates_x_into_y_for_quarter_turn_about_z():
    rot = quaternion.to_matrix(quaternion.from_axis_angle((0.0, 0.0, 1.0), math.pi / 2))
    assert np.allclose(rot @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_euler_pitch_sign():
    roll, pitch, yaw = quaternion.to_euler(quaternion.from_axis_angle((0.0, 1.0, 0.0), 0.2))
    assert pitch == pytest.approx(0.2)
    assert roll == pytest.approx(0.0, abs=1e-12)
    assert yaw == pytest.approx(0.0, abs=1e-12)


def test_euler_arrays_match_scalar_version():
    qs = np.array([
        quaternion.from_axis_angle((1.0, 0.0, 0.0), 0.1),
        quaternion.from_axis_angle((0.0, 1.0, 0.0), -0.4),
    ])
    roll, pitch = quaternion.euler_arrays(qs)
    for i, q in enumerate(qs):
        r, p, _ = quaternion.to_euler(q)
        assert roll[i] == pytest.approx(r)
        assert pitch[i] == pytest.approx(p)


def test_normalize_degenerate_gives_identity():
    assert np.array_equal(quaternion.normalize(np.zeros(4)), quaternion.identity())
