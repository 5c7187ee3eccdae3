"""Quaternion helpers for the chassis attitude.

Quaternions are stored as numpy arrays [w, x, y, z] and rotate body vectors into the
world frame: v_W = R(q) v_B. Angular rates are body-frame rad/s.
"""

import math

import numpy as np


def identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Normalize a quaternion, falling back to identity for a vanishing norm."""
    norm = math.sqrt(float(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]))
    if norm < eps:
        return identity()
    return q / norm


def multiply(q_left: np.ndarray, q_right: np.ndarray) -> np.ndarray:
    """Return the Hamilton product q_left ⊗ q_right."""
    w1, x1, y1, z1 = q_left
    w2, x2, y2, z2 = q_right
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        return identity()
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis / norm))


def to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix R(q) mapping body vectors into the world frame."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def integrate(q: np.ndarray, omega_body: np.ndarray, dt: float) -> np.ndarray:
    """Advance q by a constant body rate over dt with the exact exponential map."""
    rate = math.sqrt(float(omega_body @ omega_body))
    if rate == 0.0:
        return q.copy()
    half = 0.5 * rate * dt
    dq = np.concatenate(([math.cos(half)], (math.sin(half) / rate) * omega_body))
    return normalize(multiply(q, dq))


def to_euler(q: np.ndarray):
    """Return (roll, pitch, yaw) in radians, ZYX convention.

    Positive pitch is a rotation about +y, i.e. nose down.
    """
    w, x, y, z = q
    roll = math.atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    sin_pitch = max(-1.0, min(1.0, 2 * (w * y - z * x)))
    pitch = math.asin(sin_pitch)
    yaw = math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))
    return roll, pitch, yaw


def euler_arrays(q: np.ndarray):
    """Vectorized roll and pitch for an (n, 4) array of quaternions."""
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    roll = np.arctan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    pitch = np.arcsin(np.clip(2 * (w * y - z * x), -1.0, 1.0))
    return roll, pitch
