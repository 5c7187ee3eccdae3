"""Rover state: generalized coordinates and velocities."""

from dataclasses import dataclass, field

import numpy as np

import quaternion


def _vec(values, size):
    arr = np.array(values, dtype=float).reshape(size)
    return arr


@dataclass
class RoverState:
    """Chassis pose and velocities, differential angle, strut travels and wheel spins.

    Per-wheel arrays follow WHEEL_IDS order (FL, FR, RL, RR). The left rocker sits at
    +rocker_angle relative to the chassis and the right rocker at -rocker_angle.
    Chassis linear velocity is in the world frame, angular velocity in the body frame.
    """

    chassis_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    chassis_orientation: np.ndarray = field(default_factory=quaternion.identity)
    chassis_linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    chassis_angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rocker_angle: float = 0.0
    rocker_rate: float = 0.0
    strut_travel: np.ndarray = field(default_factory=lambda: np.zeros(4))
    strut_rate: np.ndarray = field(default_factory=lambda: np.zeros(4))
    wheel_spin_angle: np.ndarray = field(default_factory=lambda: np.zeros(4))
    time: float = 0.0

    def __post_init__(self):
        """Coerce array fields to float arrays of the right shape."""
        self.chassis_position = _vec(self.chassis_position, 3)
        self.chassis_orientation = _vec(self.chassis_orientation, 4)
        self.chassis_linear_velocity = _vec(self.chassis_linear_velocity, 3)
        self.chassis_angular_velocity = _vec(self.chassis_angular_velocity, 3)
        self.strut_travel = _vec(self.strut_travel, 4)
        self.strut_rate = _vec(self.strut_rate, 4)
        self.wheel_spin_angle = _vec(self.wheel_spin_angle, 4)
        self.rocker_angle = float(self.rocker_angle)
        self.rocker_rate = float(self.rocker_rate)
        self.time = float(self.time)

    def copy(self) -> 'RoverState':
        return RoverState(
            chassis_position=self.chassis_position.copy(),
            chassis_orientation=self.chassis_orientation.copy(),
            chassis_linear_velocity=self.chassis_linear_velocity.copy(),
            chassis_angular_velocity=self.chassis_angular_velocity.copy(),
            rocker_angle=self.rocker_angle,
            rocker_rate=self.rocker_rate,
            strut_travel=self.strut_travel.copy(),
            strut_rate=self.strut_rate.copy(),
            wheel_spin_angle=self.wheel_spin_angle.copy(),
            time=self.time,
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.chassis_position))
            and np.all(np.isfinite(self.chassis_orientation))
            and np.all(np.isfinite(self.chassis_linear_velocity))
            and np.all(np.isfinite(self.chassis_angular_velocity))
            and np.isfinite(self.rocker_angle)
            and np.isfinite(self.rocker_rate)
            and np.all(np.isfinite(self.strut_travel))
            and np.all(np.isfinite(self.strut_rate))
            and np.all(np.isfinite(self.wheel_spin_angle))
        )

    def roll_pitch(self):
        """Chassis (roll, pitch) in radians."""
        roll, pitch, _ = quaternion.to_euler(self.chassis_orientation)
        return roll, pitch

