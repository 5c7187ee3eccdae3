"""Suspension configurations, strut law and static analysis helpers."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

import quaternion
from rover_parameters import RoverParameters
from rover_state import RoverState

_PITCH_ITERATIONS = 8


class SuspensionMode(str, Enum):
    """The three passive suspension configurations.

    DR  - dependent-rigid: free differential rockers, struts locked.
    IE  - independent-elastic: rockers locked horizontal, elastic struts.
    MHS - mechanically-hybrid: free rockers and elastic struts.
    """
    DR = "DR"
    IE = "IE"
    MHS = "MHS"

    @property
    def rocker_locked(self) -> bool:
        return self is SuspensionMode.IE

    @property
    def strut_locked(self) -> bool:
        return self is SuspensionMode.DR

    @classmethod
    def parse(cls, name) -> 'SuspensionMode':
        """Parse a mode name, case-insensitive."""
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().upper())
        except ValueError:
            choices = ', '.join(m.value for m in cls)
            raise ValueError(f"Unknown suspension mode {name!r} (expected one of {choices})") from None


class NoEquilibriumError(Exception):
    """Raised when the static deflection leaves the strut travel range.

    `travel` holds the unreachable strut travels (front, rear).
    """
    def __init__(self, travel, strut_max):
        self.travel = travel
        self.strut_max = strut_max
        super().__init__(
            f"No static equilibrium: strut travel {travel[0]*1000:.1f}/{travel[1]*1000:.1f} mm "
            f"(front/rear) outside [0, {strut_max*1000:.1f}] mm; check spring_rate"
        )


def suspension_force(s, s_rate, params: RoverParameters):
    """Strut force, positive when it pushes the wheel away from the chassis.

    Linear spring-damper F = k_s (s_0 - s) - c_d s_rate, plus a one-sided end-stop
    penalty beyond [0, s_max]. Accepts scalars or per-wheel arrays.
    """
    s = np.asarray(s, dtype=float)
    s_rate = np.asarray(s_rate, dtype=float)
    force = params.spring_rate * (params.spring_free_length - s) - params.damping * s_rate
    k_stop = params.end_stop_stiffness
    force = force + np.where(s < 0.0, -k_stop * s, 0.0)
    force = force - np.where(s > params.strut_max, k_stop * (s - params.strut_max), 0.0)
    if force.ndim == 0:
        return float(force)
    return force


def strut_potential(s, params: RoverParameters):
    """Elastic energy stored in the struts, including end-stop penetration."""
    s = np.asarray(s, dtype=float)
    energy = 0.5 * params.spring_rate * (s - params.spring_free_length) ** 2
    over = np.where(s > params.strut_max, s - params.strut_max, 0.0)
    under = np.where(s < 0.0, -s, 0.0)
    energy = energy + 0.5 * params.end_stop_stiffness * (over ** 2 + under ** 2)
    return float(np.sum(energy))


@dataclass(frozen=True)
class StaticEquilibrium:
    """Resting configuration on flat rigid ground."""

    strut_travel: tuple        # FL, FR, RL, RR, m
    rocker_angle: float        # rad
    chassis_height: float      # CoM height, m
    chassis_pitch: float       # rad, positive nose down
    wheel_loads: tuple         # normal force per wheel, N
    penetration: tuple         # contact penetration per wheel, m

    def to_state(self, x: float = 0.0, speed: float = 0.0) -> RoverState:
        """Rover state at this equilibrium, translated to x and moving at speed.

        Wheel spins start at zero; the spin rate is implied by the drive command.
        """
        orientation = quaternion.from_axis_angle((0.0, 1.0, 0.0), self.chassis_pitch)
        return RoverState(
            chassis_position=(x, 0.0, self.chassis_height),
            chassis_orientation=orientation,
            chassis_linear_velocity=(speed, 0.0, 0.0),
            rocker_angle=self.rocker_angle,
            strut_travel=self.strut_travel,
        )


def static_equilibrium(params: RoverParameters, mode=SuspensionMode.MHS) -> StaticEquilibrium:
    """Solve the static force balance on flat ground (no integration).

    Each strut carries its wheel's sprung share; the rocker rests at zero. DR locks
    its struts at the same travels, so every mode shares one ride height.
    """
    mode = SuspensionMode.parse(mode)
    g = params.gravity
    k = params.spring_rate
    s_front = params.spring_free_length - params.sprung_share_front * g / k
    s_rear = params.spring_free_length - params.sprung_share_rear * g / k
    for s in (s_front, s_rear):
        if not (0.0 <= s <= params.strut_max):
            raise NoEquilibriumError((s_front, s_rear), params.strut_max)

    load_front = params.front_static_load * g
    load_rear = params.rear_static_load * g
    pen_front = load_front / params.contact_stiffness
    pen_rear = load_rear / params.contact_stiffness

    # Wheel centres in the body frame (x, z) at zero rocker angle
    a = params.arm_length
    x_f = params.pivot_offset + a
    x_r = params.pivot_offset - a
    z_f = -(params.knuckle_offset + s_front)
    z_r = -(params.knuckle_offset + s_rear)

    # Pitch that puts both wheel pairs at their contact heights
    coef_sin = -(x_f - x_r)
    coef_cos = z_f - z_r
    target = pen_rear - pen_front
    pitch = 0.0
    for _ in range(_PITCH_ITERATIONS):
        residual = coef_sin * math.sin(pitch) + coef_cos * math.cos(pitch) - target
        slope = coef_sin * math.cos(pitch) - coef_cos * math.sin(pitch)
        pitch -= residual / slope

    height = params.wheel_radius - pen_front + x_f * math.sin(pitch) - z_f * math.cos(pitch)
    # Symmetric loading: the differential rests at zero in every mode
    return StaticEquilibrium(
        strut_travel=(s_front, s_front, s_rear, s_rear),
        rocker_angle=0.0,
        chassis_height=height,
        chassis_pitch=pitch,
        wheel_loads=(load_front, load_front, load_rear, load_rear),
        penetration=(pen_front, pen_front, pen_rear, pen_rear),
    )


def differential_pitch(left_abs: float, right_abs: float) -> float:
    """Chassis pitch imposed by the differential: the mean of both rocker rotations."""
    return 0.5 * (left_abs + right_abs)


def tipover_angles(wheelbase: float, wheel_track: float, com_height: float):
    """Rigid-body static tip-over bounds (longitudinal, lateral), gravity-independent."""
    longitudinal = math.atan2(0.5 * wheelbase, com_height)
    lateral = math.atan2(0.5 * wheel_track, com_height)
    return longitudinal, lateral


def static_tipover_angles(params: RoverParameters):
    """Static tip-over angles of the rover model.

    These are rigid bounds for the model geometry; the elastic deflection of a real
    vehicle under load lowers them.
    """
    return tipover_angles(params.wheelbase, params.wheel_track, params.com_height)
