"""Rover model parameters for the suspension simulator."""

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from config import (
    DEFAULT_WHEEL_RADIUS,
    DEFAULT_WHEELBASE,
    DEFAULT_ARM_LENGTH,
    DEFAULT_WHEEL_TRACK,
    DEFAULT_COM_HEIGHT,
    DEFAULT_SPRING_RATE,
    DEFAULT_DAMPING,
    DEFAULT_SPRING_FREE_LENGTH,
    DEFAULT_TOTAL_MASS,
    DEFAULT_FRONT_STATIC_LOAD,
    DEFAULT_REAR_STATIC_LOAD,
    DEFAULT_UNSPRUNG_MASS,
    DEFAULT_ROCKER_LIMIT,
    DEFAULT_GRAVITY,
    DEFAULT_CONTACT_STIFFNESS,
    DEFAULT_CONTACT_DAMPING,
    DEFAULT_FRICTION_REGULARIZATION,
    DEFAULT_TIMESTEP,
    END_STOP_STIFFNESS_RATIO,
)

# Fields that must be strictly positive
_POSITIVE_FIELDS = (
    'wheel_radius', 'wheelbase', 'arm_length', 'wheel_track', 'com_height',
    'spring_rate', 'spring_free_length', 'total_mass', 'front_static_load',
    'rear_static_load', 'unsprung_mass', 'rocker_limit', 'contact_stiffness',
    'friction_regularization', 'dt',
)

# Fields that may be zero (undamped / frictionless / weightless checks)
_NON_NEGATIVE_FIELDS = ('damping', 'contact_damping', 'gravity')

_LOAD_SPLIT_TOLERANCE = 1e-6


class ParameterError(ValueError):
    """Raised when a rover parameter is out of range.

    `key` names the offending field so config loading can report its path.
    """
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class RoverParameters:
    """Physical and numerical parameters of the rover model."""

    wheel_radius: float = DEFAULT_WHEEL_RADIUS
    wheelbase: float = DEFAULT_WHEELBASE
    arm_length: float = DEFAULT_ARM_LENGTH
    wheel_track: float = DEFAULT_WHEEL_TRACK
    com_height: float = DEFAULT_COM_HEIGHT
    spring_rate: float = DEFAULT_SPRING_RATE
    damping: float = DEFAULT_DAMPING
    spring_free_length: float = DEFAULT_SPRING_FREE_LENGTH
    total_mass: float = DEFAULT_TOTAL_MASS
    front_static_load: float = DEFAULT_FRONT_STATIC_LOAD
    rear_static_load: float = DEFAULT_REAR_STATIC_LOAD
    unsprung_mass: float = DEFAULT_UNSPRUNG_MASS
    rocker_limit: float = DEFAULT_ROCKER_LIMIT
    gravity: float = DEFAULT_GRAVITY
    contact_stiffness: float = DEFAULT_CONTACT_STIFFNESS
    contact_damping: float = DEFAULT_CONTACT_DAMPING
    friction_regularization: float = DEFAULT_FRICTION_REGULARIZATION
    dt: float = DEFAULT_TIMESTEP

    def __post_init__(self):
        """Validate parameters."""
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(f.name, f"must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterError(f.name, "must be finite")
        for name in _POSITIVE_FIELDS:
            if getattr(self, name) <= 0:
                raise ParameterError(name, "must be strictly positive")
        for name in _NON_NEGATIVE_FIELDS:
            if getattr(self, name) < 0:
                raise ParameterError(name, "must not be negative")
        if 4 * self.unsprung_mass >= self.total_mass:
            raise ParameterError('unsprung_mass', "four unsprung masses must weigh less than total_mass")
        split = 2 * (self.front_static_load + self.rear_static_load)
        if abs(split - self.total_mass) > _LOAD_SPLIT_TOLERANCE * self.total_mass:
            raise ParameterError(
                'total_mass',
                f"2*(front_static_load + rear_static_load) = {split:g} kg does not match {self.total_mass:g} kg"
            )
        if self.unsprung_mass >= min(self.front_static_load, self.rear_static_load):
            raise ParameterError('unsprung_mass', "must be smaller than the static load of every wheel")
        if self.arm_length > self.wheelbase:
            raise ParameterError('arm_length', "must not exceed the wheelbase")
        if self.knuckle_offset <= 0:
            raise ParameterError('com_height', "leaves no room for the strut above the wheel")

    # Derived geometry and mass properties

    @property
    def sprung_mass(self) -> float:
        return self.total_mass - 4 * self.unsprung_mass

    @property
    def strut_max(self) -> float:
        """Strut travel limit s_max (symmetric about the free length)."""
        return 2 * self.spring_free_length

    @property
    def end_stop_stiffness(self) -> float:
        return END_STOP_STIFFNESS_RATIO * self.spring_rate

    @property
    def rocker_stop_stiffness(self) -> float:
        """Rotational end-stop stiffness, the strut end-stop seen at the arm end."""
        return self.end_stop_stiffness * self.arm_length ** 2

    @property
    def rocker_inertia(self) -> float:
        """Effective inertia of the differential DOF from the four unsprung masses."""
        return 4 * self.unsprung_mass * self.arm_length ** 2

    @property
    def knuckle_offset(self) -> float:
        """Fixed distance h_k from rocker end to the strut's fully compressed position.

        Chosen so the CoM sits at com_height when the struts are at free length.
        """
        return self.com_height - self.wheel_radius - self.spring_free_length

    @property
    def sprung_share_front(self) -> float:
        """Sprung load per front wheel, kg."""
        return self.front_static_load - self.unsprung_mass

    @property
    def sprung_share_rear(self) -> float:
        return self.rear_static_load - self.unsprung_mass

    @property
    def pivot_offset(self) -> float:
        """x of the rocker pivots in the body frame (CoM at the origin).

        Places the CoM so that the sprung shares balance about it.
        """
        s_f, s_r = self.sprung_share_front, self.sprung_share_rear
        com_from_pivot = self.arm_length * (s_f - s_r) / (s_f + s_r)
        return -com_from_pivot

    @property
    def chassis_inertia(self) -> np.ndarray:
        """Diagonal inertia of a solid cuboid of the sprung mass.

        Dimensions: wheelbase x wheel_track x 2*com_height.
        """
        m = self.sprung_mass
        lx, ly, lz = self.wheelbase, self.wheel_track, 2 * self.com_height
        return np.diag([
            m * (ly ** 2 + lz ** 2) / 12.0,
            m * (lx ** 2 + lz ** 2) / 12.0,
            m * (lx ** 2 + ly ** 2) / 12.0,
        ])

    def with_overrides(self, **changes) -> 'RoverParameters':
        """Return a validated copy with some fields replaced."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """Convert parameters to a dictionary for storage."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> 'RoverParameters':
        """Create parameters from dictionary data, defaults for missing keys."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParameterError(unknown[0], "unknown rover parameter")
        try:
            return cls(**data)
        except TypeError as e:
            raise ValueError(f"Invalid rover parameters: {e}") from e
