"""Penalty contact with regularized Coulomb friction between a wheel sphere and the terrain."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rover_parameters import RoverParameters
from terrain import TerrainScene


@dataclass(frozen=True)
class ContactPoint:
    """One wheel-terrain contact resolved for a single step.

    Forces are world-frame and act on the wheel.
    """
    wheel_id: str
    position: np.ndarray
    normal: np.ndarray
    penetration: float
    penetration_rate: float
    normal_force: float
    friction_force: np.ndarray
    friction: float
    slip_velocity: np.ndarray

    @property
    def total_force(self) -> np.ndarray:
        return self.normal_force * self.normal + self.friction_force

    @property
    def slip_speed(self) -> float:
        return float(np.linalg.norm(self.slip_velocity))


def resolve_contact(wheel_center, wheel_velocity, scene: TerrainScene, params: RoverParameters,
                    spin_vector=None, wheel_id: str = "") -> Optional[ContactPoint]:
    """Resolve the contact of one spherical wheel against the scene.

    Args:
        wheel_center: World position of the wheel centre, m
        wheel_velocity: World velocity of the wheel centre, m/s
        scene: Terrain to test against
        params: Rover parameters (radius, contact law, friction regularization)
        spin_vector: World angular velocity of the wheel including the commanded spin, rad/s
        wheel_id: Label carried into the result

    Returns:
        ContactPoint, or None when the wheel does not penetrate the terrain
    """
    center = np.asarray(wheel_center, dtype=float)
    velocity = np.asarray(wheel_velocity, dtype=float)
    hit, mu = scene.surface_contact(center, params.wheel_radius)
    if hit is None:
        return None

    n = hit.normal
    penetration_rate = -float(velocity @ n)
    normal_force = max(0.0, params.contact_stiffness * hit.penetration
                       + params.contact_damping * penetration_rate)

    surface_velocity = velocity
    if spin_vector is not None:
        surface_velocity = velocity + np.cross(np.asarray(spin_vector, dtype=float), hit.point - center)
    slip = surface_velocity - (surface_velocity @ n) * n
    slip_speed = math.sqrt(float(slip @ slip))

    friction_force = np.zeros(3)
    if slip_speed > 0.0 and normal_force > 0.0 and mu > 0.0:
        magnitude = mu * normal_force * math.tanh(slip_speed / params.friction_regularization)
        # Never more than what stops one unsprung mass sliding within a step
        magnitude = min(magnitude, params.unsprung_mass * slip_speed / params.dt)
        friction_force = -magnitude * slip / slip_speed

    return ContactPoint(
        wheel_id=wheel_id,
        position=hit.point,
        normal=n,
        penetration=hit.penetration,
        penetration_rate=penetration_rate,
        normal_force=normal_force,
        friction_force=friction_force,
        friction=mu,
        slip_velocity=slip,
    )
