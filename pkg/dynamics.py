"""Reduced-coordinate rover dynamics: chassis, differential rockers and per-wheel struts."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

import quaternion
from config import G_UNIT, WHEEL_IDS
from contact import ContactPoint, resolve_contact
from rover_parameters import RoverParameters
from rover_state import RoverState
from suspension import SuspensionMode, strut_potential, suspension_force
from terrain import TerrainScene

logger = logging.getLogger(__name__)

# Per-wheel signs in WHEEL_IDS order: +1 left / front
SIDE = np.array([1.0, -1.0, 1.0, -1.0])
FORE = np.array([1.0, 1.0, -1.0, -1.0])
_UP = np.array([0.0, 0.0, 1.0])


class NonFiniteStateError(ArithmeticError):
    """Raised when a step produces a non-finite coordinate (numerical instability)."""
    def __init__(self, state, time):
        self.state = state
        self.time = time
        super().__init__(f"Non-finite rover state at t = {time:.4f} s")


@dataclass(frozen=True)
class DriveCommand:
    """Open-loop drive: every wheel spins at speed / wheel_radius."""
    speed: float = 0.0

    def wheel_rate(self, params: RoverParameters) -> float:
        return self.speed / params.wheel_radius


@dataclass(frozen=True)
class RoverKinematics:
    """World-frame positions and velocities along the chassis-rocker-strut chain.

    Per-wheel arrays are (4, 3) in WHEEL_IDS order. The attachment points are the wheel
    centres at the lower end of each strut.
    """
    rotation: np.ndarray
    angular_velocity: np.ndarray       # world frame
    strut_axis: np.ndarray             # chassis up, world frame
    pivots: np.ndarray                 # pivot of the rocker carrying each wheel
    knuckles: np.ndarray               # rocker ends
    knuckle_velocities: np.ndarray
    knuckle_rocker_jacobian: np.ndarray  # d(knuckle)/d(rocker_angle), world frame
    wheel_centers: np.ndarray
    wheel_velocities: np.ndarray


def attachment_points(state: RoverState, params: RoverParameters) -> RoverKinematics:
    """Wheel-strut attachment positions and velocities in the world frame.

    The left rocker turns by +rocker_angle and the right by -rocker_angle about the
    body lateral axis through its pivot; each strut extends along the chassis up axis.
    """
    rot = quaternion.to_matrix(state.chassis_orientation)
    x = state.chassis_position
    phi = state.rocker_angle
    a = params.arm_length
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)

    pivots_b = np.column_stack((
        np.full(4, params.pivot_offset), SIDE * params.wheel_track / 2, np.zeros(4)
    ))
    knuckles_b = pivots_b + np.column_stack((FORE * a * cos_phi, np.zeros(4), -FORE * SIDE * a * sin_phi))
    jacobian_b = np.column_stack((-FORE * a * sin_phi, np.zeros(4), -FORE * SIDE * a * cos_phi))
    wheels_b = knuckles_b - np.outer(params.knuckle_offset + state.strut_travel, _UP)

    omega = rot @ state.chassis_angular_velocity
    axis = rot[:, 2]
    knuckles = x + knuckles_b @ rot.T
    jacobian = jacobian_b @ rot.T
    knuckle_velocities = (state.chassis_linear_velocity + np.cross(omega, knuckles - x)
                          + jacobian * state.rocker_rate)
    wheel_centers = x + wheels_b @ rot.T
    wheel_velocities = knuckle_velocities - np.outer(state.strut_rate, axis)

    return RoverKinematics(
        rotation=rot,
        angular_velocity=omega,
        strut_axis=axis,
        pivots=x + pivots_b @ rot.T,
        knuckles=knuckles,
        knuckle_velocities=knuckle_velocities,
        knuckle_rocker_jacobian=jacobian,
        wheel_centers=wheel_centers,
        wheel_velocities=wheel_velocities,
    )


@dataclass(frozen=True)
class StepReport:
    """Loads logged for one step."""
    contacts: Tuple[Optional[ContactPoint], ...]
    strut_force: np.ndarray          # N, per wheel, positive pushing the wheel down
    attachment_load: np.ndarray      # (4, 3) N, force through each wheel attachment at the wheel centre
    pivot_torque: np.ndarray         # (left, right) N*m passed through the differential to the chassis
    vertical_acceleration: float     # chassis, g-units
    wheel_centers: np.ndarray

    @property
    def vertical_load(self) -> np.ndarray:
        return self.attachment_load[:, 2]

    @property
    def normal_forces(self) -> np.ndarray:
        return np.array([c.normal_force if c is not None else 0.0 for c in self.contacts])


def _perpendicular(vectors, axis):
    return vectors - np.outer(vectors @ axis, axis)


def strut_update(travel, wheel_velocity, knuckle_velocity, axial_force, mass: float, dt: float):
    """Semi-implicit update of strut travel.

    The wheel-side mass takes the axial force (positive up) first; the travel then
    follows the new wheel velocity relative to the knuckle, both measured along the
    strut axis.

    Returns:
        (travel, rate) after one step
    """
    wheel_velocity = wheel_velocity + dt * np.asarray(axial_force) / mass
    rate = knuckle_velocity - wheel_velocity
    return travel + dt * rate, rate


def step_with_report(state: RoverState, params: RoverParameters, mode, scene: TerrainScene,
                     command: DriveCommand):
    """Advance the rover by one dt with semi-implicit Euler; return (state, report).

    Velocities are updated first from the forces at the current configuration, then
    positions from the new velocities. Locked coordinates are copied unchanged.
    """
    mode = SuspensionMode.parse(mode)
    dt = params.dt
    m_w = params.unsprung_mass
    m_s = params.sprung_mass
    gravity = np.array([0.0, 0.0, -params.gravity])
    kin = attachment_points(state, params)
    u = kin.strut_axis
    lateral = kin.rotation[:, 1]

    # Contacts, with the commanded spin about each wheel axle
    spin = kin.angular_velocity + command.wheel_rate(params) * lateral
    contacts = []
    contact_force = np.zeros((4, 3))
    contact_moment = np.zeros((4, 3))
    for i, wheel_id in enumerate(WHEEL_IDS):
        cp = resolve_contact(kin.wheel_centers[i], kin.wheel_velocities[i], scene, params,
                             spin_vector=spin, wheel_id=wheel_id)
        contacts.append(cp)
        if cp is not None:
            contact_force[i] = cp.total_force
            contact_moment[i] = np.cross(cp.position - kin.wheel_centers[i], contact_force[i])

    wheel_weight = np.tile(m_w * gravity, (4, 1))
    if mode.strut_locked:
        strut = np.zeros(4)
        knuckle_force = contact_force + wheel_weight
        axial_force = np.zeros(4)
    else:
        strut = suspension_force(state.strut_travel, state.strut_rate, params)
        knuckle_force = (np.outer(strut, u) + _perpendicular(contact_force, u)
                         + _perpendicular(wheel_weight, u))
        axial_force = contact_force @ u + wheel_weight @ u - strut

    # Chassis Newton-Euler
    force = knuckle_force.sum(axis=0) + m_s * gravity
    torque = (np.cross(kin.wheel_centers - state.chassis_position, knuckle_force).sum(axis=0)
              + contact_moment.sum(axis=0))
    carried = m_s + 4 * m_w
    axial_mass = carried if mode.strut_locked else m_s
    force_axial = (force @ u) * u
    accel = force_axial / axial_mass + (force - force_axial) / carried

    inertia = np.diag(params.chassis_inertia)
    omega_b = state.chassis_angular_velocity
    torque_b = kin.rotation.T @ torque
    omega_dot = (torque_b - np.cross(omega_b, inertia * omega_b)) / inertia

    new = state.copy()
    new.chassis_linear_velocity = state.chassis_linear_velocity + dt * accel
    new.chassis_angular_velocity = omega_b + dt * omega_dot

    # Differential: per-side moments about the rocker axis, left turning by +phi
    arm_moment = (np.cross(kin.knuckles - kin.pivots, knuckle_force) + contact_moment) @ lateral
    side_moment = np.array([arm_moment[SIDE > 0].sum(), arm_moment[SIDE < 0].sum()])
    rocker_accel = 0.0
    if not mode.rocker_locked:
        rocker_torque = side_moment[0] - side_moment[1]
        excess = abs(state.rocker_angle) - params.rocker_limit
        if excess > 0.0:
            rocker_torque -= np.sign(state.rocker_angle) * params.rocker_stop_stiffness * excess
        rocker_accel = rocker_torque / params.rocker_inertia
        new.rocker_rate = state.rocker_rate + dt * rocker_accel

    # Struts: wheel momentum along the axis, then the travel rate relative to the knuckle
    if not mode.strut_locked:
        omega_new = kin.rotation @ new.chassis_angular_velocity
        knuckle_velocity_new = (new.chassis_linear_velocity
                                + np.cross(omega_new, kin.knuckles - state.chassis_position)
                                + kin.knuckle_rocker_jacobian * new.rocker_rate)
        new.strut_travel, new.strut_rate = strut_update(
            state.strut_travel, kin.wheel_velocities @ u, knuckle_velocity_new @ u,
            axial_force, m_w, dt)

    # Positions
    new.chassis_position = state.chassis_position + dt * new.chassis_linear_velocity
    new.chassis_orientation = quaternion.integrate(state.chassis_orientation,
                                                   new.chassis_angular_velocity, dt)
    if not mode.rocker_locked:
        new.rocker_angle = state.rocker_angle + dt * new.rocker_rate
    new.wheel_spin_angle = state.wheel_spin_angle + dt * command.wheel_rate(params)
    new.time = state.time + dt

    if not new.is_finite():
        raise NonFiniteStateError(new, new.time)

    if mode.strut_locked:
        strut = (knuckle_force - m_w * accel) @ u
    # Each rocker carries half the differential inertia; the rest reaches the chassis
    half_inertia = 0.5 * params.rocker_inertia * rocker_accel
    report = StepReport(
        contacts=tuple(contacts),
        strut_force=strut,
        attachment_load=contact_force,
        pivot_torque=side_moment - half_inertia * np.array([1.0, -1.0]),
        vertical_acceleration=float(accel[2] / G_UNIT),
        wheel_centers=kin.wheel_centers,
    )
    return new, report


def step(state: RoverState, params: RoverParameters, mode, scene: TerrainScene,
         command: DriveCommand) -> RoverState:
    """Advance the rover by one timestep."""
    new, _ = step_with_report(state, params, mode, scene, command)
    return new


def chassis_roll_pitch(state: RoverState):
    """Chassis (roll, pitch) in radians, pitch positive nose down."""
    return state.roll_pitch()


def midstep_state(before: RoverState, after: RoverState) -> RoverState:
    """`before`'s configuration with velocities averaged over the step to `after`.

    Semi-implicit Euler stores velocities half a step ahead of positions; the average
    of the velocities on either side of a configuration is synchronized with it.
    """
    state = before.copy()
    state.chassis_linear_velocity = 0.5 * (before.chassis_linear_velocity + after.chassis_linear_velocity)
    state.chassis_angular_velocity = 0.5 * (before.chassis_angular_velocity + after.chassis_angular_velocity)
    state.rocker_rate = 0.5 * (before.rocker_rate + after.rocker_rate)
    state.strut_rate = 0.5 * (before.strut_rate + after.strut_rate)
    return state


def total_energy(state: RoverState, params: RoverParameters, mode, scene: TerrainScene) -> float:
    """Mechanical energy of the model: kinetic, gravitational, strut, end-stop and contact.

    Gravitational energy is measured from the base plane. Used by the energy-ledger check.
    """
    mode = SuspensionMode.parse(mode)
    kin = attachment_points(state, params)
    u = kin.strut_axis
    m_w = params.unsprung_mass
    m_s = params.sprung_mass
    v = state.chassis_linear_velocity
    v_axial = float(v @ u)
    v_perp = v - v_axial * u
    omega_b = state.chassis_angular_velocity

    kinetic = 0.5 * float(omega_b @ (np.diag(params.chassis_inertia) * omega_b))
    kinetic += 0.5 * params.rocker_inertia * state.rocker_rate ** 2
    if mode.strut_locked:
        kinetic += 0.5 * (m_s + 4 * m_w) * float(v @ v)
    else:
        kinetic += 0.5 * m_s * v_axial ** 2 + 0.5 * (m_s + 4 * m_w) * float(v_perp @ v_perp)
        kinetic += 0.5 * m_w * float(np.sum((kin.wheel_velocities @ u) ** 2))

    g = params.gravity
    potential = m_s * g * state.chassis_position[2] + m_w * g * float(kin.wheel_centers[:, 2].sum())
    if not mode.strut_locked:
        potential += strut_potential(state.strut_travel, params)
    excess = abs(state.rocker_angle) - params.rocker_limit
    if excess > 0.0:
        potential += 0.5 * params.rocker_stop_stiffness * excess ** 2
    for center in kin.wheel_centers:
        hit, _ = scene.surface_contact(center, params.wheel_radius)
        if hit is not None:
            potential += 0.5 * params.contact_stiffness * hit.penetration ** 2
    return kinetic + potential


class RoverSimulator:
    """Fixed-step simulation loop around `step_with_report`.

    Holds one rover's state; `on_step(state, report)` is called after every step and a
    `stop()` from the callback ends the run after the current step. Not shared between
    threads; run independent simulators for parallel work.
    """

    def __init__(self, params: RoverParameters, mode, scene: TerrainScene,
                 command: DriveCommand, state: RoverState):
        self.params = params
        self.mode = SuspensionMode.parse(mode)
        self.scene = scene
        self.command = command
        self.state = state
        self.on_step: Optional[Callable[[RoverState, StepReport], None]] = None
        self._running = False
        self.steps_taken = 0

    @property
    def is_running(self) -> bool:
        return self._running

    def stop(self):
        self._running = False

    def run(self, duration: float) -> RoverState:
        """Step until `duration` seconds have elapsed or `stop()` is called.

        Raises:
            NonFiniteStateError: if the integration blows up
        """
        total_steps = int(round(duration / self.params.dt))
        self._running = True
        logger.debug("Running %s for %d steps at dt=%g", self.mode.value, total_steps, self.params.dt)
        try:
            for _ in range(total_steps):
                self.state, report = step_with_report(
                    self.state, self.params, self.mode, self.scene, self.command
                )
                self.steps_taken += 1
                if self.on_step is not None:
                    self.on_step(self.state, report)
                if not self._running:
                    break
        finally:
            self._running = False
        return self.state
