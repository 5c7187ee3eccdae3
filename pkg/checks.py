"""Invariant checks for the `check` command: oracles the integrator must reproduce."""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from dynamics import (DriveCommand, RoverSimulator, midstep_state, step_with_report, strut_update,
                      total_energy)
from rover_parameters import RoverParameters
from suspension import SuspensionMode, static_equilibrium, static_tipover_angles, suspension_force
from terrain import TerrainScene

logger = logging.getLogger(__name__)

QUARTER_CAR_TOLERANCE = 0.02
ENERGY_DRIFT_TOLERANCE = 0.01
LOAD_SUM_TOLERANCE = 0.01
LOAD_SPLIT_TOLERANCE = 0.05
SETTLE_TOLERANCE = 0.5e-3   # m


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def quarter_car_response(params: RoverParameters, mass: float, displacement: float = 0.01,
                         duration: float = 5.0):
    """Drive one strut carrying `mass` on a fixed knuckle through `strut_update`.

    Returns:
        (time, simulated offset from free length, closed-form offset)
    """
    dt = params.dt
    steps = int(round(duration / dt))
    s = params.spring_free_length - displacement
    s_rate = 0.0
    time = np.arange(1, steps + 1) * dt
    simulated = np.empty(steps)
    for i in range(steps):
        # the strut pushes the mass down the axis, away from the fixed knuckle
        s, s_rate = strut_update(s, -s_rate, 0.0, -suspension_force(s, s_rate, params), mass, dt)
        simulated[i] = s - params.spring_free_length
    return time, simulated, damped_oscillator(time, -displacement, params.spring_rate, params.damping, mass)


def damped_oscillator(t, x0: float, stiffness: float, damping: float, mass: float):
    """Closed-form free response of a linear oscillator released at rest from x0.

    Handles under-, critically and overdamped cases.
    """
    omega_n = math.sqrt(stiffness / mass)
    zeta = damping / (2.0 * math.sqrt(stiffness * mass))
    t = np.asarray(t, dtype=float)
    if math.isclose(zeta, 1.0, rel_tol=1e-9):
        return x0 * (1.0 + omega_n * t) * np.exp(-omega_n * t)
    if zeta > 1.0:
        root = omega_n * math.sqrt(zeta ** 2 - 1.0)
        slow, fast = -zeta * omega_n + root, -zeta * omega_n - root
        return x0 * (fast * np.exp(slow * t) - slow * np.exp(fast * t)) / (fast - slow)
    omega_d = omega_n * math.sqrt(1.0 - zeta ** 2)
    envelope = np.exp(-zeta * omega_n * t)
    return x0 * envelope * (np.cos(omega_d * t) + zeta * omega_n / omega_d * np.sin(omega_d * t))


def quarter_car_oracle(params: RoverParameters, mass: Optional[float] = None) -> CheckResult:
    """Max position error of the isolated strut against the closed form, relative to x0.

    The default mass is the sprung share one front strut carries at rest.
    """
    if mass is None:
        mass = params.sprung_share_front
    displacement = 0.01
    _, simulated, exact = quarter_car_response(params, mass, displacement)
    error = float(np.max(np.abs(simulated - exact))) / displacement
    return CheckResult("quarter-car oracle", error < QUARTER_CAR_TOLERANCE,
                       f"max error {error * 100:.2f}% of the initial displacement (mass {mass:g} kg)")


def energy_series(params: RoverParameters, mode=SuspensionMode.MHS, drop: float = 0.05,
                  duration: float = 2.0) -> np.ndarray:
    """Total energy per step of an undamped, frictionless drop onto flat ground.

    Each configuration is paired with the velocities synchronized to it.
    """
    params = params.with_overrides(damping=0.0, contact_damping=0.0)
    scene = TerrainScene(soil_friction=0.0)
    state = static_equilibrium(params, mode).to_state()
    state.chassis_position[2] += drop
    command = DriveCommand(0.0)
    energies = []
    for _ in range(int(round(duration / params.dt))):
        after, _ = step_with_report(state, params, mode, scene, command)
        energies.append(total_energy(midstep_state(state, after), params, mode, scene))
        state = after
    return np.array(energies)


def energy_ledger(params: RoverParameters, mode=SuspensionMode.MHS) -> CheckResult:
    energies = energy_series(params, mode)
    drift = float(np.max(np.abs(energies - energies[0]))) / abs(energies[0])
    return CheckResult(f"energy ledger ({SuspensionMode.parse(mode).value})",
                       drift < ENERGY_DRIFT_TOLERANCE,
                       f"max drift {drift * 100:.3f}% over 2 s (E0 = {energies[0]:.3f} J)")


def static_load_check(params: RoverParameters, mode=SuspensionMode.MHS, duration: float = 1.0) -> CheckResult:
    """Normal forces of a rover left at rest: total weight and front/rear split."""
    scene = TerrainScene()
    state = static_equilibrium(params, mode).to_state()
    simulator = RoverSimulator(params, mode, scene, DriveCommand(0.0), state)
    last = {}
    simulator.on_step = lambda s, report: last.update(report=report)
    simulator.run(duration)
    loads = last['report'].normal_forces
    total = params.total_mass * params.gravity
    sum_error = abs(loads.sum() - total) / total
    expected = np.array([params.front_static_load] * 2 + [params.rear_static_load] * 2) * params.gravity
    split_error = float(np.max(np.abs(loads - expected) / expected))
    passed = sum_error < LOAD_SUM_TOLERANCE and split_error < LOAD_SPLIT_TOLERANCE
    return CheckResult("static load split", passed,
                       f"sum {loads.sum():.2f} N (expected {total:.2f} N), "
                       f"per-wheel {', '.join(f'{v:.2f}' for v in loads)} N")


def settle_check(params: RoverParameters, mode=SuspensionMode.MHS, drop: float = 0.05,
                 duration: float = 10.0) -> CheckResult:
    """A drop onto flat ground settles onto the analytic static equilibrium."""
    scene = TerrainScene()
    equilibrium = static_equilibrium(params, mode)
    state = equilibrium.to_state()
    state.chassis_position[2] += drop
    final = RoverSimulator(params, mode, scene, DriveCommand(0.0), state).run(duration)
    height_error = abs(final.chassis_position[2] - equilibrium.chassis_height)
    travel_error = float(np.max(np.abs(final.strut_travel - np.array(equilibrium.strut_travel))))
    error = max(height_error, travel_error)
    return CheckResult("drop settles to equilibrium", error < SETTLE_TOLERANCE,
                       f"max deviation {error * 1000:.3f} mm after {duration:g} s")


def tipover_check(params: RoverParameters) -> CheckResult:
    longitudinal, lateral = static_tipover_angles(params)
    passed = all(0 < angle < math.pi / 2 for angle in (longitudinal, lateral))
    return CheckResult("static tip-over bounds", passed,
                       f"longitudinal {math.degrees(longitudinal):.1f} deg, "
                       f"lateral {math.degrees(lateral):.1f} deg (rigid, gravity-independent)")


def run_checks(params: RoverParameters, mode=SuspensionMode.MHS) -> List[CheckResult]:
    """Run the whole invariant suite and log each result."""
    results = [
        quarter_car_oracle(params),
        energy_ledger(params, mode),
        static_load_check(params, mode),
        settle_check(params, mode),
        tipover_check(params),
    ]
    for result in results:
        (logger.info if result.passed else logger.warning)("%s", result)
    return results
