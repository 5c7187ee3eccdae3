import numpy as np
import pytest

import quaternion
from dynamics import (
    DriveCommand,
    NonFiniteStateError,
    RoverSimulator,
    attachment_points,
    chassis_roll_pitch,
    midstep_state,
    step,
    step_with_report,
    strut_update,
    total_energy,
)
from rover_parameters import RoverParameters
from rover_state import RoverState
from scenario import ScenarioKind, ScenarioSpec, build_scenario
from suspension import SuspensionMode, static_equilibrium

Y_AXIS = (0.0, 1.0, 0.0)


def _level_state(params, **changes):
    eq = static_equilibrium(params)
    values = dict(chassis_position=(0.0, 0.0, 0.3), strut_travel=eq.strut_travel)
    values.update(changes)
    return RoverState(**values)


class TestAttachmentPoints:
    def test_level_geometry(self, rover_params):
        kin = attachment_points(_level_state(rover_params), rover_params)
        offsets = kin.knuckles - kin.pivots
        assert np.allclose(offsets[:, 0], [0.3, 0.3, -0.3, -0.3])
        assert np.allclose(offsets[:, 1:], 0.0)
        assert np.allclose(kin.wheel_centers[:, 1], [0.235, -0.235, 0.235, -0.235])

    def test_rocker_rotates_sides_oppositely(self, rover_params):
        base = attachment_points(_level_state(rover_params), rover_params)
        kin = attachment_points(_level_state(rover_params, rocker_angle=0.1), rover_params)
        left = quaternion.to_matrix(quaternion.from_axis_angle(Y_AXIS, 0.1))
        right = quaternion.to_matrix(quaternion.from_axis_angle(Y_AXIS, -0.1))
        for i, rot in zip(range(4), (left, right, left, right)):
            expected = rot @ (base.knuckles[i] - base.pivots[i])
            assert np.allclose(kin.knuckles[i] - kin.pivots[i], expected)

    def test_translation_equivariance(self, rover_params):
        state = _level_state(rover_params, rocker_angle=0.05)
        moved = state.copy()
        moved.chassis_position = moved.chassis_position + np.array([1.0, 0.0, 0.0])
        a = attachment_points(state, rover_params)
        b = attachment_points(moved, rover_params)
        assert np.allclose(b.wheel_centers - a.wheel_centers, [1.0, 0.0, 0.0])

    def test_rocker_jacobian_matches_finite_difference(self, rover_params):
        q = quaternion.from_axis_angle((0.3, 1.0, 0.2), 0.2)
        eps = 1e-7
        plus = attachment_points(_level_state(rover_params, chassis_orientation=q, rocker_angle=0.1 + eps),
                                 rover_params)
        minus = attachment_points(_level_state(rover_params, chassis_orientation=q, rocker_angle=0.1 - eps),
                                  rover_params)
        kin = attachment_points(_level_state(rover_params, chassis_orientation=q, rocker_angle=0.1), rover_params)
        numeric = (plus.knuckles - minus.knuckles) / (2 * eps)
        assert np.allclose(kin.knuckle_rocker_jacobian, numeric, atol=1e-6)


class TestStep:
    @pytest.mark.parametrize("mode", list(SuspensionMode))
    def test_equilibrium_is_a_fixed_point(self, rover_params, flat_scene, mode):
        state = static_equilibrium(rover_params, mode).to_state()
        current = state
        for _ in range(10):
            current = step(current, rover_params, mode, flat_scene, DriveCommand(0.0))
        assert np.allclose(current.chassis_position, state.chassis_position, atol=1e-6)
        assert np.allclose(current.strut_travel, state.strut_travel, atol=1e-6)
        assert abs(current.rocker_angle) <= 1e-6
        assert np.allclose(current.chassis_orientation, state.chassis_orientation, atol=1e-6)

    def test_free_body_translates_uniformly(self, flat_scene):
        params = RoverParameters(gravity=0.0, damping=0.0)
        velocity = np.array([1.0, 0.5, 0.0])
        state = RoverState(chassis_position=(0.0, 0.0, 10.0), chassis_linear_velocity=velocity,
                           strut_travel=np.full(4, params.spring_free_length))
        energy = total_energy(state, params, SuspensionMode.MHS, flat_scene)
        current = state
        for _ in range(200):
            current = step(current, params, SuspensionMode.MHS, flat_scene, DriveCommand(0.0))
        assert np.allclose(current.chassis_position, state.chassis_position + velocity * 0.2, atol=1e-9)
        assert np.allclose(current.chassis_linear_velocity, velocity)
        assert total_energy(current, params, SuspensionMode.MHS, flat_scene) == pytest.approx(energy)

    def test_free_fall_reads_lunar_gravity(self, rover_params, flat_scene):
        state = RoverState(chassis_position=(0.0, 0.0, 5.0),
                           strut_travel=np.full(4, rover_params.spring_free_length))
        _, report = step_with_report(state, rover_params, SuspensionMode.MHS, flat_scene, DriveCommand(0.0))
        assert report.vertical_acceleration == pytest.approx(-0.166, abs=1e-3)
        assert all(c is None for c in report.contacts)

    def test_wheel_spin_follows_command(self, rover_params, flat_scene):
        state = static_equilibrium(rover_params).to_state(speed=0.5)
        new = step(state, rover_params, SuspensionMode.MHS, flat_scene, DriveCommand(0.5))
        assert np.allclose(new.wheel_spin_angle, 0.5 / 0.1 * rover_params.dt)
        assert new.time == pytest.approx(rover_params.dt)

    def test_non_finite_state_raises(self, rover_params, flat_scene):
        state = static_equilibrium(rover_params).to_state()
        state.chassis_linear_velocity[0] = np.nan
        with pytest.raises(NonFiniteStateError):
            step(state, rover_params, SuspensionMode.MHS, flat_scene, DriveCommand(0.0))

    def test_resting_loads(self, rover_params, flat_scene):
        state = static_equilibrium(rover_params).to_state()
        _, report = step_with_report(state, rover_params, SuspensionMode.MHS, flat_scene, DriveCommand(0.0))
        assert report.normal_forces[0] == pytest.approx(7.8, rel=1e-3)
        assert report.normal_forces.sum() == pytest.approx(19.6 * 1.625, rel=1e-3)
        assert report.strut_force[0] == pytest.approx(3.3 * 1.625, rel=1e-3)

    def test_attachment_loads_include_the_wheel(self, rover_params, flat_scene):
        state = static_equilibrium(rover_params).to_state()
        _, report = step_with_report(state, rover_params, SuspensionMode.MHS, flat_scene, DriveCommand(0.0))
        assert np.allclose(report.vertical_load, [7.8, 7.8, 8.125, 8.125], rtol=1e-3)

    @pytest.mark.parametrize("mode", ["DR", "MHS"])
    def test_resting_pivot_torque_is_shared(self, rover_params, flat_scene, mode):
        state = static_equilibrium(rover_params, mode).to_state()
        _, report = step_with_report(state, rover_params, mode, flat_scene, DriveCommand(0.0))
        assert report.pivot_torque[0] == pytest.approx(report.pivot_torque[1], abs=1e-9)


def test_strut_update_moves_the_wheel_first():
    travel, rate = strut_update(np.array([0.03]), np.array([0.0]), np.array([0.1]),
                                np.array([-3.0]), mass=1.5, dt=0.01)
    # wheel reaches -0.02 m/s; the knuckle rises at 0.1 m/s
    assert rate[0] == pytest.approx(0.12)
    assert travel[0] == pytest.approx(0.0312)


def test_midstep_state_averages_velocities_only(rover_params):
    before = _level_state(rover_params, chassis_linear_velocity=(1.0, 0.0, 0.0), rocker_rate=0.2)
    after = before.copy()
    after.chassis_position = after.chassis_position + 0.01
    after.chassis_linear_velocity = np.array([3.0, 0.0, 0.0])
    after.rocker_rate = 0.4
    mid = midstep_state(before, after)
    assert np.array_equal(mid.chassis_position, before.chassis_position)
    assert mid.chassis_linear_velocity[0] == pytest.approx(2.0)
    assert mid.rocker_rate == pytest.approx(0.3)


def _run(spec, duration, params=None):
    params = params or RoverParameters()
    scene, state = build_scenario(spec, params)
    simulator = RoverSimulator(params, spec.mode, scene, DriveCommand(spec.speed), state)
    states = []
    simulator.on_step = lambda s, report: states.append(s)
    simulator.run(duration)
    return states


def test_locked_rocker_stays_exactly_level():
    spec = ScenarioSpec(kind=ScenarioKind.ROCK, parameter=0.1, speed=1.0, mode="IE")
    states = _run(spec, 1.6)
    assert all(s.rocker_angle == 0.0 and s.rocker_rate == 0.0 for s in states)


def test_locked_struts_keep_their_travel():
    spec = ScenarioSpec(kind=ScenarioKind.ROCK, parameter=0.1, speed=1.0, mode="DR")
    states = _run(spec, 1.6)
    initial = states[0].strut_travel
    assert all(np.array_equal(s.strut_travel, initial) for s in states)
    assert any(abs(s.rocker_angle) > 1e-3 for s in states)


def test_full_width_step_keeps_the_rover_symmetric():
    spec = ScenarioSpec(kind=ScenarioKind.STEP, parameter=0.05, speed=1.0, mode="MHS")
    states = _run(spec, 1.5)
    assert max(abs(s.rocker_angle) for s in states) <= 1e-6
    assert max(abs(s.roll_pitch()[0]) for s in states) <= 1e-6


def test_simulator_stop_from_callback(rover_params, flat_scene):
    state = static_equilibrium(rover_params).to_state()
    simulator = RoverSimulator(rover_params, "MHS", flat_scene, DriveCommand(0.0), state)

    def on_step(new_state, report):
        if simulator.steps_taken == 5:
            simulator.stop()

    simulator.on_step = on_step
    simulator.run(1.0)
    assert simulator.steps_taken == 5
    assert not simulator.is_running


def test_identical_runs_are_identical():
    spec = ScenarioSpec(kind=ScenarioKind.ROCK, parameter=0.1, speed=1.0, mode="MHS")
    a = _run(spec, 1.2)
    b = _run(spec, 1.2)
    assert np.array_equal(a[-1].chassis_position, b[-1].chassis_position)
    assert np.array_equal(a[-1].strut_travel, b[-1].strut_travel)
    assert a[-1].rocker_angle == b[-1].rocker_angle


def test_roll_pitch_of_a_pitched_chassis():
    state = RoverState(chassis_orientation=quaternion.from_axis_angle(Y_AXIS, 0.3))
    roll, pitch = chassis_roll_pitch(state)
    assert pitch == pytest.approx(0.3)
    assert roll == pytest.approx(0.0, abs=1e-12)


def test_free_differential_passes_equal_torque_to_both_sides():
    params = RoverParameters()
    spec = ScenarioSpec(kind=ScenarioKind.ROCK, parameter=0.1, speed=1.0, mode="MHS")
    scene, state = build_scenario(spec, params)
    simulator = RoverSimulator(params, spec.mode, scene, DriveCommand(spec.speed), state)
    samples = []
    simulator.on_step = lambda s, report: samples.append((s.rocker_angle, report.pivot_torque))
    simulator.run(1.2)
    free = [torque for angle, torque in samples if abs(angle) < params.rocker_limit - 0.01]
    assert max(abs(t[0]) for t in free) > 0.1
    assert all(t[0] == pytest.approx(t[1], abs=1e-9) for t in free)
