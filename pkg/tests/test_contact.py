import numpy as np
import pytest

from contact import resolve_contact


def test_touching_wheel_has_no_contact(rover_params, flat_scene):
    assert resolve_contact((0.0, 0.0, 0.1), np.zeros(3), flat_scene, rover_params) is None


def test_penalty_normal_force(rover_params, flat_scene):
    cp = resolve_contact((0.0, 0.0, 0.099), np.zeros(3), flat_scene, rover_params, wheel_id="FL")
    assert cp.wheel_id == "FL"
    assert cp.penetration == pytest.approx(0.001)
    assert cp.normal_force == pytest.approx(100.0)
    assert np.allclose(cp.friction_force, 0.0)


def test_coulomb_saturation(rover_params, flat_scene):
    cp = resolve_contact((0.0, 0.0, 0.1 - 1e-4), (1.0, 0.0, 0.0), flat_scene, rover_params)
    assert cp.normal_force == pytest.approx(10.0)
    assert cp.friction == 0.4
    assert np.linalg.norm(cp.friction_force) == pytest.approx(4.0, rel=1e-6)
    assert cp.friction_force[0] < 0


def test_separating_wheel_never_pulls(rover_params, flat_scene):
    cp = resolve_contact((0.0, 0.0, 0.1 - 1e-4), (0.0, 0.0, 1.0), flat_scene, rover_params)
    assert cp.normal_force == 0.0
    assert np.allclose(cp.total_force, 0.0)


def test_rolling_wheel_barely_slips(rover_params, flat_scene):
    speed = 0.5
    spin = np.array([0.0, speed / rover_params.wheel_radius, 0.0])
    cp = resolve_contact((0.0, 0.0, 0.1 - 1e-4), (speed, 0.0, 0.0), flat_scene, rover_params,
                         spin_vector=spin)
    assert cp.slip_speed < 1e-3


def test_friction_clamped_for_slow_slip(rover_params, flat_scene):
    cp = resolve_contact((0.0, 0.0, 0.09), (1e-5, 0.0, 0.0), flat_scene, rover_params)
    limit = rover_params.unsprung_mass * 1e-5 / rover_params.dt
    assert np.linalg.norm(cp.friction_force) <= limit + 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("kind, parameter", [("rock", 0.1), ("outcrop", 0.1), ("step", 0.05)])
def test_friction_stays_inside_the_cone_on_traces(kind, parameter):
    from scenario import ScenarioSpec, run_scenario

    trace, _ = run_scenario(ScenarioSpec(kind=kind, parameter=parameter, speed=1.0, mode="MHS"))
    fn, ft, mu = trace.per_wheel('fn'), trace.per_wheel('ft'), trace.per_wheel('mu')
    assert np.all(ft <= mu * fn + 1e-9)
    assert fn.max() > 0.0


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["DR", "IE", "MHS"])
def test_wheels_roll_without_slip_at_cruise(mode):
    from scenario import ScenarioSpec, run_scenario

    trace, _ = run_scenario(ScenarioSpec(kind="flat", parameter=0.0, speed=0.5, mode=mode))
    cruising = np.abs(trace.forward_speed() - 0.5) <= 0.02 * 0.5
    assert cruising.any()
    assert np.all(trace.per_wheel('slip')[cruising] < 0.02)
