import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from checks import (
    damped_oscillator,
    energy_ledger,
    energy_series,
    quarter_car_oracle,
    quarter_car_response,
    settle_check,
    static_load_check,
    tipover_check,
)
from metrics import summarize
from scenario import ScenarioSpec, run_scenario
from suspension import SuspensionMode


@pytest.mark.parametrize("mass", [3.3, 19.6, 30.0])
def test_closed_form_matches_numerical_ode(rover_params, mass):
    k, c = rover_params.spring_rate, rover_params.damping
    t = np.linspace(0.0, 3.0, 301)
    solution = solve_ivp(lambda _, y: [y[1], (-k * y[0] - c * y[1]) / mass], (0.0, 3.0), [-0.01, 0.0],
                         t_eval=t, rtol=1e-10, atol=1e-12)
    assert np.allclose(damped_oscillator(t, -0.01, k, c, mass), solution.y[0], atol=1e-8)


def test_critically_damped_closed_form():
    t = np.array([0.0, 0.5, 1.0])
    # k = 4, c = 4, m = 1: omega_n = 2, zeta = 1
    expected = 0.01 * (1 + 2 * t) * np.exp(-2 * t)
    assert np.allclose(damped_oscillator(t, 0.01, 4.0, 4.0, 1.0), expected)


def test_quarter_car_oracle(rover_params):
    result = quarter_car_oracle(rover_params)
    assert result.passed, str(result)
    assert "mass 3.3 kg" in result.detail


def test_quarter_car_heavier_mass(rover_params):
    time, simulated, exact = quarter_car_response(rover_params, 30.0)
    assert simulated.shape == exact.shape == time.shape
    assert np.max(np.abs(simulated - exact)) < 0.02 * 0.01


def test_quarter_car_starts_compressed_and_relaxes(rover_params):
    _, simulated, _ = quarter_car_response(rover_params, rover_params.sprung_share_front, duration=1.0)
    assert simulated[0] == pytest.approx(-0.01, abs=1e-4)
    assert abs(simulated[-1]) < 0.01


def test_static_loads_split_by_axle(rover_params):
    result = static_load_check(rover_params)
    assert result.passed, str(result)


def test_tipover_bounds(rover_params):
    result = tipover_check(rover_params)
    assert result.passed
    assert "50.2" in result.detail


def test_energy_series_has_one_sample_per_step(rover_params):
    energies = energy_series(rover_params, SuspensionMode.MHS, duration=0.05)
    assert energies.shape == (50,)
    assert np.all(np.isfinite(energies))


@pytest.mark.slow
@pytest.mark.parametrize("mode", list(SuspensionMode))
def test_energy_ledger(rover_params, mode):
    result = energy_ledger(rover_params, mode)
    assert result.passed, str(result)


@pytest.mark.slow
def test_drop_settles_to_equilibrium(rover_params):
    result = settle_check(rover_params, SuspensionMode.MHS)
    assert result.passed, str(result)


@pytest.mark.slow
@pytest.mark.parametrize("kind, parameter", [
    ("rock", 0.1),
    ("outcrop", 0.1),
    ("slope", math.radians(20)),
])
@pytest.mark.parametrize("mode", list(SuspensionMode))
def test_halving_the_timestep_converges(rover_params, kind, parameter, mode):
    values = []
    for dt in (rover_params.dt, rover_params.dt / 2):
        spec = ScenarioSpec(kind=kind, parameter=parameter, speed=1.0, mode=mode)
        trace, _ = run_scenario(spec, rover_params.with_overrides(dt=dt))
        values.append(summarize(trace))
    for metric in ('f_max', 't_max', 'acc_max'):
        coarse, fine = getattr(values[0], metric), getattr(values[1], metric)
        assert abs(coarse - fine) <= 0.05 * abs(fine), metric
