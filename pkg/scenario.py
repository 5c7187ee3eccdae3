"""Obstacle negotiation and gradeability scenarios: construction, runs and outcome rules."""

import logging
import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional

import numpy as np

from config import (
    DEFAULT_APPROACH_DISTANCE,
    DEFAULT_CONTACT_FRACTION,
    DEFAULT_FLAT_RUN_DISTANCE,
    DEFAULT_GRAVITY,
    DEFAULT_OBSTACLE_FRICTION,
    DEFAULT_OUTCROP_LENGTH,
    DEFAULT_OUTCROP_MAX_HEIGHT,
    DEFAULT_OUTCROP_TAPER,
    DEFAULT_OUTCROP_WIDTH,
    DEFAULT_ROCK_RADIUS,
    DEFAULT_SEED,
    DEFAULT_SLOPE_LENGTH,
    DEFAULT_SOIL_FRICTION,
    DEFAULT_STALL_SPEED,
    DEFAULT_STALL_TIME,
    DEFAULT_TIMEOUT,
    DEFAULT_TIPOVER_ANGLE,
    MAX_SPEED,
    MIN_SPEED,
    TIMEOUT_TRAVEL_MARGIN,
)
from dynamics import DriveCommand, NonFiniteStateError, RoverSimulator, attachment_points, chassis_roll_pitch
from rover_parameters import RoverParameters
from rover_state import RoverState
from sim_trace import SimulationTrace, TraceRecorder
from suspension import SuspensionMode, static_equilibrium
from terrain import Hemisphere, Outcrop, Slope, Step, TerrainScene

logger = logging.getLogger(__name__)

# Geometry limits accepted by build_scenario, m / rad
MAX_STEP_HEIGHT = 0.5
MAX_ROCK_RADIUS = 0.5
MAX_OUTCROP_HEIGHT = 0.5
MAX_SLOPE_ANGLE = math.radians(60.0)

_FRONT = np.array([True, True, False, False])
_REAR = ~_FRONT


class InvalidSpecError(ValueError):
    """Raised for a scenario spec with out-of-range geometry, speed or timeout."""


class ScenarioKind(str, Enum):
    STEP = "step"
    ROCK = "rock"
    OUTCROP = "outcrop"
    SLOPE = "slope"
    FLAT = "flat"


class Verdict(str, Enum):
    SUCCESS = "success"
    SEMI = "semi"
    FAILURE = "failure"


@dataclass(frozen=True)
class TerrainSettings:
    """Feature dimensions and friction shared by every scenario of a sweep."""
    soil_friction: float = DEFAULT_SOIL_FRICTION
    obstacle_friction: float = DEFAULT_OBSTACLE_FRICTION
    rock_radius: float = DEFAULT_ROCK_RADIUS
    outcrop_length: float = DEFAULT_OUTCROP_LENGTH
    outcrop_max_height: float = DEFAULT_OUTCROP_MAX_HEIGHT
    outcrop_width: float = DEFAULT_OUTCROP_WIDTH
    outcrop_taper: float = DEFAULT_OUTCROP_TAPER
    slope_length: float = DEFAULT_SLOPE_LENGTH
    approach_distance: float = DEFAULT_APPROACH_DISTANCE

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ValueError(f"{f.name} must be a finite number")
            if value < 0 or (value == 0 and f.name not in ('soil_friction', 'obstacle_friction', 'outcrop_taper')):
                raise ValueError(f"{f.name} must be positive")
        if self.outcrop_taper > self.outcrop_width / 2:
            raise ValueError("outcrop_taper must not exceed half the outcrop width")


@dataclass(frozen=True)
class ScenarioRules:
    """Termination and classification thresholds."""
    timeout: float = DEFAULT_TIMEOUT
    stall_speed: float = DEFAULT_STALL_SPEED
    stall_time: float = DEFAULT_STALL_TIME
    tipover_angle: float = DEFAULT_TIPOVER_ANGLE
    contact_fraction: float = DEFAULT_CONTACT_FRACTION
    flat_run_distance: float = DEFAULT_FLAT_RUN_DISTANCE

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.stall_speed < 0 or self.stall_time <= 0:
            raise ValueError("stall_speed must be non-negative and stall_time positive")
        if not (0 < self.tipover_angle <= math.pi / 2):
            raise ValueError("tipover_angle must be within (0, 90] degrees")
        if not (0 < self.contact_fraction <= 1):
            raise ValueError("contact_fraction must be within (0, 1]")
        if self.flat_run_distance <= 0:
            raise ValueError("flat_run_distance must be positive")


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell.

    `parameter` is the step height (m), rock radius (m), outcrop peak height (m) or
    slope angle (rad); it is ignored for a flat run.
    """
    kind: ScenarioKind
    parameter: float
    speed: float
    mode: SuspensionMode = SuspensionMode.MHS
    gravity: float = DEFAULT_GRAVITY
    timeout: float = DEFAULT_TIMEOUT
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', ScenarioKind(self.kind))
            object.__setattr__(self, 'mode', SuspensionMode.parse(self.mode))
        except ValueError as e:
            raise InvalidSpecError(str(e)) from None
        if not (MIN_SPEED <= self.speed <= MAX_SPEED):
            raise InvalidSpecError(f"speed {self.speed} m/s outside [{MIN_SPEED}, {MAX_SPEED}]")
        if not self.timeout > 0:
            raise InvalidSpecError("timeout must be positive")
        if not (math.isfinite(self.gravity) and self.gravity >= 0):
            raise InvalidSpecError("gravity must be finite and non-negative")
        limits = {
            ScenarioKind.STEP: MAX_STEP_HEIGHT,
            ScenarioKind.ROCK: MAX_ROCK_RADIUS,
            ScenarioKind.OUTCROP: MAX_OUTCROP_HEIGHT,
            ScenarioKind.SLOPE: MAX_SLOPE_ANGLE,
        }
        if self.kind in limits and not (0 < self.parameter <= limits[self.kind]):
            raise InvalidSpecError(
                f"{self.kind.value} parameter {self.parameter} outside (0, {limits[self.kind]:g}]"
            )

    @property
    def label(self) -> str:
        """Scenario name without speed and mode: 'step:5', 'slope:20', 'rock', ..."""
        if self.kind is ScenarioKind.STEP:
            return f"step:{round(self.parameter * 100, 3):g}"
        if self.kind is ScenarioKind.SLOPE:
            return f"slope:{round(math.degrees(self.parameter), 3):g}"
        return self.kind.value

    @property
    def row_value(self) -> float:
        """Heatmap row coordinate: step height in cm or slope angle in degrees."""
        if self.kind is ScenarioKind.SLOPE:
            return round(math.degrees(self.parameter), 3)
        return round(self.parameter * 100, 3)

    @property
    def key(self) -> str:
        return f"{self.label}|{self.mode.value}|{self.speed:.2f}"

    @property
    def sort_key(self):
        order = list(ScenarioKind).index(self.kind)
        return (order, self.parameter, self.mode.value, self.speed)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'parameter': self.parameter,
            'speed': self.speed,
            'mode': self.mode.value,
            'gravity': self.gravity,
            'timeout': self.timeout,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ScenarioSpec':
        try:
            return cls(**data)
        except (KeyError, TypeError) as e:
            raise ValueError(f"Invalid scenario spec data: {e}") from e


@dataclass(frozen=True)
class ScenarioOutcome:
    verdict: Verdict
    reason: str
    termination_time: float

    def to_dict(self) -> dict:
        return {'verdict': self.verdict.value, 'reason': self.reason,
                'termination_time': self.termination_time}

    @classmethod
    def from_dict(cls, data: dict) -> 'ScenarioOutcome':
        try:
            return cls(Verdict(data['verdict']), data['reason'], float(data['termination_time']))
        except (KeyError, TypeError) as e:
            raise ValueError(f"Invalid outcome data: {e}") from e


def scenario_parameters(spec: ScenarioSpec, params: Optional[RoverParameters] = None) -> RoverParameters:
    """Rover parameters for a spec: the given set with the spec's gravity."""
    params = params or RoverParameters()
    if params.gravity != spec.gravity:
        params = params.with_overrides(gravity=spec.gravity)
    return params


def build_scenario(spec: ScenarioSpec, params: Optional[RoverParameters] = None,
                   terrain: Optional[TerrainSettings] = None):
    """Build the terrain scene and the initial rover state for a spec.

    The rover rests at static equilibrium with its front wheel centres
    `approach_distance` before the leading edge of the feature, already moving at the
    commanded speed. Rock and outcrop sit on the left wheel track.

    Returns:
        (TerrainScene, RoverState)
    """
    params = scenario_parameters(spec, params)
    terrain = terrain or TerrainSettings()
    state = static_equilibrium(params, spec.mode).to_state(x=0.0, speed=spec.speed)
    front_x = float(attachment_points(state, params).wheel_centers[_FRONT, 0].max())
    lead_x = front_x + terrain.approach_distance
    left_track = params.wheel_track / 2

    if spec.kind is ScenarioKind.STEP:
        feature = Step(face_x=lead_x, height=spec.parameter, friction=terrain.obstacle_friction)
    elif spec.kind is ScenarioKind.ROCK:
        feature = Hemisphere(center_x=lead_x + spec.parameter, center_y=left_track,
                             radius=spec.parameter, friction=terrain.obstacle_friction)
    elif spec.kind is ScenarioKind.OUTCROP:
        feature = Outcrop(start_x=lead_x, length=terrain.outcrop_length, max_height=spec.parameter,
                          seed=spec.seed, center_y=left_track, width=terrain.outcrop_width,
                          taper=terrain.outcrop_taper, friction=terrain.obstacle_friction)
    elif spec.kind is ScenarioKind.SLOPE:
        feature = Slope(start_x=lead_x, length=terrain.slope_length, angle=spec.parameter,
                        friction=terrain.soil_friction)
    else:
        feature = None

    try:
        scene = TerrainScene(features=(feature,) if feature is not None else (),
                             soil_friction=terrain.soil_friction)
    except ValueError as e:
        raise InvalidSpecError(str(e)) from e
    logger.debug("Built %s: feature %s, rover front at x=%.3f", spec.key, feature, front_x)
    return scene, state


def goal_x(feature, wheel_radius: float) -> float:
    """x every wheel centre must pass for the feature to count as negotiated."""
    if isinstance(feature, Slope):
        return feature.crest_x
    return feature.end_x + wheel_radius


def _tipover_index(trace: SimulationTrace, rules: ScenarioRules) -> int:
    """Index of the first tipped-over sample, or len(trace)."""
    roll, pitch = trace.roll_pitch()
    tipped = np.flatnonzero((np.abs(roll) > rules.tipover_angle) | (np.abs(pitch) > rules.tipover_angle))
    return int(tipped[0]) if tipped.size else len(trace)


def _stall_index(trace: SimulationTrace, rules: ScenarioRules) -> int:
    """Index at which forward speed has stayed below the stall speed for stall_time."""
    t = trace.time
    slow = trace.forward_speed() < rules.stall_speed
    since = None
    for i in range(len(t)):
        if slow[i]:
            if since is None:
                since = t[i]
            if t[i] - since >= rules.stall_time - 1e-9:
                return i
        else:
            since = None
    return len(t)


def _failure_reason(trace: SimulationTrace, rules: ScenarioRules) -> str:
    if _tipover_index(trace, rules) < len(trace):
        return "tip-over"
    if _stall_index(trace, rules) < len(trace):
        return "stall"
    return "timeout"


def _empty_outcome() -> ScenarioOutcome:
    return ScenarioOutcome(Verdict.FAILURE, "no samples", 0.0)


def classify_obstacle_outcome(trace: SimulationTrace, feature, rules: Optional[ScenarioRules] = None) -> ScenarioOutcome:
    """Step-rule classification against the far edge of a step, rock or outcrop.

    Success: every wheel centre passes the goal before any tip-over.
    SemiSuccess: only both front wheels do. Failure otherwise.
    """
    rules = rules or ScenarioRules()
    if len(trace) == 0:
        return _empty_outcome()
    end = _tipover_index(trace, rules)
    target = goal_x(feature, trace.wheel_radius)
    passed = (trace.per_wheel('wheel_x')[:end] >= target).any(axis=0) if end else np.zeros(4, bool)
    duration = trace.duration
    if passed.all():
        return ScenarioOutcome(Verdict.SUCCESS, "all wheels cleared the obstacle", duration)
    if passed[_FRONT].all():
        return ScenarioOutcome(Verdict.SEMI, "only the front wheels cleared the obstacle", duration)
    return ScenarioOutcome(Verdict.FAILURE, _failure_reason(trace, rules), duration)


def classify_step_outcome(trace: SimulationTrace, feature: Step, rules: Optional[ScenarioRules] = None) -> ScenarioOutcome:
    """Classify a step run: goal is face_x + wheel_radius."""
    return classify_obstacle_outcome(trace, feature, rules)


def climb_contact_fractions(trace: SimulationTrace, feature: Slope) -> np.ndarray:
    """Per-wheel share of climb samples (start_x <= wheel x < crest_x) spent in contact."""
    wheel_x = trace.per_wheel('wheel_x')
    contact = trace.per_wheel('contact') > 0.5
    on_ramp = (wheel_x >= feature.start_x) & (wheel_x < feature.crest_x)
    counts = on_ramp.sum(axis=0)
    touching = (on_ramp & contact).sum(axis=0)
    return np.where(counts > 0, touching / np.maximum(counts, 1), 0.0)


def classify_slope_outcome(trace: SimulationTrace, feature: Slope, rules: Optional[ScenarioRules] = None) -> ScenarioOutcome:
    """Classify a slope run.

    The crest counts as reached once both rear wheel centres are at the crest.
    Success: crest reached with every wheel's climb contact fraction at or above the
    threshold. SemiSuccess: crest reached otherwise. Failure: crest not reached before
    tip-over, stall or timeout.
    """
    rules = rules or ScenarioRules()
    if len(trace) == 0:
        return _empty_outcome()
    end = _tipover_index(trace, rules)
    wheel_x = trace.per_wheel('wheel_x')[:end]
    reached = end > 0 and bool((wheel_x[:, _REAR] >= feature.crest_x).all(axis=1).any())
    duration = trace.duration
    if not reached:
        return ScenarioOutcome(Verdict.FAILURE, _failure_reason(trace, rules), duration)
    fractions = climb_contact_fractions(trace, feature)
    if (fractions >= rules.contact_fraction).all():
        return ScenarioOutcome(Verdict.SUCCESS, "crest reached with full contact", duration)
    if (fractions[_REAR] >= rules.contact_fraction).all():
        return ScenarioOutcome(Verdict.SEMI, "crest reached, only the rear wheels kept full contact", duration)
    return ScenarioOutcome(Verdict.SEMI, "crest reached with partial contact", duration)


def classify_flat_outcome(trace: SimulationTrace, rules: Optional[ScenarioRules] = None) -> ScenarioOutcome:
    """Success once the chassis has covered the flat-run distance without tipping over."""
    rules = rules or ScenarioRules()
    if len(trace) == 0:
        return _empty_outcome()
    end = _tipover_index(trace, rules)
    x = trace.column('x')
    covered = end > 0 and float(x[:end].max() - x[0]) >= rules.flat_run_distance
    if covered:
        return ScenarioOutcome(Verdict.SUCCESS, "flat distance covered", trace.duration)
    return ScenarioOutcome(Verdict.FAILURE, _failure_reason(trace, rules), trace.duration)


def classify_outcome(spec: ScenarioSpec, scene: TerrainScene, trace: SimulationTrace,
                     rules: Optional[ScenarioRules] = None) -> ScenarioOutcome:
    """Dispatch to the classification rule of the spec's kind."""
    feature = scene.primary_feature
    if spec.kind is ScenarioKind.FLAT or feature is None:
        return classify_flat_outcome(trace, rules)
    if spec.kind is ScenarioKind.SLOPE:
        return classify_slope_outcome(trace, feature, rules)
    if spec.kind is ScenarioKind.STEP:
        return classify_step_outcome(trace, feature, rules)
    return classify_obstacle_outcome(trace, feature, rules)


class _RunMonitor:
    """Stops a simulator once the outcome can no longer change."""

    def __init__(self, simulator: RoverSimulator, spec: ScenarioSpec, scene: TerrainScene,
                 rules: ScenarioRules):
        self.simulator = simulator
        self.rules = rules
        self.reason = None
        feature = scene.primary_feature
        if spec.kind is ScenarioKind.FLAT or feature is None:
            self._goal = None
            self._distance_goal = math.nan
        else:
            self._goal = goal_x(feature, simulator.params.wheel_radius)
            self._distance_goal = None
        self._slope = spec.kind is ScenarioKind.SLOPE
        self._slow_since = None

    def __call__(self, state: RoverState, report):
        wheel_x = report.wheel_centers[:, 0]
        if self._distance_goal is not None:
            if math.isnan(self._distance_goal):
                # Measured from the first recorded sample, as the classifier does
                self._distance_goal = state.chassis_position[0] + self.rules.flat_run_distance
            done = state.chassis_position[0] >= self._distance_goal
        elif self._slope:
            done = bool((wheel_x[_REAR] >= self._goal).all())
        else:
            done = bool((wheel_x >= self._goal).all())
        if done:
            return self._finish("goal reached")
        roll, pitch = chassis_roll_pitch(state)
        if max(abs(roll), abs(pitch)) > self.rules.tipover_angle:
            return self._finish("tip-over")
        rot_x = _body_forward(state.chassis_orientation)
        if float(rot_x @ state.chassis_linear_velocity) < self.rules.stall_speed:
            if self._slow_since is None:
                self._slow_since = state.time
            if state.time - self._slow_since >= self.rules.stall_time - 1e-9:
                return self._finish("stall")
        else:
            self._slow_since = None

    def _finish(self, reason: str):
        self.reason = reason
        self.simulator.stop()


def _body_forward(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)])


def effective_timeout(spec: ScenarioSpec, scene: TerrainScene, state: RoverState,
                      params: RoverParameters, rules: ScenarioRules) -> float:
    """Run time limit: the configured timeout, extended for slow long traverses."""
    feature = scene.primary_feature
    if spec.kind is ScenarioKind.FLAT or feature is None:
        travel = rules.flat_run_distance
    else:
        rear_x = float(attachment_points(state, params).wheel_centers[_REAR, 0].min())
        travel = goal_x(feature, params.wheel_radius) - rear_x
    return max(spec.timeout, TIMEOUT_TRAVEL_MARGIN * travel / spec.speed)


def run_scenario(spec: ScenarioSpec, params: Optional[RoverParameters] = None,
                 terrain: Optional[TerrainSettings] = None, rules: Optional[ScenarioRules] = None):
    """Simulate a spec until its outcome is decided or the timeout expires.

    Numerical blow-ups end the run as a Failure with reason "numerical instability".

    Returns:
        (SimulationTrace, ScenarioOutcome)
    """
    params = scenario_parameters(spec, params)
    rules = rules or ScenarioRules(timeout=spec.timeout)
    scene, state = build_scenario(spec, params, terrain)
    simulator = RoverSimulator(params, spec.mode, scene, DriveCommand(spec.speed), state)
    recorder = TraceRecorder(params.dt, spec.mode.value, params.wheel_radius, params.gravity)
    monitor = _RunMonitor(simulator, spec, scene, rules)

    def on_step(new_state, report):
        recorder.record(new_state, report)
        monitor(new_state, report)

    simulator.on_step = on_step
    limit = effective_timeout(spec, scene, state, params, rules)
    try:
        simulator.run(limit)
    except NonFiniteStateError as e:
        logger.warning("%s: numerical instability at t=%.3f s", spec.key, e.time)
        trace = recorder.build()
        return trace, ScenarioOutcome(Verdict.FAILURE, "numerical instability", e.time)

    trace = recorder.build()
    outcome = classify_outcome(spec, scene, trace, rules)
    logger.debug("%s finished after %.2f s (%s): %s", spec.key, trace.duration,
                 monitor.reason or "timeout", outcome.verdict.value)
    return trace, outcome
