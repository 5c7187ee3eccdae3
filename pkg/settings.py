"""Simulation configuration: TOML loading, validation, overrides and hashing."""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from config import (
    DEFAULT_BASELINE_MODE,
    DEFAULT_CANDIDATE_MODE,
    DEFAULT_JOBS,
    DEFAULT_MODES,
    DEFAULT_MODULES,
    DEFAULT_SEED,
    DEFAULT_SIGMA_WINDOW,
    DEFAULT_SLOPE_ANGLES_DEG,
    DEFAULT_SPEEDS,
    DEFAULT_STEP_HEIGHTS,
    DEFAULT_TABLE_SCENARIOS,
    DEFAULT_TRACE_STRIDE,
    MAX_SPEED,
    MIN_SPEED,
    __version__,
)
from rover_parameters import ParameterError, RoverParameters
from scenario import MAX_SLOPE_ANGLE, MAX_STEP_HEIGHT, ScenarioKind, ScenarioRules, TerrainSettings
from suspension import SuspensionMode

logger = logging.getLogger(__name__)


class ConfigParseError(ValueError):
    """Raised when a configuration file is not valid TOML."""
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ConfigError(ValueError):
    """Raised when a configuration value is invalid; `key` is its dotted path."""
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class SweepSettings:
    modes: Tuple[str, ...] = DEFAULT_MODES
    speeds: Tuple[float, ...] = DEFAULT_SPEEDS
    step_heights: Tuple[float, ...] = DEFAULT_STEP_HEIGHTS
    slope_angles_deg: Tuple[float, ...] = DEFAULT_SLOPE_ANGLES_DEG
    modules: Tuple[str, ...] = DEFAULT_MODULES
    jobs: int = DEFAULT_JOBS
    trace_stride: int = DEFAULT_TRACE_STRIDE

    def __post_init__(self):
        object.__setattr__(self, 'modes', tuple(SuspensionMode.parse(m).value for m in self.modes))
        for name in ('speeds', 'step_heights', 'slope_angles_deg'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, 'modules', tuple(str(m).lower() for m in self.modules))
        if not self.modes:
            raise ValueError("modes must name at least one suspension mode")
        if not self.speeds or any(not (MIN_SPEED <= v <= MAX_SPEED) for v in self.speeds):
            raise ValueError(f"speeds must be within [{MIN_SPEED}, {MAX_SPEED}] m/s")
        if any(not (0 < h <= MAX_STEP_HEIGHT) for h in self.step_heights):
            raise ValueError(f"step_heights must be within (0, {MAX_STEP_HEIGHT}] m")
        if any(not (0 < a <= math.degrees(MAX_SLOPE_ANGLE)) for a in self.slope_angles_deg):
            raise ValueError(f"slope_angles_deg must be within (0, {math.degrees(MAX_SLOPE_ANGLE):g}]")
        known = {k.value for k in ScenarioKind}
        unknown = [m for m in self.modules if m not in known]
        if unknown:
            raise ValueError(f"modules has unknown entries {unknown} (expected {sorted(known)})")
        if isinstance(self.jobs, bool) or not isinstance(self.jobs, int) or self.jobs < 1:
            raise ValueError("jobs must be a positive integer")
        if isinstance(self.trace_stride, bool) or not isinstance(self.trace_stride, int) or self.trace_stride < 1:
            raise ValueError("trace_stride must be a positive integer")


@dataclass(frozen=True)
class MetricsSettings:
    sigma_window: float = DEFAULT_SIGMA_WINDOW

    def __post_init__(self):
        if not (isinstance(self.sigma_window, (int, float)) and self.sigma_window > 0):
            raise ValueError("sigma_window must be positive")


@dataclass(frozen=True)
class ReportSettings:
    table_scenarios: Tuple[str, ...] = DEFAULT_TABLE_SCENARIOS
    baseline: str = DEFAULT_BASELINE_MODE
    candidate: str = DEFAULT_CANDIDATE_MODE

    def __post_init__(self):
        object.__setattr__(self, 'table_scenarios', tuple(str(s) for s in self.table_scenarios))
        object.__setattr__(self, 'baseline', SuspensionMode.parse(self.baseline).value)
        object.__setattr__(self, 'candidate', SuspensionMode.parse(self.candidate).value)
        if self.baseline == self.candidate:
            raise ValueError("baseline and candidate must differ")


@dataclass(frozen=True)
class SimulationConfig:
    """Everything a run, sweep or report needs, validated."""
    rover: RoverParameters = field(default_factory=RoverParameters)
    suspension: SuspensionMode = SuspensionMode.MHS
    seed: int = DEFAULT_SEED
    terrain: TerrainSettings = field(default_factory=TerrainSettings)
    scenario: ScenarioRules = field(default_factory=ScenarioRules)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    metrics: MetricsSettings = field(default_factory=MetricsSettings)
    report: ReportSettings = field(default_factory=ReportSettings)

    def to_dict(self) -> dict:
        """Nested dictionary in the TOML layout (angles in degrees)."""
        data = dict(self.rover.to_dict())
        data['suspension'] = self.suspension.value
        data['seed'] = self.seed
        data['terrain'] = {f.name: getattr(self.terrain, f.name) for f in fields(self.terrain)}
        rules = {f.name: getattr(self.scenario, f.name) for f in fields(self.scenario)}
        rules['tipover_angle_deg'] = math.degrees(rules.pop('tipover_angle'))
        data['scenario'] = rules
        data['sweep'] = {f.name: _plain(getattr(self.sweep, f.name)) for f in fields(self.sweep)}
        data['metrics'] = {'sigma_window': self.metrics.sigma_window}
        data['report'] = {f.name: _plain(getattr(self.report, f.name)) for f in fields(self.report)}
        return data

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form; jobs does not affect results and is excluded."""
        data = self.to_dict()
        data['sweep'].pop('jobs')
        canonical = json.dumps(data, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def with_overrides(self, mode=None, gravity=None, jobs=None, seed=None) -> 'SimulationConfig':
        """Apply command-line overrides, validating them like file values."""
        config = self
        if mode is not None:
            try:
                config = replace(config, suspension=SuspensionMode.parse(mode),
                                 sweep=replace(config.sweep, modes=(SuspensionMode.parse(mode).value,)))
            except ValueError as e:
                raise ConfigError('suspension', str(e)) from e
        if gravity is not None:
            try:
                config = replace(config, rover=config.rover.with_overrides(gravity=float(gravity)))
            except ParameterError as e:
                raise ConfigError(e.key, str(e)) from e
        if jobs is not None:
            try:
                config = replace(config, sweep=replace(config.sweep, jobs=int(jobs)))
            except ValueError as e:
                raise ConfigError('sweep.jobs', str(e)) from e
        if seed is not None:
            config = replace(config, seed=int(seed))
        return config


def _plain(value):
    return list(value) if isinstance(value, tuple) else value


_ROVER_KEYS = {f.name for f in fields(RoverParameters)}
_TABLES = {
    'terrain': TerrainSettings,
    'scenario': ScenarioRules,
    'sweep': SweepSettings,
    'metrics': MetricsSettings,
    'report': ReportSettings,
}


def _build_table(name: str, cls, values):
    if not isinstance(values, dict):
        raise ConfigError(name, "must be a table")
    values = dict(values)
    if name == 'scenario' and 'tipover_angle_deg' in values:
        values['tipover_angle'] = math.radians(values.pop('tipover_angle_deg'))
    known = {f.name for f in fields(cls)}
    for key in values:
        if key not in known:
            shown = 'tipover_angle_deg' if key == 'tipover_angle' else key
            raise ConfigError(f"{name}.{shown}", "unknown key")
    try:
        return cls(**values)
    except (TypeError, ValueError) as e:
        message = str(e)
        first = message.split()[0] if message else ''
        key = f"{name}.{first}" if first in known else name
        raise ConfigError(key, message) from e


def config_from_dict(data: dict) -> SimulationConfig:
    """Validate a parsed TOML document; missing keys take their defaults."""
    rover_values = {}
    tables = {}
    suspension = SuspensionMode.MHS
    seed = DEFAULT_SEED
    for key, value in data.items():
        if key in _ROVER_KEYS:
            rover_values[key] = float(value) if isinstance(value, int) and not isinstance(value, bool) else value
        elif key in _TABLES:
            tables[key] = _build_table(key, _TABLES[key], value)
        elif key == 'suspension':
            try:
                suspension = SuspensionMode.parse(value)
            except ValueError as e:
                raise ConfigError('suspension', str(e)) from e
        elif key == 'seed':
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError('seed', "must be an integer")
            seed = value
        else:
            raise ConfigError(key, "unknown key")
    try:
        rover = RoverParameters.from_dict(rover_values)
    except ParameterError as e:
        raise ConfigError(e.key, str(e).split(': ', 1)[-1]) from e
    return SimulationConfig(rover=rover, suspension=suspension, seed=seed, **tables)


def load_config(path: Optional[str] = None) -> SimulationConfig:
    """Load and validate a TOML configuration file; None gives the defaults.

    Raises:
        ConfigParseError: the file is not valid TOML
        ConfigError: a key is unknown or a value is invalid
        OSError: the file cannot be read
    """
    if path is None:
        return SimulationConfig()
    with open(path, 'rb') as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigParseError(path, str(e)) from e
    config = config_from_dict(data)
    logger.debug("Loaded configuration %s (hash %s)", path, config.config_hash()[:12])
    return config


def provenance(config: SimulationConfig, timestamp: str) -> dict:
    return {'config_hash': config.config_hash(), 'version': __version__, 'timestamp': timestamp}
