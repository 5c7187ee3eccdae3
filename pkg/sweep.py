"""Scenario grid sweeps and the results store."""

import json
import logging
import math
import os
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from multiprocessing import Pool
from typing import Dict, List, Optional

import pandas as pd

from metrics import EmptyTraceError, MetricsSummary, summarize
from scenario import ScenarioKind, ScenarioOutcome, ScenarioSpec, Verdict, run_scenario
from settings import SimulationConfig, provenance
from sim_trace import SimulationTrace

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
PROVENANCE_FILE = "provenance.json"
TRACES_DIR = "traces"

RESULT_COLUMNS = (
    'key', 'kind', 'label', 'parameter', 'speed', 'mode', 'gravity', 'timeout', 'seed',
    'verdict', 'reason', 'termination_time',
    'f_max', 't_max', 'acc_max', 'acc_min', 'acc_gap', 'acc_sigma_mean', 'trace',
)
_METRIC_COLUMNS = ('f_max', 't_max', 'acc_max', 'acc_min', 'acc_gap', 'acc_sigma_mean')


def _safe_filename(name: str) -> str:
    """Strip characters that are illegal in filenames on Windows/Unix."""
    return re.sub(r'[\\/:*?"<>| ]', '_', name).strip()


@dataclass
class SweepCell:
    """Result of one grid cell. `trace_path` is relative to the output directory."""
    spec: ScenarioSpec
    outcome: ScenarioOutcome
    summary: Optional[MetricsSummary] = None
    trace_path: str = ""

    @property
    def failed(self) -> bool:
        """True when the cell could not be simulated to a classified end."""
        reason = self.outcome.reason
        return self.summary is None or reason == "numerical instability" or reason.startswith("error:")


@dataclass
class SweepResult:
    """Cells keyed by ScenarioSpec key, plus the provenance of the producing config."""
    cells: Dict[str, SweepCell] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def add(self, cell: SweepCell):
        self.cells[cell.spec.key] = cell

    def ordered(self) -> List[SweepCell]:
        return sorted(self.cells.values(), key=lambda c: c.spec.sort_key)

    def failed_cells(self) -> List[SweepCell]:
        return [c for c in self.ordered() if c.failed]

    def modes(self) -> List[str]:
        return sorted({c.spec.mode.value for c in self.cells.values()})

    def speeds(self) -> List[float]:
        return sorted({c.spec.speed for c in self.cells.values()})

    def cells_of(self, kind) -> List[SweepCell]:
        kind = ScenarioKind(kind)
        return [c for c in self.ordered() if c.spec.kind is kind]

    def summaries_at(self, speed: float) -> dict:
        """{(scenario label, mode): MetricsSummary} for every summarized cell at a speed."""
        return {
            (c.spec.label, c.spec.mode.value): c.summary
            for c in self.ordered()
            if math.isclose(c.spec.speed, speed) and c.summary is not None
        }


def trace_file(spec: ScenarioSpec) -> str:
    """Trace location of a cell, relative to the output directory."""
    return os.path.join(TRACES_DIR, f"{_safe_filename(spec.key)}.csv")


def build_grid(config: SimulationConfig) -> List[ScenarioSpec]:
    """All (scenario x mode x speed) cells of the configured sweep, in key order."""
    sweep = config.sweep
    terrain = config.terrain
    parameters = {
        ScenarioKind.STEP: list(sweep.step_heights),
        ScenarioKind.ROCK: [terrain.rock_radius],
        ScenarioKind.OUTCROP: [terrain.outcrop_max_height],
        ScenarioKind.SLOPE: [math.radians(a) for a in sweep.slope_angles_deg],
        ScenarioKind.FLAT: [0.0],
    }
    specs = []
    for module in sweep.modules:
        kind = ScenarioKind(module)
        for value in parameters[kind]:
            for mode in sweep.modes:
                for speed in sweep.speeds:
                    specs.append(ScenarioSpec(
                        kind=kind, parameter=value, speed=speed, mode=mode,
                        gravity=config.rover.gravity, timeout=config.scenario.timeout,
                        seed=config.seed,
                    ))
    unique = {s.key: s for s in specs}
    return sorted(unique.values(), key=lambda s: s.sort_key)


def run_cell(job) -> SweepCell:
    """Run, summarize and store one cell. Errors are recorded, never raised."""
    spec, config, out_dir = job
    trace_path = trace_file(spec)
    try:
        trace, outcome = run_scenario(spec, config.rover, config.terrain, config.scenario)
    except Exception as e:
        logger.warning("%s failed: %s", spec.key, e)
        return SweepCell(spec, ScenarioOutcome(Verdict.FAILURE, f"error: {e}", 0.0))
    try:
        summary = summarize(trace, config.metrics.sigma_window)
    except (EmptyTraceError, ValueError) as e:
        logger.warning("%s has no usable metrics: %s", spec.key, e)
        summary = None
    if len(trace):
        trace.downsampled(config.sweep.trace_stride).save(os.path.join(out_dir, trace_path))
    else:
        trace_path = ""
    logger.info("%s: %s (%s)", spec.key, outcome.verdict.value, outcome.reason)
    return SweepCell(spec, outcome, summary, trace_path)


def run_sweep(config: SimulationConfig, out_dir: str, jobs: Optional[int] = None) -> SweepResult:
    """Execute every grid cell, optionally in parallel, and persist the results.

    Cells are independent; results are keyed by spec, so the worker order does not
    affect the stored output.
    """
    specs = build_grid(config)
    jobs = jobs or config.sweep.jobs
    out_dir = os.path.abspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    logger.info("Sweep of %d cells with %d job(s) into %s", len(specs), jobs, out_dir)
    started = time.perf_counter()
    work = [(spec, config, out_dir) for spec in specs]
    result = SweepResult()
    if jobs > 1:
        with Pool(jobs) as pool:
            for cell in pool.imap(run_cell, work):
                result.add(cell)
    else:
        for item in work:
            result.add(run_cell(item))
    elapsed = time.perf_counter() - started
    result.provenance = provenance(config, datetime.now(timezone.utc).isoformat(timespec='seconds'))
    result.provenance.update(jobs=jobs, elapsed_seconds=round(elapsed, 1))
    ResultsStore(out_dir).save(result)
    failed = len(result.failed_cells())
    logger.info("Sweep finished: %d cells, %d failed, %.1f s wall time", len(result.cells), failed, elapsed)
    return result


class ResultsStore:
    """Reads and writes results.csv, provenance.json and traces under one directory."""

    def __init__(self, out_dir: str):
        self.out_dir = os.path.abspath(out_dir)
        os.makedirs(self.out_dir, exist_ok=True)

    @property
    def results_path(self) -> str:
        return os.path.join(self.out_dir, RESULTS_FILE)

    @property
    def provenance_path(self) -> str:
        return os.path.join(self.out_dir, PROVENANCE_FILE)

    def path(self, relative: str) -> str:
        """Absolute path of an output file, refusing anything outside the directory."""
        full = os.path.abspath(os.path.join(self.out_dir, relative))
        if os.path.commonpath([full, self.out_dir]) != self.out_dir:
            raise ValueError(f"Path {relative!r} escapes the output directory")
        return full

    def save(self, result: SweepResult):
        """Write results.csv (deterministic, one row per cell) and provenance.json."""
        rows = []
        for cell in result.ordered():
            spec = cell.spec
            row = {
                'key': spec.key, 'kind': spec.kind.value, 'label': spec.label,
                'parameter': spec.parameter, 'speed': spec.speed, 'mode': spec.mode.value,
                'gravity': spec.gravity, 'timeout': spec.timeout, 'seed': spec.seed,
                'verdict': cell.outcome.verdict.value, 'reason': cell.outcome.reason,
                'termination_time': cell.outcome.termination_time,
                'trace': cell.trace_path.replace(os.sep, '/'),
            }
            summary = cell.summary.to_dict() if cell.summary is not None else {}
            for name in _METRIC_COLUMNS:
                row[name] = summary.get(name, float('nan'))
            rows.append(row)
        frame = pd.DataFrame(rows, columns=list(RESULT_COLUMNS))
        try:
            frame.to_csv(self.results_path, index=False, float_format='%.6f', lineterminator='\n')
            with open(self.provenance_path, 'w') as f:
                json.dump(result.provenance, f, indent=2, sort_keys=True)
        except OSError as e:
            raise OSError(f"Could not save results: {e}") from e
        logger.info("Wrote %s (%d rows)", self.results_path, len(rows))

    def load(self) -> SweepResult:
        """Load a SweepResult written by `save`."""
        frame = pd.read_csv(self.results_path, keep_default_na=False, na_values=[''])
        provenance_data = {}
        if os.path.exists(self.provenance_path):
            with open(self.provenance_path, 'r') as f:
                provenance_data = json.load(f)
        result = SweepResult(provenance=provenance_data)
        try:
            for row in frame.to_dict('records'):
                spec = ScenarioSpec(
                    kind=row['kind'], parameter=float(row['parameter']), speed=float(row['speed']),
                    mode=row['mode'], gravity=float(row['gravity']), timeout=float(row['timeout']),
                    seed=int(row['seed']),
                )
                outcome = ScenarioOutcome(Verdict(row['verdict']), str(row['reason']),
                                          float(row['termination_time']))
                values = [row[name] for name in _METRIC_COLUMNS]
                summary = None
                if all(isinstance(v, float) and math.isfinite(v) for v in values):
                    summary = MetricsSummary(**{n: float(row[n]) for n in _METRIC_COLUMNS})
                trace = row['trace'] if isinstance(row['trace'], str) else ""
                result.add(SweepCell(spec, outcome, summary, trace))
        except (KeyError, TypeError) as e:
            raise ValueError(f"Invalid results file {self.results_path}: {e}") from e
        return result

    def load_trace(self, cell: SweepCell) -> SimulationTrace:
        if not cell.trace_path:
            raise FileNotFoundError(f"No trace stored for {cell.spec.key}")
        return SimulationTrace.load(self.path(cell.trace_path))
