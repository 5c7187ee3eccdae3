"""Evaluation metrics: peak rocker loads, chassis acceleration statistics and reduction rates."""

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from config import DEFAULT_SIGMA_WINDOW, WHEEL_IDS
from sim_trace import SimulationTrace

# Metrics compared between suspension modes
COMPARED_METRICS = ('f_max', 't_max', 'acc_max')


class EmptyTraceError(ValueError):
    """Raised when a metric is requested from a trace with no samples."""


class DegenerateInputError(ValueError):
    """Raised when a reduction rate has no meaningful reference value."""


class IncompleteGridError(LookupError):
    """Raised when summaries required for a comparison are missing.

    `missing` lists the absent (scenario, mode) cells.
    """
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ', '.join(f"{s}/{m}" for s, m in self.missing[:5])
        more = f" and {len(self.missing) - 5} more" if len(self.missing) > 5 else ""
        super().__init__(f"Incomplete grid: missing {shown}{more}")


@dataclass(frozen=True)
class MetricsSummary:
    """Peak loads (N, N*m) and chassis vertical acceleration statistics (g-units)."""
    f_max: float
    t_max: float
    acc_max: float
    acc_min: float
    acc_gap: float
    acc_sigma_mean: float

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"{f.name} must be finite")
        if self.f_max < 0:
            raise ValueError("f_max must not be negative")
        if self.acc_max < self.acc_min:
            raise ValueError("acc_max must not be below acc_min")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'MetricsSummary':
        try:
            return cls(**{f.name: float(data[f.name]) for f in fields(cls)})
        except (KeyError, TypeError) as e:
            raise ValueError(f"Invalid metrics data: {e}") from e


def sigma_mean(acceleration: np.ndarray, sample_interval: float, window: float) -> float:
    """Mean of the standard deviation over sliding windows of `window` seconds.

    A series shorter than one window falls back to its overall standard deviation.
    """
    samples = max(int(round(window / sample_interval)), 1)
    if acceleration.size < samples or samples == 1:
        return float(np.std(acceleration))
    rolling = pd.Series(acceleration).rolling(samples).std(ddof=0).dropna()
    return float(rolling.mean())


def summarize(trace: SimulationTrace, sigma_window: float = DEFAULT_SIGMA_WINDOW) -> MetricsSummary:
    """Compute the MetricsSummary of a trace.

    Raises:
        EmptyTraceError: if the trace has no samples
    """
    if len(trace) == 0:
        raise EmptyTraceError("Cannot summarize an empty trace")
    loads = trace.frame[[f'load_{w}' for w in WHEEL_IDS]].to_numpy()
    torques = trace.frame[['torque_left', 'torque_right']].to_numpy()
    acc = trace.column('acc_g')
    acc_max = float(acc.max())
    acc_min = float(acc.min())
    return MetricsSummary(
        f_max=max(0.0, float(loads.max())),
        t_max=float(np.abs(torques).max()),
        acc_max=acc_max,
        acc_min=acc_min,
        acc_gap=acc_max - acc_min,
        acc_sigma_mean=sigma_mean(acc, trace.sample_interval, sigma_window),
    )


def reduction_rate(values: Iterable[float]) -> float:
    """Reduction from the worst to the best value, percent: (min - max) / max * 100.

    Raises:
        DegenerateInputError: fewer than two values, a non-finite value or max = 0
    """
    values = np.asarray(list(values), dtype=float)
    if values.size < 2:
        raise DegenerateInputError("reduction_rate needs at least two values")
    if not np.all(np.isfinite(values)):
        raise DegenerateInputError("reduction_rate needs finite values")
    worst = float(values.max())
    if worst == 0.0:
        raise DegenerateInputError("reduction_rate is undefined when the maximum is zero")
    return (float(values.min()) - worst) / worst * 100.0


def average_reduction(summaries: Mapping, baseline: str, candidate: str,
                      scenarios: Optional[Sequence[str]] = None,
                      metrics: Sequence[str] = COMPARED_METRICS) -> dict:
    """Mean change from baseline to candidate over scenarios, percent per metric.

    Args:
        summaries: {(scenario, mode): MetricsSummary}
        baseline: Reference mode, e.g. "DR"
        candidate: Compared mode, e.g. "MHS"
        scenarios: Scenarios to average over (default: every scenario present)
        metrics: MetricsSummary field names

    Raises:
        IncompleteGridError: a scenario lacks a baseline or candidate summary
        DegenerateInputError: a baseline value is zero
    """
    if scenarios is None:
        scenarios = sorted({scenario for scenario, _ in summaries})
    missing = [(s, m) for s in scenarios for m in (baseline, candidate) if (s, m) not in summaries]
    if missing or not scenarios:
        raise IncompleteGridError(missing)
    result = {}
    for metric in metrics:
        rates = []
        for scenario in scenarios:
            base = getattr(summaries[(scenario, baseline)], metric)
            cand = getattr(summaries[(scenario, candidate)], metric)
            if base == 0:
                raise DegenerateInputError(f"{metric} of {scenario}/{baseline} is zero")
            rates.append((cand - base) / base * 100.0)
        result[metric] = float(np.mean(rates))
    return result
