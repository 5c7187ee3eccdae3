"""Report outputs: outcome heatmaps, peak-value tables, acceleration plots and a summary."""

import logging
import math
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import DEFAULT_MODES
from metrics import (
    COMPARED_METRICS,
    DegenerateInputError,
    EmptyTraceError,
    IncompleteGridError,
    average_reduction,
    reduction_rate,
)
from scenario import ScenarioKind, Verdict
from sim_trace import SimulationTrace
from svg_builder import SVG, nice_ticks
from sweep import ResultsStore, SweepResult

logger = logging.getLogger(__name__)

REPORT_DIR = "report"

VERDICT_COLORS = {
    Verdict.SUCCESS.value: "#2e7d32",
    Verdict.SEMI.value: "#f9a825",
    Verdict.FAILURE.value: "#c62828",
}
MODE_COLORS = {"DR": "#1565c0", "IE": "#ef6c00", "MHS": "#2e7d32"}
_EXTRA_COLORS = ("#6a1b9a", "#00838f", "#4e342e")

# Table column prefixes for the compared metrics
_TABLE_PREFIX = {'f_max': 'F', 't_max': 'T', 'acc_max': 'Acc'}
_METRIC_WORDS = {
    'f_max': 'maximum impact load',
    't_max': 'maximum pitch torque',
    'acc_max': 'maximum vertical acceleration',
}


def _row_title(kind: ScenarioKind) -> str:
    return "slope angle (deg)" if kind is ScenarioKind.SLOPE else "height (cm)"


def verdict_grid(result: SweepResult, kind) -> pd.DataFrame:
    """Long table (mode, row, speed, verdict) of one module, complete or raising.

    Raises:
        IncompleteGridError: a (mode, row, speed) combination has no cell
    """
    kind = ScenarioKind(kind)
    cells = result.cells_of(kind)
    if not cells:
        raise IncompleteGridError([(kind.value, m) for m in result.modes()] or [(kind.value, '*')])
    records = {(c.spec.mode.value, c.spec.row_value, c.spec.speed): c.outcome.verdict.value for c in cells}
    modes = sorted({k[0] for k in records})
    rows = sorted({k[1] for k in records})
    speeds = sorted({k[2] for k in records})
    missing = [(f"{kind.value}:{r:g}@{s:.2f}", m) for m in modes for r in rows for s in speeds
               if (m, r, s) not in records]
    if missing:
        raise IncompleteGridError(missing)
    return pd.DataFrame(
        [(m, r, s, records[(m, r, s)]) for m in modes for r in rows for s in speeds],
        columns=['mode', 'row', 'speed', 'verdict'],
    )


def emit_heatmap(result: SweepResult, kind, out_dir: str):
    """Write <kind>_heatmap.svg and <kind>_grid.csv; one panel per suspension mode.

    Rows are obstacle heights or slope angles, columns commanded speeds.

    Returns:
        (svg_path, csv_path)
    """
    kind = ScenarioKind(kind)
    grid = verdict_grid(result, kind)
    os.makedirs(out_dir, exist_ok=True)

    wide = grid.pivot(index=['mode', 'row'], columns='speed', values='verdict')
    wide.columns = [f"{s:.2f}" for s in wide.columns]
    wide = wide.reset_index().rename(columns={'row': _row_title(kind)})
    csv_path = os.path.join(out_dir, f"{kind.value}_grid.csv")
    wide.to_csv(csv_path, index=False, lineterminator='\n')

    modes = list(dict.fromkeys(grid['mode']))
    rows = sorted(set(grid['row']))
    speeds = sorted(set(grid['speed']))
    cell_w, cell_h = 48, 24
    left, top, gap = 80, 60, 40
    panel_w = cell_w * len(speeds)
    width = left + len(modes) * (panel_w + gap)
    height = top + cell_h * len(rows) + 70
    svg = SVG(width, height)
    svg.text(width / 2, 24, f"{kind.value} outcomes", size=16)
    lookup = {(m, r, s): v for m, r, s, v in grid.itertuples(index=False)}
    for p, mode in enumerate(modes):
        x0 = left + p * (panel_w + gap)
        svg.group_start(title=mode)
        svg.text(x0 + panel_w / 2, top - 12, mode, size=14)
        for j, row in enumerate(reversed(rows)):
            y = top + j * cell_h
            if p == 0:
                svg.text(left - 8, y + cell_h / 2 + 4, f"{row:g}", size=11, anchor="end")
            for i, speed in enumerate(speeds):
                verdict = lookup[(mode, row, speed)]
                svg.rect(x0 + i * cell_w, y, cell_w, cell_h, VERDICT_COLORS[verdict], stroke="#ffffff")
        for i, speed in enumerate(speeds):
            svg.text(x0 + (i + 0.5) * cell_w, top + len(rows) * cell_h + 16, f"{speed:g}", size=11)
        svg.group_end()
    svg.text(width / 2, height - 16, "speed (m/s)", size=12)
    svg.text(18, top + len(rows) * cell_h / 2, _row_title(kind), size=12, rotate=-90)
    svg_path = os.path.join(out_dir, f"{kind.value}_heatmap.svg")
    svg.save(svg_path)
    logger.info("Wrote %s", svg_path)
    return svg_path, csv_path


def max_table(summaries: Dict, scenarios: Sequence[str], modes: Sequence[str] = DEFAULT_MODES) -> pd.DataFrame:
    """Peak-value table: per scenario, F/T/Acc per mode, reduction rate and best mode.

    The rate is left empty where it is undefined (every mode peaks at zero).

    Args:
        summaries: {(scenario, mode): MetricsSummary}

    Raises:
        IncompleteGridError: a scenario lacks one of the modes
    """
    missing = [(s, m) for s in scenarios for m in modes if (s, m) not in summaries]
    if missing:
        raise IncompleteGridError(missing)
    rows = []
    for scenario in scenarios:
        row = {'scenario': scenario}
        for metric in COMPARED_METRICS:
            prefix = _TABLE_PREFIX[metric]
            values = [getattr(summaries[(scenario, m)], metric) for m in modes]
            for mode, value in zip(modes, values):
                row[f"{prefix}_{mode}"] = value
            try:
                row[f"{prefix}_rate"] = int(round(reduction_rate(values)))
            except DegenerateInputError as e:
                logger.warning("%s %s rate left empty: %s", scenario, prefix, e)
                row[f"{prefix}_rate"] = None
            row[f"{prefix}_best"] = modes[int(np.argmin(values))]
        rows.append(row)
    return pd.DataFrame(rows)


def emit_max_table(result: SweepResult, out_dir: str, scenarios: Sequence[str],
                   speed: Optional[float] = None, modes: Sequence[str] = DEFAULT_MODES) -> str:
    """Write max_table.csv for the given scenarios at one speed (default: the top speed)."""
    speeds = result.speeds()
    if speed is None:
        if not speeds:
            raise IncompleteGridError([(s, m) for s in scenarios for m in modes])
        speed = speeds[-1]
    table = max_table(result.summaries_at(speed), scenarios, modes)
    table.insert(1, 'speed', speed)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "max_table.csv")
    table.to_csv(path, index=False, float_format='%.4g', lineterminator='\n')
    logger.info("Wrote %s", path)
    return path


def _curve_color(label: str, index: int) -> str:
    return MODE_COLORS.get(label, _EXTRA_COLORS[index % len(_EXTRA_COLORS)])


def emit_accel_plot(traces: Sequence[SimulationTrace], labels: Sequence[str], path: str,
                    title: str = "Chassis vertical acceleration") -> str:
    """Line chart of chassis vertical acceleration (g) against time, one curve per trace.

    Raises:
        EmptyTraceError: no traces, or a trace without samples
    """
    if not traces or any(len(t) == 0 for t in traces):
        raise EmptyTraceError("Acceleration plot needs at least one non-empty trace")
    if len(labels) != len(traces):
        raise ValueError("One label per trace is required")

    series = [(t.time, t.column('acc_g')) for t in traces]
    t_min = min(float(t[0]) for t, _ in series)
    t_max = max(float(t[-1]) for t, _ in series)
    a_min = min(float(a.min()) for _, a in series)
    a_max = max(float(a.max()) for _, a in series)
    pad = 0.05 * (a_max - a_min) if a_max > a_min else 0.1
    y_ticks = nice_ticks(a_min - pad, a_max + pad)
    x_ticks = nice_ticks(t_min, t_max if t_max > t_min else t_min + 1.0)
    y_lo, y_hi = y_ticks[0], y_ticks[-1]
    x_lo, x_hi = x_ticks[0], x_ticks[-1]

    width, height = 800, 420
    left, right, top, bottom = 70, width - 130, 50, height - 50
    svg = SVG(width, height)
    svg.text(width / 2, 28, title, size=16)

    def px(t, a):
        return (left + (t - x_lo) / (x_hi - x_lo) * (right - left),
                bottom - (a - y_lo) / (y_hi - y_lo) * (bottom - top))

    for value in y_ticks:
        _, y = px(x_lo, value)
        svg.line(left, y, right, y, stroke="#dddddd")
        svg.text(left - 8, y + 4, f"{value:g}", size=11, anchor="end")
    for value in x_ticks:
        x, _ = px(value, y_lo)
        svg.text(x, bottom + 18, f"{value:g}", size=11)
    if y_lo < 0 < y_hi:
        _, y0 = px(x_lo, 0.0)
        svg.line(left, y0, right, y0, stroke="#888888", dash="4 3")
    svg.line(left, top, left, bottom)
    svg.line(left, bottom, right, bottom)

    for i, ((t, a), label) in enumerate(zip(series, labels)):
        color = _curve_color(label, i)
        svg.polyline([px(ti, ai) for ti, ai in zip(t, a)], stroke=color)
        ly = top + 20 * i + 10
        svg.line(right + 15, ly, right + 40, ly, stroke=color, width=3)
        svg.text(right + 46, ly + 4, label, size=12, anchor="start")

    svg.text((left + right) / 2, height - 12, "time (s)", size=12)
    svg.text(18, (top + bottom) / 2, "vertical acceleration (g)", size=12, rotate=-90)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    svg.save(path)
    logger.info("Wrote %s", path)
    return path


def summary_lines(result: SweepResult, scenarios: Sequence[str], baseline: str, candidate: str,
                  speed: Optional[float] = None) -> List[str]:
    """Aggregate sentences comparing the candidate mode with the baseline and with IE."""
    speeds = result.speeds()
    if speed is None and speeds:
        speed = speeds[-1]
    summaries = result.summaries_at(speed) if speed is not None else {}
    lines = []
    references = [baseline] + [m for m in ("IE",) if m not in (baseline, candidate)]
    for reference in references:
        try:
            rates = average_reduction(summaries, reference, candidate, scenarios)
        except (IncompleteGridError, DegenerateInputError) as e:
            lines.append(f"{candidate} vs {reference}: not available ({e})")
            continue
        parts = ', '.join(f"{round(rates[m]):+d}% {_METRIC_WORDS[m]}" for m in COMPARED_METRICS)
        lines.append(
            f"At {speed:.2f} m/s, {candidate} vs {reference} averaged over "
            f"{', '.join(scenarios)}: {parts}."
        )
    return lines


def emit_summary(result: SweepResult, out_dir: str, scenarios: Sequence[str],
                 baseline: str, candidate: str) -> str:
    """Write summary.txt with the aggregate comparison and the verdict counts."""
    lines = summary_lines(result, scenarios, baseline, candidate)
    counts = {v.value: 0 for v in Verdict}
    for cell in result.ordered():
        counts[cell.outcome.verdict.value] += 1
    lines.append(
        f"Cells: {len(result.cells)} ({counts['success']} success, {counts['semi']} semi, "
        f"{counts['failure']} failure; {len(result.failed_cells())} not simulated to the end)."
    )
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "summary.txt")
    with open(path, 'w', newline='\n') as f:
        f.write('\n'.join(lines) + '\n')
    logger.info("Wrote %s", path)
    return path


def emit_scenario_accel_plots(result: SweepResult, store: ResultsStore, out_dir: str,
                              scenarios: Sequence[str]) -> List[str]:
    """One acceleration plot per scenario at the top speed, one curve per stored mode trace."""
    speeds = result.speeds()
    if not speeds:
        return []
    top = speeds[-1]
    written = []
    for scenario in scenarios:
        cells = [c for c in result.ordered()
                 if c.spec.label == scenario and math.isclose(c.spec.speed, top) and c.trace_path]
        if not cells:
            logger.warning("No stored traces for %s at %.2f m/s; plot skipped", scenario, top)
            continue
        traces = [store.load_trace(c) for c in cells]
        labels = [c.spec.mode.value for c in cells]
        name = scenario.replace(':', '_')
        path = os.path.join(out_dir, f"accel_{name}.svg")
        written.append(emit_accel_plot(traces, labels, path,
                                       title=f"Chassis vertical acceleration, {scenario} at {top:g} m/s"))
    return written


def generate_report(store: ResultsStore, scenarios: Sequence[str], baseline: str, candidate: str,
                    result: Optional[SweepResult] = None) -> List[str]:
    """Regenerate every report file from stored results; incomplete parts are skipped."""
    result = result or store.load()
    out_dir = store.path(REPORT_DIR)
    written = []
    kinds = sorted({c.spec.kind for c in result.cells.values()} - {ScenarioKind.FLAT},
                   key=lambda k: list(ScenarioKind).index(k))
    for kind in kinds:
        try:
            written.extend(emit_heatmap(result, kind, out_dir))
        except IncompleteGridError as e:
            logger.warning("Heatmap for %s skipped: %s", kind.value, e)
    try:
        written.append(emit_max_table(result, out_dir, scenarios))
    except IncompleteGridError as e:
        logger.warning("Peak-value table skipped: %s", e)
    written.extend(emit_scenario_accel_plots(result, store, out_dir, scenarios))
    written.append(emit_summary(result, out_dir, scenarios, baseline, candidate))
    return written
