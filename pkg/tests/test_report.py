import numpy as np
import pandas as pd
import pytest

from metrics import EmptyTraceError, IncompleteGridError, MetricsSummary
from report import (
    VERDICT_COLORS,
    emit_accel_plot,
    emit_heatmap,
    emit_max_table,
    generate_report,
    max_table,
    verdict_grid,
)
from scenario import ScenarioOutcome, ScenarioSpec, Verdict
from sweep import ResultsStore, SweepCell, SweepResult

PUBLISHED_ROCK = {
    'DR': (8633.0, 88.3, 4.36),
    'IE': (549.0, 63.4, 3.56),
    'MHS': (341.1, 62.0, 2.02),
}


def _summary(f, t, acc):
    return MetricsSummary(f_max=f, t_max=t, acc_max=acc, acc_min=-acc, acc_gap=2 * acc, acc_sigma_mean=0.1)


def _step_result(verdict=Verdict.SUCCESS, modes=("DR", "MHS"), heights=(0.01, 0.02), speeds=(0.5, 1.0)):
    result = SweepResult()
    for mode in modes:
        for height in heights:
            for speed in speeds:
                spec = ScenarioSpec(kind="step", parameter=height, speed=speed, mode=mode)
                result.add(SweepCell(spec, ScenarioOutcome(verdict, "rule", 1.0), _summary(1.0, 1.0, 1.0)))
    return result


class TestMaxTable:
    def test_published_rock_rates(self):
        summaries = {('rock', m): _summary(*v) for m, v in PUBLISHED_ROCK.items()}
        row = max_table(summaries, ['rock']).iloc[0]
        assert row['F_rate'] == -96
        assert row['T_rate'] == -30
        assert row['Acc_rate'] == -54
        assert row['F_best'] == 'MHS'
        assert row['F_DR'] == 8633.0

    def test_identical_modes(self):
        summaries = {('rock', m): _summary(5.0, 5.0, 5.0) for m in ('DR', 'IE', 'MHS')}
        row = max_table(summaries, ['rock']).iloc[0]
        assert (row['F_rate'], row['T_rate'], row['Acc_rate']) == (0, 0, 0)

    def test_undefined_rate_is_left_empty(self, tmp_path):
        summaries = {('rock', m): _summary(0.0, 5.0, 0.0) for m in ('DR', 'IE', 'MHS')}
        table = max_table(summaries, ['rock'])
        row = table.iloc[0]
        assert pd.isna(row['F_rate'])
        assert pd.isna(row['Acc_rate'])
        assert row['T_rate'] == 0
        path = tmp_path / "table.csv"
        table.to_csv(path, index=False)
        assert pd.read_csv(path)['F_rate'].isna().all()

    def test_missing_mode(self):
        summaries = {('rock', m): _summary(*PUBLISHED_ROCK[m]) for m in ('DR', 'MHS')}
        with pytest.raises(IncompleteGridError) as excinfo:
            max_table(summaries, ['rock'])
        assert excinfo.value.missing == [('rock', 'IE')]

    def test_written_at_the_top_speed(self, tmp_path):
        result = SweepResult()
        for mode, values in PUBLISHED_ROCK.items():
            for speed, scale in ((0.5, 0.5), (1.0, 1.0)):
                spec = ScenarioSpec(kind="rock", parameter=0.1, speed=speed, mode=mode)
                result.add(SweepCell(spec, ScenarioOutcome(Verdict.SUCCESS, "rule", 1.0),
                                     _summary(*(scale * v for v in values))))
        path = emit_max_table(result, str(tmp_path), ['rock'])
        text = open(path).read()
        assert text.splitlines()[0].startswith("scenario,speed,F_DR")
        assert "8633" in text


class TestHeatmap:
    def test_all_success_is_all_green(self, tmp_path):
        svg_path, csv_path = emit_heatmap(_step_result(), "step", str(tmp_path))
        svg = open(svg_path).read()
        assert VERDICT_COLORS['success'] in svg
        assert VERDICT_COLORS['failure'] not in svg
        assert VERDICT_COLORS['semi'] not in svg
        lines = open(csv_path).read().splitlines()
        assert lines[0] == "mode,height (cm),0.50,1.00"
        assert len(lines) == 1 + 2 * 2

    def test_deterministic(self, tmp_path):
        a, _ = emit_heatmap(_step_result(Verdict.SEMI), "step", str(tmp_path / "a"))
        b, _ = emit_heatmap(_step_result(Verdict.SEMI), "step", str(tmp_path / "b"))
        assert open(a, 'rb').read() == open(b, 'rb').read()

    def test_hole_in_the_grid(self):
        result = _step_result()
        del result.cells["step:2|MHS|1.00"]
        with pytest.raises(IncompleteGridError):
            verdict_grid(result, "step")


class TestAccelPlot:
    def test_flat_glide(self, make_trace, tmp_path):
        path = emit_accel_plot([make_trace(50, acc_g=-0.001)], ['MHS'], str(tmp_path / "flat.svg"))
        svg = open(path).read()
        assert svg.count('<polyline') == 1
        assert '>MHS<' in svg

    def test_three_labeled_curves(self, make_trace, tmp_path):
        traces = [make_trace(40, acc_g=np.sin(np.arange(40) * k)) for k in (0.1, 0.2, 0.3)]
        path = emit_accel_plot(traces, ['DR', 'IE', 'MHS'], str(tmp_path / "rock.svg"))
        svg = open(path).read()
        assert svg.count('<polyline') == 3
        for label in ('DR', 'IE', 'MHS'):
            assert f'>{label}<' in svg

    def test_byte_identical(self, make_trace, tmp_path):
        trace = make_trace(30, acc_g=np.linspace(-0.2, 0.3, 30))
        a = emit_accel_plot([trace], ['DR'], str(tmp_path / "a.svg"))
        b = emit_accel_plot([trace], ['DR'], str(tmp_path / "b.svg"))
        assert open(a, 'rb').read() == open(b, 'rb').read()

    def test_empty_trace(self, make_trace, tmp_path):
        with pytest.raises(EmptyTraceError):
            emit_accel_plot([make_trace(0)], ['DR'], str(tmp_path / "x.svg"))


def test_generate_report_from_stored_results(tmp_path):
    store = ResultsStore(str(tmp_path))
    store.save(_step_result(modes=("DR", "IE", "MHS")))
    written = generate_report(store, ['step:1'], 'DR', 'MHS')
    names = {p.replace('\\', '/').rsplit('/', 1)[-1] for p in written}
    assert {'step_heatmap.svg', 'step_grid.csv', 'max_table.csv', 'summary.txt'} <= names
    summary = (tmp_path / "report" / "summary.txt").read_text()
    assert "MHS vs DR" in summary
    assert "+0%" in summary
