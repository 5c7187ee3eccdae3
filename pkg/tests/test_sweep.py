import os

import pytest

import sweep
from metrics import MetricsSummary
from scenario import ScenarioOutcome, ScenarioSpec, Verdict
from settings import MetricsSettings, SimulationConfig, SweepSettings
from sweep import ResultsStore, SweepCell, SweepResult, build_grid, run_sweep, trace_file


def _config(**sweep_values):
    return SimulationConfig(sweep=SweepSettings(**sweep_values))


def test_step_grid_size():
    specs = build_grid(_config(modules=("step",)))
    assert len(specs) == 3 * 6 * 12
    assert len({s.key for s in specs}) == 216


def test_default_grid_covers_every_module():
    specs = build_grid(SimulationConfig())
    kinds = {s.kind.value for s in specs}
    assert kinds == {"step", "rock", "outcrop", "slope"}
    assert len(specs) == 216 + 18 + 18 + 108


def test_grid_order_is_deterministic():
    config = _config(modules=("slope", "step"), modes=("MHS", "DR"))
    assert [s.key for s in build_grid(config)] == [s.key for s in build_grid(config)]
    assert build_grid(config)[0].kind.value == "step"


def _fake_run(make_trace):
    def run(spec, params=None, terrain=None, rules=None):
        if spec.mode.value == "DR":
            raise RuntimeError("solver exploded")
        trace = make_trace(20, acc_g=[0.1 * (i % 3) for i in range(20)], load_FL=2.0)
        return trace, ScenarioOutcome(Verdict.SUCCESS, "all wheels cleared the obstacle", 0.2)
    return run


def test_one_failing_cell_leaves_the_rest(monkeypatch, make_trace, tmp_path):
    monkeypatch.setattr(sweep, 'run_scenario', _fake_run(make_trace))
    config = _config(modules=("rock",), modes=("DR", "MHS"), speeds=(0.5,))
    result = run_sweep(config, str(tmp_path))
    cells = {c.spec.mode.value: c for c in result.ordered()}
    assert cells["DR"].failed
    assert cells["DR"].outcome.verdict is Verdict.FAILURE
    assert cells["DR"].outcome.reason.startswith("error:")
    assert not cells["MHS"].failed
    assert cells["MHS"].summary.f_max == 2.0
    assert os.path.exists(os.path.join(str(tmp_path), cells["MHS"].trace_path))


def test_results_file_is_byte_identical(monkeypatch, make_trace, tmp_path):
    monkeypatch.setattr(sweep, 'run_scenario', _fake_run(make_trace))
    config = _config(modules=("rock", "step"), modes=("IE", "MHS"), speeds=(0.5, 1.0), step_heights=(0.05,))
    first = run_sweep(config, str(tmp_path / "a"))
    run_sweep(config, str(tmp_path / "b"), jobs=1)
    a = (tmp_path / "a" / sweep.RESULTS_FILE).read_bytes()
    b = (tmp_path / "b" / sweep.RESULTS_FILE).read_bytes()
    assert a == b
    assert len(first.cells) == 8
    assert a.count(b"\n") == 9


def test_store_round_trip(tmp_path):
    spec = ScenarioSpec(kind="step", parameter=0.05, speed=0.5, mode="IE")
    summary = MetricsSummary(f_max=12.5, t_max=3.25, acc_max=0.5, acc_min=-0.25, acc_gap=0.75,
                             acc_sigma_mean=0.125)
    result = SweepResult(provenance={'config_hash': 'abc'})
    result.add(SweepCell(spec, ScenarioOutcome(Verdict.SEMI, "only the front wheels cleared the obstacle", 7.5),
                         summary, trace_file(spec)))
    result.add(SweepCell(ScenarioSpec(kind="rock", parameter=0.1, speed=0.5),
                         ScenarioOutcome(Verdict.FAILURE, "numerical instability", 1.0)))
    store = ResultsStore(str(tmp_path))
    store.save(result)
    loaded = store.load()
    assert loaded.provenance == {'config_hash': 'abc'}
    cell = loaded.cells[spec.key]
    assert cell.outcome == result.cells[spec.key].outcome
    assert cell.summary == summary
    assert cell.trace_path == "traces/step_5_IE_0.50.csv"
    assert loaded.cells["rock|MHS|0.50"].summary is None
    assert [c.spec.key for c in loaded.failed_cells()] == ["rock|MHS|0.50"]


def test_store_refuses_paths_outside(tmp_path):
    store = ResultsStore(str(tmp_path / "out"))
    with pytest.raises(ValueError):
        store.path("../elsewhere.csv")


def test_real_flat_cell(tmp_path):
    config = SimulationConfig(sweep=SweepSettings(modules=("flat",), modes=("MHS",), speeds=(1.0,)),
                              metrics=MetricsSettings(sigma_window=0.5))
    result = run_sweep(config, str(tmp_path))
    (cell,) = result.ordered()
    assert cell.outcome.verdict is Verdict.SUCCESS
    assert cell.summary.acc_gap >= 0.0
    assert (tmp_path / sweep.PROVENANCE_FILE).exists()


def test_provenance_records_wall_time(monkeypatch, make_trace, tmp_path):
    monkeypatch.setattr(sweep, 'run_scenario', _fake_run(make_trace))
    result = run_sweep(_config(modules=("rock",), modes=("MHS",), speeds=(0.5,)), str(tmp_path), jobs=1)
    assert result.provenance['jobs'] == 1
    assert result.provenance['elapsed_seconds'] >= 0.0
    assert "elapsed_seconds" in (tmp_path / sweep.PROVENANCE_FILE).read_text()


@pytest.mark.slow
def test_real_sweep_rerun_is_byte_identical(tmp_path):
    config = SimulationConfig(sweep=SweepSettings(modules=("rock", "slope"), modes=("DR", "MHS"),
                                                  speeds=(1.0,), slope_angles_deg=(20.0,)))
    run_sweep(config, str(tmp_path / "a"), jobs=2)
    run_sweep(config, str(tmp_path / "b"), jobs=1)
    a = (tmp_path / "a" / sweep.RESULTS_FILE).read_bytes()
    b = (tmp_path / "b" / sweep.RESULTS_FILE).read_bytes()
    assert a == b
    assert (tmp_path / "a" / "traces" / "rock_MHS_1.00.csv").read_bytes() == \
        (tmp_path / "b" / "traces" / "rock_MHS_1.00.csv").read_bytes()
