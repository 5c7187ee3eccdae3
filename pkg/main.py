"""Main entry point for the rover suspension simulator."""

import argparse
import logging
import math
import os
import sys

from checks import run_checks
from config import DEFAULT_CONFIG_FILE, __version__
from metrics import EmptyTraceError, summarize
from report import generate_report
from rover_parameters import ParameterError
from scenario import InvalidSpecError, ScenarioKind, ScenarioSpec, run_scenario
from settings import ConfigError, ConfigParseError, load_config
from suspension import NoEquilibriumError
from sweep import ResultsStore, run_sweep, trace_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED_CELLS = 2

DEFAULT_OUT_DIR = "results"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rover-suspension",
        description="Compare DR, IE and MHS rover suspensions on obstacle and slope scenarios.",
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="TOML configuration file (default: built-in defaults)")
    common.add_argument('--out', default=DEFAULT_OUT_DIR, help="output directory")
    common.add_argument('--mode', help="suspension mode: DR, IE or MHS")
    common.add_argument('--gravity', type=float, help="gravity in m/s^2")
    common.add_argument('--jobs', type=int, help="parallel sweep workers")
    common.add_argument('--seed', type=int, help="outcrop profile seed")
    common.add_argument('-v', '--verbose', action='store_true', help="debug logging")

    verbs = parser.add_subparsers(dest='command', required=True)
    run = verbs.add_parser('run', parents=[common], help="simulate a single scenario")
    run.add_argument('--scenario', required=True, choices=[k.value for k in ScenarioKind])
    run.add_argument('--param', type=float, default=None,
                     help="step height / rock radius / outcrop height in m, slope angle in degrees")
    run.add_argument('--speed', type=float, default=0.5, help="commanded speed in m/s")
    verbs.add_parser('sweep', parents=[common], help="run the configured scenario grid")
    verbs.add_parser('report', parents=[common], help="regenerate report files from stored results")
    verbs.add_parser('check', parents=[common], help="run the invariant suite")
    return parser


def _default_param(kind: ScenarioKind, config) -> float:
    if kind is ScenarioKind.STEP:
        return config.sweep.step_heights[len(config.sweep.step_heights) // 2]
    if kind is ScenarioKind.ROCK:
        return config.terrain.rock_radius
    if kind is ScenarioKind.OUTCROP:
        return config.terrain.outcrop_max_height
    if kind is ScenarioKind.SLOPE:
        return config.sweep.slope_angles_deg[0]
    return 0.0


def cmd_run(args, config) -> int:
    kind = ScenarioKind(args.scenario)
    value = args.param if args.param is not None else _default_param(kind, config)
    parameter = math.radians(value) if kind is ScenarioKind.SLOPE else value
    spec = ScenarioSpec(kind=kind, parameter=parameter, speed=args.speed, mode=config.suspension,
                        gravity=config.rover.gravity, timeout=config.scenario.timeout, seed=config.seed)
    trace, outcome = run_scenario(spec, config.rover, config.terrain, config.scenario)
    store = ResultsStore(args.out)
    path = store.path(trace_file(spec))
    if len(trace):
        trace.downsampled(config.sweep.trace_stride).save(path)
    print(f"{spec.key}: {outcome.verdict.value} ({outcome.reason}) after {outcome.termination_time:.2f} s")
    try:
        summary = summarize(trace, config.metrics.sigma_window)
    except EmptyTraceError:
        return EXIT_FAILED_CELLS
    print(f"F_max {summary.f_max:.2f} N, T_max {summary.t_max:.2f} N*m, "
          f"Acc {summary.acc_min:+.3f}..{summary.acc_max:+.3f} g, sigma {summary.acc_sigma_mean:.4f} g")
    print(f"Trace: {path}")
    return EXIT_FAILED_CELLS if outcome.reason == "numerical instability" else EXIT_OK


def cmd_sweep(args, config) -> int:
    result = run_sweep(config, args.out, args.jobs)
    store = ResultsStore(args.out)
    report = config.report
    for path in generate_report(store, report.table_scenarios, report.baseline, report.candidate, result):
        print(f"Wrote {path}")
    failed = result.failed_cells()
    print(f"{len(result.cells)} cells, {len(failed)} failed; results in {store.results_path}")
    return EXIT_FAILED_CELLS if failed else EXIT_OK


def cmd_report(args, config) -> int:
    store = ResultsStore(args.out)
    if not os.path.exists(store.results_path):
        print(f"No results found at {store.results_path}; run 'sweep' first", file=sys.stderr)
        return EXIT_INVALID
    report = config.report
    for path in generate_report(store, report.table_scenarios, report.baseline, report.candidate):
        print(f"Wrote {path}")
    return EXIT_OK


def cmd_check(args, config) -> int:
    results = run_checks(config.rover, config.suspension)
    for result in results:
        print(result)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED_CELLS


COMMANDS = {'run': cmd_run, 'sweep': cmd_sweep, 'report': cmd_report, 'check': cmd_check}


def main(argv=None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config or DEFAULT_CONFIG_FILE)
        config = config.with_overrides(mode=args.mode, gravity=args.gravity, jobs=args.jobs, seed=args.seed)
        return COMMANDS[args.command](args, config)
    except (ConfigParseError, ConfigError, ParameterError, InvalidSpecError, NoEquilibriumError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
