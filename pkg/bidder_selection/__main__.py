import argparse
import json
import logging
import sys
from dataclasses import replace

from bidder_selection import ConfigError, Extension, __version__, logger
from bidder_selection.baselines import BASELINES, BaselineSettings, run_baseline
from bidder_selection.data import load_instance, save_instance
from bidder_selection.distributions import generate_lognormal_instance
from bidder_selection.harness import (
    ALGORITHMS,
    emit_report,
    load_experiment_config,
    output_directory,
    run_experiment,
)
from bidder_selection.rounding import round_best_of
from bidder_selection.solver import SolverSettings, solve
from bidder_selection.verify import run_all


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bidder-selection",
        description="Bidder selection solvers, baselines and benchmarks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--config", action="append", default=[], help="INI settings file (repeatable)"
    )
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        dest="overrides",
        metavar="SECTION/KEY=VALUE",
        help="override one setting (repeatable)",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="write a lognormal instance")
    generate.add_argument("--n", type=int, required=True)
    generate.add_argument("--k", type=int, required=True)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--grid-size", type=int)
    generate.add_argument("--weights", default="position")
    generate.add_argument("-o", "--output")

    solve_cmd = commands.add_parser("solve", help="run one algorithm on an instance")
    solve_cmd.add_argument("instance")
    solve_cmd.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    solve_cmd.add_argument("--ell", type=int)
    solve_cmd.add_argument("--trials", type=int)
    solve_cmd.add_argument("--seed", type=int, default=0)
    solve_cmd.add_argument("-o", "--output")

    bench = commands.add_parser("bench", help="run an experiment matrix")
    bench.add_argument("experiment")
    bench.add_argument("--csv")
    bench.add_argument("--json")
    bench.add_argument("--parallel", action="store_true")
    bench.add_argument("--include-large", action="store_true")

    verify = commands.add_parser("verify", help="run the property suites")
    verify.add_argument("--quick", action="store_true")
    verify.add_argument("--seed", type=int, default=0)
    return parser


def configure_logging(verbose, quiet):
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _write_json(data, path):
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as outfile:
            outfile.write(text)
        logger.info(f"wrote {path}")
    else:
        sys.stdout.write(text)


def cmd_generate(args, settings):
    grid_size = args.grid_size or settings["bench"]["grid_size"]
    instance = generate_lognormal_instance(
        args.n, args.k, args.seed, grid_size, args.weights, settings["bench"]["prng"]
    )
    path = args.output or output_directory(settings) / (
        f"instance-n{args.n}-k{args.k}-s{args.seed}.json"
    )
    save_instance(instance, path)
    return 0


def cmd_solve(args, settings):
    instance = load_instance(args.instance)
    solver_settings = SolverSettings.from_config(settings["solver"])
    if args.algorithm in BASELINES:
        report = run_baseline(
            args.algorithm, instance, BaselineSettings.from_config(settings["baselines"])
        )
        result = {
            "selected": list(report.selected),
            "welfare": report.welfare,
            "evaluations": report.evaluations,
            "wall_time_s": report.wall_time,
        }
    else:
        fractional = solve(args.algorithm, instance, solver_settings, ell=args.ell)
        trials = args.trials or settings["rounding"]["trials"]
        outcome = round_best_of(
            instance, fractional.solution, trials, args.seed, settings["bench"]["prng"]
        )
        result = {
            "selected": list(outcome.selected),
            "welfare": outcome.welfare,
            "relaxed_value": fractional.objective_value,
            "iterations": fractional.iterations,
            "converged": fractional.converged,
            "fallback": fractional.fallback,
            "wall_time_s": fractional.wall_time,
        }
    _write_json(result, args.output)
    return 0


def cmd_bench(args, settings):
    config = load_experiment_config(args.experiment, settings)
    if args.parallel:
        config = replace(config, parallel=True, single_thread=False)
    if args.include_large:
        config = replace(config, include_large=True)
    report = run_experiment(config)
    directory = output_directory(settings)
    csv_path = args.csv or config.csv_path or directory / "report.csv"
    emit_report(report, csv_path, "csv")
    json_path = args.json or config.json_path
    if json_path:
        emit_report(report, json_path, "json")
    return 0


def cmd_verify(args, settings):
    results = run_all(quick=args.quick, seed=args.seed)
    failed = [result for result in results if not result.passed]
    for result in failed:
        for violation in result.violations[:10]:
            logger.error(f"{result.name}: {violation}")
    return 1 if failed else 0


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        settings = Extension().load_config(args.config, args.overrides)
        return COMMANDS[args.command](args, settings)
    except (ConfigError, OSError, ValueError, RuntimeError) as e:
        logger.error(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
