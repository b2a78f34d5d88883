"""
Benchmark matrix: generate instances per (n, k) cell and seed, run every
listed algorithm under a timeout, and report objective values relative to
the best terminating algorithm of each (cell, seed).
"""

import csv
import io
import json
import os
import pathlib
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import pykka

from bidder_selection import ConfigError, Extension, logger
from bidder_selection.baselines import (
    BASELINES,
    BaselineSettings,
    CapExceeded,
    run_baseline,
)
from bidder_selection.deadline import Deadline, DeadlineExceeded
from bidder_selection.distributions import (
    InvalidInstance,
    generate_lognormal_instance,
)
from bidder_selection.rounding import round_best_of
from bidder_selection.solver import (
    SOLVERS,
    PreconditionError,
    SolverSettings,
    solve,
)
from bidder_selection.timeformat import format_seconds

ALGORITHMS = tuple(SOLVERS) + tuple(BASELINES)

OK = "ok"
TIMEOUT = "timeout"
CAP_EXCEEDED = "cap-exceeded"
REJECTED = "rejected"
ERROR = "error"

DEFAULT_CELLS = ((50, 5), (50, 10), (50, 20), (200, 10), (200, 20), (200, 40))
LARGE_CELLS = ((1000, 50), (1000, 100), (1000, 200))

# seconds a timed-out runner gets to reach its next deadline check
STOP_GRACE = 10.0

CSV_COLUMNS = (
    "n",
    "k",
    "seed",
    "algorithm",
    "objective",
    "relative_pct",
    "wall_time_s",
    "status",
)

OUTPUT_DIR_VARIABLE = "BIDDER_SELECTION_OUTPUT_DIR"


class ReportError(OSError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    cells: tuple = DEFAULT_CELLS
    algorithms: tuple = ("practical", "greedy", "local_search")
    seeds: int = 10
    base_seed: int = 0
    trials: int = 10
    timeout: float = 600.0
    grid_size: int = 50
    prng: str = "pcg64"
    weights: str = "position"
    parallel: bool = False
    single_thread: bool = True
    include_large: bool = False
    solver: SolverSettings = field(default_factory=SolverSettings)
    baselines: BaselineSettings = field(default_factory=BaselineSettings)
    csv_path: str = None
    json_path: str = None

    def __post_init__(self):
        cells = tuple((int(n), int(k)) for n, k in self.cells)
        for n, k in cells:
            if not n >= k >= 1:
                raise ConfigError({"cells": f"cell (n={n}, k={k}) needs n >= k >= 1"})
        if not self.algorithms:
            raise ConfigError({"algorithms": "at least one algorithm is required"})
        unknown = [name for name in self.algorithms if name not in ALGORITHMS]
        if unknown:
            raise ConfigError(
                {"algorithms": f"unknown {unknown}, expected some of {list(ALGORITHMS)}"}
            )
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    @property
    def all_cells(self):
        return self.cells + (LARGE_CELLS if self.include_large else ())


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    k: int
    seed: int
    algorithm: str
    objective: float
    relative_pct: float
    wall_time_s: float
    status: str


@dataclass(frozen=True)
class CellAggregate:
    n: int
    k: int
    algorithm: str
    runs: int
    ok: int
    mean_pct: float
    std_pct: float
    mean_wall_time_s: float
    median_wall_time_s: float = None


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple = ()
    aggregates: tuple = ()


BENCH_KEYS = (
    "seeds",
    "base_seed",
    "timeout",
    "grid_size",
    "prng",
    "parallel",
    "single_thread",
    "include_large",
)


def experiment_config_from_dict(data, settings=None):
    """
    Build an ExperimentConfig from the JSON form. Scalar blocks go through
    the same schemas as the INI settings, which also supply the defaults.
    """
    ext = Extension()
    settings = settings or ext.load_config()
    data = dict(data)
    known = {"cells", "algorithms", "weights", "output", "solver", "rounding", "baselines"}
    unknown = set(data) - known - set(BENCH_KEYS)
    if unknown:
        raise ConfigError({key: "unknown experiment config key." for key in unknown})

    bench = ext.validate_section(
        "bench",
        {key: data[key] for key in BENCH_KEYS if key in data},
        base=settings["bench"],
    )
    solver = ext.validate_section(
        "solver", data.get("solver", {}), base=settings["solver"]
    )
    rounding = ext.validate_section(
        "rounding", data.get("rounding", {}), base=settings["rounding"]
    )
    baselines = ext.validate_section(
        "baselines", data.get("baselines", {}), base=settings["baselines"]
    )
    output = data.get("output", {})
    try:
        cells = tuple((int(n), int(k)) for n, k in data.get("cells", DEFAULT_CELLS))
    except (TypeError, ValueError):
        raise ConfigError({"cells": "cells must be a list of [n, k] pairs"})

    return ExperimentConfig(
        cells=cells,
        algorithms=tuple(data.get("algorithms", ExperimentConfig.algorithms)),
        trials=rounding["trials"],
        weights=data.get("weights", "position"),
        solver=SolverSettings.from_config(solver),
        baselines=BaselineSettings.from_config(baselines),
        csv_path=output.get("csv"),
        json_path=output.get("json"),
        **{key: bench[key] for key in BENCH_KEYS},
    )


def load_experiment_config(path, settings=None):
    try:
        with open(path) as infile:
            data = json.load(infile)
    except OSError as e:
        raise ConfigError({str(path): f"cannot read experiment config: {e}"})
    except json.JSONDecodeError as e:
        raise ConfigError({str(path): f"invalid JSON: {e}"})
    if not isinstance(data, dict):
        raise ConfigError({str(path): "experiment config must be a JSON object"})
    return experiment_config_from_dict(data, settings)


def output_directory(settings=None):
    """``[bench] output_dir``, else $BIDDER_SELECTION_OUTPUT_DIR, else the cwd."""
    configured = settings["bench"]["output_dir"] if settings else None
    return pathlib.Path(configured or os.environ.get(OUTPUT_DIR_VARIABLE) or ".")


class AlgorithmRunner(pykka.ThreadingActor):
    """
    Runs one algorithm on one instance. The caller waits with a timeout and
    the algorithm itself stops at the shared deadline.
    """

    use_daemon_thread = True

    def __init__(self, config):
        super().__init__()
        self.config = config

    def run(self, algorithm, instance, seed, deadline=None):
        start = time.perf_counter()
        config = self.config
        if algorithm in SOLVERS:
            report = solve(algorithm, instance, config.solver, deadline=deadline)
            outcome = round_best_of(
                instance,
                report.solution,
                config.trials,
                seed,
                config.prng,
                deadline=deadline,
            )
            objective = outcome.welfare
        else:
            objective = run_baseline(
                algorithm, instance, config.baselines, deadline
            ).welfare
        return objective, time.perf_counter() - start


def stop_runner(actor_ref, tag):
    """Wait for the runner to finish its current message and stop."""
    try:
        actor_ref.stop(block=True, timeout=STOP_GRACE)
    except pykka.Timeout:
        grace = format_seconds(STOP_GRACE)
        logger.warning(f"{tag} still running {grace} after its deadline")


def run_once(config, algorithm, instance, seed):
    """One row of the matrix; failures become statuses."""
    deadline = Deadline(config.timeout)
    runner = AlgorithmRunner.start(config).proxy()
    objective = wall_time = None
    tag = f"{algorithm} on n={instance.n} k={instance.k} seed={seed}"
    try:
        objective, wall_time = runner.run(algorithm, instance, seed, deadline).get(
            timeout=config.timeout
        )
        status = OK
    except (pykka.Timeout, DeadlineExceeded):
        logger.warning(f"{tag} timed out after {format_seconds(config.timeout)}")
        status = TIMEOUT
    except CapExceeded as e:
        logger.warning(f"{tag}: {e}")
        status = CAP_EXCEEDED
    except (PreconditionError, InvalidInstance) as e:
        logger.warning(f"{tag} rejected: {e}")
        status = REJECTED
    except Exception as e:
        logger.error(f"{tag} failed: {e}")
        status = ERROR
    finally:
        stop_runner(runner.actor_ref, tag)
    return ExperimentRow(
        n=instance.n,
        k=instance.k,
        seed=seed,
        algorithm=algorithm,
        objective=objective,
        relative_pct=None,
        wall_time_s=wall_time,
        status=status,
    )


def run_cell(config, n, k):
    algorithms = config.algorithms
    if (n, k) in LARGE_CELLS and (n, k) not in config.cells:
        algorithms = tuple(a for a in algorithms if a in SOLVERS)
    rows = []
    for offset in range(config.seeds):
        seed = config.base_seed + offset
        instance = generate_lognormal_instance(
            n, k, seed, config.grid_size, config.weights, config.prng
        )
        rows.extend(run_once(config, name, instance, seed) for name in algorithms)
    logger.info(f"cell n={n} k={k} finished ({len(rows)} runs)")
    return rows


class CellRunner(pykka.ThreadingActor):

    use_daemon_thread = True

    def __init__(self, config):
        super().__init__()
        self.config = config

    def run_cell(self, n, k):
        return run_cell(self.config, n, k)


def with_relative(rows):
    """relative_pct = 100 * objective / best ok objective of the same (n, k, seed)."""
    best = {}
    for row in rows:
        if row.status == OK:
            key = (row.n, row.k, row.seed)
            best[key] = max(best.get(key, row.objective), row.objective)
    result = []
    for row in rows:
        if row.status != OK:
            result.append(row)
            continue
        top = best[(row.n, row.k, row.seed)]
        pct = 100.0 if top == 0 else 100.0 * row.objective / top
        result.append(replace(row, relative_pct=pct))
    return tuple(result)


def aggregate(rows):
    groups = {}
    for row in rows:
        groups.setdefault((row.n, row.k, row.algorithm), []).append(row)
    aggregates = []
    for (n, k, algorithm), group in groups.items():
        ok = [row for row in group if row.status == OK]
        pct = np.array([row.relative_pct for row in ok])
        times = np.array([row.wall_time_s for row in ok])
        aggregates.append(
            CellAggregate(
                n=n,
                k=k,
                algorithm=algorithm,
                runs=len(group),
                ok=len(ok),
                mean_pct=float(pct.mean()) if ok else None,
                std_pct=float(pct.std()) if ok else None,
                mean_wall_time_s=float(times.mean()) if ok else None,
                median_wall_time_s=float(np.median(times)) if ok else None,
            )
        )
    return tuple(aggregates)


def run_experiment(config):
    cells = config.all_cells
    if config.parallel and config.single_thread:
        logger.warning("single_thread is set, running cells sequentially")
    if config.parallel and not config.single_thread:
        runners = [CellRunner.start(config).proxy() for _ in cells]
        try:
            futures = [runner.run_cell(n, k) for runner, (n, k) in zip(runners, cells)]
            results = [future.get() for future in futures]
        finally:
            for runner in runners:
                runner.actor_ref.stop(block=False)
    else:
        results = [run_cell(config, n, k) for n, k in cells]
    rows = with_relative([row for cell_rows in results for row in cell_rows])
    report = ExperimentReport(rows=rows, aggregates=aggregate(rows))
    for item in report.aggregates:
        if item.ok:
            logger.info(
                f"n={item.n} k={item.k} {item.algorithm}: "
                f"{item.mean_pct:.2f}% ± {item.std_pct:.2f}%, "
                f"{format_seconds(item.median_wall_time_s)} median per run"
            )
    return report


def _csv_number(value, spec):
    return "" if value is None else format(value, spec)


def format_report_csv(report):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [
                row.n,
                row.k,
                row.seed,
                row.algorithm,
                _csv_number(row.objective, ".17g"),
                _csv_number(row.relative_pct, ".17g"),
                _csv_number(row.wall_time_s, ".6f"),
                row.status,
            ]
        )
    return buffer.getvalue()


def format_report_json(report):
    return json.dumps(asdict(report), sort_keys=True, indent=2) + "\n"


def report_from_json(text):
    try:
        data = json.loads(text)
        rows = tuple(ExperimentRow(**row) for row in data["rows"])
        aggregates = tuple(CellAggregate(**item) for item in data["aggregates"])
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ValueError(f"malformed report JSON: {e}")
    return ExperimentReport(rows=rows, aggregates=aggregates)


REPORT_FORMATS = {"csv": format_report_csv, "json": format_report_json}


def emit_report(report, path, format="csv"):
    try:
        text = REPORT_FORMATS[format](report)
    except KeyError:
        raise ValueError(f"unknown report format {format!r}")
    try:
        pathlib.Path(path).write_text(text)
    except OSError as e:
        raise ReportError(f"cannot write {format} report to {path}: {e}")
    logger.info(f"wrote {format} report with {len(report.rows)} rows to {path}")
    return path


