"""Quadruple-Tank Workbench - Entry Point."""

import argparse
import logging
import os
import sys
from typing import List, Optional

# Ensure the app directory is on the import path
app_dir = os.path.dirname(os.path.abspath(__file__))
if app_dir not in sys.path:
    sys.path.insert(0, app_dir)

import numpy as np

from experiment.closed_loop import run_configured
from experiment.compare import compare
from experiment.metrics import error_histograms
from export.report_pdf import export_report
from models.dataset import Dataset
from models.model_params import params_table
from models.presets import resolve_params
from models.run_config import CONTROLLERS, RunConfig
from models.run_record import RunRecord
from plant.dynamics import measure, operating_point
from plant.transfer import structure_summary
from sysid.estimator import EstimationProblem, estimate_parameters, hold_disturbances
from sysid.excitation import excitation_dataset
from sysid.fit import fit_table
from utils.errors import ClosedLoopError, ConfigError
from utils.log_setup import configure_logging
from utils.tables import format_table

logger = logging.getLogger("qts_bench")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def load_config(args) -> RunConfig:
    """Config file (or defaults) with command-line overrides, validated once."""
    config = RunConfig.load_json(args.config) if args.config else RunConfig()
    config = config.with_overrides(
        seed=args.seed,
        output_dir=args.out,
        controller=getattr(args, "controller", None),
        preset=getattr(args, "preset", None),
    )
    return config.validate()


def _output_path(config: RunConfig, name: str) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, name)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = load_config(args)
    ex = config.excitation
    dataset = excitation_dataset(
        resolve_params(config.plant_preset), config.seed, config.T_s, ex.duration,
        hold_range=tuple(ex.hold_range), level_range=tuple(ex.level_range),
        substeps=config.plant_substeps, noise_free=config.noise_free,
        disturbance=config.disturbance, bounds=tuple(config.bounds),
    )
    path = _output_path(config, "excitation.csv")
    dataset.save(path)
    logger.info("Wrote %d samples to %s", dataset.size, path)

    rows = [["Channel", "min", "mean", "max"]]
    for name, column in zip(["y1", "y2", "y3", "y4", "u1", "u2"],
                            np.hstack([dataset.Y, dataset.U]).T):
        rows.append([name, f"{column.min():.3f}", f"{column.mean():.3f}", f"{column.max():.3f}"])
    print(f"{dataset.size} samples at T_s = {dataset.T_s:g} s (seed {config.seed})")
    print(format_table(rows))
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.preset is not None:
        # --preset names the initial guess here, not the plant.
        initial, args.preset = args.preset, None
    else:
        initial = None
    config = load_config(args)
    est = config.estimation
    if initial is not None:
        est.initial_preset = initial
    theta0 = resolve_params(est.initial_preset)
    if est.sigma_d is not None:
        theta0 = hold_disturbances(theta0, est.free, est.sigma_d)

    dataset = Dataset.load(args.dataset)
    if args.validation:
        estimation, validation = dataset, Dataset.load(args.validation)
    else:
        estimation, validation = dataset.split(config.excitation.validation_fraction)

    problem = EstimationProblem(
        dataset=estimation, free=tuple(est.free), theta0=theta0, starts=est.starts,
        xatol=est.xatol, fatol=est.fatol, max_evaluations=est.max_evaluations,
        rk4_steps=est.rk4_steps, seed=config.seed, workers=est.workers,
    )
    result = estimate_parameters(problem)
    path = _output_path(config, "theta.json")
    result.theta.save_json(path)
    logger.info("Wrote estimated parameters to %s", path)

    rows = [(est.initial_preset, theta0), ("estimated", result.theta)]
    print(format_table(params_table(rows, est.free or ["a1", "a2", "a3", "a4"])))
    print()
    print(format_table(fit_table(rows, estimation, validation, est.rk4_steps)))
    print()
    d = result.diagnostics
    print(f"V_ML = {result.v_ml:.6f} ({d.evaluations} evaluations, {d.message})")
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args)
    path = _output_path(config, f"run_{config.controller}.csv")
    try:
        record = run_configured(config)
    except ClosedLoopError as err:
        if err.record is not None and err.record.rows:
            err.record.save(path)
            logger.error("Partial record (%d rows) saved to %s", err.record.rows, path)
        raise
    record.save(path)
    logger.info("Wrote %d samples to %s", record.rows, path)
    print(compare([record]).to_text())
    return EXIT_OK


def _load_records(paths: List[str]) -> List[RunRecord]:
    return [RunRecord.load(p) for p in paths]


def cmd_compare(args) -> int:
    table = compare(_load_records(args.records))
    print(table.to_text())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        table.save_csv(os.path.join(args.out, "comparison.csv"))
    return EXIT_OK


def cmd_report(args) -> int:
    records = _load_records(args.records)
    config = RunConfig.load_json(args.config) if args.config else RunConfig()
    model = resolve_params(args.preset or config.model_preset)
    _, linear = operating_point(config.u_s, config.d_s, model)
    notes = structure_summary(linear, model)
    out = args.out or config.output_dir
    os.makedirs(out, exist_ok=True)
    table = export_report(records, os.path.join(out, "report.pdf"), bins=args.bins, notes=notes)
    error_histograms(records, args.bins).save_csv(os.path.join(out, "histograms.csv"))
    table.save_csv(os.path.join(out, "comparison.csv"))
    print(table.to_text())
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = RunConfig.load_json(args.config) if args.config else RunConfig()
    model = resolve_params(args.preset or config.model_preset)
    x_s, linear = operating_point(config.u_s, config.d_s, model)
    print(f"steady levels h = {np.round(measure(x_s, model), 3).tolist()} cm")
    for line in structure_summary(linear, model):
        print(line)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(parser: argparse.ArgumentParser, seed: bool = True) -> None:
    parser.add_argument("--config", help="run configuration JSON")
    if seed:
        parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--preset", help="parameter preset name or θ JSON path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qts_bench",
                                     description="Quadruple-tank estimation and control workbench")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="open-loop excitation experiment -> dataset CSV")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="maximum-likelihood parameter estimation")
    _common(p)
    p.add_argument("dataset", help="estimation dataset CSV")
    p.add_argument("--validation", help="validation dataset CSV (default: split the dataset)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("run", help="closed-loop experiment -> run record CSV")
    _common(p)
    p.add_argument("--controller", choices=CONTROLLERS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="performance table for run records")
    p.add_argument("records", nargs="+", help="run record CSVs")
    p.add_argument("--out", help="directory for comparison.csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="PDF report for run records")
    _common(p, seed=False)
    p.add_argument("records", nargs="+", help="run record CSVs")
    p.add_argument("--bins", type=int, default=41, help="histogram bins")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("analyze", help="zeros, phase character and RGA at the operating point")
    _common(p, seed=False)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    configure_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except ConfigError as err:
        logger.error("%s", err)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as err:
        logger.error("%s failed: %s", args.command, err)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
