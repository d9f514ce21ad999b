"""Main entry point for oscsym."""

import sys
import argparse
from pathlib import Path
from typing import Optional

import numpy as np

from logger_setup import setup_logger, get_logger
from operators.errors import OscsymError
from processors import SUBCOMMANDS
from processors.verification import ExperimentOutcome
from services.plotdata_service import emit_plotdata
from services.report_service import ReportWriter
from settings import ExperimentConfig, load_config


def run_experiment(subcommand: str, cfg: ExperimentConfig, xlsx: bool = False) -> int:
    """
    Run one subcommand pipeline and write its reports.

    Returns:
        Exit code (0 if every check passed, 1 otherwise)
    """
    logger = get_logger()
    rng = np.random.default_rng(cfg.seed)
    logger.info(f"Running {subcommand} on '{cfg.name}' (seed {cfg.seed})")

    try:
        outcome = SUBCOMMANDS[subcommand](cfg, rng)
    except OscsymError as e:
        logger.error(f"{subcommand} aborted: {type(e).__name__}: {e}")
        outcome = ExperimentOutcome(subcommand)
        outcome.verification.add(subcommand, False, f"{type(e).__name__}: {e}")
    except Exception as e:
        logger.error(f"Unhandled error in {subcommand}: {e}")
        outcome = ExperimentOutcome(subcommand)
        outcome.verification.add(subcommand, False, f"{type(e).__name__}: {e}")

    writer = ReportWriter(Path(cfg.output.directory) / subcommand, cfg.name, cfg.seed, xlsx or cfg.output.xlsx)
    writer.write_all(outcome.tables)
    writer.save_workbook()

    print(f"\n{'=' * 60}")
    print(f"SUMMARY — {subcommand} ({cfg.name})")
    print(f"{'=' * 60}")
    print(f"  {len(writer.written)} file(s) in {writer.directory}")
    for line in outcome.verification.summary_lines():
        print(line)

    return 0 if outcome.all_passed else 1


def run_plotdata(reports: list[str], out_dir: Optional[str]) -> int:
    """Write plot data for each report; a malformed report fails only itself."""
    logger = get_logger()
    results = {}
    for report in reports:
        try:
            results[report] = len(emit_plotdata(report, out_dir))
        except OscsymError as e:
            logger.error(f"{report}: {e}")
            results[report] = None

    print(f"\n{'=' * 60}")
    print("PLOT DATA SUMMARY")
    print(f"{'=' * 60}\n")
    for report, count in results.items():
        if count is None:
            print(f"  ✗ {report}")
        else:
            print(f"  ✓ {report}: {count} file(s)")
    failed = sum(1 for c in results.values() if c is None)
    print(f"\n{len(results) - failed} passed, {failed} failed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscsym",
        description="oscsym - numerical workbench for pseudo-differential operators with oscillating symbols",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name in SUBCOMMANDS:
        experiment = sub.add_parser(name, help=f"Run the {name} pipeline")
        experiment.add_argument(
            "--config",
            metavar="PATH",
            required=True,
            help="Experiment config file (INI-style sections)",
        )
        experiment.add_argument(
            "--out",
            metavar="DIR",
            help="Output directory (overrides [output] directory and OSCSYM_OUTPUT_DIR)",
        )
        experiment.add_argument(
            "--seed",
            type=int,
            help="Seed for the run's random generator (overrides the config)",
        )
        experiment.add_argument(
            "--xlsx",
            action="store_true",
            help="Also collect the reports into one .xlsx workbook",
        )

    plot = sub.add_parser("plotdata", help="Write gnuplot-style data files from report CSVs")
    plot.add_argument("reports", nargs="+", metavar="REPORT", help="Report CSV files")
    plot.add_argument("--out", metavar="DIR", help="Destination directory (default: <report dir>/plotdata)")
    return parser


def main(argv: Optional[list[str]] = None) -> None:
    """Main entry point."""
    args = build_parser().parse_args(argv)

    # Set up logging
    setup_logger(args.subcommand)

    if args.subcommand == "plotdata":
        sys.exit(run_plotdata(args.reports, args.out))

    if args.seed is not None and args.seed < 0:
        print(f"Error: --seed must be a non-negative integer, got {args.seed}")
        sys.exit(2)

    try:
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
    except OscsymError as e:
        print(f"Error: {e}")
        sys.exit(2)

    try:
        exit_code = run_experiment(args.subcommand, cfg, xlsx=args.xlsx)
    except OscsymError as e:
        # Output directory or report file could not be written
        print(f"Error: {e}")
        sys.exit(2)

    sys.exit(exit_code)


if __name__ == "__main__":
    main()
