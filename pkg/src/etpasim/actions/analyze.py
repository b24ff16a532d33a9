"""The `etpasim analyze` command: cross-section table, bounds and plot data
from a counts CSV."""

import logging
import os

from etpasim.analysis import analyze
from etpasim.archive import find_run_config
from etpasim.core import ExperimentConfig
from etpasim.logger import _get_default_logger
from etpasim.presets import load_experiment_config
from etpasim.records import read_counts_csv
from etpasim.report import default_table_arm, write_report
from etpasim.utils import yprint

logger = logging.getLogger(__name__)


def _analysis_config(args) -> ExperimentConfig:
    if args.config:
        return load_experiment_config(args.config)

    snapshot = find_run_config(args.counts)
    if snapshot:
        logger.info(f"Using the config snapshot {snapshot}")
        return load_experiment_config(snapshot)

    logger.warning(
        "No --config given and no config snapshot next to the counts; "
        "using default channel and detector parameters"
    )
    return ExperimentConfig()


def analyze_counts(args):
    config = _analysis_config(args)
    records = read_counts_csv(args.counts)

    reference_correction = None
    if args.no_reference_correction:
        reference_correction = False
    result = analyze(records, config, apply_reference_correction=reference_correction)

    out_dir = args.out or os.path.join(
        os.path.dirname(os.path.abspath(args.counts)), "analysis"
    )
    paths = write_report(result, out_dir)

    if args.verbose:
        printer = _get_default_logger(args.verbose)
        for delay in result.delays:
            printer.print_report(result.table(default_table_arm(result), delay))
    yprint(paths)
    return result
