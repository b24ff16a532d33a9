"""Command-line entry point. Run `etpasim` to print the version and settings,
or use sub-commands like `etpasim simulate`, `etpasim analyze`,
`etpasim hom-fit`, `etpasim bound`, etc."""

import argparse
import logging
import sys

from etpasim.actions import show_info
from etpasim.actions.analyze import analyze_counts
from etpasim.actions.bound import compute_bound
from etpasim.actions.config import config_settings
from etpasim.actions.hom_fit import fit_hom
from etpasim.actions.ingest import ingest_counts
from etpasim.actions.preset import show_preset
from etpasim.actions.simulate import simulate_counts
from etpasim.errors import EtpaError, EtpaIOError
from etpasim.log import setup_logging

logger = logging.getLogger("etpasim")


def _add_verbose(parser, default=1):
    parser.add_argument(
        "-v",
        "--verbose",
        type=int,
        choices=[0, 1, 2],
        default=default,
        const=2,
        nargs="?",
        help="verbose level of the terminal output",
    )


def _add_out(parser, help_text):
    parser.add_argument("-o", "--out", type=str, default=None, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    # Create the top-level parser
    parser = argparse.ArgumentParser(
        description="etpasim: entangled two-photon absorption experiment simulator"
    )
    parser.add_argument(
        "-l",
        "--log_level",
        choices=["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"],
        default=None,
        const="WARNING",
        nargs="?",
        help="Set the logging level (defaults to the ETPASIM_LOG_LEVEL setting)",
    )
    parser.add_argument(
        "-cf",
        "--config_filepath",
        type=str,
        default=None,
        help="Path to the settings file",
    )
    parser.set_defaults(func=show_info)
    subparsers = parser.add_subparsers(help="etpasim commands help")

    # Parser for the 'simulate' command
    parser_sim = subparsers.add_parser("simulate", help="simulate a sweep")
    parser_sim.add_argument(
        "-c", "--config", required=True, help="preset name or experiment YAML"
    )
    _add_out(parser_sim, "run directory (defaults to ETPASIM_OUTPUT_ROOT)")
    parser_sim.add_argument("-s", "--seed", type=int, default=None, help="base seed")
    parser_sim.add_argument(
        "-m", "--mode", choices=["rate", "event"], default="rate", help="simulation level"
    )
    parser_sim.add_argument(
        "-r", "--replicas", type=int, default=None, help="replicas per sweep point"
    )
    parser_sim.add_argument(
        "-w", "--workers", type=int, default=None, help="worker processes"
    )
    parser_sim.add_argument(
        "--noiseless", action="store_true", help="write expected counts (rate level)"
    )
    _add_verbose(parser_sim)
    parser_sim.set_defaults(func=simulate_counts)

    # Parser for the 'analyze' command
    parser_ana = subparsers.add_parser("analyze", help="cross-sections from counts")
    parser_ana.add_argument("counts", type=str, help="counts CSV")
    parser_ana.add_argument(
        "-c",
        "--config",
        default=None,
        help="preset name or experiment YAML (defaults to the run's snapshot)",
    )
    _add_out(parser_ana, "report directory (defaults to <counts dir>/analysis)")
    parser_ana.add_argument(
        "--no-reference-correction",
        action="store_true",
        help="skip the reference-arm drift correction",
    )
    _add_verbose(parser_ana)
    parser_ana.set_defaults(func=analyze_counts)

    # Parser for the 'ingest' command
    parser_ing = subparsers.add_parser("ingest", help="validate external counts")
    parser_ing.add_argument("counts", type=str, help="counts CSV")
    _add_out(parser_ing, "write the normalized counts.csv here")
    parser_ing.add_argument(
        "--strict", action="store_true", help="reject the file on any bad row"
    )
    parser_ing.set_defaults(func=ingest_counts)

    # Parser for the 'hom-fit' command
    parser_hom = subparsers.add_parser("hom-fit", help="fit a HOM delay scan")
    parser_hom.add_argument("counts", type=str, help="counts CSV over delay")
    _add_out(parser_hom, "report directory (defaults to the counts dir)")
    parser_hom.add_argument(
        "--shape", choices=["dip", "peak"], default=None, help="guessed when omitted"
    )
    parser_hom.set_defaults(func=fit_hom)

    # Parser for the 'bound' command
    parser_bound = subparsers.add_parser(
        "bound", help="smallest resolvable cross-section"
    )
    parser_bound.add_argument("rate", type=float, help="solvent rate [1/s]")
    parser_bound.add_argument("concentration", type=float, help="concentration [M]")
    parser_bound.add_argument(
        "-p", "--path_length", type=float, default=1.0, help="path length [cm]"
    )
    parser_bound.set_defaults(func=compute_bound)

    # Parser for the 'config' command
    parser_config = subparsers.add_parser("config", help="etpasim settings")
    parser_config.add_argument("key", nargs="?", type=str, default=None)
    parser_config.add_argument("value", nargs="?", type=str, default=None)
    parser_config.add_argument(
        "-r", "--reset", action="store_true", help="reset every setting"
    )
    parser_config.set_defaults(func=config_settings)

    # Parser for the 'preset' command
    parser_preset = subparsers.add_parser("preset", help="built-in presets")
    parser_preset.add_argument("preset_name", nargs="?", type=str, default=None)
    parser_preset.set_defaults(func=show_preset)

    return parser


def run(argv=None) -> int:
    """Parse argv, run the command and return the process exit code."""
    args = build_parser().parse_args(argv)

    try:
        setup_logging(args)
        args.func(args)
    except EtpaError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EtpaIOError.exit_code

    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
