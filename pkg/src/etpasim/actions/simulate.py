"""The `etpasim simulate` command: run a sweep and archive the counts."""

import logging

from etpasim.logger import _get_default_logger
from etpasim.montecarlo import SimulationMode
from etpasim.sweep import run_simulation
from etpasim.utils import yprint

logger = logging.getLogger(__name__)

MODES = {"rate": SimulationMode.RATE_LEVEL, "event": SimulationMode.EVENT_LEVEL}


def simulate_counts(args):
    observer = _get_default_logger(args.verbose)
    run = run_simulation(
        args.config,
        output_dir=args.out,
        seed=args.seed,
        mode=MODES[args.mode],
        replicas=args.replicas,
        workers=args.workers,
        noiseless=args.noiseless,
        observer=observer,
    )

    yprint(
        {
            "counts": run.counts_path,
            "manifest": run.manifest_path,
            "records": len(run.records),
            "config hash": run.plan.digest,
            "seed": run.plan.base_seed,
        }
    )
    return run
