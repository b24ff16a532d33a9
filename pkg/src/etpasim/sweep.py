"""
Sweep execution: expand a config into a simulation plan, produce one record per
(replica, sweep point), optionally on a process pool, and write the run
directory (counts CSV, config snapshot, manifest).
"""

import logging
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import Any, Callable, Mapping, Optional, Union

from etpasim.archive import COUNTS_NAME, archive_run, default_output_dir, ensure_dir
from etpasim.core import CountRecord, ExperimentConfig, validate_config
from etpasim.log import configure_process_logging, get_logging_manager
from etpasim.logger.event import Events
from etpasim.montecarlo import SimulationMode, SimulationPlan, simulate_record
from etpasim.presets import load_experiment_config
from etpasim.records import write_counts_csv
from etpasim.settings import init_settings

logger = logging.getLogger(__name__)


@dataclass
class SimulationRun:
    output_dir: str
    counts_path: str
    manifest_path: str
    plan: SimulationPlan
    records: list[CountRecord]


def run_parallel(
    plan: SimulationPlan,
    workers: int,
    on_record: Optional[Callable[[CountRecord], None]] = None,
) -> list[CountRecord]:
    """Simulate every record of the plan on a pool of worker processes.
    Records come back in plan order."""
    tasks = plan.tasks()
    replicas = [r for r, _ in tasks]
    points = [p for _, p in tasks]
    chunksize = max(1, len(tasks) // (workers * 4))

    log_queue = get_logging_manager().get_queue()
    records = []
    with ProcessPoolExecutor(
        max_workers=workers,
        mp_context=mp.get_context("spawn"),
        initializer=configure_process_logging,
        # Workers forward everything; the listener filters by level
        initargs=(log_queue, "etpasim", logging.DEBUG),
    ) as executor:
        for record in executor.map(
            simulate_record, repeat(plan), replicas, points, chunksize=chunksize
        ):
            records.append(record)
            if on_record is not None:
                on_record(record)

    return records


def _with_overrides(
    config: ExperimentConfig, seed: Optional[int], replicas: Optional[int]
) -> ExperimentConfig:
    update = {}
    if seed is not None:
        update["seed"] = seed
    if replicas is not None:
        update["sweep"] = config.sweep.model_copy(update={"replicas": replicas})
    if not update:
        return config
    return validate_config(config.model_copy(update=update))


def run_simulation(
    config: Union[str, Mapping[str, Any], ExperimentConfig],
    output_dir: Optional[str] = None,
    seed: Optional[int] = None,
    mode: SimulationMode = SimulationMode.RATE_LEVEL,
    replicas: Optional[int] = None,
    workers: Optional[int] = None,
    noiseless: bool = False,
    observer=None,
) -> SimulationRun:
    """
    Simulate a full sweep and archive it.

    Parameters
    ----------
    config : str, mapping or ExperimentConfig
        Preset name, YAML path or an already built config.
    output_dir : str, optional
        Run directory; defaults to a timestamped folder under
        ETPASIM_OUTPUT_ROOT.
    seed, replicas : int, optional
        Override the config's seed and replica count.
    mode : SimulationMode
        Rate-level Poisson sampling or event-level simulation.
    workers : int, optional
        Worker processes; defaults to the ETPASIM_WORKERS setting.
    noiseless : bool
        Write expected counts instead of samples (rate level only).
    observer : object with update(event, payload), optional
        Receives SWEEP_START, one SWEEP_STEP per record and SWEEP_END.

    Returns
    -------
    SimulationRun
    """
    settings = init_settings()
    config = _with_overrides(load_experiment_config(config), seed, replicas)
    if workers is None:
        workers = int(settings.read_value("ETPASIM_WORKERS"))

    plan = SimulationPlan.from_config(
        config,
        mode=mode,
        noiseless=noiseless,
        event_limit=float(settings.read_value("ETPASIM_EVENT_LIMIT")),
    )
    output_dir = ensure_dir(output_dir or default_output_dir(config.name))

    def notify(event, payload=None):
        if observer is not None:
            observer.update(event, payload)

    logger.info(
        f"Simulating '{config.name}': {len(plan.tasks())} records, "
        f"mode {plan.mode.value}, seed {plan.base_seed}, {workers} worker(s)"
    )
    notify(Events.SWEEP_START, plan)

    if workers > 1:
        records = run_parallel(
            plan, workers, on_record=lambda r: notify(Events.SWEEP_STEP, r)
        )
    else:
        records = []
        for replica, point in plan.tasks():
            record = simulate_record(plan, replica, point)
            records.append(record)
            notify(Events.SWEEP_STEP, record)

    counts_path = write_counts_csv(records, os.path.join(output_dir, COUNTS_NAME))
    manifest_path = archive_run(plan, output_dir, counts_path, len(records))
    notify(Events.SWEEP_END, counts_path)

    return SimulationRun(
        output_dir=output_dir,
        counts_path=counts_path,
        manifest_path=manifest_path,
        plan=plan,
        records=records,
    )
