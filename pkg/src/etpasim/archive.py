"""
Provenance for simulated runs.

Every run directory holds the counts CSV, a snapshot of the validated config
and manifest.yaml, which records what is needed to regenerate the counts
bit for bit: config hash, base seed and seeding scheme, mode, replica count
and the etpasim version.
"""

import hashlib
import logging
import os
from typing import Any, Optional

import yaml

from etpasim.errors import EtpaIOError
from etpasim.settings import init_settings
from etpasim.utils import curr_ts_to_str, get_etpasim_version, get_yaml_string

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.yaml"
COUNTS_NAME = "counts.csv"
CONFIG_NAME = "config.yaml"
SEED_SCHEME = "numpy SeedSequence(base_seed, spawn_key=(replica, sweep_index))"


def default_output_dir(name: str) -> str:
    """<ETPASIM_OUTPUT_ROOT>/<name>-<timestamp>"""
    root = init_settings().read_value("ETPASIM_OUTPUT_ROOT")
    return os.path.join(
        os.path.expanduser(root), f"{name}-{curr_ts_to_str('lcls-fname')}"
    )


def ensure_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise EtpaIOError(f"Cannot create output directory {path}: {e}")
    return path


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_yaml(content: Any, path: str):
    try:
        with open(path, "w") as f:
            f.write(get_yaml_string(content))
    except OSError as e:
        raise EtpaIOError(f"Cannot write {path}: {e}")


def archive_run(plan, output_dir: str, counts_path: str, n_records: int) -> str:
    """
    Write the config snapshot and the manifest next to the counts file.

    Parameters
    ----------
    plan : SimulationPlan
        The plan that produced the counts.
    output_dir : str
        Run directory.
    counts_path : str
        The counts CSV already written in output_dir.
    n_records : int
        Number of rows in the counts CSV.

    Returns
    -------
    str
        Path of the manifest.
    """
    config_dump = plan.config.model_dump(mode="json")
    write_yaml(config_dump, os.path.join(output_dir, CONFIG_NAME))

    manifest = {
        "etpasim_version": get_etpasim_version(),
        "created": curr_ts_to_str("iso"),
        "config_name": plan.config.name,
        "config_hash": plan.digest,
        "base_seed": plan.base_seed,
        "seed_scheme": SEED_SCHEME,
        "mode": plan.mode.value,
        "noiseless": plan.noiseless,
        "replicas": plan.replicas,
        "sweep_points": len(plan.config.sweep.points()),
        "records": n_records,
        "counts_file": os.path.basename(counts_path),
        "counts_sha256": file_sha256(counts_path),
        "config_file": CONFIG_NAME,
    }
    path = os.path.join(output_dir, MANIFEST_NAME)
    write_yaml(manifest, path)
    logger.info(f"Run archived in {output_dir}")

    return path


def load_manifest(path: str) -> dict:
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    if not os.path.exists(path):
        raise EtpaIOError(f"Manifest {path} not found")
    with open(path, "r") as f:
        return yaml.safe_load(f)


def find_run_config(counts_path: str) -> Optional[str]:
    """The config snapshot stored beside a counts file, if any."""
    candidate = os.path.join(os.path.dirname(os.path.abspath(counts_path)), CONFIG_NAME)
    return candidate if os.path.exists(candidate) else None
