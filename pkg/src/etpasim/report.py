"""
Report and plot-data writers. Plot data is CSV with the columns
x, y, yerr, series; rendering is left to the reader's tool of choice.
"""

import logging
import os
from typing import Sequence

import numpy as np
import pandas as pd

from etpasim.analysis import AnalysisResult, HomScan, SeriesPoint, absorption_fit_lines
from etpasim.archive import ensure_dir, write_yaml
from etpasim.core import Arm
from etpasim.errors import EtpaIOError
from etpasim.estimators import hom_curve

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["x", "y", "yerr", "series"]
REPORT_TABLE_NAME = "report_table.csv"
ESTIMATES_NAME = "estimates.csv"
SIGNAL_NAME = "signal_vs_flux.csv"
ABSORPTION_NAME = "absorption.csv"
HOM_DATA_NAME = "hom.csv"
HOM_FIT_NAME = "hom_fit.yaml"
HOM_CURVE_POINTS = 401


def _write_frame(frame: pd.DataFrame, path: str) -> str:
    try:
        frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    except OSError as e:
        raise EtpaIOError(f"Cannot write {path}: {e}")
    return path


def plot_frame(points: Sequence[SeriesPoint]) -> pd.DataFrame:
    frame = pd.DataFrame(
        [(p.x, p.y, p.yerr, p.series) for p in points], columns=PLOT_COLUMNS
    )
    return frame


def write_report(result: AnalysisResult, out_dir: str) -> dict[str, str]:
    """
    Write every analysis artifact into out_dir.

    report_table.csv holds one block per (arm, delay), one row per
    concentration; estimates.csv is the same content in long form.

    Returns
    -------
    dict
        Artifact name -> path.
    """
    ensure_dir(out_dir)

    tables = []
    for arm in result.arms:
        for delay in result.delays:
            table = result.table(arm, delay)
            if not table.rows:
                continue
            frame = table.to_frame()
            frame.insert(0, "delay_fs", delay)
            frame.insert(0, "arm", arm.value)
            tables.append(frame)

    paths = {
        "report_table": _write_frame(
            pd.concat(tables, ignore_index=True) if tables else pd.DataFrame(),
            os.path.join(out_dir, REPORT_TABLE_NAME),
        ),
        "estimates": _write_frame(
            result.estimates_frame(), os.path.join(out_dir, ESTIMATES_NAME)
        ),
        "signal_vs_flux": _write_frame(
            plot_frame(result.signal_series), os.path.join(out_dir, SIGNAL_NAME)
        ),
        "absorption": _write_frame(
            plot_frame(result.absorption_series + absorption_fit_lines(result)),
            os.path.join(out_dir, ABSORPTION_NAME),
        ),
    }

    consistency = result.arms_consistent()
    if consistency:
        summary_path = os.path.join(out_dir, "arms_consistency.yaml")
        write_yaml(
            [
                {"delay_fs": float(d), "concentration_molar": float(c), "consistent": bool(ok)}
                for (d, c), ok in sorted(consistency.items())
            ],
            summary_path,
        )
        paths["arms_consistency"] = summary_path

    logger.info(f"Wrote report for '{result.name}' to {out_dir}")
    return paths


def hom_report(scan: HomScan) -> dict:
    p = scan.params
    report = {
        "shape": p.shape.value,
        "visibility": float(p.visibility),
        "fwhm_fs": float(p.fwhm),
        "bunching_ratio": float(p.bunching_ratio),
        "params": {k: float(getattr(p, k)) for k in ("a", "b", "c1", "c2", "d")},
        "errors": {k: float(v) for k, v in p.errors.items()},
        "chi2": float(p.chi2),
        "dof": int(p.dof),
        "delay_points": int(len(scan.delays)),
    }
    if p.overshoot:
        report["overshoot"] = True
    return report


def write_hom_report(scan: HomScan, out_dir: str) -> dict[str, str]:
    """hom_fit.yaml with the fitted parameters and hom.csv with the data and
    the fitted curve as two series."""
    ensure_dir(out_dir)
    p = scan.params

    x_fit = np.linspace(scan.delays.min(), scan.delays.max(), HOM_CURVE_POINTS)
    if p.d == 0:
        y_fit = np.full_like(x_fit, p.a)
    else:
        y_fit = hom_curve(x_fit, p.a, p.b, p.c1, p.c2, p.d)
    frame = pd.concat(
        [
            pd.DataFrame(
                {"x": scan.delays, "y": scan.rates, "yerr": scan.errors, "series": "data"}
            ),
            pd.DataFrame({"x": x_fit, "y": y_fit, "yerr": 0.0, "series": "fit"}),
        ],
        ignore_index=True,
    )

    fit_path = os.path.join(out_dir, HOM_FIT_NAME)
    write_yaml(hom_report(scan), fit_path)
    return {
        "hom_fit": fit_path,
        "hom_data": _write_frame(frame, os.path.join(out_dir, HOM_DATA_NAME)),
    }


def default_table_arm(result: AnalysisResult) -> Arm:
    return Arm.SAMPLE if Arm.SAMPLE in result.arms else result.arms[0]
