"""
Analysis of a counts table: cross-sections by every method, per concentration,
for both arms and every delay, plus the signal-vs-flux and absorption series
behind the plots.

For each run (replica), arm and delay the solvent series is paired point by
point (same pump power) with the series at each concentration:

* standard scheme, coincidences (C.C.): fit R_solv - R_sam against R_solv,
  sigma = slope / (c l N_A)
* standard scheme, singles (S.C.): the same with R1 + R2
* g2 scheme: 1 - g2_solv / g2_sam per pump point, weighted mean over points
* slope ratio: 1 - m1 m2 / m12 from the R_sam vs R_solv slopes

Per-run estimates are then combined across runs with the configured reducer.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import Field

from etpasim.core import (
    Arm,
    CountRecord,
    CrossSectionEstimate,
    EtpaModel,
    ExperimentConfig,
    Measurement,
    Method,
    RateTriple,
)
from etpasim.errors import EtpaError, MisalignedSeriesError, UsageError
from etpasim.estimators import (
    HomCurveParams,
    HomShape,
    corrected_rates,
    etpa_signal_g2,
    etpa_signal_slopes,
    fit_hom_curve,
    g2_zero,
    reference_correction,
    sensitivity_bound,
    sigma_from_signal,
    sigma_standard,
    weighted_linear_fit,
)
from etpasim.records import record_rates
from etpasim.stats import reduce, two_sample_consistent, weighted_mean

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3


class SeriesPoint(NamedTuple):
    series: str
    x: float
    y: float
    yerr: float


class ReportRow(EtpaModel):
    concentration: float = Field(gt=0)
    standard_cc: Optional[CrossSectionEstimate] = None
    standard_sc: Optional[CrossSectionEstimate] = None
    g2: Optional[CrossSectionEstimate] = None
    slope_ratio: Optional[CrossSectionEstimate] = None
    bound_cc: float = Field(ge=0)
    bound_sc: float = Field(ge=0)
    note: str = ""


class ReportTable(EtpaModel):
    title: str
    arm: Arm
    delay_tau: float
    rows: list[ReportRow]

    def to_frame(self) -> pd.DataFrame:
        records = []
        for row in self.rows:
            entry = {"concentration_molar": row.concentration}
            for name in ("standard_cc", "standard_sc", "g2", "slope_ratio"):
                est = getattr(row, name)
                entry[f"sigma_{name}"] = est.value if est else np.nan
                entry[f"sigma_{name}_err"] = est.abs_error if est else np.nan
            entry["bound_cc"] = row.bound_cc
            entry["bound_sc"] = row.bound_sc
            entry["note"] = row.note
            records.append(entry)
        return pd.DataFrame(records)


def series_label(arm: Arm, delay: float, concentration: float) -> str:
    return f"{arm.value} delay={delay:g}fs c={concentration:g}M"


@dataclass
class AnalysisResult:
    name: str
    estimates: dict = field(default_factory=dict)  # (arm, delay, c, method) -> estimate
    bounds: dict = field(default_factory=dict)  # (arm, delay, c) -> (cc, sc)
    signal_series: list[SeriesPoint] = field(default_factory=list)
    absorption_series: list[SeriesPoint] = field(default_factory=list)
    reference_factors: dict = field(default_factory=dict)  # (run, delay, c) -> f
    skipped: dict = field(default_factory=dict)  # (arm, delay, c) -> reason

    @property
    def arms(self) -> list[Arm]:
        return sorted({k[0] for k in self.estimates}, key=lambda a: a.value, reverse=True)

    @property
    def delays(self) -> list[float]:
        return sorted({k[1] for k in self.estimates}, key=abs)

    @property
    def concentrations(self) -> list[float]:
        return sorted({k[2] for k in self.estimates})

    def estimate(
        self, arm: Arm, delay: float, concentration: float, method: Method
    ) -> Optional[CrossSectionEstimate]:
        return self.estimates.get((arm, delay, concentration, method))

    def table(self, arm: Arm = Arm.SAMPLE, delay: Optional[float] = None) -> ReportTable:
        """One row per concentration; the delay closest to zero by default."""
        if delay is None:
            delays = [d for d in self.delays if (arm, d) in {(k[0], k[1]) for k in self.estimates}]
            if not delays:
                raise UsageError(f"no {arm.value}-arm estimates to report")
            delay = delays[0]

        rows = []
        for c in self.concentrations:
            if (arm, delay, c) not in self.bounds:
                continue
            bound_cc, bound_sc = self.bounds[(arm, delay, c)]
            rows.append(
                ReportRow(
                    concentration=c,
                    standard_cc=self.estimate(arm, delay, c, Method.STANDARD_COINCIDENCE),
                    standard_sc=self.estimate(arm, delay, c, Method.STANDARD_SINGLES),
                    g2=self.estimate(arm, delay, c, Method.G2),
                    slope_ratio=self.estimate(arm, delay, c, Method.SLOPE_RATIO),
                    bound_cc=bound_cc,
                    bound_sc=bound_sc,
                    note=self.skipped.get((arm, delay, c), ""),
                )
            )
        return ReportTable(
            title=f"{self.name}: {arm.value} arm, delay {delay:g} fs",
            arm=arm,
            delay_tau=delay,
            rows=rows,
        )

    def estimates_frame(self) -> pd.DataFrame:
        rows = [
            {
                "arm": arm.value,
                "delay_fs": delay,
                "concentration_molar": c,
                "method": method.value,
                "value": est.value,
                "abs_error": est.abs_error,
                "consistent_with_zero": est.consistent_with_zero,
            }
            for (arm, delay, c, method), est in sorted(
                self.estimates.items(),
                key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2], kv[0][3].value),
            )
        ]
        return pd.DataFrame(rows)

    def arms_consistent(self, n_sigma: float = 2.0, method: Method = Method.G2) -> dict:
        """Per (delay, concentration): whether sample and reference arm agree
        within n_sigma combined errors."""
        result = {}
        for (arm, delay, c, m), sam in self.estimates.items():
            if arm != Arm.SAMPLE or m != method:
                continue
            ref = self.estimate(Arm.REFERENCE, delay, c, method)
            if ref is None:
                continue
            result[(delay, c)] = two_sample_consistent(
                Measurement(value=sam.value, error=sam.abs_error),
                Measurement(value=ref.value, error=ref.abs_error),
                n_sigma,
            )
        return result


@dataclass
class _PointResult:
    pump: float
    signal: Measurement
    x_cc: float
    absorbed_cc: Measurement
    x_sc: float
    absorbed_sc: Measurement


def _group_rates(records: Sequence[CountRecord], config: ExperimentConfig) -> dict:
    """(run, arm, delay, c) -> [(pump, RateTriple)] sorted by pump."""
    groups = defaultdict(list)
    for record in records:
        rates = record_rates(record, config.detector, config.analysis.accidentals)
        key = (record.run_id, record.arm, record.delay_tau, record.concentration)
        groups[key].append((record.pump_power, rates))
    for series in groups.values():
        series.sort(key=lambda item: item[0])
    return groups


def _aligned(solvent, sample, what: str):
    pumps_solv = [p for p, _ in solvent]
    pumps_sam = [p for p, _ in sample]
    if pumps_solv != pumps_sam:
        raise MisalignedSeriesError(
            f"{what}: pump powers {pumps_sam} do not match the solvent series {pumps_solv}"
        )
    return [r for _, r in solvent], [r for _, r in sample]


def _point_results(pumps, solvent: list[RateTriple], sample: list[RateTriple], tau_c):
    points = []
    for pump, solv_raw, sam_raw in zip(pumps, solvent, sample):
        cs = corrected_rates(solv_raw)
        cm = corrected_rates(sam_raw)
        signal = etpa_signal_g2(g2_zero(cs, tau_c), g2_zero(cm, tau_c))
        points.append(
            _PointResult(
                pump=pump,
                signal=signal,
                x_cc=cs.r12,
                absorbed_cc=Measurement(
                    value=cs.r12 - cm.r12, error=float(np.hypot(cs.err12, cm.err12))
                ),
                x_sc=cs.r1 + cs.r2,
                absorbed_sc=Measurement(
                    value=(cs.r1 + cs.r2) - (cm.r1 + cm.r2),
                    error=float(np.sqrt(cs.err1**2 + cs.err2**2 + cm.err1**2 + cm.err2**2)),
                ),
            )
        )
    return points


def _slope(x, y: Sequence[Measurement], x_err: Optional[Sequence[float]] = None) -> Measurement:
    """Weighted slope of y against x. With x errors the fit is repeated with
    the effective variance y_err^2 + slope^2 x_err^2."""
    y_val = [m.value for m in y]
    y_err = np.array([m.error for m in y])
    fit = weighted_linear_fit(x, y_val, y_err)
    if x_err is not None:
        effective = np.sqrt(y_err**2 + (fit.slope.value * np.asarray(x_err)) ** 2)
        fit = weighted_linear_fit(x, y_val, effective)
    return fit.slope


def _run_estimates(points, solvent, sample, c, path_length) -> tuple[dict, Optional[str]]:
    """Estimates of one run at one concentration, plus the reason the
    slope-based methods were left out, if they were."""
    estimates = {}
    signal = weighted_mean([p.signal.value for p in points], [p.signal.error for p in points])
    estimates[Method.G2] = sigma_from_signal(signal, c, path_length, Method.G2)

    if len(points) < MIN_FIT_POINTS:
        reason = f"only {len(points)} pump powers, slope-based methods skipped"
        logger.warning(f"{reason} at c={c:g} M")
        return estimates, reason

    try:
        m_cc = _slope([p.x_cc for p in points], [p.absorbed_cc for p in points])
        m_sc = _slope([p.x_sc for p in points], [p.absorbed_sc for p in points])
        estimates[Method.STANDARD_COINCIDENCE] = sigma_standard(
            m_cc, c, path_length, Method.STANDARD_COINCIDENCE
        )
        estimates[Method.STANDARD_SINGLES] = sigma_standard(
            m_sc, c, path_length, Method.STANDARD_SINGLES
        )

        cs = [corrected_rates(r) for r in solvent]
        cm = [corrected_rates(r) for r in sample]
        slopes = []
        for attr, err in (("r1", "err1"), ("r2", "err2"), ("r12", "err12")):
            slopes.append(
                _slope(
                    [getattr(s, attr) for s in cs],
                    [Measurement(value=getattr(m, attr), error=getattr(m, err)) for m in cm],
                    x_err=[getattr(s, err) for s in cs],
                )
            )
        estimates[Method.SLOPE_RATIO] = sigma_from_signal(
            etpa_signal_slopes(*slopes), c, path_length, Method.SLOPE_RATIO
        )
    except EtpaError as e:
        reason = f"slope-based estimate failed: {e}"
        logger.warning(f"{reason} at c={c:g} M")
        return estimates, reason

    return estimates, None


def analyze(
    records: Sequence[CountRecord],
    config: ExperimentConfig,
    apply_reference_correction: Optional[bool] = None,
) -> AnalysisResult:
    """
    Cross-sections, bounds and plot series from a set of count records.

    Parameters
    ----------
    records : sequence of CountRecord
        Simulated or ingested counts; may hold several runs (replicas).
    config : ExperimentConfig
        Supplies the detector window, accidentals mode, path length and the
        replica reducer.
    apply_reference_correction : bool, optional
        Override config.analysis.reference_correction.

    Raises
    ------
    UsageError
        No records, no solvent baseline or no sample concentration.
    MisalignedSeriesError
        Sample and solvent series taken at different pump powers.
    DegenerateRateError
        A baseline-corrected rate that is not positive.
    """
    if not records:
        raise UsageError("no records to analyze")
    if apply_reference_correction is None:
        apply_reference_correction = config.analysis.reference_correction

    groups = _group_rates(records, config)
    concentrations = sorted({k[3] for k in groups})
    if 0.0 not in concentrations:
        raise UsageError("missing solvent baseline: no records at concentration 0")
    if len(concentrations) < 2:
        raise UsageError("no sample concentrations to analyze")

    tau_c = config.detector.coincidence_window_tau_c
    path_length = config.sample.analysis_path_length
    reducer = config.analysis.replica_reducer
    result = AnalysisResult(name=config.name)

    per_run = defaultdict(list)  # (arm, delay, c, method) -> [estimate]
    per_point = defaultdict(list)  # (arm, delay, c, pump) -> [_PointResult]
    bounds = defaultdict(list)  # (arm, delay, c) -> [(cc, sc)]

    runs = sorted({k[0] for k in groups})
    for run_id, arm, delay in sorted({(k[0], k[1], k[2]) for k in groups}, key=str):
        solvent_key = (run_id, arm, delay, 0.0)
        if solvent_key not in groups:
            raise UsageError(
                f"missing solvent baseline for run {run_id}, {arm.value} arm, "
                f"delay {delay:g} fs"
            )
        for c in concentrations[1:]:
            key = (run_id, arm, delay, c)
            if key not in groups:
                continue
            what = f"run {run_id}, {arm.value} arm, delay {delay:g} fs, c={c:g} M"
            pumps = [p for p, _ in groups[solvent_key]]
            solvent, sample = _aligned(groups[solvent_key], groups[key], what)

            ref_key = (run_id, Arm.REFERENCE, delay, c)
            ref_solvent_key = (run_id, Arm.REFERENCE, delay, 0.0)
            # The reference arm is the drift monitor and is never rescaled by itself
            if (
                apply_reference_correction
                and arm == Arm.SAMPLE
                and ref_key in groups
                and ref_solvent_key in groups
            ):
                ref_solvent, ref = _aligned(groups[ref_solvent_key], groups[ref_key], what)
                correction = reference_correction(sample, ref, ref_solvent)
                sample = correction.series
                result.reference_factors[(run_id, delay, c)] = correction.factor

            points = _point_results(pumps, solvent, sample, tau_c)
            estimates, skipped = _run_estimates(points, solvent, sample, c, path_length)
            for method, est in estimates.items():
                per_run[(arm, delay, c, method)].append(est)
            if skipped:
                result.skipped[(arm, delay, c)] = f"run {run_id}: {skipped}"
            for p in points:
                per_point[(arm, delay, c, p.pump)].append(p)

            mean_cc = float(np.mean([p.x_cc for p in points]))
            mean_sc = float(np.mean([p.x_sc for p in points]))
            bounds[(arm, delay, c)].append(
                (
                    sensitivity_bound(mean_cc, c, path_length),
                    sensitivity_bound(mean_sc, c, path_length),
                )
            )

    for (arm, delay, c, method), estimates in per_run.items():
        combined = reduce(
            [e.value for e in estimates], [e.abs_error for e in estimates], reducer
        )
        result.estimates[(arm, delay, c, method)] = CrossSectionEstimate(
            value=combined.value, abs_error=combined.error, method=method, concentration=c
        )

    for key, values in bounds.items():
        result.bounds[key] = tuple(float(np.mean(v)) for v in zip(*values))

    for (arm, delay, c, pump), points in sorted(
        per_point.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2], kv[0][3])
    ):
        label = series_label(arm, delay, c)
        signal = reduce(
            [p.signal.value for p in points], [p.signal.error for p in points], reducer
        )
        result.signal_series.append(
            SeriesPoint(label, float(np.mean([p.x_cc for p in points])), signal.value, signal.error)
        )
        absorbed = reduce(
            [p.absorbed_cc.value for p in points],
            [p.absorbed_cc.error for p in points],
            reducer,
        )
        result.absorption_series.append(
            SeriesPoint(label, float(np.mean([p.x_cc for p in points])), absorbed.value, absorbed.error)
        )

    logger.info(
        f"Analyzed {len(records)} records: {len(runs)} run(s), "
        f"{len(concentrations) - 1} concentration(s), {len(result.estimates)} estimates"
    )
    return result


def absorption_fit_lines(result: AnalysisResult) -> list[SeriesPoint]:
    """Straight lines through the absorption series, two points each, for
    plotting next to the data."""
    by_label = defaultdict(list)
    for point in result.absorption_series:
        by_label[point.series].append(point)

    lines = []
    for label, points in by_label.items():
        if len(points) < MIN_FIT_POINTS:
            continue
        x = [p.x for p in points]
        try:
            fit = weighted_linear_fit(x, [p.y for p in points], [p.yerr for p in points])
        except EtpaError:
            continue
        for xi in (min(x), max(x)):
            y = fit.params[0] * xi + fit.params[1]
            lines.append(SeriesPoint(f"{label} fit", xi, float(y), 0.0))
    return lines


@dataclass
class HomScan:
    delays: np.ndarray
    rates: np.ndarray
    errors: np.ndarray
    params: HomCurveParams


def hom_scan_points(records: Sequence[CountRecord]):
    """Mean coincidence rate and its Poisson error per delay, over every
    record of the scan. Returns (delays, rates, errors) sorted by delay."""
    frame = pd.DataFrame(
        {
            "delay": [r.delay_tau for r in records],
            "counts": [r.coincidences for r in records],
            "time": [r.integration_time for r in records],
        }
    )
    grouped = frame.groupby("delay", sort=True).agg(
        counts=("counts", "sum"), time=("time", "sum")
    )
    delays = grouped.index.to_numpy(dtype=float)
    rates = (grouped["counts"] / grouped["time"]).to_numpy()
    # A delay with zero counts still gets the one-count error
    errors = (np.sqrt(np.maximum(grouped["counts"], 1)) / grouped["time"]).to_numpy()
    return delays, rates, errors


def fit_hom_scan(
    records: Sequence[CountRecord], shape: Optional[HomShape] = None
) -> HomScan:
    """
    Fit the coincidence rate of a delay scan with the HOM model.

    Raises
    ------
    UsageError
        Fewer than 7 distinct delays.
    FitFailureError
        The fit did not converge; carries the residuals.
    """
    if not records:
        raise UsageError("no records in the delay scan")
    delays, rates, errors = hom_scan_points(records)
    params = fit_hom_curve(delays, rates, errors, shape=shape)
    logger.info(
        f"HOM fit over {len(delays)} delays: V={params.visibility:.4f}, "
        f"FWHM={params.fwhm:.2f} fs, ratio={params.bunching_ratio:.3f}"
    )
    return HomScan(delays=delays, rates=rates, errors=errors, params=params)
