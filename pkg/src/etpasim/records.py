"""
The counts CSV: one row per (sweep point, replica), shared by simulated and
ingested data.

    run_id,arm,delay_fs,pump_mw,concentration_molar,integration_s,
    singles1,singles2,coincidences,dark1,dark2,seed

A comment line before the header may declare the units of the dimensional
columns, e.g.

    # units: delay=ps pump=W concentration=mM integration=s

Values are converted to fs, mW, mol/L and s on ingestion. Files written by
etpasim always carry the line with the internal units.
"""

import logging
import math
import os
import re
from typing import Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from etpasim.core import Accidentals, CountRecord, DetectorParams, RateTriple
from etpasim.errors import EtpaIOError, SchemaError, UsageError

logger = logging.getLogger(__name__)

COLUMNS = [
    "run_id",
    "arm",
    "delay_fs",
    "pump_mw",
    "concentration_molar",
    "integration_s",
    "singles1",
    "singles2",
    "coincidences",
    "dark1",
    "dark2",
    "seed",
]
HEADER = ",".join(COLUMNS)

FIELD_FOR_COLUMN = {
    "delay_fs": "delay_tau",
    "pump_mw": "pump_power",
    "concentration_molar": "concentration",
    "integration_s": "integration_time",
}
COUNT_COLUMNS = ["singles1", "singles2", "coincidences", "dark1", "dark2"]
FLOAT_COLUMNS = ["delay_fs", "pump_mw", "concentration_molar", "integration_s"]

# Column defaults when absent from an external file
OPTIONAL_COLUMNS = {"dark1": 0, "dark2": 0, "seed": 0, "run_id": "external"}

UNITS = {
    "delay": ("delay_fs", {"fs": 1.0, "ps": 1e3, "ns": 1e6}),
    "pump": ("pump_mw", {"mW": 1.0, "W": 1e3, "uW": 1e-3}),
    "concentration": (
        "concentration_molar",
        {"M": 1.0, "mM": 1e-3, "uM": 1e-6, "nM": 1e-9},
    ),
    "integration": ("integration_s", {"s": 1.0, "ms": 1e-3, "min": 60.0}),
}
INTERNAL_UNITS_LINE = "# units: delay=fs pump=mW concentration=M integration=s"

_UNITS_RE = re.compile(r"^#\s*units\s*:(.*)$", re.IGNORECASE)


def records_to_frame(records: Sequence[CountRecord]) -> pd.DataFrame:
    rows = []
    for r in records:
        rows.append(
            {
                "run_id": r.run_id,
                "arm": r.arm.value,
                "delay_fs": r.delay_tau,
                "pump_mw": r.pump_power,
                "concentration_molar": r.concentration,
                "integration_s": r.integration_time,
                "singles1": r.singles1,
                "singles2": r.singles2,
                "coincidences": r.coincidences,
                "dark1": r.dark1,
                "dark2": r.dark2,
                "seed": r.seed,
            }
        )
    return pd.DataFrame(rows, columns=COLUMNS)


def write_counts_csv(records: Sequence[CountRecord], path: str) -> str:
    frame = records_to_frame(records)
    # uint64 seeds do not fit pandas' default int64
    frame["seed"] = frame["seed"].astype("uint64")
    try:
        with open(path, "w", newline="") as f:
            f.write(INTERNAL_UNITS_LINE + "\n")
            frame.to_csv(f, index=False, lineterminator="\n", float_format="%.10g")
    except OSError as e:
        raise EtpaIOError(f"Cannot write counts file {path}: {e}")

    logger.info(f"Wrote {len(frame)} records to {path}")
    return path


def _parse_units(path: str) -> Optional[dict[str, float]]:
    """Conversion factor per column from the units comment, None if absent."""
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("#"):
                break
            match = _UNITS_RE.match(line.strip())
            if not match:
                continue

            factors = {}
            diagnostics = []
            for token in re.split(r"[,\s]+", match.group(1).strip()):
                if not token:
                    continue
                key, _, unit = token.partition("=")
                if key not in UNITS:
                    diagnostics.append(f"units line: unknown quantity '{key}'")
                    continue
                column, table = UNITS[key]
                if unit not in table:
                    diagnostics.append(
                        f"units line: unknown unit '{unit}' for {key}, "
                        f"expected one of {', '.join(table)}"
                    )
                    continue
                factors[column] = table[unit]
            if diagnostics:
                raise SchemaError(f"Bad units declaration in {path}", diagnostics)
            return factors
    return None


def _read_frame(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise EtpaIOError(f"Counts file {path} not found")
    try:
        return pd.read_csv(
            path,
            comment="#",
            dtype={"run_id": str, "arm": str, "seed": str},
            skipinitialspace=True,
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SchemaError(f"Cannot parse counts file {path}: {e}")


def _check_columns(frame: pd.DataFrame, path: str) -> pd.DataFrame:
    diagnostics = []
    present = list(frame.columns)
    for col in present:
        if col not in COLUMNS:
            diagnostics.append(f"unexpected column '{col}'")
    for col in COLUMNS:
        if col in present:
            continue
        if col in OPTIONAL_COLUMNS:
            if col in ("dark1", "dark2"):
                logger.warning(f"{path}: column '{col}' missing, assuming no dark counts")
            frame[col] = OPTIONAL_COLUMNS[col]
        else:
            diagnostics.append(f"missing column '{col}'")

    for col in FLOAT_COLUMNS + COUNT_COLUMNS:
        if col not in frame.columns:
            continue
        values = pd.to_numeric(frame[col], errors="coerce")
        bad = frame.index[values.isna()].tolist()
        if bad:
            rows = ", ".join(str(i + 1) for i in bad[:5])
            diagnostics.append(f"column '{col}': non-numeric values in row(s) {rows}")
        elif col in COUNT_COLUMNS and not (values == values.round()).all():
            diagnostics.append(f"column '{col}': counts must be integers")
        frame[col] = values

    # Seeds span the full uint64 range, so they stay exact integers
    seeds = frame["seed"].astype(str).str.strip()
    bad = frame.index[~seeds.str.fullmatch(r"\d+")].tolist()
    if bad:
        rows = ", ".join(str(i + 1) for i in bad[:5])
        diagnostics.append(f"column 'seed': not a non-negative integer in row(s) {rows}")
    else:
        frame["seed"] = [int(s) for s in seeds]

    if diagnostics:
        raise SchemaError(f"Counts file {path} does not match the schema", diagnostics)

    return frame[COLUMNS]


def ingest_external(path: str, strict: bool = False) -> list[CountRecord]:
    """
    Read a counts CSV into validated records in internal units.

    Parameters
    ----------
    path : str
        CSV file following the counts schema.
    strict : bool
        Raise on the first batch of invalid rows instead of dropping them.

    Returns
    -------
    list of CountRecord
        Rows that passed validation, in file order.

    Raises
    ------
    SchemaError
        With column-level diagnostics for missing, unexpected or non-numeric
        columns, and row-level diagnostics for invalid rows when strict.
    """
    units = _parse_units(path) if os.path.exists(path) else None
    frame = _check_columns(_read_frame(path), path)

    if units is None:
        logger.warning(f"{path}: no units line, assuming fs, mW, mol/L and s")
        units = {}
    for column, factor in units.items():
        frame[column] = frame[column] * factor

    records = []
    rejected = []
    for i, row in enumerate(frame.to_dict("records")):
        data = {FIELD_FOR_COLUMN.get(k, k): v for k, v in row.items()}
        for col in COUNT_COLUMNS:
            data[col] = int(data[col])
        try:
            records.append(CountRecord(**data))
        except ValidationError as e:
            reasons = "; ".join(err["msg"] for err in e.errors())
            rejected.append(f"row {i + 1}: {reasons}")

    if rejected:
        if strict:
            raise SchemaError(f"{len(rejected)} invalid row(s) in {path}", rejected)
        for msg in rejected:
            logger.warning(f"{path}: rejected {msg}")

    logger.info(f"Ingested {len(records)} records from {path}")
    return records


def read_counts_csv(path: str) -> list[CountRecord]:
    return ingest_external(path, strict=True)


def record_rates(
    record: CountRecord,
    detector: DetectorParams,
    accidentals: Accidentals = Accidentals.COMPUTED,
) -> RateTriple:
    """
    Rates and baselines of one record.

    Dark rates come from the record's dark counts. The accidental baseline is
    either tau_c R1 R2 or the detector's measured accidental rate.
    """
    t = record.integration_time
    r1, r2 = record.singles1 / t, record.singles2 / t
    e1, e2 = math.sqrt(record.singles1) / t, math.sqrt(record.singles2) / t

    if accidentals == Accidentals.MEASURED:
        if detector.measured_accidental_rate is None:
            raise UsageError(
                "measured accidentals need detector.measured_accidental_rate"
            )
        phi12, phi_err12 = detector.measured_accidental_rate, 0.0
    else:
        tau = detector.tau_c_seconds
        phi12 = tau * r1 * r2
        phi_err12 = tau * math.hypot(r2 * e1, r1 * e2)

    return RateTriple(
        r1=r1,
        r2=r2,
        r12=record.coincidences / t,
        phi1=record.dark1 / t,
        phi2=record.dark2 / t,
        phi12=phi12,
        err1=e1,
        err2=e2,
        err12=math.sqrt(record.coincidences) / t,
        phi_err1=math.sqrt(record.dark1) / t,
        phi_err2=math.sqrt(record.dark2) / t,
        phi_err12=phi_err12,
    )
