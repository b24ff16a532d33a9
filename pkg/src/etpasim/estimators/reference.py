"""Pump-drift correction from the reference arm, which sees the source but
never the sample."""

import logging
from typing import Sequence

import numpy as np
from pydantic import Field

from etpasim.core import EtpaModel, RateTriple
from etpasim.errors import DegenerateRateError, MisalignedSeriesError

logger = logging.getLogger(__name__)


class ReferenceCorrection(EtpaModel):
    factor: float = Field(gt=0)
    series: list[RateTriple]


def _singles_level(rates: RateTriple) -> float:
    return ((rates.r1 - rates.phi1) + (rates.r2 - rates.phi2)) / 2


def reference_correction(
    sample_series: Sequence[RateTriple],
    reference_series: Sequence[RateTriple],
    reference_solvent_series: Sequence[RateTriple],
) -> ReferenceCorrection:
    """
    Rescale a sample-arm series by the drift the reference arm saw.

    The factor is the mean, over the aligned sweep points, of the reference
    rate with solvent in the cuvette over the reference rate during the run
    being corrected. Singles and coincidences of the sample series are scaled
    by the same factor.

    Parameters
    ----------
    sample_series : sequence of RateTriple
        Sample-arm rates at one concentration, one per sweep point.
    reference_series : sequence of RateTriple
        Reference-arm rates recorded alongside sample_series.
    reference_solvent_series : sequence of RateTriple
        Reference-arm rates recorded during the solvent run.

    Raises
    ------
    MisalignedSeriesError
        If the three series differ in length or are empty.
    DegenerateRateError
        If a reference rate is not positive.
    """
    lengths = {len(sample_series), len(reference_series), len(reference_solvent_series)}
    if len(lengths) != 1 or 0 in lengths:
        raise MisalignedSeriesError(
            f"series must be aligned one-to-one and non-empty, got lengths "
            f"{len(sample_series)}, {len(reference_series)}, "
            f"{len(reference_solvent_series)}"
        )

    during = np.array([_singles_level(r) for r in reference_series])
    solvent = np.array([_singles_level(r) for r in reference_solvent_series])
    if np.any(during <= 0) or np.any(solvent <= 0):
        raise DegenerateRateError("reference-arm rates must be > 0")

    factor = float(np.mean(solvent / during))
    logger.debug(f"reference correction factor {factor:.6f} over {len(during)} points")

    return ReferenceCorrection(
        factor=factor, series=[r.scaled(factor) for r in sample_series]
    )
