"""
Rate-space estimators: baseline correction, g2(0), biphoton rate, the ETPA
signal in both schemes and the cross-sections derived from them.

Every function accepts plain floats or Measurement values where an input has an
uncertainty, and propagates errors to first order.
"""

import logging
import math
from typing import Union

from pydantic import Field

from etpasim.core import (
    ChannelParams,
    CrossSectionEstimate,
    EtpaModel,
    Measurement,
    Method,
    RateTriple,
    SECONDS_PER_NS,
    molecules_per_area,
)
from etpasim.errors import DegenerateRateError, ModelError

logger = logging.getLogger(__name__)

Number = Union[float, Measurement]


def as_measurement(x: Number) -> Measurement:
    if isinstance(x, Measurement):
        return x
    return Measurement(value=float(x), error=0.0)


class CorrectedRates(EtpaModel):
    """Baseline-corrected rates R~1, R~2, R~12 with their errors."""

    r1: float = Field(gt=0)
    r2: float = Field(gt=0)
    r12: float = Field(gt=0)
    err1: float = Field(0.0, ge=0)
    err2: float = Field(0.0, ge=0)
    err12: float = Field(0.0, ge=0)

    @property
    def product_ratio(self) -> float:
        return self.r1 * self.r2 / self.r12

    @property
    def relative_error(self) -> float:
        """Relative error of any product of powers +-1 of the three rates."""
        return math.sqrt(
            (self.err1 / self.r1) ** 2
            + (self.err2 / self.r2) ** 2
            + (self.err12 / self.r12) ** 2
        )


def corrected_rates(raw: RateTriple) -> CorrectedRates:
    """
    Subtract the dark/accidental baselines.

    Raises
    ------
    DegenerateRateError
        If any corrected rate is not positive.
    """
    r1 = raw.r1 - raw.phi1
    r2 = raw.r2 - raw.phi2
    r12 = raw.r12 - raw.phi12

    bad = [name for name, r in (("R1", r1), ("R2", r2), ("R12", r12)) if r <= 0]
    if bad:
        raise DegenerateRateError(
            f"Baseline-corrected rate(s) {', '.join(bad)} not positive: "
            f"R1~={r1:.6g}, R2~={r2:.6g}, R12~={r12:.6g}"
        )

    return CorrectedRates(
        r1=r1,
        r2=r2,
        r12=r12,
        err1=math.hypot(raw.err1, raw.phi_err1),
        err2=math.hypot(raw.err2, raw.phi_err2),
        err12=math.hypot(raw.err12, raw.phi_err12),
    )


def g2_zero(corrected: CorrectedRates, tau_c: float) -> Measurement:
    """g2(0) = R~12 / (tau_c R~1 R~2), with tau_c in ns."""
    if tau_c <= 0:
        raise DegenerateRateError(f"coincidence window must be > 0 ns, got {tau_c}")

    value = corrected.r12 / (tau_c * SECONDS_PER_NS * corrected.r1 * corrected.r2)
    return Measurement(value=value, error=value * corrected.relative_error)


def biphoton_rate(corrected: CorrectedRates, channel: ChannelParams) -> Measurement:
    """Pair rate reaching the cuvette, independent of every linear loss."""
    if channel.beta1 == 0 or channel.beta2 == 0:
        raise DegenerateRateError("beam splitter routing beta1, beta2 must be > 0")

    value = channel.beta12 / (channel.beta1 * channel.beta2) * corrected.product_ratio
    return Measurement(value=value, error=value * corrected.relative_error)


def etpa_signal_g2(solv: Number, sam: Number) -> Measurement:
    """Fraction of pairs lost to ETPA, 1 - g2_solv / g2_sam. May be negative."""
    solv, sam = as_measurement(solv), as_measurement(sam)
    if sam.value <= 0:
        raise DegenerateRateError(f"sample g2(0) must be > 0, got {sam.value}")

    ratio = solv.value / sam.value
    error = math.hypot(solv.error / sam.value, ratio * sam.error / sam.value)
    return Measurement(value=1 - ratio, error=error)


def _column(concentration: float, path_length: float) -> float:
    if concentration <= 0:
        raise ModelError(
            f"cross-sections need a concentration > 0, got {concentration}"
        )
    return molecules_per_area(concentration, path_length)


def sigma_from_signal(
    signal: Number, concentration: float, path_length: float, method: Method
) -> CrossSectionEstimate:
    """Cross-section signal / (c l N_A) for a pair-loss fraction."""
    signal = as_measurement(signal)
    column = _column(concentration, path_length)
    return CrossSectionEstimate(
        value=signal.value / column,
        abs_error=signal.error / column,
        method=method,
        concentration=concentration,
    )


def sigma_from_g2(
    signal: Number, concentration: float, path_length: float
) -> CrossSectionEstimate:
    return sigma_from_signal(signal, concentration, path_length, Method.G2)


def sigma_standard(
    slope: Number,
    concentration: float,
    path_length: float,
    method: Method = Method.STANDARD_COINCIDENCE,
) -> CrossSectionEstimate:
    """Cross-section m / (c l N_A) from the slope of absorbed vs incident rate."""
    slope = as_measurement(slope)
    column = _column(concentration, path_length)
    return CrossSectionEstimate(
        value=slope.value / column,
        abs_error=slope.error / column,
        method=method,
        concentration=concentration,
    )


def etpa_signal_slopes(m1: Number, m2: Number, m12: Number) -> Measurement:
    """1 - m1 m2 / m12 from the sample-vs-solvent slopes of both singles and
    the coincidences."""
    m1, m2, m12 = as_measurement(m1), as_measurement(m2), as_measurement(m12)
    if m12.value <= 0:
        raise DegenerateRateError(f"coincidence slope must be > 0, got {m12.value}")

    ratio = m1.value * m2.value / m12.value
    error = math.sqrt(
        (m2.value / m12.value * m1.error) ** 2
        + (m1.value / m12.value * m2.error) ** 2
        + (ratio / m12.value * m12.error) ** 2
    )
    return Measurement(value=1 - ratio, error=error)


def sensitivity_bound(r_solv: float, concentration: float, path_length: float) -> float:
    """
    Smallest cross-section a transmission measurement can tell from zero at
    Poissonian precision: (1 / sqrt(R_solv)) / (c l N_A).
    """
    if r_solv <= 0:
        raise DegenerateRateError(f"solvent rate must be > 0, got {r_solv}")
    return (1 / math.sqrt(r_solv)) / _column(concentration, path_length)


def transmission_difference_significant(r_sam: float, r_solv: float) -> bool:
    """Whether the sample rate sits clearly below the solvent rate, each taken
    with half its Poisson spread."""
    return r_sam + math.sqrt(r_sam) / 2 <= r_solv - math.sqrt(r_solv) / 2
