"""
Noise-free rate predictions.

The chain for one sweep point is

    pair_rate_at_cuvette -> (etpa_survival, linear_survival) -> detected_rates

and `expected_rates` composes it from an ExperimentConfig.
"""

import logging
import math
from typing import Optional

import numpy as np
from pydantic import Field

from etpasim.core import (
    Arm,
    ChannelParams,
    DetectorParams,
    ExperimentConfig,
    Geometry,
    RateTriple,
    SampleParams,
    SourceParams,
    EtpaModel,
    FS_PER_PS,
    molecules_per_area,
)
from etpasim.errors import ModelError

logger = logging.getLogger(__name__)

# Gaussian exp(-(t/h)^2) has FWHM 2*h*sqrt(ln 2)
_FWHM_TO_HALF_WIDTH = 1 / (2 * math.sqrt(math.log(2)))


class SurvivalFactors(EtpaModel):
    eps_etpa: float = Field(1.0, ge=0, le=1)
    eta_linear: float = Field(1.0, ge=0, le=1)


def hom_envelope(tau: float, te: float) -> float:
    """
    Bunching envelope of the HOM stage, 1 at zero delay.

    The width is set so that the envelope's FWHM equals the entanglement time.

    Parameters
    ----------
    tau : float
        Delay in fs.
    te : float
        Entanglement time in ps.
    """
    half_width = te * FS_PER_PS * _FWHM_TO_HALF_WIDTH
    return math.exp(-((tau / half_width) ** 2))


def pair_rate_at_cuvette(source: SourceParams) -> float:
    """Pairs per second reaching the cuvette (per HOM output arm when
    non-collinear)."""
    generated = source.pump_power * source.pairs_per_mw
    if source.geometry == Geometry.COLLINEAR:
        return generated

    bunching = 1 + source.hom_visibility * hom_envelope(
        source.delay_tau, source.correlation_time_te
    )
    return generated / 4 * bunching


def etpa_survival(sample: SampleParams, tau: float, te: float) -> float:
    """
    Probability that a pair crosses the cuvette without being absorbed by ETPA.

    Absorption is suppressed by exp(-(tau/Te)^2) once the two photons of a pair
    are delayed past the entanglement time.

    Raises
    ------
    ModelError
        If the survival probability falls outside [0, 1].
    """
    column = molecules_per_area(sample.effective_concentration, sample.path_length_l)
    envelope = math.exp(-((tau / (te * FS_PER_PS)) ** 2))
    survival = 1 - sample.sigma_e_true * envelope * column

    if not 0 <= survival <= 1:
        raise ModelError(
            f"pair survival {survival:.4g} outside [0, 1] "
            f"(sigma_e={sample.sigma_e_true:g}, c={sample.effective_concentration:g})"
        )

    return survival


def linear_survival(sample: SampleParams) -> float:
    """Per-photon transmission 10^(-alpha * c^gamma * l)."""
    c = sample.effective_concentration
    if c == 0 or sample.linear_attenuation_alpha == 0:
        return 1.0

    absorbance = (
        sample.linear_attenuation_alpha
        * c**sample.attenuation_exponent
        * sample.path_length_l
    )
    return 10 ** (-absorbance)


def detected_rates(
    pair_rate: float,
    surv: SurvivalFactors,
    channel: ChannelParams,
    det: DetectorParams,
) -> RateTriple:
    """
    Singles and coincidence rates seen by the two detectors.

    Parameters
    ----------
    pair_rate : float
        Pairs per second entering the sample channel.
    surv : SurvivalFactors
        ETPA pair survival and per-photon linear survival.
    channel : ChannelParams
        Transmission, coupling and beamsplitter routing.
    det : DetectorParams
        Dark rates, coincidence window and integration time.

    Returns
    -------
    RateTriple
        Rates including dark counts and accidentals, with Poisson errors
        sqrt(R / T).
    """
    r2_pairs = surv.eps_etpa * pair_rate
    s1 = surv.eta_linear * channel.eps1 * channel.kappa1
    s2 = surv.eta_linear * channel.eps2 * channel.kappa2

    phi1 = det.dark_rate_1
    phi2 = det.dark_rate_2
    r1 = s1 * channel.beta1 * r2_pairs + phi1
    r2 = s2 * channel.beta2 * r2_pairs + phi2
    phi12 = det.tau_c_seconds * r1 * r2
    r12 = s1 * s2 * channel.beta12 * r2_pairs + phi12

    t = det.integration_time
    return RateTriple(
        r1=r1,
        r2=r2,
        r12=r12,
        phi1=phi1,
        phi2=phi2,
        phi12=phi12,
        err1=math.sqrt(r1 / t),
        err2=math.sqrt(r2 / t),
        err12=math.sqrt(r12 / t),
        phi_err1=math.sqrt(phi1 / t),
        phi_err2=math.sqrt(phi2 / t),
    )


def pump_scale_for(config: ExperimentConfig, concentration: float) -> float:
    """Relative pump power during a run: solvent runs see the nominal power,
    every other run sees the configured drift."""
    return 1.0 if concentration == 0 else 1.0 + config.source.pump_drift


def expected_rates(
    config: ExperimentConfig,
    arm: Arm,
    pump_power: float,
    concentration: float,
    delay_tau: float,
    kappa_scale: tuple[float, float] = (1.0, 1.0),
    pump_scale: Optional[float] = None,
) -> RateTriple:
    """
    Rate triple for one sweep point.

    The reference arm never meets the sample, so it sees no ETPA and no linear
    loss, but shares the pump (and its drift) with the sample arm.
    """
    if pump_scale is None:
        pump_scale = pump_scale_for(config, concentration)

    source = config.source.model_copy(
        update={"pump_power": pump_power * pump_scale, "delay_tau": delay_tau}
    )
    pair_rate = pair_rate_at_cuvette(source)

    if arm == Arm.SAMPLE:
        sample = config.sample.at_concentration(concentration)
        surv = SurvivalFactors(
            eps_etpa=etpa_survival(sample, delay_tau, source.correlation_time_te),
            eta_linear=linear_survival(sample),
        )
    else:
        surv = SurvivalFactors()

    channel = scale_coupling(config.channel_for(arm), kappa_scale)
    return detected_rates(pair_rate, surv, channel, config.detector)


def scale_coupling(
    channel: ChannelParams, kappa_scale: tuple[float, float]
) -> ChannelParams:
    if kappa_scale == (1.0, 1.0):
        return channel
    k1, k2 = np.clip(
        [channel.kappa1 * kappa_scale[0], channel.kappa2 * kappa_scale[1]], 0.0, 1.0
    )
    return channel.model_copy(update={"kappa1": float(k1), "kappa2": float(k2)})
