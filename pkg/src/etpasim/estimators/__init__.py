from etpasim.estimators.fitting import (
    FitResult,
    HomCurveParams,
    HomShape,
    fit_hom_curve,
    hom_curve,
    hom_fwhm,
    weighted_linear_fit,
)
from etpasim.estimators.poisson import Expression, propagate_poisson_error
from etpasim.estimators.rates import (
    CorrectedRates,
    as_measurement,
    biphoton_rate,
    corrected_rates,
    etpa_signal_g2,
    etpa_signal_slopes,
    g2_zero,
    sensitivity_bound,
    sigma_from_g2,
    sigma_from_signal,
    sigma_standard,
    transmission_difference_significant,
)
from etpasim.estimators.reference import ReferenceCorrection, reference_correction

__all__ = [
    "CorrectedRates",
    "Expression",
    "FitResult",
    "HomCurveParams",
    "HomShape",
    "ReferenceCorrection",
    "as_measurement",
    "biphoton_rate",
    "corrected_rates",
    "etpa_signal_g2",
    "etpa_signal_slopes",
    "fit_hom_curve",
    "g2_zero",
    "hom_curve",
    "hom_fwhm",
    "propagate_poisson_error",
    "reference_correction",
    "sensitivity_bound",
    "sigma_from_g2",
    "sigma_from_signal",
    "sigma_standard",
    "transmission_difference_significant",
    "weighted_linear_fit",
]
