"""
Least-squares fits: straight lines through rate series and the five-parameter
HOM interference model

    f(x) = a + d * sinc(c1 (x - b)) * exp(-((x - b) / c2)^2)

with sinc(u) = sin(u) / u.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import Field, model_validator
from scipy.optimize import OptimizeWarning, brentq, curve_fit

from etpasim.core import EtpaModel, Measurement
from etpasim.errors import FitFailureError, UsageError

logger = logging.getLogger(__name__)

HOM_MIN_POINTS = 7
HOM_MAX_NFEV = 500
VISIBILITY_LIMIT = 1.05
PEAK_VISIBILITY_LIMIT = 1.5


@dataclass
class FitResult:
    """Best-fit parameters with covariance and goodness of fit."""

    params: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    names: tuple = field(default=("slope", "intercept"))

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    def measurement(self, name: str) -> Measurement:
        i = self.names.index(name)
        return Measurement(value=float(self.params[i]), error=float(self.errors[i]))

    @property
    def slope(self) -> Measurement:
        return self.measurement("slope")

    @property
    def intercept(self) -> Measurement:
        return self.measurement("intercept")


def weighted_linear_fit(
    x: Sequence[float], y: Sequence[float], y_err: Sequence[float]
) -> FitResult:
    """
    Minimum-chi2 straight line y = slope * x + intercept.

    Errors are taken as absolute. The sums are centred on the weighted mean of
    x to keep them well conditioned for rates of order 1e5.

    Raises
    ------
    UsageError
        Fewer than 3 points, or a non-positive error.
    FitFailureError
        All x equal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    y_err = np.asarray(y_err, dtype=float)

    if x.size < 3:
        raise UsageError(f"a line fit needs at least 3 points, got {x.size}")
    if not (x.shape == y.shape == y_err.shape):
        raise UsageError("x, y and y_err must have the same length")
    if np.any(y_err <= 0):
        raise UsageError("y errors must be > 0")
    if np.ptp(x) == 0:
        raise FitFailureError("singular design: all x values are equal")

    w = 1 / y_err**2
    s = w.sum()
    x_mean = np.sum(w * x) / s
    y_mean = np.sum(w * y) / s
    dx = x - x_mean
    sxx = np.sum(w * dx**2)

    slope = np.sum(w * dx * (y - y_mean)) / sxx
    intercept = y_mean - slope * x_mean

    var_slope = 1 / sxx
    cov = np.array(
        [
            [var_slope, -x_mean * var_slope],
            [-x_mean * var_slope, 1 / s + x_mean**2 * var_slope],
        ]
    )
    chi2 = float(np.sum(w * (y - slope * x - intercept) ** 2))

    return FitResult(
        params=np.array([slope, intercept]), covariance=cov, chi2=chi2, dof=x.size - 2
    )


class HomShape(str, Enum):
    DIP = "dip"
    PEAK = "peak"


class HomCurveParams(EtpaModel):
    a: float = Field(gt=0)
    b: float
    c1: float
    c2: float
    d: float
    visibility: float = Field(ge=0)
    fwhm: float = Field(ge=0)
    errors: dict[str, float] = {}
    chi2: float = 0.0
    dof: int = 0

    @model_validator(mode="after")
    def _visibility_within_limit(self):
        limit = visibility_limit(self.shape)
        if self.visibility > limit:
            raise ValueError(
                f"{self.shape.value} visibility {self.visibility:.3f} exceeds {limit}"
            )
        return self

    @property
    def overshoot(self) -> bool:
        """Visibility slightly above 1, tolerated but worth a look."""
        return self.visibility > 1

    @property
    def bunching_ratio(self) -> float:
        """Curve value at the centre over the baseline, (a + d) / a."""
        return (self.a + self.d) / self.a

    @property
    def shape(self) -> HomShape:
        return HomShape.DIP if self.d < 0 else HomShape.PEAK


def visibility_limit(shape: HomShape) -> float:
    """Largest |d| / a accepted from a fit. Dips cannot go below zero
    coincidences, bunching peaks only need a positive baseline."""
    return VISIBILITY_LIMIT if shape == HomShape.DIP else PEAK_VISIBILITY_LIMIT


def hom_curve(x, a, b, c1, c2, d):
    u = np.asarray(x, dtype=float) - b
    # np.sinc is sin(pi t) / (pi t)
    return a + d * np.sinc(c1 * u / np.pi) * np.exp(-((u / c2) ** 2))


def hom_fwhm(c1: float, c2: float) -> float:
    """Full width at half depth of the sinc-Gaussian envelope."""
    c1, c2 = abs(c1), abs(c2)
    if c1 == 0:
        return 2 * c2 * math.sqrt(math.log(2))

    def half_depth(u):
        return np.sinc(c1 * u / np.pi) * math.exp(-((u / c2) ** 2)) - 0.5

    # The envelope falls monotonically from 1 to below 0.5 before the first
    # sinc zero and before three Gaussian widths
    upper = min(math.pi / c1, 3 * c2)
    return 2 * brentq(half_depth, 0.0, upper)


def _initial_guess(x, y, shape: Optional[HomShape]):
    i_min, i_max = int(np.argmin(y)), int(np.argmax(y))
    if shape is None:
        med = np.median(y)
        shape = HomShape.DIP if med - y[i_min] >= y[i_max] - med else HomShape.PEAK
    i_ext = i_min if shape == HomShape.DIP else i_max
    b0 = x[i_ext]

    # Baseline from the quarter of the scan farthest from the feature
    far = np.argsort(np.abs(x - b0))[-max(2, len(x) // 4):]
    a0 = float(np.median(y[far]))
    d0 = float(y[i_ext] - a0)

    deep = np.abs(y - a0) >= abs(d0) / 2
    half = float(np.max(np.abs(x[deep] - b0))) if deep.any() else 0.0
    half = max(half, float(np.min(np.diff(np.unique(x)))))
    c2 = half / math.sqrt(math.log(2))

    return shape, i_ext, [max(a0, 1e-12), b0, 1 / c2, c2, d0]


def _flat(x, y, w) -> HomCurveParams:
    a = float(np.sum(w * y) / np.sum(w))
    return HomCurveParams(
        a=a,
        b=float(np.mean(x)),
        c1=0.0,
        c2=0.0,
        d=0.0,
        visibility=0.0,
        fwhm=0.0,
        chi2=float(np.sum(w * (y - a) ** 2)),
        dof=len(x) - 1,
    )


def fit_hom_curve(
    x: Sequence[float],
    y: Sequence[float],
    y_err: Optional[Sequence[float]] = None,
    shape: Optional[HomShape] = None,
) -> HomCurveParams:
    """
    Fit a HOM delay scan with the sinc-Gaussian model.

    Parameters
    ----------
    x : array-like
        Delays in fs.
    y : array-like
        Coincidence rates.
    y_err : array-like, optional
        One-sigma errors of y. Without them the fit is unweighted.
    shape : HomShape, optional
        Dip or peak. Guessed from the data when omitted.

    Returns
    -------
    HomCurveParams
        A flat result (d = 0, visibility 0) when the data show no feature.

    Raises
    ------
    FitFailureError
        When the optimizer does not converge within the iteration budget or
        returns an unphysical visibility; carries the residuals.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < HOM_MIN_POINTS:
        raise UsageError(
            f"a HOM fit needs at least {HOM_MIN_POINTS} delay points, got {x.size}"
        )
    order = np.argsort(x)
    x, y = x[order], y[order]

    if y_err is not None:
        y_err = np.asarray(y_err, dtype=float)[order]
        weighted = bool(np.all(y_err > 0))
    else:
        weighted = False
    w = 1 / y_err**2 if weighted else np.ones_like(y)

    if np.ptp(y) == 0:
        return _flat(x, y, w)

    shape, i_ext, p0 = _initial_guess(x, y, shape)
    if weighted and abs(p0[4]) < 3 * y_err[i_ext]:
        logger.info("No significant HOM feature in the scan, reporting a flat fit")
        return _flat(x, y, w)

    lower = [1e-12, -np.inf, 0.0, 1e-12, -np.inf]
    upper = [np.inf, np.inf, np.inf, np.inf, np.inf]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            popt, pcov = curve_fit(
                hom_curve,
                x,
                y,
                p0=p0,
                sigma=y_err if weighted else None,
                absolute_sigma=weighted,
                method="trf",
                bounds=(lower, upper),
                max_nfev=HOM_MAX_NFEV,
            )
    except (RuntimeError, ValueError, OptimizeWarning) as e:
        raise FitFailureError(
            f"HOM fit did not converge: {e}",
            residuals=y - hom_curve(x, *p0),
            params=p0,
        )

    a, b, c1, c2, d = (float(p) for p in popt)
    residuals = y - hom_curve(x, *popt)
    errors = dict(zip("a b c1 c2 d".split(), np.sqrt(np.clip(np.diag(pcov), 0, None))))

    if weighted and abs(d) < 2 * errors["d"]:
        logger.info(f"Fitted HOM amplitude {d:.4g} not significant, reporting a flat fit")
        return _flat(x, y, w)

    visibility = abs(d) / a
    limit = visibility_limit(HomShape.DIP if d < 0 else HomShape.PEAK)
    if visibility > limit:
        raise FitFailureError(
            f"HOM fit visibility {visibility:.3f} exceeds {limit}",
            residuals=residuals,
            params=popt,
        )
    if visibility > 1:
        logger.warning(f"HOM visibility {visibility:.3f} overshoots 1")

    return HomCurveParams(
        a=a,
        b=b,
        c1=c1,
        c2=c2,
        d=d,
        visibility=visibility,
        fwhm=hom_fwhm(c1, c2),
        errors={k: float(v) for k, v in errors.items()},
        chi2=float(np.sum(w * residuals**2)),
        dof=x.size - 5,
    )
