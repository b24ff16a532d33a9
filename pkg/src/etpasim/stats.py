"""Reducers that collapse repeated measurements (replicas, pump-power points)
into a single value with an error."""

from typing import Optional, Sequence

import numpy as np

from etpasim.core import Measurement


def weighted_mean(
    values: Sequence[float], errors: Sequence[float]
) -> Measurement:
    """Inverse-variance weighted mean. Entries with zero error are exact and
    take precedence over the rest."""
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if values.size == 0:
        raise ValueError("weighted_mean of an empty series")

    exact = errors == 0
    if exact.any():
        return Measurement(value=float(np.mean(values[exact])), error=0.0)

    weights = 1 / errors**2
    value = np.sum(weights * values) / np.sum(weights)
    return Measurement(value=float(value), error=float(np.sqrt(1 / np.sum(weights))))


def mean(values: Sequence[float], errors: Optional[Sequence[float]] = None) -> Measurement:
    """Plain mean with its standard error from the scatter. A single value
    keeps its own error."""
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        error = 0.0 if errors is None else float(np.asarray(errors)[0])
        return Measurement(value=float(values[0]), error=error)

    return Measurement(
        value=float(np.mean(values)),
        error=float(np.std(values, ddof=1) / np.sqrt(values.size)),
    )


def median(values: Sequence[float], errors: Optional[Sequence[float]] = None) -> Measurement:
    values = np.asarray(values, dtype=float)
    sem = mean(values, errors).error

    # Asymptotic efficiency of the median for Gaussian data
    return Measurement(value=float(np.median(values)), error=sem * np.sqrt(np.pi / 2))


REDUCERS = {
    "weighted": weighted_mean,
    "mean": mean,
    "median": median,
}


def reduce(values, errors, reducer: str = "weighted") -> Measurement:
    try:
        return REDUCERS[reducer](values, errors)
    except KeyError:
        raise ValueError(
            f"Unknown reducer '{reducer}', choose from {', '.join(REDUCERS)}"
        )


def two_sample_consistent(a: Measurement, b: Measurement, n_sigma: float = 2.0) -> bool:
    """True when a and b differ by no more than n_sigma combined errors."""
    return abs(a.value - b.value) <= n_sigma * np.hypot(a.error, b.error)
