import math

import numpy as np
import pytest

from etpasim.core import (
    ChannelParams,
    DetectorParams,
    Measurement,
    Method,
    RateTriple,
    molecules_per_area,
)
from etpasim.errors import DegenerateRateError, MisalignedSeriesError, ModelError, UsageError
from etpasim.estimators import (
    Expression,
    biphoton_rate,
    corrected_rates,
    etpa_signal_g2,
    etpa_signal_slopes,
    g2_zero,
    propagate_poisson_error,
    reference_correction,
    sensitivity_bound,
    sigma_from_g2,
    sigma_standard,
    transmission_difference_significant,
)
from etpasim.forward_model import SurvivalFactors, detected_rates
from etpasim.stats import mean, median, reduce, two_sample_consistent, weighted_mean


def _rates(r1, r2, r12, phi1=0.0, phi2=0.0, phi12=0.0, err=0.0):
    return RateTriple(
        r1=r1,
        r2=r2,
        r12=r12,
        phi1=phi1,
        phi2=phi2,
        phi12=phi12,
        err1=err,
        err2=err,
        err12=err,
    )


class TestCorrectedRates:
    def test_baseline_subtracted(self):
        corrected = corrected_rates(_rates(1100.0, 1200.0, 150.0, 100.0, 200.0, 50.0))
        assert (corrected.r1, corrected.r2, corrected.r12) == (1000.0, 1000.0, 100.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateRateError) as e:
            corrected_rates(_rates(100.0, 100.0, 10.0, phi12=10.0))
        assert "R12" in str(e.value)

    def test_errors_combined(self):
        raw = RateTriple(r1=100.0, r2=100.0, r12=10.0, phi1=1.0, err1=3.0, phi_err1=4.0)
        assert corrected_rates(raw).err1 == pytest.approx(5.0)


class TestG2:
    def test_value(self):
        corrected = corrected_rates(_rates(1e5, 1e5, 1e4))
        assert g2_zero(corrected, 1.0).value == pytest.approx(1000.0)

    def test_window_must_be_positive(self):
        with pytest.raises(DegenerateRateError):
            g2_zero(corrected_rates(_rates(1e5, 1e5, 1e4)), 0.0)

    def test_signal(self):
        signal = etpa_signal_g2(Measurement(value=100.0), Measurement(value=110.0))
        assert signal.value == pytest.approx(1 - 100 / 110)

    def test_signal_may_be_negative(self):
        signal = etpa_signal_g2(110.0, 100.0)
        assert signal.value == pytest.approx(-0.1)

    def test_signal_error(self):
        signal = etpa_signal_g2(
            Measurement(value=100.0, error=1.0), Measurement(value=100.0, error=1.0)
        )
        assert signal.value == 0.0
        assert signal.error == pytest.approx(math.sqrt(2) / 100)
        assert signal.consistent_with_zero


class TestBiphotonRate:
    def test_lossless_split(self):
        channel = ChannelParams()
        corrected = corrected_rates(_rates(0.75e5, 0.75e5, 0.5e5))
        assert biphoton_rate(corrected, channel).value == pytest.approx(1e5)

    def test_independent_of_linear_losses(self):
        det = DetectorParams(dark_rate_1=300.0, dark_rate_2=500.0)
        estimates = []
        for eps1, kappa2, eta in [(1.0, 1.0, 1.0), (0.3, 0.6, 0.5), (0.9, 0.2, 0.7)]:
            channel = ChannelParams(eps1=eps1, kappa2=kappa2)
            raw = detected_rates(
                2e5, SurvivalFactors(eps_etpa=0.97, eta_linear=eta), channel, det
            )
            estimates.append(biphoton_rate(corrected_rates(raw), channel).value)

        assert estimates == pytest.approx([0.97 * 2e5] * 3, rel=1e-12)


class TestCrossSections:
    def test_sigma_from_g2(self):
        column = molecules_per_area(5e-6, 1.0)
        est = sigma_from_g2(Measurement(value=0.02517, error=0.001), 5e-6, 1.0)

        assert est.method == Method.G2
        assert est.value == pytest.approx(0.02517 / column)
        assert est.abs_error == pytest.approx(0.001 / column)

    def test_sigma_standard(self):
        est = sigma_standard(0.05, 1e-3, 1.0, Method.STANDARD_SINGLES)
        assert est.value == pytest.approx(0.05 / molecules_per_area(1e-3, 1.0))
        assert est.method == Method.STANDARD_SINGLES

    def test_needs_a_concentration(self):
        with pytest.raises(ModelError):
            sigma_standard(0.05, 0.0, 1.0)

    def test_slope_signal(self):
        signal = etpa_signal_slopes(0.9, 0.9, 0.81 * 0.98)
        assert signal.value == pytest.approx(1 - 1 / 0.98)

        signal = etpa_signal_slopes(0.9, 0.9, 0.81 / 0.98)
        assert signal.value == pytest.approx(0.02)

    def test_slope_signal_degenerate(self):
        with pytest.raises(DegenerateRateError):
            etpa_signal_slopes(0.9, 0.9, 0.0)


class TestSensitivity:
    def test_bound_micromolar(self):
        assert sensitivity_bound(1e5, 10e-6, 1.0) == pytest.approx(5.25e-19, rel=5e-3)

    def test_bound_millimolar(self):
        assert sensitivity_bound(1e5, 10e-3, 1.0) == pytest.approx(5.25e-22, rel=5e-3)

    def test_bound_needs_a_rate(self):
        with pytest.raises(DegenerateRateError):
            sensitivity_bound(0.0, 1e-3, 1.0)

    def test_transmission_difference(self):
        assert transmission_difference_significant(9000.0, 10000.0)
        assert not transmission_difference_significant(9950.0, 10000.0)


class TestPoissonErrors:
    def test_rate(self):
        assert propagate_poisson_error([100], Expression.RATE, 10.0) == pytest.approx(1.0)

    def test_corrected_rate(self):
        assert propagate_poisson_error([100, 44], "corrected_rate") == pytest.approx(12.0)

    def test_g2(self):
        n1, n2, n12 = 40000, 90000, 2500
        t, tau_c = 10.0, 1.0
        g2 = n12 * t / (tau_c * 1e-9 * n1 * n2)
        err = propagate_poisson_error([n1, n2, n12], Expression.G2_ZERO, t, tau_c=tau_c)

        assert err == pytest.approx(g2 * math.sqrt(1 / n1 + 1 / n2 + 1 / n12))

    def test_biphoton_rate(self):
        channel = ChannelParams()
        n1, n2, n12 = 40000, 90000, 2500
        err = propagate_poisson_error(
            [n1, n2, n12], Expression.BIPHOTON_RATE, 1.0, channel=channel
        )
        value = 0.5 / 0.75**2 * n1 * n2 / n12
        assert err == pytest.approx(value * math.sqrt(1 / n1 + 1 / n2 + 1 / n12))

    def test_arity(self):
        with pytest.raises(UsageError):
            propagate_poisson_error([1, 2], Expression.G2_ZERO, tau_c=1.0)

    def test_g2_needs_window(self):
        with pytest.raises(UsageError):
            propagate_poisson_error([1, 2, 3], Expression.G2_ZERO)

    def test_g2_error_matches_replica_spread(self):
        """Independent Poisson counts: the first-order error tracks the scatter."""
        rng = np.random.default_rng(3)
        t, tau_c = 10.0, 1.0
        mean_counts = (40000, 90000, 2500)
        n1, n2, n12 = (rng.poisson(n, 10_000) for n in mean_counts)
        g2 = n12 * t / (tau_c * 1e-9 * n1 * n2)

        err = propagate_poisson_error(list(mean_counts), Expression.G2_ZERO, t, tau_c=tau_c)
        assert np.std(g2) == pytest.approx(err, rel=0.1)


class TestReferenceCorrection:
    def test_drift_removed(self):
        solvent = [_rates(1000.0 * k, 1000.0 * k, 100.0 * k) for k in (1, 2, 3)]
        during = [r.scaled(1.1) for r in solvent]
        sample = [_rates(900.0 * k, 900.0 * k, 81.0 * k).scaled(1.1) for k in (1, 2, 3)]

        correction = reference_correction(sample, during, solvent)

        assert correction.factor == pytest.approx(1 / 1.1)
        assert correction.series[0].r1 == pytest.approx(900.0)
        assert correction.series[2].r12 == pytest.approx(243.0)

    def test_misaligned(self):
        series = [_rates(1000.0, 1000.0, 100.0)]
        with pytest.raises(MisalignedSeriesError):
            reference_correction(series, series * 2, series)


class TestStats:
    def test_weighted_mean(self):
        m = weighted_mean([1.0, 3.0], [1.0, 1.0])
        assert m.value == pytest.approx(2.0)
        assert m.error == pytest.approx(1 / math.sqrt(2))

    def test_weighted_mean_prefers_exact_values(self):
        assert weighted_mean([1.0, 3.0], [0.0, 1.0]).value == 1.0

    def test_mean_and_median(self):
        values = [1.0, 2.0, 3.0, 4.0, 100.0]
        assert mean(values).value == pytest.approx(22.0)
        assert median(values).value == 3.0
        assert median(values).error == pytest.approx(
            mean(values).error * np.sqrt(np.pi / 2)
        )

    def test_single_value_keeps_its_error(self):
        assert mean([5.0], [0.5]).error == 0.5

    def test_reduce(self):
        assert reduce([1.0, 3.0], [1.0, 1.0], "weighted").value == pytest.approx(2.0)
        with pytest.raises(ValueError):
            reduce([1.0], [1.0], "mode")

    def test_two_sample(self):
        a = Measurement(value=1.0, error=0.3)
        b = Measurement(value=1.5, error=0.4)
        assert two_sample_consistent(a, b)
        assert not two_sample_consistent(a, b, n_sigma=0.5)
