import math

import numpy as np
import pytest

from etpasim.errors import FitFailureError, UsageError
from etpasim.estimators import (
    HomCurveParams,
    HomShape,
    fit_hom_curve,
    hom_curve,
    hom_fwhm,
    weighted_linear_fit,
)
from etpasim.estimators.fitting import PEAK_VISIBILITY_LIMIT, VISIBILITY_LIMIT
from etpasim.tests.utils import hom_scan


class TestLinearFit:
    def test_exact_line(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        fit = weighted_linear_fit(x, 2 * x + 1, np.ones(4))

        assert fit.slope.value == pytest.approx(2.0)
        assert fit.intercept.value == pytest.approx(1.0)
        assert fit.chi2 == pytest.approx(0.0, abs=1e-20)
        assert fit.dof == 2

    def test_slope_error(self):
        """Unit errors: var(slope) = 1 / sum((x - mean x)^2)."""
        x = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        fit = weighted_linear_fit(x, x, np.ones(5))
        assert fit.slope.error == pytest.approx(1 / math.sqrt(10.0))

    def test_large_rates(self):
        x = np.array([1.0e5, 2.0e5, 3.0e5, 4.0e5])
        fit = weighted_linear_fit(x, 0.025 * x, np.sqrt(x))
        assert fit.slope.value == pytest.approx(0.025, rel=1e-10)

    def test_too_few_points(self):
        with pytest.raises(UsageError):
            weighted_linear_fit([1.0, 2.0], [1.0, 2.0], [1.0, 1.0])

    def test_bad_errors(self):
        with pytest.raises(UsageError):
            weighted_linear_fit([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [1.0, 0.0, 1.0])

    def test_singular(self):
        with pytest.raises(FitFailureError):
            weighted_linear_fit([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [1.0, 1.0, 1.0])


class TestHomModel:
    def test_curve_at_centre(self):
        assert hom_curve(0.0, 10.0, 0.0, 0.01, 100.0, -5.0) == pytest.approx(5.0)

    def test_gaussian_fwhm(self):
        c2 = 100.0
        assert hom_fwhm(0.0, c2) == pytest.approx(2 * c2 * math.sqrt(math.log(2)))

    def test_fwhm_scales_with_width(self):
        assert hom_fwhm(1 / 50.0, 50.0) == pytest.approx(2 * hom_fwhm(1 / 25.0, 25.0))

    def test_sinc_narrows_the_envelope(self):
        assert hom_fwhm(0.01, 100.0) < hom_fwhm(0.0, 100.0)


class TestHomFit:
    def test_noise_free_dip(self):
        x, y, _ = hom_scan(0.957)
        params = fit_hom_curve(x, y)

        assert params.shape == HomShape.DIP
        assert params.visibility == pytest.approx(0.957, abs=1e-4)
        assert params.fwhm == pytest.approx(200.0, abs=0.1)
        assert params.b == pytest.approx(0.0, abs=0.1)

    def test_noisy_dip(self):
        x, y, y_err = hom_scan(0.957, noise=0.05, seed=3)
        params = fit_hom_curve(x, y, y_err, shape=HomShape.DIP)

        assert params.visibility == pytest.approx(0.957, abs=0.02)
        assert params.fwhm == pytest.approx(200.0, abs=15.0)
        assert params.dof == 36

    def test_peak_doubles_the_rate(self):
        x, y, y_err = hom_scan(1.0, noise=0.01, seed=5, shape="peak")
        params = fit_hom_curve(x, y, y_err)

        assert params.shape == HomShape.PEAK
        assert params.bunching_ratio == pytest.approx(2.0, abs=0.1)

    def test_flat_scan(self):
        x = np.linspace(-300.0, 300.0, 41)
        params = fit_hom_curve(x, np.full(41, 1000.0), np.full(41, 30.0))

        assert params.visibility == 0.0
        assert params.a == pytest.approx(1000.0)

    def test_too_few_points(self):
        with pytest.raises(UsageError):
            fit_hom_curve(np.arange(6.0), np.ones(6))

    def test_non_convergence_reports_residuals(self, mocker):
        mocker.patch(
            "etpasim.estimators.fitting.curve_fit",
            side_effect=RuntimeError("Optimal parameters not found"),
        )
        x, y, y_err = hom_scan(0.957, noise=0.01, seed=1)

        with pytest.raises(FitFailureError) as e:
            fit_hom_curve(x, y, y_err)

        assert len(e.value.residuals) == 41
        assert e.value.exit_code == 3
        assert "residual rms" in str(e.value)


class TestVisibilityLimit:
    def _params(self, d, visibility):
        return HomCurveParams(
            a=1000.0, b=0.0, c1=0.01, c2=100.0, d=d, visibility=visibility, fwhm=150.0
        )

    def test_dip_above_limit_rejected(self):
        with pytest.raises(ValueError):
            self._params(-1100.0, 1.1)

    def test_peak_above_dip_limit_accepted(self):
        params = self._params(1100.0, 1.1)
        assert params.shape == HomShape.PEAK
        assert params.bunching_ratio == pytest.approx(2.1)

    def test_peak_limit(self):
        assert PEAK_VISIBILITY_LIMIT > VISIBILITY_LIMIT
        with pytest.raises(ValueError):
            self._params(1600.0, 1.6)

    def test_unphysical_dip_fails(self):
        x, y, _ = hom_scan(1.2)
        with pytest.raises(FitFailureError) as e:
            fit_hom_curve(x, y, shape=HomShape.DIP)

        assert "exceeds" in str(e.value)

    def test_noisy_peaks_fit(self):
        """Bunching peaks with 5% noise overshoot 1 often and must still fit."""
        ratios = []
        for seed in range(20):
            x, y, y_err = hom_scan(1.0, noise=0.05, seed=seed, shape="peak")
            params = fit_hom_curve(x, y, y_err, shape=HomShape.PEAK)
            ratios.append(params.bunching_ratio)

        assert all(1.5 < r < 2.5 for r in ratios)
        assert np.mean(ratios) == pytest.approx(2.0, abs=0.05)
