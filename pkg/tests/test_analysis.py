import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from timelens.analysis import (
    FitError,
    UnderResolvedError,
    comb_sample,
    compression_metrics,
    efficiency,
    fit_gaussian_peak,
    flux_through_filter,
    half_max_width,
    peak_enhancement,
    voigt_fit_deconvolve,
    voigt_fwhm,
    voigt_profile,
)
from timelens.photonics import FWHM_PER_SIGMA, FabryPerotFilter

DF = 1e6
F = (np.arange(8192) - 4096) * DF


def gauss(f, center, fw, peak=1.0):
    return peak * np.exp(-4 * np.log(2) * ((f - center) / fw) ** 2)


def lorentz(f, fw):
    g = fw / 2
    return g / np.pi / (f**2 + g**2)


def convolved_scan(detunings, fg, fl, step=0.25e6):
    """Gaussian (area 1) convolved with a Lorentzian by direct summation on a fine grid."""
    x = np.arange(-40e9, 40e9, step)
    s = fg / FWHM_PER_SIGMA
    gx = np.exp(-0.5 * (x / s) ** 2) / (s * np.sqrt(2 * np.pi))
    return np.array([np.sum(gx * lorentz(d - x, fl)) * step for d in detunings])


class TestEnhancement:
    def test_identity_and_scaling(self):
        i = gauss(F, 0, 68e6)
        assert peak_enhancement((F, i), (F, i)) == 1.0
        assert peak_enhancement((F, i), (F, 2 * i)) == 2.0

    def test_zero_input(self):
        with pytest.raises(ValueError):
            peak_enhancement((F, 0 * F), (F, gauss(F, 0, 1e8)))

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            peak_enhancement((F, gauss(F, 0, 1e8)), (F[:-1], gauss(F[:-1], 0, 1e8)))


class TestGaussianFit:
    def test_168_mhz_self_fit(self):
        fit = fit_gaussian_peak((F, gauss(F, 3e6, 168e6, 2.5)))
        assert fit.fwhm == pytest.approx(168e6, rel=5e-3)
        assert fit.center == pytest.approx(3e6, abs=0.01 * DF)
        assert fit.peak == pytest.approx(2.5, rel=1e-6)
        assert fit.residual_rms < 1e-8

    @settings(max_examples=30, deadline=None)
    @given(st.floats(8, 200), st.floats(-0.5, 0.5), st.floats(1e-6, 1e6))
    def test_recovers_sampled_gaussians(self, bins, frac, peak):
        fw = bins * DF
        fit = fit_gaussian_peak((F, gauss(F, frac * DF, fw, peak)))
        assert fit.fwhm == pytest.approx(fw, rel=5e-3)
        assert fit.peak == pytest.approx(peak, rel=5e-3)

    def test_under_resolved(self):
        with pytest.raises(UnderResolvedError):
            fit_gaussian_peak((F, gauss(F, 0, 3 * DF)))

    def test_half_max_needs_tails(self):
        with pytest.raises(FitError):
            half_max_width(F, np.ones_like(F))


class TestEfficiency:
    def test_pure_gaussian(self):
        i = gauss(F, 0, 168e6)
        fit = fit_gaussian_peak((F, i))
        # +-3 FWHM is +-7.06 sigma
        oracle = special.erf(3 * FWHM_PER_SIGMA / np.sqrt(2))
        assert efficiency((F, i), fit) == pytest.approx(oracle, abs=1e-9)

    def test_two_disjoint_gaussians(self):
        i = gauss(F, -1e9, 100e6) + gauss(F, 1e9, 100e6)
        fit = fit_gaussian_peak((F, i))
        assert efficiency((F, i), fit) == pytest.approx(0.5, abs=1e-4)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    def test_rescaling_invariance(self, a, b):
        i_in = gauss(F, 0, 1.5e9)
        i_out = gauss(F, 0, 60e6, 10) + gauss(F, 500e6, 100e6, 2)
        m = compression_metrics((F, i_in), (F, i_out), 1560e-9)
        both = compression_metrics((F, a * i_in), (F, a * i_out), 1560e-9)
        out_only = compression_metrics((F, i_in), (F, b * i_out), 1560e-9)
        assert both.enhancement == pytest.approx(m.enhancement, rel=1e-9)
        assert both.compression_factor == pytest.approx(m.compression_factor, rel=1e-6)
        assert out_only.efficiency == pytest.approx(m.efficiency, rel=1e-9)

    def test_gaussian_lossless_bound(self):
        i_in = gauss(F, 0, 1.5e9)
        fw = 100e6
        i_out = gauss(F, 0, fw, 1.5e9 / fw)  # same energy, narrower
        m = compression_metrics((F, i_in), (F, i_out), 1560e-9)
        assert m.enhancement <= m.compression_factor * (1 + 1e-6)
        assert 0 <= m.efficiency <= 1

    def test_pm_conversion(self):
        m = compression_metrics((F, gauss(F, 0, 1.5e9)), (F, gauss(F, 0, 168e6)), 1560e-9)
        assert m.fwhm_out_pm == pytest.approx(1.363, rel=2e-3)


class TestVoigt:
    def test_profile_matches_convolution(self):
        x = np.linspace(-2e9, 2e9, 41)
        ref = convolved_scan(x, 186e6, 420e6)
        got = voigt_profile(x, 0.0, 186e6 / FWHM_PER_SIGMA, 210e6)
        assert np.max(np.abs(got - ref)) < 1e-4 * ref.max()

    def test_round_trip_186(self):
        det = np.linspace(-1.5e9, 1.5e9, 61)
        scan = 7.0 * convolved_scan(det - 20e6, 186e6, 420e6)
        fit = voigt_fit_deconvolve(det, scan, 420e6)
        assert fit.gaussian_fwhm == pytest.approx(186e6, rel=0.02)
        assert fit.lorentzian_fwhm == 420e6
        assert fit.center == pytest.approx(20e6, abs=1e6)

    def test_zero_lorentzian_is_gaussian_fit(self):
        det = np.linspace(-1e9, 1e9, 81)
        fit = voigt_fit_deconvolve(det, gauss(det, 0, 300e6), 0.0)
        assert fit.gaussian_fwhm == pytest.approx(300e6, rel=1e-3)

    def test_pure_lorentzian(self):
        det = np.linspace(-3e9, 3e9, 121)
        fit = voigt_fit_deconvolve(det, lorentz(det, 420e6), 420e6)
        assert fit.gaussian_fwhm < 0.02 * 420e6

    def test_approximate_total_width(self):
        det = np.linspace(-3e9, 3e9, 60001)
        y = voigt_profile(det, 0, 186e6 / FWHM_PER_SIGMA, 210e6)
        assert half_max_width(det, y)[0] == pytest.approx(voigt_fwhm(186e6, 420e6), rel=1e-3)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            voigt_fit_deconvolve(np.linspace(-1, 1, 5), np.ones(5), 0.1)

    def test_narrow_scan(self):
        det = np.linspace(-400e6, 400e6, 41)
        with pytest.raises(FitError):
            voigt_fit_deconvolve(det, convolved_scan(det, 186e6, 420e6), 420e6)


class TestComb:
    def test_flat_envelope(self):
        c = comb_sample((F, np.ones_like(F)), 20e6)
        assert c.modes_above(0.999) == c.intensities.size > 100

    def test_samples_envelope_exactly(self, rng):
        env = rng.uniform(size=F.size)
        c = comb_sample((F, env), 37e6, offset=3e6)
        idx = np.rint((c.mode_frequencies - F[0]) / DF).astype(int)
        np.testing.assert_array_equal(c.intensities, env[idx])
        np.testing.assert_allclose(np.diff(c.mode_frequencies), 37e6)

    def test_20mhz_over_168mhz(self):
        c = comb_sample((F, gauss(F, 0, 168e6)), 20e6, offset=10e6)
        assert c.modes_above(0.5) == 8

    def test_80mhz_over_123mhz_single_mode(self):
        c = comb_sample((F, gauss(F, 0, 123e6)), 80e6)
        assert c.modes_above(0.5) == 1

    def test_rep_rate_below_bin(self):
        with pytest.raises(ValueError):
            comb_sample((F, np.ones_like(F)), 0.5e6)


class TestFilterFlux:
    filt = FabryPerotFilter(420e6, 147.8e9)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(50e6, 5e9))
    def test_monotone_in_detuning(self, width):
        det = np.linspace(0, self.filt.fsr / 2, 41)
        flux = flux_through_filter((F * 20, gauss(F * 20, 0, width)), self.filt, det)
        assert np.all(np.diff(flux) <= 1e-12 * flux[0])

    def test_transmission_multiplier(self):
        det = np.linspace(-1e9, 1e9, 11)
        spec = (F, gauss(F, 0, 200e6))
        a = flux_through_filter(spec, self.filt, det)
        b = flux_through_filter(spec, self.filt, det, transmission=0.319)
        np.testing.assert_array_equal(b, a * 0.319)
