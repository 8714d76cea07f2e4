import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from timelens.photonics import (
    DispersiveElement,
    FabryPerotFilter,
    GaussianPulseSource,
    apply_cfbg,
    apply_filter,
    dispersion_to_gdd,
    fp_transmission,
    gdd_to_dispersion,
    generate_pulse,
)
from timelens.signal_core import (
    GridError,
    SpectralAmplitude,
    apply_temporal_phase,
    grid_from_span,
    make_grid,
    to_spectrum,
)

LAM = 1560e-9


def fwhm(x, y):
    """Half-max width from linear interpolation of the two outermost crossings."""
    half = y.max() / 2
    idx = np.flatnonzero(y >= half)
    lo, hi = idx[0], idx[-1]
    left = np.interp(half, [y[lo - 1], y[lo]], [x[lo - 1], x[lo]])
    right = np.interp(half, [y[hi + 1], y[hi]], [x[hi + 1], x[hi]])
    return right - left


def chirped_fwhm(tau, gdd):
    # Gaussian amplitude exp(-t^2 / 2 T0^2): T1 = T0 sqrt(1 + (gdd / T0^2)^2), FWHM scales alike
    t0 = tau / (2 * np.sqrt(np.log(2)))
    return tau * np.sqrt(1 + (gdd / t0**2) ** 2)


class TestSource:
    def test_temporal_fwhm(self):
        assert GaussianPulseSource(spectral_fwhm=68.5e9).temporal_fwhm == pytest.approx(6.44e-12, rel=1e-3)

    def test_energy(self, chirp_grid):
        env = generate_pulse(GaussianPulseSource(energy=2.0), chirp_grid)
        assert env.energy == pytest.approx(2.0, rel=1e-12)

    def test_spectrum_is_real_positive_gaussian(self):
        g = grid_from_span(2**14, 1e-9)
        spec = to_spectrum(generate_pulse(GaussianPulseSource(), g))
        peak = np.argmax(spec.intensity)
        core = spec.intensity > 1e-6 * spec.intensity.max()
        phase = spec.samples[core] * np.exp(-1j * np.angle(spec.samples[peak]))
        assert np.max(np.abs(phase.imag)) < 1e-9 * np.abs(spec.samples[peak])
        assert np.all(phase.real > 0)
        sigma = 68.5e9 / (2 * np.sqrt(2 * np.log(2)))
        model = spec.intensity[peak] * np.exp(-0.5 * (spec.f / sigma) ** 2)
        assert np.max(np.abs(spec.intensity - model)) < 1e-9 * spec.intensity[peak]

    def test_measured_widths(self, chirp_grid):
        env = generate_pulse(GaussianPulseSource(), chirp_grid)
        assert fwhm(chirp_grid.t, env.intensity) == pytest.approx(6.44e-12, rel=2e-3)

    def test_under_resolved(self):
        with pytest.raises(GridError):
            generate_pulse(GaussianPulseSource(), make_grid(1024, 1e-12))


class TestCFBG:
    def test_gdd_value(self):
        assert dispersion_to_gdd(10.0, LAM) == pytest.approx(1.292e-20, rel=1e-3)
        assert DispersiveElement.from_ns_per_nm(10.0).gdd == dispersion_to_gdd(10.0, LAM)

    @settings(max_examples=50)
    @given(st.floats(1e-3, 1e3), st.floats(800e-9, 2000e-9))
    def test_gdd_round_trip(self, d, lam):
        assert gdd_to_dispersion(dispersion_to_gdd(d, lam), lam) == pytest.approx(d, rel=1e-12)

    def test_cascade_additivity(self, pulse):
        two = apply_cfbg(apply_cfbg(pulse, DispersiveElement(10.0)), DispersiveElement(5.0))
        one = apply_cfbg(pulse, DispersiveElement(15.0))
        assert np.max(np.abs(two.samples - one.samples)) <= 1e-12 * np.max(np.abs(one.samples))
        gdd = dispersion_to_gdd(10.0, LAM) + dispersion_to_gdd(5.0, LAM)
        assert gdd == pytest.approx(dispersion_to_gdd(15.0, LAM), rel=1e-12)

    def test_chirped_duration(self, pulse, chirp_grid):
        out = apply_cfbg(pulse, DispersiveElement(10.0))
        expected = chirped_fwhm(GaussianPulseSource().temporal_fwhm, dispersion_to_gdd(10.0, LAM))
        assert expected == pytest.approx(5.56e-9, rel=2e-3)
        assert fwhm(chirp_grid.t, out.intensity) == pytest.approx(expected, rel=5e-3)

    def test_spectral_intensity_unchanged(self, pulse):
        out = apply_cfbg(pulse, DispersiveElement(10.0, power_transmission=0.5))
        a, b = to_spectrum(pulse).intensity, to_spectrum(out).intensity
        assert np.max(np.abs(b - 0.5 * a)) <= 1e-12 * a.max()
        assert out.energy == pytest.approx(0.5 * pulse.energy, rel=1e-12)

    def test_span_guard(self):
        g = grid_from_span(2**16, 4e-9)
        with pytest.raises(GridError, match="span"):
            apply_cfbg(generate_pulse(GaussianPulseSource(), g), DispersiveElement(10.0))

    def test_invalid_transmission(self):
        with pytest.raises(ValueError):
            DispersiveElement(10.0, power_transmission=1.5)

    def test_time_to_frequency_mapping(self, pulse, chirp_grid):
        # exact unwrapped lens K = 1/gdd: output spectrum images the input pulse, f = t / (2 pi gdd)
        gdd = dispersion_to_gdd(10.0, LAM)
        chirped = apply_cfbg(pulse, DispersiveElement(10.0))
        out = to_spectrum(apply_temporal_phase(chirped, 0.5 * chirp_grid.t**2 / gdd))
        t_map = 2 * np.pi * gdd * out.f
        tau = GaussianPulseSource().temporal_fwhm
        expected = np.exp(-4 * np.log(2) * (t_map / tau) ** 2)
        got = out.intensity / out.intensity.max()
        sel = expected > 1e-3
        rms = np.sqrt(np.mean((got[sel] - expected[sel]) ** 2))
        assert rms < 0.02


class TestFabryPerot:
    filt = FabryPerotFilter(fwhm=420e6, fsr=147.8e9)

    def test_resonance_and_half_width(self):
        f = self.filt
        assert fp_transmission(f, 0.0) == pytest.approx(1.0)
        for x in (f.fwhm / 2, -f.fwhm / 2):
            assert fp_transmission(f, x) == pytest.approx(0.5, rel=1e-3)

    def test_measured_fwhm_and_fsr(self):
        f = self.filt
        x = np.linspace(-f.fwhm * 2, f.fwhm * 2, 400001)
        assert fwhm(x, fp_transmission(f, x)) == pytest.approx(f.fwhm, rel=1e-3)
        x = np.linspace(0.5 * f.fsr, 1.5 * f.fsr, 2000001)
        assert x[np.argmax(fp_transmission(f, x))] == pytest.approx(f.fsr, rel=1e-3)

    @settings(max_examples=50)
    @given(st.floats(-1e12, 1e12), st.integers(-5, 5))
    def test_periodic(self, f0, k):
        filt = self.filt
        a = fp_transmission(filt, f0)
        b = fp_transmission(filt, f0 + k * filt.fsr)
        assert abs(a - b) <= 1e-12 + 1e-9 * abs(a) * abs(k) * abs(f0) / filt.fsr

    @settings(max_examples=50)
    @given(st.floats(-1e12, 1e12))
    def test_bounds(self, f0):
        filt = FabryPerotFilter(420e6, 147.8e9, peak_transmission=0.8)
        assert 0 < fp_transmission(filt, f0) <= 0.8

    def test_low_finesse_rejected(self):
        with pytest.raises(ValueError):
            FabryPerotFilter(fwhm=2e9, fsr=1e9)

    def _flat(self, width):
        g = grid_from_span(2**16, 1 / 1e6)  # 1 MHz bins
        samples = (np.abs(g.f) <= width / 2).astype(complex)
        return SpectralAmplitude(g, samples)

    def test_flat_spectrum_fraction(self):
        spec = self._flat(1e9)
        filt = FabryPerotFilter(420e6, 1e12)
        frac = apply_filter(spec, filt).energy / spec.energy
        oracle = integrate.quad(lambda f: fp_transmission(filt, f), -0.5e9, 0.5e9)[0] / 1e9
        lorentz = 0.42 * np.arctan(1 / 0.42)
        assert oracle == pytest.approx(lorentz, rel=1e-4)
        assert frac == pytest.approx(oracle, rel=2e-3)

    def test_far_detuned_blocks(self):
        spec = self._flat(1e9)
        filt = FabryPerotFilter(420e6, 1e12, detuning=20 * 420e6)
        assert apply_filter(spec, filt).energy / spec.energy < 0.01

    def test_delta_at_resonance(self):
        g = make_grid(1024, 1e-9)
        s = np.zeros(1024, complex)
        s[512] = 1.0
        spec = SpectralAmplitude(g, s)
        assert apply_filter(spec, FabryPerotFilter(1e6, 1e9)).energy == pytest.approx(spec.energy)
