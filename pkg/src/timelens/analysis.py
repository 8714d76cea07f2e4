"""Figures of merit extracted from spectral intensity profiles.

Functions accept either a :class:`SpectralAmplitude` or a ``(freqs, intensity)``
pair. All fits operate on intensity.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .photonics import FWHM_PER_SIGMA, FabryPerotFilter, fp_transmission
from .signal_core import SpectralAmplitude, delta_f_to_delta_lambda


class FitError(RuntimeError):
    """A least-squares fit did not converge or its input is unusable."""


class UnderResolvedError(FitError):
    pass


def _profile(spec):
    if isinstance(spec, SpectralAmplitude):
        return spec.f, spec.intensity
    f, intensity = spec
    return np.asarray(f, dtype=float), np.asarray(intensity, dtype=float)


def _bin_width(f: np.ndarray) -> float:
    return float(f[1] - f[0]) if f.size > 1 else 1.0


@dataclass(frozen=True)
class GaussianFitResult:
    center: float
    fwhm: float
    peak: float
    residual_rms: float

    @property
    def sigma(self) -> float:
        return self.fwhm / FWHM_PER_SIGMA

    def __call__(self, f):
        return self.peak * np.exp(-0.5 * ((np.asarray(f) - self.center) / self.sigma) ** 2)


@dataclass(frozen=True)
class VoigtFitResult:
    gaussian_fwhm: float
    lorentzian_fwhm: float
    center: float
    peak: float
    area: float

    def __call__(self, f):
        return self.area * voigt_profile(
            f, self.center, self.gaussian_fwhm / FWHM_PER_SIGMA, self.lorentzian_fwhm / 2
        )


@dataclass(frozen=True)
class SpectralMetrics:
    enhancement: float
    efficiency: float
    fwhm_out_hz: float
    fwhm_out_pm: float
    fwhm_in_hz: float
    compression_factor: float
    center_out_hz: float
    includes_loss: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CombSpectrum:
    mode_spacing: float
    mode_frequencies: np.ndarray
    intensities: np.ndarray

    def modes_above(self, fraction: float) -> int:
        if self.intensities.size == 0:
            return 0
        return int(np.count_nonzero(self.intensities >= fraction * self.intensities.max()))


def peak_enhancement(in_spec, out_spec) -> float:
    f_in, i_in = _profile(in_spec)
    f_out, i_out = _profile(out_spec)
    if f_in.shape != f_out.shape or not np.allclose(f_in, f_out, rtol=0, atol=1e-9 * _bin_width(f_in)):
        raise ValueError("input and output spectra must share one frequency grid")
    ref = i_in.max()
    if ref <= 0:
        raise ValueError("input spectrum has zero peak")
    return float(i_out.max() / ref)


def half_max_width(f: np.ndarray, intensity: np.ndarray, index: int | None = None):
    """FWHM of the peak at ``index`` from linearly interpolated half-max crossings.

    Returns ``(fwhm, center, n_bins_above)``.
    """
    i = int(np.argmax(intensity)) if index is None else index
    half = intensity[i] / 2
    lo = i
    while lo > 0 and intensity[lo - 1] > half:
        lo -= 1
    hi = i
    while hi < intensity.size - 1 and intensity[hi + 1] > half:
        hi += 1
    if lo == 0 or hi == intensity.size - 1:
        raise FitError("peak does not fall below half maximum inside the spectrum")

    def cross(a, b):
        ya, yb = intensity[a], intensity[b]
        return f[a] + (half - ya) * (f[b] - f[a]) / (yb - ya)

    left = cross(lo - 1, lo)
    right = cross(hi, hi + 1)
    return right - left, 0.5 * (left + right), hi - lo + 1


def fit_gaussian_peak(spec, window_hint: float | None = None) -> GaussianFitResult:
    """Least-squares Gaussian fit to the highest spectral peak.

    The fit uses points within ``window_hint`` (Hz) of the peak; by default
    one half-maximum width on either side.
    """
    f, intensity = _profile(spec)
    fw0, c0, n_above = half_max_width(f, intensity)
    if n_above < 5:
        raise UnderResolvedError(f"only {n_above} bins above half maximum (need >= 5)")
    window = fw0 if window_hint is None else window_hint
    sel = np.abs(f - c0) <= window
    fs, ys = f[sel], intensity[sel]
    peak0 = intensity.max()

    # normalized coordinates keep the three parameters on comparable scales
    x = (fs - c0) / fw0
    y = ys / peak0

    def resid(params):
        p, c, s = params
        return p * np.exp(-0.5 * ((x - c) / s) ** 2) - y

    sol = optimize.least_squares(resid, x0=(1.0, 0.0, 1 / FWHM_PER_SIGMA),
                                 xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=5000)
    if not sol.success:
        raise FitError(f"Gaussian fit did not converge: {sol.message}")
    p, c, s = sol.x
    p, c, s = p * peak0, c0 + c * fw0, s * fw0
    s = abs(s)
    if not (np.isfinite(s) and s > 0 and p > 0):
        raise FitError("Gaussian fit returned a degenerate width or amplitude")
    rms = float(np.sqrt(np.mean(sol.fun**2)) * peak0 / p)
    return GaussianFitResult(center=float(c), fwhm=float(s * FWHM_PER_SIGMA), peak=float(p),
                             residual_rms=rms)


def efficiency(out_spec, fit: GaussianFitResult, window_fwhms: float = 3.0) -> float:
    """Fraction of output energy within ``window_fwhms`` fitted FWHMs of the fitted center."""
    f, intensity = _profile(out_spec)
    total = intensity.sum()
    if total <= 0:
        raise ValueError("output spectrum carries no energy")
    inside = np.abs(f - fit.center) <= window_fwhms * fit.fwhm
    return float(intensity[inside].sum() / total)


def compression_metrics(in_spec, out_spec, carrier_wavelength: float,
                        includes_loss: bool = False,
                        window_hint: float | None = None) -> SpectralMetrics:
    fit_in = fit_gaussian_peak(in_spec)
    fit_out = fit_gaussian_peak(out_spec, window_hint)
    return SpectralMetrics(
        enhancement=peak_enhancement(in_spec, out_spec),
        efficiency=efficiency(out_spec, fit_out),
        fwhm_out_hz=fit_out.fwhm,
        fwhm_out_pm=float(delta_f_to_delta_lambda(fit_out.fwhm, carrier_wavelength) * 1e12),
        fwhm_in_hz=fit_in.fwhm,
        compression_factor=fit_in.fwhm / fit_out.fwhm,
        center_out_hz=fit_out.center,
        includes_loss=includes_loss,
    )


def voigt_profile(f, center: float, sigma: float, gamma: float) -> np.ndarray:
    """Area-normalized Voigt line: Gaussian std ``sigma`` convolved with Lorentzian HWHM ``gamma``."""
    x = np.asarray(f, dtype=float) - center
    if sigma <= 0:
        return gamma / np.pi / (x**2 + gamma**2)
    z = (x + 1j * gamma) / (sigma * np.sqrt(2))
    return special.wofz(z).real / (sigma * np.sqrt(2 * np.pi))


def voigt_fwhm(gaussian_fwhm: float, lorentzian_fwhm: float) -> float:
    """Olivero-Longbothum approximation (about 0.02 % accurate)."""
    fl, fg = lorentzian_fwhm, gaussian_fwhm
    return 0.5346 * fl + np.sqrt(0.2166 * fl**2 + fg**2)


def voigt_fit_deconvolve(detunings, flux, lorentzian_fwhm: float) -> VoigtFitResult:
    """Fit a Voigt profile with a fixed Lorentzian width and return the Gaussian part."""
    x = np.asarray(detunings, dtype=float)
    y = np.asarray(flux, dtype=float)
    if x.size < 8:
        raise FitError(f"need at least 8 scan points, got {x.size}")
    if lorentzian_fwhm < 0:
        raise ValueError("lorentzian_fwhm must be non-negative")
    order = np.argsort(x)
    x, y = x[order], y[order]
    try:
        fv, c0, _ = half_max_width(x, y)
    except FitError as exc:
        raise FitError(f"degenerate scan range: {exc}") from exc
    if x[-1] - x[0] < 2 * fv:
        raise FitError("scan range must cover at least two total widths")
    gamma = lorentzian_fwhm / 2
    fg2 = (fv - 0.5346 * lorentzian_fwhm) ** 2 - 0.2166 * lorentzian_fwhm**2
    fg0 = np.sqrt(max(fg2, (0.05 * fv) ** 2))
    sigma_min = 1e-6 * fv
    area0 = y.max() / voigt_profile(0.0, 0.0, fg0 / FWHM_PER_SIGMA, gamma)

    def resid(params):
        area, c, s = params
        return (area * voigt_profile(x, c, s, gamma) - y) / y.max()

    sol = optimize.least_squares(
        resid, x0=(area0, c0, fg0 / FWHM_PER_SIGMA),
        bounds=([0, x[0], sigma_min], [np.inf, x[-1], np.inf]),
        x_scale=(area0, fv, fv), xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=2000,
    )
    if not sol.success:
        raise FitError(f"Voigt fit did not converge: {sol.message}")
    area, c, s = sol.x
    fg = float(s * FWHM_PER_SIGMA)
    peak = float(area * voigt_profile(c, c, s, gamma))
    return VoigtFitResult(gaussian_fwhm=fg, lorentzian_fwhm=float(lorentzian_fwhm),
                          center=float(c), peak=peak, area=float(area))


def comb_sample(spec, rep_rate: float, offset: float = 0.0) -> CombSpectrum:
    """Sample the envelope at ``offset + k * rep_rate`` (nearest bin)."""
    f, intensity = _profile(spec)
    df = _bin_width(f)
    if rep_rate < df:
        raise ValueError(f"rep_rate {rep_rate:.4g} Hz is finer than the grid spacing {df:.4g} Hz")
    k = np.arange(np.ceil((f[0] - offset) / rep_rate), np.floor((f[-1] - offset) / rep_rate) + 1)
    modes = offset + k * rep_rate
    idx = np.clip(np.rint((modes - f[0]) / df).astype(int), 0, f.size - 1)
    return CombSpectrum(float(rep_rate), modes, intensity[idx].copy())


def flux_through_filter(spec, filt: FabryPerotFilter, detunings: Sequence[float],
                        transmission: float = 1.0) -> np.ndarray:
    """Energy transmitted through the filter tuned to each detuning.

    ``transmission`` is an overall loss multiplier applied to every point.
    """
    f, intensity = _profile(spec)
    df = _bin_width(f)
    keep = intensity > intensity.max() * 1e-18
    f, intensity = f[keep], intensity[keep]
    out = np.empty(len(detunings))
    for j, det in enumerate(detunings):
        out[j] = np.sum(intensity * fp_transmission(filt.detuned(det), f)) * df
    return out * transmission
