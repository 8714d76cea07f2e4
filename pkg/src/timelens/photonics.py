"""Optical sources and passive elements: Gaussian pulses, CFBG dispersion, Fabry-Perot filter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_core import (
    C,
    ComplexEnvelope,
    GridError,
    SpectralAmplitude,
    TemporalGrid,
    apply_spectral_phase,
    apply_transmission,
    delta_lambda_to_delta_f,
    to_envelope,
    to_spectrum,
)

TBP_GAUSSIAN = 2 * np.log(2) / np.pi
FWHM_PER_SIGMA = 2 * np.sqrt(2 * np.log(2))


def dispersion_to_gdd(dispersion: float, carrier_wavelength: float) -> float:
    """GDD in s^2/rad from dispersion in s/m (1 ns/nm == 1 s/m)."""
    return dispersion * carrier_wavelength**2 / (2 * np.pi * C)


def gdd_to_dispersion(gdd: float, carrier_wavelength: float) -> float:
    return gdd * 2 * np.pi * C / carrier_wavelength**2


@dataclass(frozen=True)
class GaussianPulseSource:
    """Transform-limited Gaussian pulse; ``spectral_fwhm`` is the intensity FWHM in Hz."""

    carrier_wavelength: float = 1560e-9
    spectral_fwhm: float = 68.5e9
    energy: float = 1.0
    rep_rate: float = 20e6

    def __post_init__(self):
        if not (self.carrier_wavelength > 0 and self.spectral_fwhm > 0):
            raise ValueError("carrier wavelength and spectral FWHM must be positive")
        if not self.energy >= 0:
            raise ValueError("energy must be non-negative")

    @property
    def carrier(self) -> float:
        return C / self.carrier_wavelength

    @property
    def temporal_fwhm(self) -> float:
        return TBP_GAUSSIAN / self.spectral_fwhm


def generate_pulse(src: GaussianPulseSource, grid: TemporalGrid) -> ComplexEnvelope:
    tau = src.temporal_fwhm
    if tau / grid.dt < 8:
        raise GridError(
            f"grid dt {grid.dt:.3g} s under-resolves a {tau:.3g} s pulse (need >= 8 samples/FWHM)"
        )
    if src.spectral_fwhm >= 2 * grid.nyquist:
        raise GridError("source bandwidth exceeds the grid's frequency span")
    t = grid.t - grid.t_center
    a = np.exp(-2 * np.log(2) * (t / tau) ** 2)
    a *= np.sqrt(src.energy / (np.sum(a**2) * grid.dt))
    return ComplexEnvelope(grid, a.astype(complex), src.carrier)


@dataclass(frozen=True)
class DispersiveElement:
    """Chirped fibre Bragg grating: dispersion ``D`` in s/m plus an insertion loss."""

    dispersion: float
    carrier_wavelength: float = 1560e-9
    power_transmission: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.power_transmission <= 1.0:
            raise ValueError("power_transmission must lie in [0, 1]")

    @classmethod
    def from_ns_per_nm(cls, d_ns_per_nm: float, carrier_wavelength: float = 1560e-9,
                       power_transmission: float = 1.0) -> "DispersiveElement":
        return cls(d_ns_per_nm * 1e-9 / 1e-9, carrier_wavelength, power_transmission)

    @property
    def gdd(self) -> float:
        return dispersion_to_gdd(self.dispersion, self.carrier_wavelength)

    @property
    def dispersion_ns_per_nm(self) -> float:
        return self.dispersion


def rms_bandwidth(spec: SpectralAmplitude) -> float:
    """RMS angular bandwidth of the spectral intensity, rad/s."""
    p = spec.intensity
    total = p.sum()
    if total == 0:
        return 0.0
    w = spec.omega
    mean = np.sum(w * p) / total
    return float(np.sqrt(np.sum((w - mean) ** 2 * p) / total))


def apply_cfbg(env: ComplexEnvelope, d: DispersiveElement, check_span: bool = True) -> ComplexEnvelope:
    """Apply the quadratic spectral phase ``gdd * w^2 / 2`` and the element's loss.

    The grid must span at least twice the chirped duration, estimated as
    ``|gdd| * FWHM angular bandwidth``; otherwise the chirped pulse would wrap
    around the periodic window.
    """
    spec = to_spectrum(env)
    gdd = d.gdd
    if check_span and gdd != 0:
        chirped = abs(gdd) * FWHM_PER_SIGMA * rms_bandwidth(spec)
        if env.grid.span < 2 * chirped:
            raise GridError(
                f"grid span {env.grid.span:.3g} s < 2x chirped duration {chirped:.3g} s"
            )
    spec = apply_spectral_phase(spec, lambda w: 0.5 * gdd * w**2)
    return apply_transmission(to_envelope(spec), d.power_transmission)


@dataclass(frozen=True)
class FabryPerotFilter:
    """Scanning Fabry-Perot filter with Airy transmission; frequencies relative to the carrier."""

    fwhm: float = 420e6
    fsr: float = float(delta_lambda_to_delta_f(1.2e-9, 1560e-9))
    peak_transmission: float = 1.0
    detuning: float = 0.0

    def __post_init__(self):
        if not (self.fwhm > 0 and self.fsr > 0):
            raise ValueError("fwhm and fsr must be positive")
        if self.finesse <= 1:
            raise ValueError(f"finesse fsr/fwhm must exceed 1, got {self.finesse:.3g}")
        if not 0 < self.peak_transmission <= 1:
            raise ValueError("peak_transmission must lie in (0, 1]")

    @property
    def finesse(self) -> float:
        return self.fsr / self.fwhm

    def detuned(self, detuning: float) -> "FabryPerotFilter":
        return FabryPerotFilter(self.fwhm, self.fsr, self.peak_transmission, detuning)


def fp_transmission(filt: FabryPerotFilter, f) -> np.ndarray:
    coeff = (2 * filt.finesse / np.pi) ** 2
    s = np.sin(np.pi * (np.asarray(f, dtype=float) - filt.detuning) / filt.fsr)
    return filt.peak_transmission / (1 + coeff * s**2)


def apply_filter(spec: SpectralAmplitude, filt: FabryPerotFilter) -> SpectralAmplitude:
    t = fp_transmission(filt, spec.f)
    return SpectralAmplitude(spec.grid, spec.samples * np.sqrt(t), spec.carrier)
