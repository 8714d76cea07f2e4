"""Uniform time/frequency grids and linear operations on complex envelopes.

Fourier convention (optics sign): the spectrum of an envelope ``a(t)`` is

    A(f) = integral a(t) exp(+2j*pi*f*t) dt,

discretised as ``dt * sum(...)`` so that ``sum(|A|^2) * df == sum(|a|^2) * dt``.
With this sign a spectral phase ``+Phi*w**2/2`` (Phi > 0) delays higher
frequencies and a spectral phase ``tau*w`` delays the envelope by ``tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import constants

C = constants.c


class GridError(ValueError):
    """Invalid grid parameters or envelope/grid mismatch."""


def wavelength_to_frequency(wavelength: float) -> float:
    return C / wavelength


def delta_lambda_to_delta_f(delta_lambda, carrier_wavelength: float):
    """Convert a wavelength interval to a frequency interval at the carrier."""
    return C * np.asarray(delta_lambda) / carrier_wavelength**2


def delta_f_to_delta_lambda(delta_f, carrier_wavelength: float):
    return np.asarray(delta_f) * carrier_wavelength**2 / C


@dataclass(frozen=True)
class TemporalGrid:
    """Centered uniform sampling grid.

    Attributes:
        n_samples: number of samples, a power of two.
        dt: sample spacing in seconds.
        t_center: time of the central sample (index ``n_samples // 2``).
    """

    n_samples: int
    dt: float
    t_center: float = 0.0

    def __post_init__(self):
        n = self.n_samples
        if not isinstance(n, (int, np.integer)) or n < 2 or (n & (n - 1)) != 0:
            raise GridError(f"n_samples must be a power of two >= 2, got {n!r}")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise GridError(f"dt must be positive, got {self.dt!r}")

    @property
    def span(self) -> float:
        return self.n_samples * self.dt

    @property
    def df(self) -> float:
        return 1.0 / (self.n_samples * self.dt)

    @property
    def nyquist(self) -> float:
        return 0.5 / self.dt

    @property
    def t(self) -> np.ndarray:
        return self.t_center + (np.arange(self.n_samples) - self.n_samples // 2) * self.dt

    @property
    def f(self) -> np.ndarray:
        """Frequency offsets from the carrier, ascending, zero at index n/2."""
        return (np.arange(self.n_samples) - self.n_samples // 2) * self.df

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.f

    def check_nyquist(self, *frequencies: float) -> None:
        """Raise if any of ``frequencies`` is not strictly below Nyquist."""
        for fr in frequencies:
            if abs(fr) >= self.nyquist:
                raise GridError(
                    f"frequency {fr:.6g} Hz not below grid Nyquist {self.nyquist:.6g} Hz"
                )


def make_grid(n_samples: int, dt: float) -> TemporalGrid:
    return TemporalGrid(n_samples, float(dt))


def grid_from_span(n_samples: int, span: float) -> TemporalGrid:
    return make_grid(n_samples, span / n_samples)


@dataclass(frozen=True)
class ComplexEnvelope:
    """Slowly varying optical field on a temporal grid, energy = sum(|a|^2) dt."""

    grid: TemporalGrid
    samples: np.ndarray
    carrier: float = field(default=C / 1560e-9)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_samples,):
            raise GridError(
                f"envelope has {s.shape} samples, grid expects {self.grid.n_samples}"
            )
        object.__setattr__(self, "samples", s)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.intensity) * self.grid.dt)


@dataclass(frozen=True)
class SpectralAmplitude:
    """Complex spectral amplitude relative to the carrier, energy = sum(|A|^2) df."""

    grid: TemporalGrid
    samples: np.ndarray
    carrier: float = field(default=C / 1560e-9)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_samples,):
            raise GridError(
                f"spectrum has {s.shape} samples, grid expects {self.grid.n_samples}"
            )
        object.__setattr__(self, "samples", s)

    @property
    def df(self) -> float:
        return self.grid.df

    @property
    def f(self) -> np.ndarray:
        return self.grid.f

    @property
    def omega(self) -> np.ndarray:
        return self.grid.omega

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.intensity) * self.df)


def to_spectrum(env: ComplexEnvelope) -> SpectralAmplitude:
    n = env.grid.n_samples
    a = np.fft.ifftshift(env.samples)
    spec = np.fft.fftshift(np.fft.ifft(a)) * (n * env.grid.dt)
    return SpectralAmplitude(env.grid, spec, env.carrier)


def to_envelope(spec: SpectralAmplitude) -> ComplexEnvelope:
    a = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(spec.samples))) * spec.df
    return ComplexEnvelope(spec.grid, a, spec.carrier)


def _checked_phase(phase, n: int) -> np.ndarray:
    phase = np.asarray(phase, dtype=float)
    if phase.shape != (n,):
        raise GridError(f"phase has shape {phase.shape}, expected ({n},)")
    if not np.all(np.isfinite(phase)):
        raise ValueError("phase contains NaN or infinite values")
    return phase


def apply_spectral_phase(
    spec: SpectralAmplitude, phase_fn: Callable[[np.ndarray], np.ndarray]
) -> SpectralAmplitude:
    """Multiply by ``exp(1j * phase_fn(omega))``, omega the angular detuning."""
    phase = _checked_phase(np.broadcast_to(phase_fn(spec.omega), spec.samples.shape), spec.samples.size)
    return SpectralAmplitude(spec.grid, spec.samples * np.exp(1j * phase), spec.carrier)


def apply_temporal_phase(env: ComplexEnvelope, phase_samples) -> ComplexEnvelope:
    phase = _checked_phase(phase_samples, env.grid.n_samples)
    return ComplexEnvelope(env.grid, env.samples * np.exp(1j * phase), env.carrier)


def apply_transmission(env, power_transmission: float):
    """Scale the energy of an envelope or spectrum by ``power_transmission``."""
    if not 0.0 <= power_transmission <= 1.0:
        raise ValueError(f"power transmission must lie in [0, 1], got {power_transmission}")
    return type(env)(env.grid, env.samples * np.sqrt(power_transmission), env.carrier)
