"""Fresnel drive-waveform synthesis and the electrical (AWG -> amplifier -> EOPM) model.

Drive samples are expressed directly in radians of optical phase. The RF
domain uses the engineering Fourier sign (``numpy.fft.rfft``), in which a
pure delay ``tau`` is ``H(f) = exp(-2j*pi*f*tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import interpolate
from scipy import signal as sps

from .signal_core import TemporalGrid

TWO_PI = 2 * np.pi


class WaveformError(ValueError):
    """Drive waveform cannot be built or placed as requested."""


@dataclass(frozen=True)
class FresnelLensSpec:
    """Quadratic temporal phase ``K t^2 / 2`` wrapped modulo ``wrap_modulus``.

    ``amplitude_scale`` multiplies the wrapped waveform (it models the RF
    amplitude knob), so any value other than 1 leaves a sawtooth phase error
    of ``(amplitude_scale - 1) * wrap_modulus`` peak-to-peak.
    """

    K: float
    f_max: float
    wrap_modulus: float = TWO_PI
    amplitude_scale: float = 1.0

    def __post_init__(self):
        if self.K == 0 or not np.isfinite(self.K):
            raise ValueError("chirping rate K must be finite and non-zero")
        if not self.f_max > 0:
            raise ValueError("f_max must be positive")
        if not self.wrap_modulus > 0:
            raise ValueError("wrap_modulus must be positive")

    @classmethod
    def matched(cls, gdd: float, f_max: float, **kwargs) -> "FresnelLensSpec":
        """Lens satisfying the focusing condition K = 1/GDD."""
        return cls(K=1.0 / gdd, f_max=f_max, **kwargs)

    @property
    def half_duration(self) -> float:
        return TWO_PI * self.f_max / abs(self.K)

    @property
    def duration(self) -> float:
        return 2 * self.half_duration

    def phase(self, t, f_cut: float | None = None) -> np.ndarray:
        """Analytic drive phase at times ``t``; zero outside the aperture."""
        t = np.asarray(t, dtype=float)
        half = aperture_half_width(self, f_cut) if f_cut is not None else self.half_duration
        raw = 0.5 * self.K * t**2
        if np.isfinite(self.wrap_modulus):
            raw = np.mod(raw, self.wrap_modulus)
        return np.where(np.abs(t) <= half, self.amplitude_scale * raw, 0.0)


@dataclass(frozen=True)
class AWGModel:
    """Arbitrary waveform generator: sample rate and amplitude resolution.

    ``enob=None`` disables quantization. ``full_scale`` is the peak-to-peak
    range of the DAC in the units the samples are expressed in.
    """

    sample_rate: float = 92.16e9
    enob: float | None = 5.0
    full_scale: float = 2.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.enob is not None and not self.enob > 0:
            raise ValueError("enob must be positive (or None for an ideal DAC)")
        if not self.full_scale > 0:
            raise ValueError("full_scale must be positive")

    @property
    def nyquist(self) -> float:
        return 0.5 * self.sample_rate

    @property
    def levels(self) -> int | None:
        return None if self.enob is None else 2 ** int(round(self.enob))

    @property
    def lsb(self) -> float | None:
        return None if self.enob is None else self.full_scale / self.levels


@dataclass(frozen=True)
class RFResponse:
    """Complex transfer function of the RF chain.

    kinds:
        ``"bessel"``: parametric Bessel lowpass, -3 dB at ``f_3db``, with the
        DC group delay removed (the drive is assumed timed to the pulse).
        ``"tabulated"``: rows of (frequency Hz, magnitude dB, phase deg),
        linearly interpolated, flat beyond the ends.
        ``"flat"``: H = 1.
    """

    kind: str = "bessel"
    f_3db: float = 35e9
    order: int = 4
    table: np.ndarray | None = None
    band_limit: float | None = None
    floor_ratio: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("bessel", "tabulated", "flat"):
            raise ValueError(f"unknown response kind {self.kind!r}")
        if self.kind == "bessel" and not (self.f_3db > 0 and self.order >= 1):
            raise ValueError("bessel response needs f_3db > 0 and order >= 1")
        if self.kind == "tabulated":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 3 or len(tab) < 1:
                raise ValueError("response table must have rows of (freq, mag_db, phase_deg)")
            if not np.all(np.isfinite(tab)):
                raise ValueError("response table contains non-finite values")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise ValueError("response table frequencies must be strictly increasing")
            object.__setattr__(self, "table", tab)
        if abs(self(np.array([0.0]))[0]) <= 0:
            raise ValueError("|H(0)| must be positive")

    @classmethod
    def flat(cls) -> "RFResponse":
        return cls(kind="flat")

    @classmethod
    def bessel(cls, f_3db: float = 35e9, order: int = 4, band_limit: float | None = None):
        return cls(kind="bessel", f_3db=f_3db, order=order, band_limit=band_limit)

    @classmethod
    def from_file(cls, path, band_limit: float | None = None) -> "RFResponse":
        return cls(kind="tabulated", table=load_response_table(path), band_limit=band_limit)

    @property
    def precomp_band(self) -> float:
        """Upper edge of the band inside which precompensation divides by H."""
        if self.band_limit is not None:
            return self.band_limit
        if self.kind == "bessel":
            return self.f_3db
        if self.kind == "tabulated":
            return float(self.table[-1, 0])
        return math.inf

    def __call__(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.kind == "flat":
            return np.ones(f.shape, dtype=complex)
        if self.kind == "bessel":
            z, p, k = sps.bessel(self.order, TWO_PI * self.f_3db, analog=True,
                                 norm="mag", output="zpk")
            _, h = sps.freqs_zpk(z, p, k, TWO_PI * f.ravel())
            tau0 = float(np.sum((-1.0 / p).real))
            h = h * np.exp(1j * TWO_PI * f.ravel() * tau0)
            return h.reshape(f.shape)
        fa = np.abs(f)
        tab = self.table
        mag = 10 ** (np.interp(fa, tab[:, 0], tab[:, 1]) / 20)
        ph = np.deg2rad(np.interp(fa, tab[:, 0], tab[:, 2]))
        h = mag * np.exp(1j * ph)
        return np.where(f < 0, np.conj(h), h)


def load_response_table(path) -> np.ndarray:
    """Read ``frequency_hz, magnitude_db, phase_deg`` rows; '#' starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
        rows.append([float(x) for x in parts])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    tab = np.array(rows)
    if np.any(np.diff(tab[:, 0]) <= 0):
        raise ValueError(f"{path}: frequencies must be strictly increasing")
    return tab


@dataclass(frozen=True)
class DriveWaveform:
    """Real phase-drive samples (radians) at ``sample_rate``, first sample at ``t_start``."""

    sample_rate: float
    samples: np.ndarray
    t_start: float = 0.0
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise WaveformError("drive samples must be one-dimensional")
        if not np.all(np.isfinite(s)):
            raise WaveformError("drive samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples, *extra_warnings: str) -> "DriveWaveform":
        return replace(self, samples=samples, warnings=self.warnings + tuple(extra_warnings))


def aperture_half_width(spec: FresnelLensSpec, f_cut: float | None = None) -> float:
    f = spec.f_max if f_cut is None else min(f_cut, spec.f_max)
    return TWO_PI * f / abs(spec.K)


def synthesize_fresnel(
    spec: FresnelLensSpec, awg: AWGModel, margin: int | None = None
) -> DriveWaveform:
    """Sample the wrapped parabola at the AWG rate, centered on t = 0.

    ``margin`` zero samples are added on each side to leave room for the
    filter tails of later stages.
    """
    if spec.f_max >= awg.nyquist:
        raise WaveformError(
            f"f_max {spec.f_max:.4g} Hz is not below the AWG Nyquist {awg.nyquist:.4g} Hz"
        )
    n_half = int(math.floor(spec.half_duration * awg.sample_rate * (1 + 1e-12)))
    if margin is None:
        margin = n_half // 2 + 128
    k = np.arange(-n_half - margin, n_half + margin + 1)
    t = k / awg.sample_rate
    return DriveWaveform(awg.sample_rate, spec.phase(t), t_start=float(t[0]))


def clip_aperture(w: DriveWaveform, spec: FresnelLensSpec, f_cut: float) -> DriveWaveform:
    """Zero the drive where the parabola's instantaneous frequency exceeds ``f_cut``."""
    if not f_cut > 0:
        raise ValueError("f_cut must be positive")
    if f_cut >= spec.f_max:
        return w
    half = aperture_half_width(spec, f_cut)
    out = np.where(np.abs(w.times) <= half, w.samples, 0.0)
    return w.with_samples(out)


def quantize(w: DriveWaveform, awg: AWGModel) -> DriveWaveform:
    """Round samples to the DAC's uniform levels over [-full_scale/2, full_scale/2).

    Samples outside the range are clipped and the event is recorded in
    ``warnings``.
    """
    if awg.enob is None:
        return w
    step = awg.lsb
    codes = np.round((w.samples + 0.5 * awg.full_scale) / step)
    n_clip = int(np.count_nonzero((codes < 0) | (codes > awg.levels - 1)))
    codes = np.clip(codes, 0, awg.levels - 1)
    out = -0.5 * awg.full_scale + codes * step
    if n_clip:
        return w.with_samples(out, f"quantize: {n_clip} samples clipped to DAC full scale")
    return w.with_samples(out)


def dac_output(w: DriveWaveform, awg: AWGModel) -> DriveWaveform:
    """Map the waveform's range onto the DAC's full range, quantize, map back.

    This is how the waveform is loaded into the AWG: its peak-to-peak value
    uses every DAC code, and the analog gain restores the original scale.
    """
    if awg.enob is None:
        return w
    lo, hi = float(w.samples.min()), float(w.samples.max())
    if hi == lo:
        return w
    span = awg.full_scale - awg.lsb
    gain = span / (hi - lo)
    normalized = (w.samples - lo) * gain - 0.5 * awg.full_scale
    q = quantize(w.with_samples(normalized), awg)
    return q.with_samples((q.samples + 0.5 * awg.full_scale) / gain + lo)


def _spectral_filter(w: DriveWaveform, multiplier: Callable[[np.ndarray], np.ndarray]):
    x = np.fft.rfft(w.samples)
    f = np.fft.rfftfreq(w.samples.size, 1.0 / w.sample_rate)
    # irfft drops imaginary parts at DC/Nyquist, which enforces Hermitian symmetry.
    return np.fft.irfft(x * multiplier(f), n=w.samples.size)


def apply_response(w: DriveWaveform, h: RFResponse) -> DriveWaveform:
    if h.kind == "flat":
        return w
    return w.with_samples(_spectral_filter(w, h))


def precompensate(w: DriveWaveform, h: RFResponse) -> DriveWaveform:
    """Divide the waveform spectrum by H inside ``h.precomp_band``.

    |H| is floored at ``h.floor_ratio`` times its in-band maximum; hitting the
    floor is recorded in ``warnings``.
    """
    if h.kind == "flat":
        return w
    band = h.precomp_band
    hits = []

    def inverse(f):
        hf = h(f)
        inb = np.abs(f) <= band
        mag = np.abs(hf)
        floor = h.floor_ratio * (mag[inb].max() if inb.any() else 1.0)
        low = inb & (mag < floor)
        if low.any():
            hits.append(int(low.sum()))
            hf = np.where(low, floor * np.exp(1j * np.angle(hf)), hf)
        out = np.ones_like(hf)
        out[inb] = 1.0 / hf[inb]
        return out

    out = _spectral_filter(w, inverse)
    if hits:
        return w.with_samples(out, f"precompensate: regularization floor hit in {hits[0]} bins")
    return w.with_samples(out)


def resample_to_grid(
    w: DriveWaveform, grid: TemporalGrid, delay: float = 0.0, oversample: int = 16
) -> np.ndarray:
    """Band-limited interpolation of the drive onto the optical grid.

    Returns the phase at every grid point, zero outside the waveform support.
    When the drive is already sampled on the grid (same rate, integer
    offset) the samples are copied exactly.
    """
    t0 = w.t_start + delay
    t1 = t0 + (w.samples.size - 1) / w.sample_rate
    t_grid0 = grid.t[0]
    t_grid1 = t_grid0 + (grid.n_samples - 1) * grid.dt
    tol = 1e-9 * grid.dt
    if t0 < t_grid0 - tol or t1 > t_grid1 + tol:
        raise WaveformError(
            f"drive support [{t0:.4g}, {t1:.4g}] s exceeds grid [{t_grid0:.4g}, {t_grid1:.4g}] s"
        )
    out = np.zeros(grid.n_samples)
    offset = (t0 - t_grid0) / grid.dt
    if abs(w.sample_rate * grid.dt - 1) < 1e-9 and abs(offset - round(offset)) < 1e-6:
        i0 = int(round(offset))
        out[i0:i0 + w.samples.size] = w.samples
        return out

    up = sps.resample(w.samples, w.samples.size * oversample)
    t_up = t0 + np.arange(up.size) / (w.sample_rate * oversample)
    spline = interpolate.make_interp_spline(t_up, up, k=5)
    t = grid.t
    inside = (t >= t0) & (t <= t1)
    out[inside] = spline(t[inside])
    return out


@dataclass(frozen=True)
class AmplitudeSweep:
    scales: tuple[float, ...]
    values: tuple[float, ...]

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.values))

    @property
    def best_scale(self) -> float:
        return self.scales[self.best_index]

    @property
    def best_value(self) -> float:
        return self.values[self.best_index]


def amplitude_sweep(
    evaluate: Callable[[float], float],
    scales: Iterable[float],
    map_fn: Callable = map,
) -> AmplitudeSweep:
    """Evaluate the peak-intensity metric at each RF amplitude scale.

    ``map_fn`` may be a parallel map (e.g. ``Executor.map``); results are
    kept in input order, and ties go to the first scale.
    """
    scales = tuple(float(s) for s in scales)
    if not scales:
        raise ValueError("amplitude sweep needs at least one scale")
    values = tuple(float(v) for v in map_fn(evaluate, scales))
    return AmplitudeSweep(scales, values)


def linspace_scales(lo: float, hi: float, n: int) -> Sequence[float]:
    return [float(x) for x in np.linspace(lo, hi, n)]
