"""Scenario pipelines: source -> CFBG -> Fresnel time lens -> spectrum, and the sweeps built on it."""

from __future__ import annotations

import contextlib
import functools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import analysis, photonics, rf_chain
from .config import ExperimentConfig
from .signal_core import (
    SpectralAmplitude,
    TemporalGrid,
    apply_temporal_phase,
    apply_transmission,
    grid_from_span,
    to_spectrum,
)


class PipelineError(RuntimeError):
    """A numerical stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@contextlib.contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except PipelineError:
        raise
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise PipelineError(name, str(exc)) from exc


@contextlib.contextmanager
def mapper(workers: int = 1):
    """Order-preserving map, parallel over processes when ``workers > 1``."""
    if workers <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield pool.map


def _plain(obj):
    """Convert to JSON-native types (tuples to lists, numpy scalars to Python)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class Table:
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": _plain(self.rows)}


@dataclass
class RunSummary:
    command: str
    name: str
    config: dict
    results: dict = field(default_factory=dict)
    tables: dict[str, Table] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    wall_clock_s: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "command": self.command,
            "name": self.name,
            "config": _plain(self.config),
            "results": _plain(self.results),
            "tables": {k: t.to_dict() for k, t in self.tables.items()},
            "warnings": list(self.warnings),
        }
        if include_timing:
            d["wall_clock_s"] = float(self.wall_clock_s)
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunSummary":
        return cls(
            command=d["command"], name=d["name"], config=d["config"], results=d["results"],
            tables={k: Table(v["columns"], v["rows"]) for k, v in d["tables"].items()},
            warnings=list(d["warnings"]), wall_clock_s=d.get("wall_clock_s", 0.0),
        )


# --- building blocks -------------------------------------------------------

def build_grid(cfg: ExperimentConfig) -> TemporalGrid:
    return grid_from_span(cfg.grid.n_samples, cfg.grid.span)


def build_source(cfg: ExperimentConfig) -> photonics.GaussianPulseSource:
    s = cfg.source
    return photonics.GaussianPulseSource(s.carrier_wavelength, s.fwhm, s.energy, s.rep_rate)


def build_response(cfg: ExperimentConfig) -> rf_chain.RFResponse:
    rf = cfg.rf
    if rf.chain == "ideal":
        return rf_chain.RFResponse.flat()
    if rf.response_file:
        return rf_chain.RFResponse.from_file(rf.response_file, band_limit=rf.band_limit)
    return rf_chain.RFResponse.bessel(rf.f_3db, rf.order, band_limit=rf.band_limit)


def build_awg(cfg: ExperimentConfig, grid: TemporalGrid) -> rf_chain.AWGModel:
    if cfg.rf.chain == "ideal":
        # Drive evaluated directly on the optical grid: no sampling or quantization.
        return rf_chain.AWGModel(sample_rate=1.0 / grid.dt, enob=None)
    return rf_chain.AWGModel(sample_rate=cfg.rf.sample_rate, enob=cfg.rf.enob)


def total_gdd(cfg: ExperimentConfig, dispersion: float | None = None) -> float:
    d = cfg.cfbg.total if dispersion is None else dispersion
    return photonics.dispersion_to_gdd(d, cfg.source.carrier_wavelength)


def lens_spec(cfg: ExperimentConfig, gdd: float, scale: float) -> rf_chain.FresnelLensSpec:
    return rf_chain.FresnelLensSpec.matched(
        gdd, cfg.lens.f_max, wrap_modulus=cfg.lens.wrap_modulus, amplitude_scale=scale
    )


def drive_stages(cfg: ExperimentConfig, grid: TemporalGrid, gdd: float, scale: float,
                 f_cut: float | None = None) -> dict[str, rf_chain.DriveWaveform]:
    """Drive waveform after each RF stage: ideal, loaded into the AWG, after the chain."""
    lens = lens_spec(cfg, gdd, scale)
    awg = build_awg(cfg, grid)
    h = build_response(cfg)
    margin = 0 if cfg.rf.chain == "ideal" else None
    with stage("synthesize"):
        ideal = rf_chain.synthesize_fresnel(lens, awg, margin=margin)
        if f_cut is not None:
            ideal = rf_chain.clip_aperture(ideal, lens, f_cut)
    with stage("precompensate"):
        loaded = rf_chain.precompensate(ideal, h)
    with stage("quantize"):
        loaded = rf_chain.dac_output(loaded, awg)
    with stage("rf-response"):
        post = rf_chain.apply_response(loaded, h)
    return {"ideal": ideal, "loaded": loaded, "post_chain": post}


@dataclass
class Spectra:
    """Input and output spectra of one compression run, lossless."""

    input: SpectralAmplitude
    output: SpectralAmplitude
    warnings: list[str]


@functools.lru_cache(maxsize=2)
def _chirped(cfg: ExperimentConfig, modules: tuple[float, ...]):
    grid = build_grid(cfg)
    with stage("source"):
        grid.check_nyquist(0.5 * cfg.source.fwhm, cfg.lens.f_max)
        env = photonics.generate_pulse(build_source(cfg), grid)
    with stage("cfbg"):
        chirped = env
        for d in modules:
            if d != 0:
                elem = photonics.DispersiveElement(d, cfg.source.carrier_wavelength)
                chirped = photonics.apply_cfbg(chirped, elem)
    return env, chirped


def compress_once(cfg: ExperimentConfig, scale: float, f_cut: float | None = None,
                  dispersion: float | None = None) -> Spectra:
    """One lossless pass: source -> CFBG(s) -> time lens -> spectra."""
    gdd = total_gdd(cfg, dispersion)
    modules = cfg.cfbg.modules if dispersion is None else (dispersion,)
    env, chirped = _chirped(cfg, tuple(modules))
    grid = env.grid
    warnings: list[str] = []
    out = chirped
    if cfg.lens.enabled:
        if gdd == 0:
            raise PipelineError("lens", "time lens needs non-zero dispersion (K = 1/GDD)")
        stages = drive_stages(cfg, grid, gdd, scale, f_cut)
        for w in stages.values():
            for msg in w.warnings:
                if msg not in warnings:
                    warnings.append(msg)
        with stage("resample"):
            phase = rf_chain.resample_to_grid(stages["post_chain"], grid, delay=cfg.lens.delay)
        with stage("modulate"):
            out = apply_temporal_phase(chirped, phase)
    with stage("spectrum"):
        return Spectra(to_spectrum(env), to_spectrum(out), warnings)


def enhancement_at(cfg: ExperimentConfig, scale: float, f_cut: float | None = None,
                   dispersion: float | None = None) -> float:
    sp = compress_once(cfg, scale, f_cut, dispersion)
    return analysis.peak_enhancement(sp.input, sp.output)


def sweep_scales(cfg: ExperimentConfig) -> list[float]:
    ln = cfg.lens
    return rf_chain.linspace_scales(ln.sweep_min, ln.sweep_max, ln.sweep_points)


def _resolve_scale(cfg, map_fn, dispersion=None) -> tuple[float, rf_chain.AmplitudeSweep | None]:
    if cfg.lens.amplitude_scale is not None or not cfg.lens.enabled:
        return (cfg.lens.amplitude_scale or 1.0), None
    fn = functools.partial(_enhancement_for_scale, cfg, dispersion)
    sweep = rf_chain.amplitude_sweep(fn, sweep_scales(cfg), map_fn)
    return sweep.best_scale, sweep


def _enhancement_for_scale(cfg, dispersion, scale):
    return enhancement_at(cfg, scale, dispersion=dispersion)


def _enhancement_for_cut(cfg, scale, item):
    dispersion, f_cut = item
    return enhancement_at(cfg, scale, f_cut=f_cut, dispersion=dispersion)


def _sweep_table(sweep: rf_chain.AmplitudeSweep) -> Table:
    return Table(["amplitude_scale", "enhancement"],
                 [[s, v] for s, v in zip(sweep.scales, sweep.values)])


# --- scenario runners ------------------------------------------------------

@dataclass
class CompressionResult:
    summary: RunSummary
    spectra: Spectra
    transmission: float

    @property
    def frequencies(self) -> np.ndarray:
        return self.spectra.input.f


def run_compression(cfg: ExperimentConfig, workers: int = 1) -> CompressionResult:
    t0 = time.perf_counter()
    summary = RunSummary("compress", cfg.name, cfg.to_dict())
    with mapper(workers) as map_fn:
        scale, sweep = _resolve_scale(cfg, map_fn)
    if sweep is not None:
        summary.tables["amplitude_sweep"] = _sweep_table(sweep)
    sp = compress_once(cfg, scale)
    summary.warnings.extend(sp.warnings)
    lam = cfg.source.carrier_wavelength
    transmission = cfg.losses.total(len(cfg.cfbg.modules))
    with stage("analysis"):
        lossless = analysis.compression_metrics(sp.input, sp.output, lam, includes_loss=False)
        lossy_out = apply_transmission(sp.output, transmission)
        lossy = analysis.compression_metrics(sp.input, lossy_out, lam, includes_loss=True)
        comb = analysis.comb_sample(sp.output, cfg.source.rep_rate)
    summary.results = {
        "amplitude_scale": scale,
        "transmission": transmission,
        "metrics": lossless.to_dict(),
        "metrics_lossy": lossy.to_dict(),
        "comb": {
            "rep_rate_hz": cfg.source.rep_rate,
            "modes_above_half_max": comb.modes_above(0.5),
        },
    }
    summary.wall_clock_s = time.perf_counter() - t0
    return CompressionResult(summary, sp, transmission)


def run_amplitude_sweep(cfg: ExperimentConfig, scales: Sequence[float] | None = None,
                        workers: int = 1) -> tuple[RunSummary, rf_chain.AmplitudeSweep]:
    t0 = time.perf_counter()
    scales = sweep_scales(cfg) if scales is None else list(scales)
    summary = RunSummary("sweep-amplitude", cfg.name, cfg.to_dict())
    fn = functools.partial(_enhancement_for_scale, cfg, None)
    with mapper(workers) as map_fn:
        with stage("amplitude-sweep"):
            sweep = rf_chain.amplitude_sweep(fn, scales, map_fn)
    summary.tables["amplitude_sweep"] = _sweep_table(sweep)
    summary.results = {"best_scale": sweep.best_scale, "best_enhancement": sweep.best_value}
    summary.wall_clock_s = time.perf_counter() - t0
    return summary, sweep


def run_aperture_sweep(cfg: ExperimentConfig, f_cuts: Sequence[float] | None = None,
                       workers: int = 1) -> tuple[RunSummary, Table]:
    """Enhancement vs aperture cut-off frequency, for each configured dispersion."""
    t0 = time.perf_counter()
    f_cuts = sorted(cfg.sweep.f_cuts if f_cuts is None else f_cuts)
    if len(f_cuts) < 2:
        raise PipelineError("aperture-sweep", "need at least two cut-off frequencies")
    dispersions = list(cfg.sweep.dispersions) or [cfg.cfbg.total]
    summary = RunSummary("sweep-aperture", cfg.name, cfg.to_dict())
    table = Table(["dispersion_ns_per_nm", "f_cut_hz", "enhancement"])
    scales = {}
    with mapper(workers) as map_fn:
        for d in dispersions:
            scale, sweep = _resolve_scale(cfg, map_fn, dispersion=d)
            scales[str(d)] = scale
            fn = functools.partial(_enhancement_for_cut, cfg, scale)
            with stage("aperture-sweep"):
                values = list(map_fn(fn, [(d, fc) for fc in f_cuts]))
            table.rows.extend([d, fc, v] for fc, v in zip(f_cuts, values))
    summary.tables["aperture_sweep"] = table
    summary.results = {"amplitude_scale": scales}
    summary.wall_clock_s = time.perf_counter() - t0
    return summary, table


@dataclass
class AbsorberScan:
    summary: RunSummary
    compressed: Table
    reference: Table


def run_absorber_scan(cfg: ExperimentConfig, detunings: Sequence[float] | None = None,
                      workers: int = 1) -> AbsorberScan:
    """Flux through the scanning filter with and without the time lens.

    The reference arm passes the same CFBG without temporal phase. Fluxes
    are lossless; the lossy ratio applies the system transmission to the
    compressed arm only (reference = direct connection).
    """
    t0 = time.perf_counter()
    fl = cfg.filter
    filt = photonics.FabryPerotFilter(fl.fwhm, fl.fsr, fl.peak)
    if detunings is None:
        detunings = np.linspace(fl.detuning_min, fl.detuning_max, fl.detuning_points)
    detunings = np.asarray(detunings, dtype=float)
    ref_det = np.linspace(-fl.fsr / 2, fl.fsr / 2, fl.reference_points)
    summary = RunSummary("absorber-scan", cfg.name, cfg.to_dict())

    with mapper(workers) as map_fn:
        scale, sweep = _resolve_scale(cfg, map_fn)
    if sweep is not None:
        summary.tables["amplitude_sweep"] = _sweep_table(sweep)
    sp = compress_once(cfg, scale)
    summary.warnings.extend(sp.warnings)
    ref_cfg = cfg.with_updates(lens={"enabled": False})
    ref = compress_once(ref_cfg, 1.0)
    transmission = cfg.losses.total(len(cfg.cfbg.modules))

    with stage("absorber-scan"):
        flux_c = analysis.flux_through_filter(sp.output, filt, detunings)
        flux_r = analysis.flux_through_filter(ref.output, filt, ref_det)
        zero_c, zero_r = (analysis.flux_through_filter(s.output, filt, [0.0])[0] for s in (sp, ref))
        ratio = zero_c / zero_r
    with stage("voigt-fit"):
        voigt = analysis.voigt_fit_deconvolve(detunings, flux_c, fl.fwhm)
    with stage("analysis"):
        try:
            ref_fwhm = analysis.half_max_width(ref_det, flux_r)[0]
        except analysis.FitError:
            ref_fwhm = None
            summary.warnings.append(
                "absorber-scan: reference scan stays above half maximum within one FSR "
                "(adjacent filter orders overlap)")
        # same filter width, neighbouring orders pushed far away
        src_fwhm = cfg.source.fwhm
        single = photonics.FabryPerotFilter(fl.fwhm, 40 * src_fwhm, fl.peak)
        single_det = np.linspace(-2 * src_fwhm, 2 * src_fwhm, 201)
        ref_single = analysis.flux_through_filter(ref.output, single, single_det)
        ref_single_fwhm = analysis.half_max_width(single_det, ref_single)[0]
        enh = analysis.peak_enhancement(sp.input, sp.output)
    lam = cfg.source.carrier_wavelength
    summary.results = {
        "amplitude_scale": scale,
        "transmission": transmission,
        "flux_ratio_zero_detuning": ratio,
        "flux_ratio_zero_detuning_lossy": ratio * transmission,
        "voigt_gaussian_fwhm_hz": voigt.gaussian_fwhm,
        "voigt_gaussian_fwhm_pm": float(voigt.gaussian_fwhm * lam**2 / photonics.C * 1e12),
        "voigt_lorentzian_fwhm_hz": voigt.lorentzian_fwhm,
        "reference_scan_fwhm_hz": ref_fwhm,
        "reference_single_order_fwhm_hz": ref_single_fwhm,
        "peak_enhancement": enh,
        "peak_enhancement_lossy": enh * transmission,
    }
    compressed = Table(["detuning_hz", "flux", "flux_lossy"],
                       [[d, v, v * transmission] for d, v in zip(detunings, flux_c)])
    reference = Table(["detuning_hz", "flux"], [[d, v] for d, v in zip(ref_det, flux_r)])
    summary.tables["absorber_compressed"] = compressed
    summary.tables["absorber_reference"] = reference
    summary.wall_clock_s = time.perf_counter() - t0
    return AbsorberScan(summary, compressed, reference)


def waveform_table(cfg: ExperimentConfig, scale: float | None = None,
                   f_cut: float | None = None) -> Table:
    """Drive samples after each RF stage, at the AWG rate."""
    grid = build_grid(cfg)
    gdd = total_gdd(cfg)
    if gdd == 0:
        raise PipelineError("synthesize", "waveform needs non-zero dispersion")
    stages = drive_stages(cfg, grid, gdd, scale or cfg.lens.amplitude_scale or 1.0, f_cut)
    ideal = stages["ideal"]
    if not np.any(ideal.samples):
        raise PipelineError("synthesize", "empty waveform: aperture has zero duration")
    return Table(
        ["time_s", "ideal_phase_rad", "precompensated_samples", "post_chain_samples"],
        [[t, a, b, c] for t, a, b, c in zip(ideal.times, ideal.samples,
                                           stages["loaded"].samples, stages["post_chain"].samples)],
    )
