"""Simulator for electro-optic Fresnel time-lens spectral compression."""

from .config import ExperimentConfig, load_config, parse_config, preset
from .pipeline import (
    PipelineError,
    RunSummary,
    run_absorber_scan,
    run_amplitude_sweep,
    run_aperture_sweep,
    run_compression,
)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "PipelineError",
    "RunSummary",
    "load_config",
    "parse_config",
    "preset",
    "run_absorber_scan",
    "run_amplitude_sweep",
    "run_aperture_sweep",
    "run_compression",
]
