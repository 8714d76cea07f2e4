"""CSV and JSON writers for run summaries, spectra and drive waveforms.

Floats are written with ``repr`` so every value round-trips exactly
(at least 12 significant digits where the value needs them).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .config import ExperimentConfig
from .pipeline import RunSummary, Spectra, Table, waveform_table
from .signal_core import C

FORMATS = ("csv", "json", "both")

SPECTRUM_COLUMNS = ["detuning_hz", "wavelength_offset_pm", "intensity_in", "intensity_out"]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, columns: list[str], rows: Iterable[Iterable]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        if isinstance(rows, np.ndarray) and rows.dtype.kind == "f":
            # fast path for large numeric blocks; repr of Python floats round-trips
            line = ",".join(["%r"] * rows.shape[1]) + "\n"
            fh.write((line * rows.shape[0]) % tuple(rows.ravel().tolist()))
        else:
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float rows of a CSV written by :func:`write_csv`."""
    with Path(path).open(newline="") as fh:
        header = next(csv.reader(fh))
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, rows.reshape(-1, len(header))


def spectrum_rows(spectra: Spectra, carrier_wavelength: float, crop: float | None = None):
    f = spectra.input.f
    sel = np.ones(f.size, bool) if crop is None else np.abs(f) <= crop
    # positive detuning = higher optical frequency = shorter wavelength
    dl_pm = -f[sel] * carrier_wavelength**2 / C * 1e12
    return np.column_stack([f[sel], dl_pm, spectra.input.intensity[sel],
                            spectra.output.intensity[sel]])


def write_summary(summary: RunSummary, path, include_timing: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(summary.to_json(include_timing) + "\n")
    return path


def read_summary(path) -> RunSummary:
    return RunSummary.from_dict(json.loads(Path(path).read_text()))


def export_results(summary: RunSummary, spectra: Spectra | None, out_dir, fmt: str = "both",
                   carrier_wavelength: float = 1560e-9, crop: float | None = None) -> list[Path]:
    """Write spectra and sweep tables as CSV and/or the summary as JSON.

    Files are named ``<name>_<what>.csv`` and ``<name>_summary.json``.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    stem = summary.name
    written = []
    if fmt in ("csv", "both"):
        if spectra is not None:
            rows = spectrum_rows(spectra, carrier_wavelength, crop)
            written.append(write_csv(out / f"{stem}_spectra.csv", SPECTRUM_COLUMNS, rows))
        for key, table in summary.tables.items():
            written.append(write_csv(out / f"{stem}_{key}.csv", table.columns, table.rows))
    if fmt in ("json", "both"):
        written.append(write_summary(summary, out / f"{stem}_summary.json"))
    return written


def export_waveform(cfg: ExperimentConfig, path, scale: float | None = None,
                    f_cut: float | None = None) -> tuple[Path, Table]:
    table = waveform_table(cfg, scale, f_cut)
    return write_csv(path, table.columns, table.rows), table
