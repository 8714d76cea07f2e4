"""Experiment configuration: flat ``section.key = value`` text with unit suffixes.

Example::

    # comment
    grid.span = 64 ns
    source.fwhm = 68.5 GHz        # or a wavelength width, e.g. 0.55 nm
    cfbg.modules = 10 ns/nm, 5 ns/nm
    lens.amplitude_scale = auto

Every value is converted to SI on load. Unknown keys, missing units and
wrong-dimension units are :class:`ConfigError`.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .signal_core import C


class ConfigError(ValueError):
    pass


_UNITS = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15},
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12},
    "length": {"m": 1.0, "um": 1e-6, "nm": 1e-9, "pm": 1e-12},
    "dispersion": {"s/m": 1.0, "ns/nm": 1.0, "ps/nm": 1e-3},
    "rate": {"s/s": 1.0, "ms/s": 1e6, "gs/s": 1e9, "hz": 1.0, "ghz": 1e9},
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


@dataclass(frozen=True)
class GridConfig:
    n_samples: int = 2**21
    span: float = 64e-9


@dataclass(frozen=True)
class SourceConfig:
    carrier_wavelength: float = 1560e-9
    fwhm: float = 68.5e9
    rep_rate: float = 20e6
    energy: float = 1.0


@dataclass(frozen=True)
class CFBGConfig:
    modules: tuple[float, ...] = (10.0,)   # s/m each; applied in order

    @property
    def total(self) -> float:
        return float(sum(self.modules))


@dataclass(frozen=True)
class RFConfig:
    chain: str = "awg"                # "awg" or "ideal"
    f_3db: float = 35e9
    order: int = 4
    response_file: str | None = None
    enob: float | None = 5.0
    sample_rate: float = 92.16e9
    band_limit: float | None = None


@dataclass(frozen=True)
class LensConfig:
    enabled: bool = True
    f_max: float = 35e9
    wrap_modulus: float = 2 * math.pi
    amplitude_scale: float | None = 1.0   # None means "auto" (sweep)
    sweep_min: float = 0.7
    sweep_max: float = 1.3
    sweep_points: int = 21
    delay: float = 0.0


@dataclass(frozen=True)
class LossConfig:
    cfbg: float = 0.5          # per module
    eopm: float = 0.575
    system: float | None = None

    def total(self, n_modules: int) -> float:
        if self.system is not None:
            return self.system
        return self.cfbg**n_modules * self.eopm


@dataclass(frozen=True)
class FilterConfig:
    fwhm: float = 420e6
    fsr: float = C * 1.2e-9 / 1560e-9**2
    peak: float = 1.0
    detuning_min: float = -1.5e9
    detuning_max: float = 1.5e9
    detuning_points: int = 61
    reference_points: int = 121


@dataclass(frozen=True)
class SweepConfig:
    f_cuts: tuple[float, ...] = ()
    dispersions: tuple[float, ...] = ()


@dataclass(frozen=True)
class OutputConfig:
    crop: float | None = 20e9       # half-width of exported spectra; None = full grid


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    grid: GridConfig = field(default_factory=GridConfig)
    source: SourceConfig = field(default_factory=SourceConfig)
    cfbg: CFBGConfig = field(default_factory=CFBGConfig)
    rf: RFConfig = field(default_factory=RFConfig)
    lens: LensConfig = field(default_factory=LensConfig)
    losses: LossConfig = field(default_factory=LossConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_updates(self, **sections) -> "ExperimentConfig":
        """Replace fields of nested sections: ``cfg.with_updates(lens={"f_max": 20e9})``."""
        changes = {}
        for name, values in sections.items():
            current = getattr(self, name)
            changes[name] = replace(current, **values) if isinstance(values, dict) else values
        return replace(self, **changes)


# key -> (kind, nullable). Kinds: int, float, bool, str, fraction, angle,
# spectral (frequency or wavelength width), or a unit dimension from _UNITS.
_SCHEMA = {
    "name": ("str", False),
    "grid.n_samples": ("int", False),
    "grid.span": ("time", False),
    "source.carrier": ("length", False),
    "source.fwhm": ("spectral", False),
    "source.rep_rate": ("frequency", False),
    "source.energy": ("float", False),
    "cfbg.modules": ("dispersion[]", False),
    "rf.chain": ("str", False),
    "rf.f_3db": ("frequency", False),
    "rf.order": ("int", False),
    "rf.response_file": ("str", True),
    "rf.enob": ("float", True),
    "rf.sample_rate": ("rate", False),
    "rf.band_limit": ("frequency", True),
    "lens.enabled": ("bool", False),
    "lens.f_max": ("frequency", False),
    "lens.wrap_modulus": ("angle", False),
    "lens.amplitude_scale": ("float", True),
    "lens.sweep_min": ("float", False),
    "lens.sweep_max": ("float", False),
    "lens.sweep_points": ("int", False),
    "lens.delay": ("time", False),
    "losses.cfbg": ("fraction", False),
    "losses.eopm": ("fraction", False),
    "losses.system": ("fraction", True),
    "filter.fwhm": ("spectral", False),
    "filter.fsr": ("spectral", False),
    "filter.peak": ("fraction", False),
    "filter.detuning_min": ("frequency", False),
    "filter.detuning_max": ("frequency", False),
    "filter.detuning_points": ("int", False),
    "filter.reference_points": ("int", False),
    "sweep.f_cuts": ("frequency[]", False),
    "sweep.dispersions": ("dispersion[]", False),
    "output.crop": ("frequency", True),
}

# config key -> dataclass attribute where they differ
_ATTR = {"source.carrier": "carrier_wavelength"}

_NULL_WORDS = {"none", "auto", "off", "null"}


@dataclass(frozen=True)
class _Spectral:
    """Width given either in Hz or in m; converted once the carrier is known."""

    value: float
    dimension: str


def _parse_quantity(text: str, dimension: str, key: str) -> tuple[float, str]:
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(f"{key}: cannot parse number from {text!r}")
    value, unit = float(m.group(1)), m.group(2).lower()
    if dimension == "spectral":
        for dim in ("frequency", "length"):
            if unit in _UNITS[dim]:
                return value * _UNITS[dim][unit], dim
        raise ConfigError(f"{key}: expected a frequency or wavelength unit, got {unit!r}")
    table = _UNITS[dimension]
    if unit not in table:
        raise ConfigError(f"{key}: expected a {dimension} unit {sorted(table)}, got {unit!r}")
    return value * table[unit], dimension


def _parse_value(key: str, raw: str):
    kind, nullable = _SCHEMA[key]
    text = raw.strip()
    if nullable and text.lower() in _NULL_WORDS:
        return None
    try:
        if kind == "str":
            return text.strip("\"'")
        if kind == "int":
            v = float(text)
            if not v.is_integer():
                raise ValueError
            return int(v)
        if kind == "float":
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if kind == "fraction":
            m = _NUMBER.match(text)
            if not m:
                raise ValueError
            v, unit = float(m.group(1)), m.group(2).lower()
            if unit == "":
                return v
            if unit == "%":
                return v / 100
            if unit == "db":
                return 10 ** (-abs(v) / 10)
            raise ConfigError(f"{key}: fraction unit must be '', '%' or 'dB', got {unit!r}")
        if kind == "angle":
            low = text.lower().replace(" ", "")
            if low in ("inf", "infinity"):
                return math.inf
            if low.endswith("pi"):
                coeff = low[:-2].rstrip("*")
                return (float(coeff) if coeff else 1.0) * math.pi
            return _angle(text, key)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"{key}: invalid {kind} value {raw!r}") from None
    if kind.endswith("[]"):
        dim = kind[:-2]
        items = [s for s in text.split(",") if s.strip()]
        return tuple(_parse_quantity(s, dim, key)[0] for s in items)
    value, dim = _parse_quantity(text, kind, key)
    if kind == "spectral":
        return _Spectral(value, dim)
    return value


def _angle(text: str, key: str) -> float:
    m = _NUMBER.match(text)
    if not m or m.group(2).lower() not in ("", "rad"):
        raise ConfigError(f"{key}: expected radians, '<k>pi' or 'inf', got {text!r}")
    return float(m.group(1))


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse config text, overriding ``base`` (defaults if None)."""
    raw: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (lineno, value)

    cfg = base or ExperimentConfig()
    sections: dict[str, dict] = {}
    spectral: list[tuple[str, float, str]] = []
    for key, (lineno, value) in raw.items():
        parsed = _parse_value(key, value)
        if isinstance(parsed, _Spectral):
            spectral.append((key, parsed.value, parsed.dimension))
            continue
        if key == "name":
            cfg = replace(cfg, name=parsed)
            continue
        section, attr = key.split(".", 1)
        sections.setdefault(section, {})[_ATTR.get(key, attr)] = parsed
    cfg = cfg.with_updates(**sections)

    # Wavelength widths convert at the (possibly updated) carrier.
    lam = cfg.source.carrier_wavelength
    late: dict[str, dict] = {}
    for key, value, dim in spectral:
        hz = C * value / lam**2 if dim == "length" else value
        section, attr = key.split(".", 1)
        late.setdefault(section, {})[attr] = hz
    cfg = cfg.with_updates(**late)
    validate(cfg)
    return cfg


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)


def validate(cfg: ExperimentConfig) -> None:
    def positive(name, v):
        if not (v > 0 and math.isfinite(v)):
            raise ConfigError(f"{name} must be positive and finite, got {v!r}")

    g = cfg.grid
    if g.n_samples < 2 or g.n_samples & (g.n_samples - 1):
        raise ConfigError(f"grid.n_samples must be a power of two, got {g.n_samples}")
    positive("grid.span", g.span)
    s = cfg.source
    for name in ("carrier_wavelength", "fwhm", "rep_rate", "energy"):
        positive(f"source.{name}", getattr(s, name))
    if any(d < 0 for d in cfg.cfbg.modules):
        raise ConfigError("cfbg.modules must be non-negative")
    rf = cfg.rf
    if rf.chain not in ("awg", "ideal"):
        raise ConfigError(f"rf.chain must be 'awg' or 'ideal', got {rf.chain!r}")
    positive("rf.f_3db", rf.f_3db)
    positive("rf.sample_rate", rf.sample_rate)
    if rf.order < 1:
        raise ConfigError("rf.order must be >= 1")
    if rf.enob is not None:
        positive("rf.enob", rf.enob)
    if rf.band_limit is not None:
        positive("rf.band_limit", rf.band_limit)
    if rf.response_file is not None and not Path(rf.response_file).is_file():
        raise ConfigError(f"rf.response_file {rf.response_file!r} does not exist")
    ln = cfg.lens
    positive("lens.f_max", ln.f_max)
    if not ln.wrap_modulus > 0:
        raise ConfigError("lens.wrap_modulus must be positive")
    if rf.chain == "awg" and ln.enabled and ln.f_max >= rf.sample_rate / 2:
        raise ConfigError(
            f"lens.f_max {ln.f_max:.4g} Hz must be below rf.sample_rate/2 = {rf.sample_rate / 2:.4g} Hz"
        )
    if ln.amplitude_scale is not None:
        positive("lens.amplitude_scale", ln.amplitude_scale)
    if ln.sweep_points < 1:
        raise ConfigError("lens.sweep_points must be >= 1")
    if ln.sweep_max < ln.sweep_min or ln.sweep_min <= 0:
        raise ConfigError("lens sweep range must satisfy 0 < sweep_min <= sweep_max")
    lo = cfg.losses
    for name in ("cfbg", "eopm", "system"):
        v = getattr(lo, name)
        if v is not None and not 0 < v <= 1:
            raise ConfigError(f"losses.{name} must lie in (0, 1], got {v!r}")
    fl = cfg.filter
    positive("filter.fwhm", fl.fwhm)
    positive("filter.fsr", fl.fsr)
    if fl.fsr <= fl.fwhm:
        raise ConfigError("filter.fsr must exceed filter.fwhm")
    if not 0 < fl.peak <= 1:
        raise ConfigError("filter.peak must lie in (0, 1]")
    if fl.detuning_points < 1 or fl.reference_points < 1:
        raise ConfigError("filter detuning point counts must be >= 1")
    if fl.detuning_max < fl.detuning_min:
        raise ConfigError("filter.detuning_max must be >= filter.detuning_min")
    if any(f <= 0 for f in cfg.sweep.f_cuts):
        raise ConfigError("sweep.f_cuts must be positive")
    if any(d < 0 for d in cfg.sweep.dispersions):
        raise ConfigError("sweep.dispersions must be non-negative")
    if cfg.output.crop is not None:
        positive("output.crop", cfg.output.crop)


PRESETS: dict[str, str] = {
    "fig3a": """
        name = fig3a
        source.fwhm = 68.5 GHz
        source.rep_rate = 20 MHz
        cfbg.modules = 10 ns/nm
        losses.system = 31.9 %
    """,
    "fig3b": """
        name = fig3b
        source.fwhm = 68.5 GHz
        source.rep_rate = 80 MHz
        cfbg.modules = 10 ns/nm, 5 ns/nm
        losses.system = 16 %
    """,
    "fig4": """
        name = fig4
        cfbg.modules = 10 ns/nm
        sweep.dispersions = 5 ns/nm, 10 ns/nm, 15 ns/nm
        sweep.f_cuts = 5 GHz, 10 GHz, 15 GHz, 20 GHz, 25 GHz, 30 GHz, 35 GHz, 40 GHz, 45 GHz, 52 GHz
    """,
    "fig5": """
        name = fig5
        source.fwhm = 1 nm
        source.rep_rate = 80 MHz
        cfbg.modules = 10 ns/nm
        losses.system = 31.9 %
        filter.fwhm = 420 MHz
        filter.fsr = 1.2 nm
        filter.detuning_min = -1.5 GHz
        filter.detuning_max = 1.5 GHz
        filter.detuning_points = 61
    """,
    "identity": """
        name = identity
        cfbg.modules = 0 ns/nm
        lens.enabled = false
    """,
}


def preset(name: str) -> ExperimentConfig:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return parse_config(text)
