"""Command-line entry point: ``timelens <command> [--preset NAME] [--config FILE] ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Progress and warnings go to stderr; stdout lists the files written.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import export, pipeline
from .config import PRESETS, ConfigError, ExperimentConfig, load_config, preset

log = logging.getLogger("timelens")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

COMMANDS = ("compress", "sweep-aperture", "sweep-amplitude", "absorber-scan", "waveform")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="timelens", description="Fresnel time-lens spectral compression simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
        s.add_argument("--config", type=Path, help="key = value file; overrides the preset")
        s.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        s.add_argument("--format", choices=export.FORMATS, default="both")
        s.add_argument("--workers", type=int, default=1, help="processes for sweep points")
        s.add_argument("-q", "--quiet", action="store_true", help="only errors on stderr")
    return p


def load(args) -> ExperimentConfig:
    cfg = preset(args.preset) if args.preset else ExperimentConfig()
    if args.config is not None:
        cfg = load_config(args.config, base=cfg)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return cfg


def _run(args, cfg: ExperimentConfig) -> list[Path]:
    lam = cfg.source.carrier_wavelength
    spectra = None
    if args.command == "compress":
        res = pipeline.run_compression(cfg, workers=args.workers)
        summary, spectra = res.summary, res.spectra
    elif args.command == "sweep-aperture":
        summary, _ = pipeline.run_aperture_sweep(cfg, workers=args.workers)
    elif args.command == "sweep-amplitude":
        summary, _ = pipeline.run_amplitude_sweep(cfg, workers=args.workers)
    elif args.command == "absorber-scan":
        summary = pipeline.run_absorber_scan(cfg, workers=args.workers).summary
    else:
        t0 = time.perf_counter()
        path, table = export.export_waveform(cfg, args.out / f"{cfg.name}_waveform.csv")
        summary = pipeline.RunSummary("waveform", cfg.name, cfg.to_dict(),
                                      results={"n_samples": len(table.rows)})
        summary.wall_clock_s = time.perf_counter() - t0
        written = [path]
        if args.format in ("json", "both"):
            written.append(export.write_summary(summary, args.out / f"{cfg.name}_summary.json"))
        return written
    for w in summary.warnings:
        log.warning(w)
    log.info("%s finished in %.2f s", args.command, summary.wall_clock_s)
    return export.export_results(summary, spectra, args.out, args.format, lam, cfg.output.crop)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load(args)
        log.info("running %s (%s)", args.command, cfg.name)
        written = _run(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except pipeline.PipelineError as exc:
        print(f"numerical failure in stage '{exc.stage}': {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
