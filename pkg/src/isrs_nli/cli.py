"""Command line entry point.

    isrs-nli SCENARIO.toml [--output-dir DIR] [--format NAME|FILE.csv]
             [--spans N] [--epsilon X] [--plot] [--dump-fits] [--overlay CSV]

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .closed_form import total_snr
from .core import InputError, NumericalError
from .engine import EngineOptions, evaluate_link
from .files import (bundled_scenario_path, computational_inputs, dump_fit_diagnostics,
                    load_scenario, plot_snr, read_results_csv, resolve_format,
                    write_manifest, write_results_csv)

log = logging.getLogger("isrs_nli")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


def parser():
    p = argparse.ArgumentParser(
        prog="isrs-nli",
        description="Per-channel nonlinear SNR of a wideband WDM link with ISRS.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("scenario", nargs="?", type=Path,
                   help="scenario TOML file (default: bundled 452-channel S+C+L scenario)")
    p.add_argument("--output-dir", type=Path, help="overrides [output] dir")
    p.add_argument("--format", dest="fmt",
                   help="modulation format for all channels: gaussian, qpsk, 16qam, 64qam, "
                        "256qam, or a constellation CSV (re,im[,prob])")
    p.add_argument("--spans", type=int, help="number of spans")
    p.add_argument("--epsilon", type=float, help="span coherence exponent")
    p.add_argument("--plot", action="store_true", help="write snr_nli.svg")
    p.add_argument("--overlay", type=Path, help="second results CSV to draw on the plot")
    p.add_argument("--dump-fits", action="store_true",
                   help="write per-channel measured vs fitted power profiles")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(args) -> int:
    stage = "config"
    try:
        scenario_path = args.scenario or bundled_scenario_path()
        cfg = load_scenario(scenario_path)
        changes = {}
        if args.output_dir is not None:
            changes["output_dir"] = args.output_dir
        if args.fmt is not None:
            changes["format_override"] = resolve_format(args.fmt, Path.cwd())
        if args.spans is not None:
            changes["span_count"] = args.spans
        if args.epsilon is not None:
            changes["epsilon"] = args.epsilon
        if args.plot:
            changes["plot"] = True
        if args.dump_fits:
            changes["dump_fits"] = True
        if args.overlay is not None:
            if not args.overlay.is_file():
                raise InputError(f"overlay file not found: {args.overlay}")
            changes["overlay"] = args.overlay
        cfg = replace(cfg, **changes)

        stage = "input"
        fiber = cfg.fiber()
        plan = cfg.plan()
        link = cfg.link(fiber)
        options = EngineOptions(z_grid=cfg.z_grid)

        stage = "compute"
        log.info("evaluating %d channels over %d x %g km", len(plan), link.span_count,
                 fiber.span_length)
        result = evaluate_link(plan, link, options)

        stage = "output"
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        snr_tot = total_snr(result.nli, link)
        write_results_csv(out / "results.csv", result, snr_tot)
        inputs = computational_inputs(plan, link, options.z_grid,
                                      options.include_format_correction)
        write_manifest(out / "manifest.json", inputs, result,
                       extra={"scenario": str(scenario_path)})
        if cfg.dump_fits:
            dump_fit_diagnostics(out / "fits.csv", result.evolution, result.params)
        if cfg.plot:
            overlay = read_results_csv(cfg.overlay) if cfg.overlay else None
            plot_snr(out / "snr_nli.svg", result.wavelength, result.snr_nli,
                     overlay=overlay,
                     overlay_label=cfg.overlay.stem if cfg.overlay else "overlay",
                     title=f"{len(plan)} channels, {link.span_count} x {fiber.span_length:g} km")
        log.info("wrote %s (timings ms: %s)", out,
                 ", ".join(f"{k}={v:.0f}" for k, v in result.timings.items()))
    except InputError as exc:
        print(f"error [{getattr(exc, 'stage', stage)}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure [{getattr(exc, 'stage', stage)}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
