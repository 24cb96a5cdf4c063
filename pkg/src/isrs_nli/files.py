"""Fiber tables, scenario configs, result CSVs, run manifests and plots."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import (BandSegment, ChannelPlan, FiberProfile, InputError, LinkSpec,
                   build_channel_plan, convert_dispersion, db_per_km_to_per_km, dbm_to_watt,
                   excess_kurtosis, format_kurtosis, wavelength_to_frequency)
from .raman import ZGrid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DATA_DIR = Path(__file__).resolve().parent / "data"

RESULT_COLUMNS = ("wavelength_nm", "frequency_THz", "snr_nli_dB", "snr_tot_dB",
                  "alpha", "alpha_bar", "c_r", "fit_residual")


class TableError(InputError):
    def __init__(self, path, row, msg):
        super().__init__(f"{path}: row {row}: {msg}" if row is not None else f"{path}: {msg}")
        self.path, self.row = path, row


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TableError(path, None, "empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise TableError(path, lineno, f"expected {len(header)} columns, got {len(row)}")
            try:
                rows.append((lineno, [float(c) for c in row]))
            except ValueError:
                raise TableError(path, lineno, f"non-numeric value in {row}") from None
    if not rows:
        raise TableError(path, None, "no data rows")
    return header, rows


def _check_increasing(path, rows, col, what):
    for (_, prev), (lineno, cur) in zip(rows, rows[1:]):
        if cur[col] <= prev[col]:
            kind = "duplicate" if cur[col] == prev[col] else "unsorted"
            raise TableError(path, lineno, f"{kind} {what} {cur[col]}")


def load_attenuation_table(path):
    """Returns (frequency [THz, increasing], alpha [1/km]).

    Abscissa column: ``wavelength_nm`` or ``frequency_THz``; ordinate
    ``loss_dB_per_km`` or ``loss_per_km``.
    """
    header, rows = _read_rows(path)
    if "wavelength_nm" in header:
        xcol, xname = header.index("wavelength_nm"), "wavelength"
    elif "frequency_THz" in header:
        xcol, xname = header.index("frequency_THz"), "frequency"
    else:
        raise TableError(path, 1, "need a wavelength_nm or frequency_THz column")
    if "loss_dB_per_km" in header:
        ycol, in_db = header.index("loss_dB_per_km"), True
    elif "loss_per_km" in header:
        ycol, in_db = header.index("loss_per_km"), False
    else:
        raise TableError(path, 1, "need a loss_dB_per_km or loss_per_km column")
    _check_increasing(path, rows, xcol, xname)
    for lineno, r in rows:
        if not math.isfinite(r[ycol]) or r[ycol] <= 0:
            raise TableError(path, lineno, f"loss must be positive, got {r[ycol]}")
        if not r[xcol] > 0:
            raise TableError(path, lineno, f"{xname} must be positive")
    x = np.array([r[xcol] for _, r in rows])
    y = np.array([r[ycol] for _, r in rows])
    if in_db:
        y = db_per_km_to_per_km(y)
    if xname == "wavelength":
        x, y = wavelength_to_frequency(x)[::-1], y[::-1]
    return x, y


def load_raman_table(path):
    """Returns (shift [THz], gain [1/(W km)]) with a zero-gain point at 0."""
    header, rows = _read_rows(path)
    try:
        xcol, ycol = header.index("shift_THz"), header.index("gain_per_W_per_km")
    except ValueError:
        raise TableError(path, 1, "need shift_THz and gain_per_W_per_km columns") from None
    for lineno, r in rows:
        if r[xcol] < 0:
            raise TableError(path, lineno, f"negative shift {r[xcol]}")
        if not math.isfinite(r[ycol]):
            raise TableError(path, lineno, "non-finite gain")
    _check_increasing(path, rows, xcol, "shift")
    x = np.array([r[xcol] for _, r in rows])
    y = np.array([r[ycol] for _, r in rows])
    if x[0] == 0.0:
        if y[0] != 0.0:
            raise TableError(path, rows[0][0], "gain at zero shift must be 0")
    else:
        x, y = np.concatenate(([0.0], x)), np.concatenate(([0.0], y))
    return x, y


def load_fiber_tables(attenuation_csv, raman_csv):
    """Both tables as a dict of FiberProfile keyword fragments."""
    af, a = load_attenuation_table(attenuation_csv)
    rs, rg = load_raman_table(raman_csv)
    return dict(attenuation_freq=af, attenuation=a, raman_shift=rs, raman_gain=rg)


def write_fiber_tables(fiber: FiberProfile, attenuation_csv, raman_csv):
    """Write tables in internal units (frequency_THz, loss_per_km); floats
    use repr so reloading is bit-exact."""
    with open(attenuation_csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_THz", "loss_per_km"])
        w.writerows((repr(float(f)), repr(float(a)))
                    for f, a in zip(fiber.attenuation_freq, fiber.attenuation))
    with open(raman_csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["shift_THz", "gain_per_W_per_km"])
        w.writerows((repr(float(s)), repr(float(g)))
                    for s, g in zip(fiber.raman_shift, fiber.raman_gain))


def load_constellation(path):
    """CSV with columns re, im and optionally prob."""
    header, rows = _read_rows(path)
    try:
        re_c, im_c = header.index("re"), header.index("im")
    except ValueError:
        raise TableError(path, 1, "need re and im columns") from None
    pts = np.array([r[re_c] + 1j * r[im_c] for _, r in rows])
    prob = None
    if "prob" in header:
        prob = np.array([r[header.index("prob")] for _, r in rows])
    return pts, prob


def resolve_format(fmt: str, base_dir: Path | None = None) -> float:
    """Excess kurtosis for a format name or a constellation CSV path."""
    try:
        return format_kurtosis(fmt)
    except InputError:
        pass
    path = Path(fmt)
    if base_dir is not None and not path.is_absolute() and not path.exists():
        path = base_dir / path
    if path.suffix.lower() == ".csv" or path.exists():
        pts, prob = load_constellation(path)
        return excess_kurtosis(pts, prob)
    raise InputError(f"unknown modulation format or missing constellation file: {fmt}")


# --------------------------------------------------------------------------
# scenario


@dataclass
class ScenarioConfig:
    attenuation_csv: Path
    raman_csv: Path
    beta2: float
    beta3: float
    gamma: float
    span_length: float
    segments: list
    span_count: int = 1
    epsilon: float = 0.0
    reference_frequency: float | None = None
    snr_ase_db: float | None = None
    snr_trx_db: float | None = None
    z_grid: ZGrid = field(default_factory=ZGrid)
    format_override: float | None = None
    output_dir: Path = Path("out")
    plot: bool = False
    dump_fits: bool = False
    overlay: Path | None = None
    source: Path | None = None

    def fiber(self) -> FiberProfile:
        tables = load_fiber_tables(self.attenuation_csv, self.raman_csv)
        return FiberProfile(beta2=self.beta2, beta3=self.beta3, gamma=self.gamma,
                            span_length=self.span_length, **tables)

    def plan(self) -> ChannelPlan:
        segs = self.segments
        if self.format_override is not None:
            segs = [BandSegment(s.start_freq, s.channel_count, s.symbol_rate, s.spacing,
                                s.power, self.format_override) for s in segs]
        return build_channel_plan(segs, self.reference_frequency)

    def link(self, fiber: FiberProfile) -> LinkSpec:
        return LinkSpec(fiber=fiber, span_count=self.span_count,
                        coherence_epsilon=self.epsilon,
                        snr_ase_db=self.snr_ase_db, snr_trx_db=self.snr_trx_db)


def _need(table, key, where):
    if key not in table:
        raise InputError(f"missing '{key}' in [{where}]")
    return table[key]


def load_scenario(path) -> ScenarioConfig:
    """Parse a TOML scenario. Table paths are relative to the file, the
    output directory to the working directory."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"scenario file not found: {path}")
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    base = path.parent

    fib = _need(doc, "fiber", "root")
    if "beta2_ps2_per_km" in fib:
        beta2 = float(fib["beta2_ps2_per_km"])
        beta3 = float(fib.get("beta3_ps3_per_km", 0.0))
    else:
        beta2, beta3 = convert_dispersion(
            float(_need(fib, "dispersion_ps_per_nm_km", "fiber")),
            float(fib.get("slope_ps_per_nm2_km", 0.0)),
            float(_need(fib, "reference_wavelength_nm", "fiber")))

    def table_path(key):
        p = Path(_need(fib, key, "fiber"))
        if not p.is_absolute():
            p = base / p
        if not p.is_file():
            raise InputError(f"fiber table not found: {p}")
        return p

    att, ram = table_path("attenuation"), table_path("raman")

    bands = doc.get("band", [])
    if not bands:
        raise InputError("scenario defines no [[band]] segments")
    segments = []
    for b in bands:
        fmt = b.get("format", "gaussian")
        segments.append(BandSegment(
            start_freq=float(_need(b, "start_THz", "band")),
            channel_count=int(_need(b, "channels", "band")),
            symbol_rate=float(_need(b, "symbol_rate_GBd", "band")) * 1e-3,
            spacing=float(_need(b, "spacing_GHz", "band")) * 1e-3,
            power=float(dbm_to_watt(float(_need(b, "power_dBm", "band")))),
            format=resolve_format(fmt, base) if isinstance(fmt, str) else float(fmt),
        ))

    link = doc.get("link", {})
    solver = doc.get("solver", {})
    out = doc.get("output", {})
    out_dir = Path(out.get("dir", "out"))
    return ScenarioConfig(
        attenuation_csv=att, raman_csv=ram,
        beta2=beta2, beta3=beta3,
        gamma=float(_need(fib, "gamma_per_W_km", "fiber")),
        span_length=float(_need(fib, "span_length_km", "fiber")),
        segments=segments,
        span_count=int(link.get("spans", 1)),
        epsilon=float(link.get("epsilon", 0.0)),
        reference_frequency=doc.get("reference_THz"),
        snr_ase_db=link.get("snr_ase_db"),
        snr_trx_db=link.get("snr_trx_db"),
        z_grid=ZGrid(float(solver.get("max_step_km", 0.05)), int(solver.get("samples", 201))),
        output_dir=out_dir,
        plot=bool(out.get("plot", False)),
        dump_fits=bool(out.get("dump_fits", False)),
        source=path,
    )


def bundled_scenario_path() -> Path:
    return DATA_DIR / "scl_452ch.toml"


# --------------------------------------------------------------------------
# outputs


def _f(x) -> str:
    return repr(float(x))


def write_results_csv(path, result, snr_tot):
    order = np.argsort(result.frequency, kind="stable")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for i in order:
            p = result.params[i]
            w.writerow([_f(result.wavelength[i]), _f(result.frequency[i]), _f(result.snr_nli[i]),
                        _f(snr_tot[i]), _f(p.alpha), _f(p.alpha_bar), _f(p.c_r),
                        _f(p.fit_residual)])


def read_results_csv(path) -> dict:
    header, rows = _read_rows(path)
    return {name: np.array([r[header.index(name)] for _, r in rows]) for name in header}


def dump_fit_diagnostics(path, evolution, params):
    """Long-format CSV: channel, z_km, measured, fitted (normalised power)."""
    from .fit import eval_first_order_profile

    rho = evolution.normalized()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "z_km", "measured", "fitted"])
        for i, p in enumerate(params):
            fitted = eval_first_order_profile(p, evolution.z)
            for z, m, fv in zip(evolution.z, rho[i], fitted):
                w.writerow([i, _f(z), _f(m), _f(fv)])


def computational_inputs(plan: ChannelPlan, link: LinkSpec, z_grid: ZGrid,
                         include_format_correction: bool = True) -> dict:
    fib = link.fiber

    def fl(a):
        return [repr(float(v)) for v in np.ravel(a)]

    def opt(v):
        return None if v is None else fl(v)

    return {
        "fiber": {
            "attenuation_freq": fl(fib.attenuation_freq), "attenuation": fl(fib.attenuation),
            "raman_shift": fl(fib.raman_shift), "raman_gain": fl(fib.raman_gain),
            "beta2": repr(fib.beta2), "beta3": repr(fib.beta3), "gamma": repr(fib.gamma),
            "span_length": repr(fib.span_length),
        },
        "plan": {
            "reference_frequency": repr(plan.reference_frequency),
            "frequency": fl(plan.frequencies), "bandwidth": fl(plan.bandwidths),
            "power": fl(plan.powers), "kurtosis": fl(plan.kurtosis),
        },
        "link": {"span_count": int(link.span_count), "epsilon": repr(link.coherence_epsilon),
                 "snr_ase_db": opt(link.snr_ase_db), "snr_trx_db": opt(link.snr_trx_db)},
        "solver": {"max_step": repr(z_grid.max_step), "samples": z_grid.samples},
        "include_format_correction": include_format_correction,
    }


def inputs_hash(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path, inputs: dict, result, extra=None):
    manifest = {
        "inputs_sha256": inputs_hash(inputs),
        "channels": len(result),
        "versions": {"isrs_nli": __version__, "python": platform.python_version(),
                     "numpy": np.__version__},
        "timings_ms": {k: round(v, 3) for k, v in result.timings.items()},
        "stage_runs": result.stage_runs,
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def plot_snr(path, wavelength, snr_nli, label="closed form", overlay=None,
             overlay_label="overlay", title=None):
    """SVG of nonlinear SNR against wavelength, optionally with a second run."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(wavelength, snr_nli, ".", ms=3, label=label)
    if overlay is not None:
        ax.plot(overlay["wavelength_nm"], overlay["snr_nli_dB"], ".", ms=3, label=overlay_label)
    ax.set_xlabel("wavelength [nm]")
    ax.set_ylabel("SNR$_{NLI}$ [dB]")
    if title:
        ax.set_title(title)
    ax.grid(True, lw=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
