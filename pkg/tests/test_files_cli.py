import json
import math

import numpy as np
import pytest

from isrs_nli.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, main
from isrs_nli.core import FiberProfile, InputError, format_kurtosis
from isrs_nli.files import (DATA_DIR, RESULT_COLUMNS, TableError, computational_inputs,
                            inputs_hash, load_attenuation_table, load_fiber_tables,
                            load_raman_table, load_scenario, read_results_csv,
                            resolve_format, write_fiber_tables)
from isrs_nli.raman import ZGrid

SMALL = """
[fiber]
attenuation = "{att}"
raman = "{ram}"
dispersion_ps_per_nm_km = 17.0
slope_ps_per_nm2_km = 0.06
reference_wavelength_nm = 1550.0
gamma_per_W_km = 1.3
span_length_km = 80.0

[link]
spans = 2
snr_ase_db = 24.0

[[band]]
start_THz = 190.0
channels = 16
symbol_rate_GBd = 40.0
spacing_GHz = 250.0
power_dBm = 0.0
format = "16qam"
"""


def write(path, text):
    path.write_text(text)
    return path


@pytest.fixture
def small_scenario(tmp_path):
    att = DATA_DIR / "synthetic_attenuation.csv"
    ram = DATA_DIR / "synthetic_raman.csv"
    return write(tmp_path / "small.toml", SMALL.format(att=att, ram=ram))


def test_flat_attenuation_file(tmp_path):
    p = write(tmp_path / "a.csv", "wavelength_nm,loss_dB_per_km\n" +
              "".join(f"{1500 + 10 * i},0.20\n" for i in range(6)))
    f, a = load_attenuation_table(p)
    assert np.all(np.diff(f) > 0)
    assert np.allclose(a, 0.2 * math.log(10) / 10, rtol=1e-15)
    assert a[0] == pytest.approx(0.0461, abs=5e-5)


def test_empty_raman_file(tmp_path):
    with pytest.raises(InputError):
        load_raman_table(write(tmp_path / "r.csv", ""))
    with pytest.raises(InputError):
        load_raman_table(write(tmp_path / "r2.csv", "shift_THz,gain_per_W_per_km\n"))


@pytest.mark.parametrize("body, row, word", [
    ("1550,0.2\n1540,0.2\n", 3, "unsorted"),
    ("1550,0.2\n1560,0.2\n1560,0.21\n", 4, "duplicate"),
    ("1550,0.2\n1560,-0.2\n", 3, "positive"),
])
def test_attenuation_row_errors(tmp_path, body, row, word):
    p = write(tmp_path / "a.csv", "wavelength_nm,loss_dB_per_km\n" + body)
    with pytest.raises(TableError, match=word) as err:
        load_attenuation_table(p)
    assert err.value.row == row
    assert f"row {row}" in str(err.value)


def test_negative_raman_shift(tmp_path):
    p = write(tmp_path / "r.csv", "shift_THz,gain_per_W_per_km\n0,0\n-1,0.02\n")
    with pytest.raises(TableError, match="negative shift") as err:
        load_raman_table(p)
    assert err.value.row == 3


def test_raman_table_gets_zero_point(tmp_path):
    s, g = load_raman_table(write(tmp_path / "r.csv", "shift_THz,gain_per_W_per_km\n1,0.03\n"))
    assert s[0] == 0.0 and g[0] == 0.0


def test_missing_columns(tmp_path):
    with pytest.raises(TableError):
        load_attenuation_table(write(tmp_path / "a.csv", "x,y\n1,2\n"))


def test_bundled_tables_shape():
    tables = load_fiber_tables(DATA_DIR / "synthetic_attenuation.csv",
                               DATA_DIR / "synthetic_raman.csv")
    db = tables["attenuation"] * 10 / math.log(10)
    assert db.min() == pytest.approx(0.17, abs=1e-12)
    fib = FiberProfile(beta2=-21.0, beta3=0.14, gamma=1.2, span_length=80.0, **tables)
    assert fib.gain(7.0) == pytest.approx(0.0284 * 7.0, rel=1e-12)
    assert fib.gain(14.0) == pytest.approx(0.0284 * 14.0, rel=1e-12)
    assert fib.gain(20.0) == 0.0 and fib.gain(25.0) == 0.0


def test_bundled_tables_round_trip(tmp_path):
    tables = load_fiber_tables(DATA_DIR / "synthetic_attenuation.csv",
                               DATA_DIR / "synthetic_raman.csv")
    fib = FiberProfile(beta2=-21.0, beta3=0.14, gamma=1.2, span_length=80.0, **tables)
    write_fiber_tables(fib, tmp_path / "a.csv", tmp_path / "r.csv")
    again = load_fiber_tables(tmp_path / "a.csv", tmp_path / "r.csv")
    for k, v in tables.items():
        assert again[k].tobytes() == np.asarray(v).tobytes(), k


def test_constellation_file(tmp_path):
    rows = [(a, b) for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)]
    p = write(tmp_path / "c.csv", "re,im\n" + "".join(f"{a},{b}\n" for a, b in rows))
    assert resolve_format(str(p)) == pytest.approx(format_kurtosis("16qam"), abs=1e-15)
    with pytest.raises(InputError):
        resolve_format("not-a-format")


def test_scenario_parse(scenario):
    assert len(scenario.plan()) == 452
    assert scenario.span_count == 3
    assert scenario.z_grid == ZGrid(0.05, 201)
    fib = scenario.fiber()
    assert fib.beta2 == pytest.approx(-22.6, rel=0.01)


def test_manifest_hash_tracks_computational_inputs(small_scenario):
    cfg = load_scenario(small_scenario)
    fib = cfg.fiber()

    def h(plan, link, grid=ZGrid()):
        return inputs_hash(computational_inputs(plan, link, grid))

    plan, link = cfg.plan(), cfg.link(fib)
    base = h(plan, link)
    assert h(cfg.plan(), cfg.link(cfg.fiber())) == base
    assert h(plan.with_kurtosis(0.0), link) != base
    assert h(plan.with_powers(plan.powers * 1.0000001), link) != base
    assert h(plan, link.replace(span_count=3)) != base
    assert h(plan, link.replace(fiber=fib.replace(gamma=1.31))) != base
    assert h(plan, link, ZGrid(max_step=0.025)) != base


def test_cli_small_run(small_scenario, tmp_path):
    out = tmp_path / "run"
    assert main([str(small_scenario), "--output-dir", str(out), "--plot", "--dump-fits"]) == EXIT_OK
    res = read_results_csv(out / "results.csv")
    header = (out / "results.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == RESULT_COLUMNS
    assert len(res["frequency_THz"]) == 16
    assert np.all(np.diff(res["frequency_THz"]) > 0)
    assert np.all(res["snr_tot_dB"] <= res["snr_nli_dB"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["channels"] == 16 and len(manifest["inputs_sha256"]) == 64
    assert {"raman", "fit", "nli"} <= set(manifest["timings_ms"])
    assert (out / "snr_nli.svg").read_text().lstrip().startswith("<?xml")
    fits = (out / "fits.csv").read_text().splitlines()
    assert fits[0] == "channel,z_km,measured,fitted"
    assert len(fits) == 1 + 16 * 201


def test_cli_output_is_reproducible(small_scenario, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([str(small_scenario), "--output-dir", str(a)]) == EXIT_OK
    assert main([str(small_scenario), "--output-dir", str(b)]) == EXIT_OK
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    ha = json.loads((a / "manifest.json").read_text())["inputs_sha256"]
    hb = json.loads((b / "manifest.json").read_text())["inputs_sha256"]
    assert ha == hb
    c = tmp_path / "c"
    assert main([str(small_scenario), "--output-dir", str(c), "--spans", "3"]) == EXIT_OK
    assert json.loads((c / "manifest.json").read_text())["inputs_sha256"] != ha


def test_cli_format_changes_only_kurtosis(small_scenario, tmp_path):
    g, q = tmp_path / "g", tmp_path / "q"
    assert main([str(small_scenario), "--output-dir", str(g), "--format", "gaussian"]) == EXIT_OK
    assert main([str(small_scenario), "--output-dir", str(q), "--format", "64qam"]) == EXIT_OK
    rg, rq = read_results_csv(g / "results.csv"), read_results_csv(q / "results.csv")
    for col in ("frequency_THz", "alpha", "alpha_bar", "c_r", "fit_residual"):
        assert np.array_equal(rg[col], rq[col])
    assert np.all(rq["snr_nli_dB"] != rg["snr_nli_dB"])


def test_cli_missing_fiber_file(small_scenario, tmp_path, capsys):
    text = small_scenario.read_text().replace("synthetic_raman.csv", "nope.csv")
    bad = write(tmp_path / "bad.toml", text)
    assert main([str(bad), "--output-dir", str(tmp_path / "o")]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "nope.csv" in err and "[config]" in err


def test_cli_missing_scenario(tmp_path, capsys):
    assert main([str(tmp_path / "none.toml")]) == EXIT_INPUT
    assert "none.toml" in capsys.readouterr().err


def test_cli_numerical_failure(small_scenario, tmp_path, capsys):
    text = small_scenario.read_text().replace("dispersion_ps_per_nm_km = 17.0",
                                              "dispersion_ps_per_nm_km = 0.0") \
        .replace("slope_ps_per_nm2_km = 0.06", "slope_ps_per_nm2_km = 0.0")
    bad = write(tmp_path / "zero_d.toml", text)
    assert main([str(bad), "--output-dir", str(tmp_path / "o")]) == EXIT_NUMERICAL
    assert "[nli]" in capsys.readouterr().err


def test_cli_bundled_scenario(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["--plot"]) == EXIT_OK
    res = read_results_csv(tmp_path / "out" / "results.csv")
    assert len(res["wavelength_nm"]) == 452
    assert (tmp_path / "out" / "manifest.json").is_file()
    assert (tmp_path / "out" / "snr_nli.svg").is_file()


def test_cli_overlay(small_scenario, tmp_path):
    a = tmp_path / "a"
    assert main([str(small_scenario), "--output-dir", str(a)]) == EXIT_OK
    b = tmp_path / "b"
    assert main([str(small_scenario), "--output-dir", str(b), "--format", "qpsk", "--plot",
                 "--overlay", str(a / "results.csv")]) == EXIT_OK
    assert (b / "snr_nli.svg").stat().st_size > 0
    assert main([str(small_scenario), "--output-dir", str(b), "--overlay",
                 str(tmp_path / "missing.csv")]) == EXIT_INPUT
