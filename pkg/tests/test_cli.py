import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from mcfxt.cli import main
from mcfxt.io import read_series_csv


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def invoke(*args, ok=True):
        res = runner.invoke(main, ["--out-dir", str(tmp_path), *map(str, args)], catch_exceptions=False)
        if ok:
            assert res.exit_code == 0, res.output
        return res
    return invoke


@pytest.fixture
def cw_csv(run, tmp_path):
    run("--seed", 2, "simulate", "--duration", 300, "-o", "cw.csv")
    return tmp_path / "cw.csv"


def test_simulate_deterministic(run, tmp_path):
    run("--seed", 5, "simulate", "--duration", 2, "--source", "OOK", "--prbs", 7, "-o", "a.csv")
    run("--seed", 5, "simulate", "--duration", 2, "--source", "OOK", "--prbs", 7, "-o", "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    meta = json.loads((tmp_path / "a.json").read_text())
    assert meta["seed"] == 5 and meta["source_kind"] == "OOK" and meta["prbs_i"] == 7


def test_simulate_options(run, tmp_path):
    run("simulate", "--duration", 1, "--excited", "1,5", "--temperature", 40, "--averaging", 0.025, "-o", "x.csv")
    s = read_series_csv(tmp_path / "x.csv")
    assert s.metadata["excited_cores"] == [1, 5] and s.metadata["temperature_c"] == 40.0


def test_analyze_csv_and_json(run, cw_csv):
    out = run("analyze", cw_csv, cw_csv, "--window", 60).output.splitlines()
    assert out[0].startswith("file,window_s,static_xt_db,dynamic_xt_db")
    assert len(out) == 3
    rows = json.loads(run("analyze", cw_csv, "--format", "json").output)
    assert rows[0]["sample_count"] == 12000


def test_fits_and_correlate(run, cw_csv, tmp_path):
    fit = json.loads(run("fit-step", cw_csv, "--plot-data", tmp_path / "pvp.dat").stdout)
    assert fit["r2"] > 0.9 and (tmp_path / "pvp.dat").read_text().startswith("# pvp fit")
    chi = json.loads(run("fit-chisq", cw_csv, "--bins", 50).output)
    assert chi["dof"] == 4
    out = run("correlate", cw_csv, "-o", tmp_path / "corr.dat").stdout
    assert out.startswith("max_offzero")
    assert len((tmp_path / "corr.dat").read_text().splitlines()) == 12002


def test_resample(run, cw_csv, tmp_path):
    run("resample", cw_csv, "--averaging", 0.1, "-o", "r.csv")
    r = read_series_csv(tmp_path / "r.csv")
    assert len(r) == 3000 and r.averaging_time == pytest.approx(0.1)
    res = run("resample", cw_csv, "--averaging", 0.06, ok=False)
    assert res.exit_code == 1 and "nearest valid" in res.output


def test_coefficients_from_sidecars(run, tmp_path):
    for t in (20, 40, 60):
        run("simulate", "--duration", 1, "--diffusion", 0, "--temperature", t, "-o", f"t{t}.csv")
    out = json.loads(run("coefficients", *(tmp_path / f"t{t}.csv" for t in (20, 40, 60)),
                         "--axis", "temperature").output)
    assert out["slope"] > 0 and out["metric"] == "static"
    bad = run("coefficients", tmp_path / "t20.csv", tmp_path / "t40.csv", "--axis", "temperature", ok=False)
    assert bad.exit_code == 1 and "at least 3" in bad.output


def test_spectrum_dump(run):
    out = run("spectrum", "dump", "--source", "OOK", "--prbs", 7, "--baud", 10).output
    assert "offset_hz power_fraction" in out
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert sum(float(l.split()[1]) for l in rows) == pytest.approx(1.0)


def test_scenario_run(run, tmp_path):
    res = run("scenario", "run", "--axis", "source", "--values", "CW,ASE", "--outputs", "analyze", "--name", "src")
    assert "dynamic XT ordering: CW > ASE" in res.output
    manifest = json.loads((tmp_path / "src" / "manifest.json").read_text())
    assert manifest["sweep_values"] == ["CW", "ASE"]
    res = run("scenario", "run", "--axis", "excited_cores", "--values", "1,1+5", "--name", "cores")
    assert json.loads((tmp_path / "cores" / "manifest.json").read_text())["sweep_values"] == [1, [1, 5]]


def test_scenario_failure_exits_nonzero(run, tmp_path):
    res = run("scenario", "run", "--axis", "temperature", "--values", "30,95", "--name", "bad", ok=False)
    assert res.exit_code == 1
    assert json.loads((tmp_path / "bad" / "manifest.json").read_text())["n_failed"] == 1


def test_scenario_needs_values(run):
    res = run("scenario", "run", ok=False)
    assert res.exit_code != 0 and "--values" in res.output


def test_config_flag(run, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[simulation]\nduration_s = 1.0\nseed = 9\n[source]\nkind = 'ASE'\n")
    run("--config", cfg, "simulate", "-o", "c.csv")
    meta = json.loads((tmp_path / "c.json").read_text())
    assert meta["seed"] == 9 and meta["source_kind"] == "ASE"
    cfg.write_text("[simulation]\nbogus = 1\n")
    res = run("--config", cfg, "simulate", ok=False)
    assert res.exit_code == 1 and "bogus" in res.output


def test_ingest(run, tmp_path):
    log = tmp_path / "meter.csv"
    log.write_text("time_s,ch1_dbm,ch2_dbm\n0,-4,-50\n0.025,-4,-85\n")
    res = run("ingest", log, "--excited", 1, "--target", "ch2", "-o", "xt.csv")
    assert "below the meter sensitivity" in res.output
    np.testing.assert_array_equal(read_series_csv(tmp_path / "xt.csv").xt_db, [-46.0, -81.0])
    log.write_text("time_s,ch1_dbm,ch2_dbm\n0,-4,-50\n1,-4,oops\n")
    res = run("ingest", log, "--excited", 1, "--target", 2, ok=False)
    assert res.exit_code == 1 and "line 3" in res.output


@pytest.mark.parametrize("args", [
    ("simulate", "--duration", -1),
    ("simulate", "--excited", "1,x"),
    ("simulate", "--temperature", 100),
    ("simulate", "--source", "FSK"),
    ("fit-step", "missing.csv"),
])
def test_precondition_violations_exit_nonzero(run, args):
    res = run(*args, ok=False)
    assert res.exit_code != 0 and res.output.strip()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "mcfxt.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "analyze", "fit-step", "fit-chisq", "correlate", "coefficients",
                "resample", "spectrum", "scenario", "ingest"):
        assert cmd in out.stdout
