"""Command-line interface: ``mcfxt <command> ...``.

Every command exits with status 1 and prints the violated condition when
an input or precondition is invalid.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from functools import wraps
from pathlib import Path

import click

from . import __version__
from . import analysis as an
from .config import SourceParams, load_config
from .errors import McfXtError
from .io import dump_json, ingest_power_log, read_series_csv, write_series_csv
from .plotdata import emit_plot_data
from .scenario import SweepAxis, run_scenario, scenario_from_config
from .simulator import fluctuation_speed, set_temperature, simulate_series


def _fail_cleanly(fn):
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except McfXtError as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc
    return wrapper


def _emit(text: str, output: Path | None):
    if output is None:
        click.echo(text, nl=False)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}", err=True)


class Ctx:
    def __init__(self, seed, config, out_dir):
        self.seed = seed
        self.config_path = config
        self.out_dir = Path(out_dir)
        self._loaded = None

    @property
    def loaded(self):
        if self._loaded is None:
            self._loaded = load_config(self.config_path)
        return self._loaded


pass_ctx = click.make_pass_decorator(Ctx)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Override the simulation seed.")
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="TOML config file (defaults built in).")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."),
              show_default=True, help="Directory for written files.")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.version_option(version=__version__, prog_name="mcfxt")
@click.pass_context
def main(ctx, seed, config, out_dir, verbose):
    """Inter-core crosstalk models, simulation and analysis for multi-core fiber."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    ctx.obj = Ctx(seed, config, out_dir)


@main.command()
@click.option("--duration", type=float, help="Simulated time in s.")
@click.option("--source", "kind", help="CW, ASE, OOK, PAM4, QAM, 4QAM, 16QAM, ...")
@click.option("--baud", type=float, help="Symbol rate in GBaud.")
@click.option("--prbs", type=int, help="PRBS order i.")
@click.option("--qam", type=int, help="QAM order.")
@click.option("--excited", help="Comma-separated excited core ids.")
@click.option("--target", type=int, help="Target core id.")
@click.option("--temperature", type=float, help="Fiber temperature in deg C (20-80).")
@click.option("--averaging", type=float, help="Averaging time per sample in s.")
@click.option("--diffusion", type=float, help="Phase diffusion D in rad^2/s.")
@click.option("-o", "--output", default="series.csv", show_default=True, help="CSV file name inside --out-dir.")
@pass_ctx
@_fail_cleanly
def simulate(obj, duration, kind, baud, prbs, qam, excited, target, temperature, averaging, diffusion, output):
    """Simulate a crosstalk series and write CSV plus a JSON sidecar."""
    loaded = obj.loaded
    cfg = loaded.sim
    src_updates = {k: v for k, v in (("kind", kind), ("baud_gbaud", baud), ("prbs_i", prbs), ("qam_m", qam)) if v is not None}
    if src_updates:
        cfg = replace(cfg, source=replace(loaded.source, **src_updates).build())
    updates = {}
    if duration is not None:
        updates["duration"] = duration
    if excited is not None:
        try:
            updates["excited_cores"] = tuple(int(c) for c in excited.split(","))
        except ValueError:
            raise click.BadParameter(f"expected comma-separated integers, got {excited!r}", param_hint="--excited")
    if target is not None:
        updates["target_core"] = target
    if averaging is not None:
        updates["averaging_time"] = averaging
    if diffusion is not None:
        updates["phase_diffusion"] = diffusion
    if obj.seed is not None:
        updates["seed"] = obj.seed
    cfg = replace(cfg, **updates)
    if temperature is not None:
        cfg = set_temperature(cfg, temperature)
    series = simulate_series(cfg)
    obj.out_dir.mkdir(parents=True, exist_ok=True)
    path = write_series_csv(series, obj.out_dir / output)
    click.echo(str(path))


def _load_series(files):
    return [read_series_csv(f) for f in files]


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--window", type=float, default=None, help="Leading window length in s (default: whole series).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@pass_ctx
@_fail_cleanly
def analyze(obj, files, window, fmt, output):
    """Static, dynamic and worst-case crosstalk of one or more series."""
    rows = []
    for path, series in zip(files, _load_series(files)):
        ws = an.window_stats(series, window)
        sub = an.crop(series, window) if window is not None else series
        speed = fluctuation_speed(sub) if len(sub) >= 3 else float("nan")
        rows.append({"file": str(path), "window_s": ws.window_length, "static_xt_db": ws.static_xt_db,
                     "dynamic_xt_db": ws.dynamic_xt_db, "worst_case_xt_db": ws.worst_case_xt_db,
                     "sample_count": ws.sample_count, "events_per_hour": speed})
    if fmt == "json":
        _emit(dump_json(rows), output)
    else:
        keys = list(rows[0])
        lines = [",".join(keys)] + [",".join(str(r[k]) if k == "file" else repr(r[k]) for k in keys) for r in rows]
        _emit("\n".join(lines) + "\n", output)


@main.command("fit-step")
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--bins", default="fd", show_default=True, help="'fd' or a bin count.")
@click.option("--plot-data", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Also write histogram and model columns here.")
@pass_ctx
@_fail_cleanly
def fit_step(obj, file, bins, plot_data):
    """Fit the pseudo-Voigt model to the dB step distribution."""
    fit = an.fit_pvp(an.step_sequence(read_series_csv(file)), bins=_bins(bins))
    click.echo(dump_json({"mu": fit.mu, "sigma": fit.sigma, "alpha": fit.alpha, "r2": fit.r2,
                          "alpha_outside_unit": fit.alpha_outside_unit}), nl=False)
    if plot_data:
        _emit(emit_plot_data(fit), plot_data)


@main.command("fit-chisq")
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--bins", default="fd", show_default=True, help="'fd' or a bin count.")
@click.option("--plot-data", type=click.Path(dir_okay=False, path_type=Path), default=None)
@pass_ctx
@_fail_cleanly
def fit_chisq(obj, file, bins, plot_data):
    """Fit a 4-degree-of-freedom chi-square to the linear powers."""
    fit = an.fit_chisq4(read_series_csv(file), bins=_bins(bins))
    click.echo(dump_json({"dof": fit.dof, "scale": fit.scale, "r2": fit.r2}), nl=False)
    if plot_data:
        _emit(emit_plot_data(fit), plot_data)


def _bins(text):
    if text == "fd":
        return "fd"
    try:
        n = int(text)
    except ValueError:
        raise click.BadParameter(f"expected 'fd' or an integer, got {text!r}", param_hint="--bins")
    if n < 2:
        raise click.BadParameter("need at least 2 bins", param_hint="--bins")
    return n


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the (lag, value) profile here.")
@pass_ctx
@_fail_cleanly
def correlate(obj, file, output):
    """Circular autocorrelation of the dB series; prints the largest off-zero value."""
    profile, peak = an.circular_correlation(read_series_csv(file))
    click.echo(f"max_offzero {peak!r}")
    if output:
        _emit(emit_plot_data((profile, peak)), output)


_SIDECAR_AXIS_KEY = {"temperature": "temperature_c", "wavelength": "wavelength_nm", "prbs_log2": "prbs_i", "baud_exp": "baud"}


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--axis", type=click.Choice([a.value for a in an.Axis]), required=True)
@click.option("--values", default=None, help="Comma-separated axis values (default: read from sidecars).")
@click.option("--metric", type=click.Choice(["static", "dynamic", "worst"]), default=None)
@pass_ctx
@_fail_cleanly
def coefficients(obj, files, axis, values, metric):
    """Fit a dependence coefficient across series from a sweep.

    Axis values are taken from --values or from each file's sidecar
    (temperature_c, wavelength_nm, prbs_i, baud in GBaud).
    """
    series = _load_series(files)
    if values is not None:
        xs = [float(v) for v in values.split(",")]
        if len(xs) != len(series):
            raise click.BadParameter(f"{len(xs)} values for {len(series)} files", param_hint="--values")
    else:
        key = _SIDECAR_AXIS_KEY[axis]
        xs = []
        for f, s in zip(files, series):
            if s.metadata.get(key) is None:
                raise click.UsageError(f"{f}: sidecar lacks {key!r}; pass --values")
            v = float(s.metadata[key])
            xs.append(v / 1e9 if axis == "baud_exp" else v)
    fit = an.extract_coefficients([(x, an.window_stats(s)) for x, s in zip(xs, series)], axis, metric)
    click.echo(dump_json({"axis": axis, "metric": fit.metric, **fit.coefficients(), "rms_residual": fit.rms_residual}), nl=False)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--averaging", type=float, required=True, help="New averaging time in s (integer multiple).")
@click.option("-o", "--output", default=None, help="Output CSV name inside --out-dir.")
@pass_ctx
@_fail_cleanly
def resample(obj, file, averaging, output):
    """Block-average a series in linear power."""
    series = an.resample_average(read_series_csv(file), averaging)
    obj.out_dir.mkdir(parents=True, exist_ok=True)
    name = output or f"{file.stem}_avg{averaging:g}s.csv"
    click.echo(str(write_series_csv(series, obj.out_dir / name)))


@main.group()
def spectrum():
    """Source spectra."""


@spectrum.command("dump")
@click.option("--source", "kind", default=None, help="CW, ASE, OOK, PAM4, QAM, 16QAM, ...")
@click.option("--baud", type=float, default=None, help="GBaud.")
@click.option("--prbs", type=int, default=None)
@click.option("--qam", type=int, default=None)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@pass_ctx
@_fail_cleanly
def spectrum_dump(obj, kind, baud, prbs, qam, output):
    """Write the (offset, power fraction) lines of a source, carrier included."""
    params = obj.loaded.source
    updates = {k: v for k, v in (("kind", kind), ("baud_gbaud", baud), ("prbs_i", prbs), ("qam_m", qam)) if v is not None}
    _emit(emit_plot_data(replace(params, **updates).build()), output)


@main.group()
def scenario():
    """Parameter sweeps."""


@scenario.command("run")
@click.option("--axis", type=click.Choice([a.value for a in SweepAxis]), default=None)
@click.option("--values", default=None, help="Comma-separated sweep values (overrides the config).")
@click.option("--outputs", default=None, help="Comma-separated analyses: analyze,fit-step,fit-chisq,correlate,coefficients.")
@click.option("--name", default=None)
@click.option("--workers", type=click.IntRange(1), default=None)
@click.option("--source", "kind", default=None, help="Base source kind (overrides the config).")
@pass_ctx
@_fail_cleanly
def scenario_run(obj, axis, values, outputs, name, workers, kind):
    """Run the [scenario] sweep of --config and write a manifest."""
    loaded = obj.loaded
    if kind is not None:
        source = replace(loaded.source, kind=kind)
        loaded = replace(loaded, source=source, sim=replace(loaded.sim, source=source.build()))
    if obj.seed is not None:
        loaded = replace(loaded, sim=replace(loaded.sim, seed=obj.seed))
    overrides = {"sweep_axis": axis, "name": name, "workers": workers}
    if values is not None:
        overrides["sweep_values"] = [_sweep_value(v) for v in values.split(",")]
    if outputs is not None:
        overrides["outputs"] = [o for o in outputs.split(",") if o]
    if loaded.scenario is None and overrides.get("sweep_values") is None:
        raise click.UsageError("no [scenario] section in the config; pass --axis and --values")
    spec = scenario_from_config(loaded, **overrides)
    result = run_scenario(spec, obj.out_dir, config_text_hash=loaded.text_hash)
    click.echo(str(result.manifest_path))
    summary = result.manifest["summary"]
    if "dynamic_xt_ordering" in summary:
        click.echo("dynamic XT ordering: " + " > ".join(map(str, summary["dynamic_xt_ordering"])))
    if result.failed:
        for r in result.failed:
            click.echo(f"failed: value={r['value']} seed={r['seed']}: {r['error']}", err=True)
        sys.exit(1)


def _sweep_value(text):
    text = text.strip()
    if "+" in text:  # core sets: 3+7
        return [int(c) for c in text.split("+")]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@main.command()
@click.argument("log", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--excited", required=True, help="Excited channel (number or chN).")
@click.option("--target", required=True, help="Target channel (number or chN).")
@click.option("-o", "--output", default=None, help="Output CSV name inside --out-dir.")
@pass_ctx
@_fail_cleanly
def ingest(obj, log, excited, target, output):
    """Convert a power-meter log into a crosstalk series."""
    series = ingest_power_log(log, excited, target)
    obj.out_dir.mkdir(parents=True, exist_ok=True)
    path = write_series_csv(series, obj.out_dir / (output or f"{log.stem}_xt.csv"))
    flagged = series.metadata["flagged_rows"]
    if flagged:
        click.echo(f"warning: {len(flagged)} row(s) below the meter sensitivity", err=True)
    click.echo(str(path))


if __name__ == "__main__":
    main()
