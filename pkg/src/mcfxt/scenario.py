"""Sweep runner: one simulated series plus requested analyses per sweep value.

Sub-runs are independent and may run in a process pool; every file a
sub-run writes is its own, and the manifest is written once at the end.
"""

from __future__ import annotations

import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import LoadedConfig, SourceParams, sim_config_hash
from .errors import ConfigurationError, McfXtError
from .io import dump_json, sha256_file, write_series_csv
from .plotdata import emit_plot_data
from .simulator import SimConfig, fluctuation_speed, set_temperature, simulate_series

__all__ = ["SweepAxis", "ScenarioSpec", "ScenarioResult", "run_scenario", "scenario_from_config", "OUTPUTS"]

log = logging.getLogger(__name__)

OUTPUTS = ("analyze", "fit-step", "fit-chisq", "correlate", "coefficients")


class SweepAxis(str, Enum):
    SOURCE = "source"
    BAUD = "baud"
    TEMPERATURE = "temperature"
    WAVELENGTH = "wavelength"
    PRBS = "prbs"
    EXCITED_CORES = "excited_cores"
    WINDOW = "window"
    AVERAGING = "averaging"


# sweep axis -> coefficient axis for the "coefficients" output
_COEFF_AXIS = {
    SweepAxis.TEMPERATURE: an.Axis.TEMPERATURE,
    SweepAxis.WAVELENGTH: an.Axis.WAVELENGTH,
    SweepAxis.PRBS: an.Axis.PRBS_LOG2,
    SweepAxis.BAUD: an.Axis.BAUD_EXP,
}


@dataclass(frozen=True)
class ScenarioSpec:
    """A named sweep over one axis of a base configuration.

    Sweep values use the axis' natural unit: source names, GBaud, degrees C,
    nm, PRBS order, lists of core ids, or seconds for window/averaging.
    """

    name: str
    sweep_axis: SweepAxis
    sweep_values: tuple
    base: SimConfig
    outputs: tuple[str, ...] = ()
    source: SourceParams = field(default_factory=SourceParams)
    seeds: tuple[int, ...] | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sweep_axis", SweepAxis(self.sweep_axis))
        values = tuple(tuple(v) if isinstance(v, list) else v for v in self.sweep_values or ())
        if not values:
            raise ConfigurationError("scenario needs at least one sweep value")
        object.__setattr__(self, "sweep_values", values)
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise ConfigurationError(f"unknown scenario output(s) {bad}; choose from {list(OUTPUTS)}")
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if "coefficients" in self.outputs and self.sweep_axis not in _COEFF_AXIS:
            raise ConfigurationError(f"coefficients output needs one of the axes {[a.value for a in _COEFF_AXIS]}")
        kind = self.source.kind.upper().replace("-", "")
        if self.sweep_axis is SweepAxis.BAUD and kind in ("CW", "ASE"):
            raise ConfigurationError(f"a baud sweep needs a modulated source, not {self.source.kind}")
        if self.sweep_axis is SweepAxis.PRBS and kind not in ("OOK", "PAM4"):
            raise ConfigurationError(f"a PRBS sweep needs an OOK or PAM4 source, not {self.source.kind}")
        if self.seeds is None:
            object.__setattr__(self, "seeds", (int(self.base.seed),))
        else:
            object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.workers >= 1:
            raise ConfigurationError("workers must be >= 1")
        if not self.name or any(c in self.name for c in "/\\"):
            raise ConfigurationError("scenario name must be a plain, non-empty file name")


def scenario_from_config(cfg: LoadedConfig, **overrides) -> ScenarioSpec:
    if cfg.scenario is None and not overrides:
        raise ConfigurationError("config has no [scenario] section")
    sc = dict(cfg.scenario or {})
    sc.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioSpec(
        name=sc.get("name", "scenario"),
        sweep_axis=sc.get("sweep_axis", "source"),
        sweep_values=sc.get("sweep_values"),
        base=cfg.sim,
        outputs=tuple(sc.get("outputs") or ()),
        source=cfg.source,
        seeds=sc.get("seeds"),
        workers=int(sc.get("workers", 1)),
    )


@dataclass(frozen=True)
class ScenarioResult:
    out_dir: Path
    manifest_path: Path
    manifest: dict

    @property
    def failed(self) -> list[dict]:
        return [r for r in self.manifest["runs"] if r["status"] != "ok"]


def _label(value) -> str:
    if isinstance(value, tuple):
        return "cores-" + "-".join(str(v) for v in value)
    return str(value).replace(" ", "").replace("/", "_")


def _apply(spec: ScenarioSpec, value, seed: int) -> SimConfig:
    cfg = replace(spec.base, seed=seed)
    ax = spec.sweep_axis
    if ax is SweepAxis.SOURCE:
        return replace(cfg, source=replace(spec.source, kind=str(value)).build())
    if ax is SweepAxis.BAUD:
        return replace(cfg, source=replace(spec.source, baud_gbaud=float(value)).build())
    if ax is SweepAxis.PRBS:
        return replace(cfg, source=replace(spec.source, prbs_i=int(value)).build())
    if ax is SweepAxis.TEMPERATURE:
        return set_temperature(cfg, float(value))
    if ax is SweepAxis.WAVELENGTH:
        return replace(cfg, wavelength_nm=float(value))
    if ax is SweepAxis.EXCITED_CORES:
        cores = value if isinstance(value, tuple) else (int(value),)
        return replace(cfg, excited_cores=tuple(int(c) for c in cores))
    return cfg  # window / averaging: analyses of one shared run


def _analyses(series, outputs, stem: Path) -> tuple[dict, list[str]]:
    results, files = {}, []
    if "analyze" in outputs:
        ws = an.window_stats(series)
        results["analyze"] = {
            "static_xt_db": ws.static_xt_db,
            "dynamic_xt_db": ws.dynamic_xt_db,
            "worst_case_xt_db": ws.worst_case_xt_db,
            "sample_count": ws.sample_count,
            "window_length_s": ws.window_length,
        }
        if len(series) >= 3:
            results["analyze"]["events_per_hour"] = fluctuation_speed(series)
    if "fit-step" in outputs:
        fit = an.fit_pvp(an.step_sequence(series))
        results["fit-step"] = {"mu": fit.mu, "sigma": fit.sigma, "alpha": fit.alpha, "r2": fit.r2,
                               "alpha_outside_unit": fit.alpha_outside_unit}
        path = stem.with_name(stem.name + "_pvp.dat")
        path.write_text(emit_plot_data(fit), encoding="utf-8")
        files.append(path.name)
    if "fit-chisq" in outputs:
        fit = an.fit_chisq4(series)
        results["fit-chisq"] = {"dof": fit.dof, "scale": fit.scale, "r2": fit.r2}
        path = stem.with_name(stem.name + "_chisq.dat")
        path.write_text(emit_plot_data(fit), encoding="utf-8")
        files.append(path.name)
    if "correlate" in outputs:
        profile, peak = an.circular_correlation(series)
        results["correlate"] = {"max_offzero": peak}
        path = stem.with_name(stem.name + "_corr.dat")
        path.write_text(emit_plot_data((profile, peak)), encoding="utf-8")
        files.append(path.name)
    return results, files


def _run_one(spec: ScenarioSpec, index: int, value, seed: int, out_dir: Path) -> dict:
    entry = {"index": index, "value": list(value) if isinstance(value, tuple) else value, "seed": seed}
    try:
        cfg = _apply(spec, value, seed)
        entry["config_hash"] = sim_config_hash(cfg)
        stem = out_dir / f"{index:03d}_{_label(value)}_s{seed}"
        series = simulate_series(cfg)
        if spec.sweep_axis is SweepAxis.WINDOW:
            series = an.crop(series, float(value))
        elif spec.sweep_axis is SweepAxis.AVERAGING:
            series = an.resample_average(series, float(value))
        csv_path = write_series_csv(series, stem.with_suffix(".csv"))
        results, files = _analyses(series, spec.outputs, stem)
        entry.update(
            status="ok",
            series=csv_path.name,
            series_sha256=sha256_file(csv_path),
            files=[csv_path.name, csv_path.with_suffix(".json").name, *files],
            results=results,
        )
        (stem.with_name(stem.name + "_analysis.json")).write_text(dump_json(results), encoding="utf-8")
        entry["files"].append(stem.name + "_analysis.json")
    except McfXtError as exc:
        entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    except Exception as exc:  # recorded, never silently dropped
        entry.update(status="failed", error=f"{type(exc).__name__}: {exc}", traceback=traceback.format_exc())
    return entry


def _summaries(spec: ScenarioSpec, runs: list[dict], out_dir: Path) -> dict:
    ok = [r for r in runs if r["status"] == "ok" and "analyze" in r["results"]]
    summary = {}
    if not ok:
        return summary
    by_value: dict = {}
    for r in ok:
        key = tuple(r["value"]) if isinstance(r["value"], list) else r["value"]
        by_value.setdefault(key, []).append(r["results"]["analyze"])
    table = []
    for value, rows in by_value.items():
        table.append({
            "value": list(value) if isinstance(value, tuple) else value,
            "static_xt_db": float(np.median([r["static_xt_db"] for r in rows])),
            "dynamic_xt_db": float(np.median([r["dynamic_xt_db"] for r in rows])),
            "worst_case_xt_db": float(np.median([r["worst_case_xt_db"] for r in rows])),
            "n_seeds": len(rows),
        })
    summary["table"] = table
    if spec.sweep_axis is SweepAxis.SOURCE:
        ranked = sorted(table, key=lambda r: r["dynamic_xt_db"], reverse=True)
        summary["dynamic_xt_ordering"] = [r["value"] for r in ranked]
    lines = ["# value static_xt_db dynamic_xt_db worst_case_xt_db n_seeds"]
    lines += [f"{_label(r['value'])} {r['static_xt_db']!r} {r['dynamic_xt_db']!r} {r['worst_case_xt_db']!r} {r['n_seeds']}"
              for r in table]
    (out_dir / "summary.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if "coefficients" in spec.outputs and len(table) >= 3:
        axis = _COEFF_AXIS[spec.sweep_axis]
        pts = [(float(r["value"]), an.WindowStats(1.0, r["static_xt_db"], r["dynamic_xt_db"],
                                                   max(r["worst_case_xt_db"], r["static_xt_db"]), 1))
               for r in table]
        try:
            fit = an.extract_coefficients(pts, axis)
            summary["coefficients"] = {"axis": axis.value, "metric": fit.metric, **fit.coefficients(),
                                       "rms_residual": fit.rms_residual}
        except McfXtError as exc:
            summary["coefficients"] = {"error": str(exc)}
    return summary


def run_scenario(spec: ScenarioSpec, out_dir, workers: int | None = None, config_text_hash: str | None = None) -> ScenarioResult:
    """Run every (sweep value, seed) pair and write ``manifest.json``.

    Failed sub-runs are recorded in the manifest with their error; the
    caller decides the exit status from :attr:`ScenarioResult.failed`.
    """
    out_dir = Path(out_dir) / spec.name
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(i, v, s) for i, v in enumerate(spec.sweep_values) for s in spec.seeds]
    n_workers = min(workers or spec.workers, len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_run_one, spec, i, v, s, out_dir) for i, v, s in jobs]
            runs = [f.result() for f in futures]
    else:
        runs = [_run_one(spec, i, v, s, out_dir) for i, v, s in jobs]
    for r in runs:
        if r["status"] != "ok":
            log.error("sub-run %s (seed %s) failed: %s", r["value"], r["seed"], r["error"])
    manifest = {
        "name": spec.name,
        "sweep_axis": spec.sweep_axis.value,
        "sweep_values": [list(v) if isinstance(v, tuple) else v for v in spec.sweep_values],
        "seeds": list(spec.seeds),
        "outputs": list(spec.outputs),
        "base_config_hash": sim_config_hash(spec.base),
        "config_text_hash": config_text_hash,
        "runs": runs,
        "summary": _summaries(spec, runs, out_dir),
        "n_failed": sum(r["status"] != "ok" for r in runs),
    }
    path = out_dir / "manifest.json"
    path.write_text(dump_json(manifest), encoding="utf-8")
    return ScenarioResult(out_dir, path, manifest)
