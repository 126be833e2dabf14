"""TOML configuration: sections [geometry], [layout], [thermal],
[simulation], [source] and [scenario].

Every key is optional; missing keys take the documented defaults (see
``data/example_config.toml``).  Unknown sections or keys are rejected so
that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigurationError
from .fiber import (
    CALIBRATED_CORE_RADIUS_UM,
    CALIBRATED_DELTA1,
    CALIBRATED_DELTA2,
    CALIBRATED_N_CLADDING,
    CALIBRATED_TRENCH_WIDTH_UM,
    DEFAULT_XT_FLOOR_DB,
    CoreLayout,
    FiberGeometry,
    ThermalCoefficients,
    db,
    eight_core_layout,
    from_db,
)
from .simulator import DEFAULT_PHASE_DIFFUSION, DEFAULT_WALKOFF, REFERENCE_TEMPERATURE_C, SimConfig
from .spectra import DEFAULT_ASE_BANDWIDTH_HZ, DEFAULT_ASE_LINES, build_spectrum

__all__ = [
    "EXAMPLE_CONFIG",
    "LoadedConfig",
    "SourceParams",
    "load_config",
    "parse_config",
    "config_hash",
    "sim_config_to_dict",
    "sim_config_hash",
]

EXAMPLE_CONFIG = Path(__file__).with_name("data") / "example_config.toml"

_GEOMETRY_KEYS = {
    "core_radius_um": CALIBRATED_CORE_RADIUS_UM,
    "trench_width_um": CALIBRATED_TRENCH_WIDTH_UM,
    "n_cladding": CALIBRATED_N_CLADDING,
    "delta1": CALIBRATED_DELTA1,
    "delta2": CALIBRATED_DELTA2,
    "length_m": 1000.0,
    "bend_radius_m": 0.17,
    "twist_rate_rad_per_m": 0.5,
    "xt_floor_db": DEFAULT_XT_FLOOR_DB,
}
_LAYOUT_KEYS = {"preset": "eight_core", "h_pitch_um": 35.0, "v_pitch_um": 45.0, "positions_um": None}
_THERMAL_DEFAULT = ThermalCoefficients()
_THERMAL_KEYS = {
    "dn_dT_core": _THERMAL_DEFAULT.dn_dT_core,
    "dn_dT_cladding": _THERMAL_DEFAULT.dn_dT_cladding,
    "dn_dT_trench": _THERMAL_DEFAULT.dn_dT_trench,
    "length_coeff": _THERMAL_DEFAULT.length_coeff,
    "walkoff_coeff": _THERMAL_DEFAULT.walkoff_coeff,
}
_SIMULATION_KEYS = {
    "duration_s": 600.0,
    "sample_interval_s": 0.025,
    "averaging_time_s": None,
    "phase_diffusion_rad2_per_s": DEFAULT_PHASE_DIFFUSION,
    "temperature_c": REFERENCE_TEMPERATURE_C,
    "seed": 0,
    "substeps_per_sample": 8,
    "walkoff_s_per_m": DEFAULT_WALKOFF,
    "wavelength_nm": 1550.0,
    "excited_cores": [1],
    "target_core": 3,
}
_SOURCE_KEYS = {
    "kind": "CW",
    "baud_gbaud": 25.0,
    "prbs_i": 15,
    "qam_m": 4,
    "osnr_db": None,
    "truncation_bandwidth_hz": None,
    "ase_bandwidth_hz": DEFAULT_ASE_BANDWIDTH_HZ,
    "ase_lines": DEFAULT_ASE_LINES,
}
_SCENARIO_KEYS = {
    "name": "scenario",
    "sweep_axis": "source",
    "sweep_values": None,
    "outputs": [],
    "seeds": None,
    "workers": 1,
}
_SECTIONS = {
    "geometry": _GEOMETRY_KEYS,
    "layout": _LAYOUT_KEYS,
    "thermal": _THERMAL_KEYS,
    "simulation": _SIMULATION_KEYS,
    "source": _SOURCE_KEYS,
    "scenario": _SCENARIO_KEYS,
}


@dataclass(frozen=True)
class SourceParams:
    """Source description as written in a config; rebuilt per sweep value."""

    kind: str = "CW"
    baud_gbaud: float = 25.0
    prbs_i: int = 15
    qam_m: int = 4
    osnr_db: float | None = None
    truncation_bandwidth_hz: float | None = None
    ase_bandwidth_hz: float = DEFAULT_ASE_BANDWIDTH_HZ
    ase_lines: int = DEFAULT_ASE_LINES

    def build(self):
        return build_spectrum(
            self.kind,
            baud=self.baud_gbaud * 1e9,
            prbs_i=int(self.prbs_i),
            qam_m=int(self.qam_m),
            ase_bandwidth=self.ase_bandwidth_hz,
            ase_lines=int(self.ase_lines),
            truncation_bandwidth=self.truncation_bandwidth_hz,
            osnr_db=self.osnr_db,
        )


@dataclass(frozen=True)
class LoadedConfig:
    sim: SimConfig
    source: SourceParams
    scenario: dict | None
    sections: dict = field(repr=False)
    text_hash: str = ""


def config_hash(text: str | bytes) -> str:
    """SHA-256 of the config text; identical text gives an identical hash."""
    data = text.encode("utf-8") if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def _merge(raw: dict) -> dict:
    unknown = sorted(set(raw) - set(_SECTIONS))
    if unknown:
        raise ConfigurationError(f"unknown config section(s): {', '.join(unknown)}")
    merged = {}
    for name, defaults in _SECTIONS.items():
        given = raw.get(name, {})
        if not isinstance(given, dict):
            raise ConfigurationError(f"[{name}] must be a table")
        bad = sorted(set(given) - set(defaults))
        if bad:
            raise ConfigurationError(f"unknown key(s) in [{name}]: {', '.join(bad)}")
        merged[name] = {**defaults, **given}
    return merged


def _layout(sec: dict) -> CoreLayout:
    if sec["positions_um"] is not None:
        return CoreLayout(tuple(tuple(p) for p in sec["positions_um"]))
    if sec["preset"] != "eight_core":
        raise ConfigurationError(f"unknown layout preset {sec['preset']!r} (known: eight_core)")
    return eight_core_layout(sec["h_pitch_um"], sec["v_pitch_um"])


def _build(sections: dict) -> tuple[SimConfig, SourceParams]:
    g, th, sim, src = (sections[k] for k in ("geometry", "thermal", "simulation", "source"))
    try:
        geometry = FiberGeometry.from_deltas(
            n_cladding=float(g["n_cladding"]),
            delta1=float(g["delta1"]),
            delta2=float(g["delta2"]),
            core_radius_a=float(g["core_radius_um"]),
            trench_width_wt=float(g["trench_width_um"]),
            length_L=float(g["length_m"]),
            bend_radius_R=float(g["bend_radius_m"]),
            twist_rate_gamma=float(g["twist_rate_rad_per_m"]),
            xt_floor=float(from_db(g["xt_floor_db"])),
        )
        thermal = ThermalCoefficients(**{k: float(v) for k, v in th.items()})
        source = SourceParams(**src)
        spectrum = source.build()
        avg = sim["averaging_time_s"]
        cfg = SimConfig(
            geometry=geometry,
            layout=_layout(sections["layout"]),
            source=spectrum,
            excited_cores=tuple(int(c) for c in sim["excited_cores"]),
            target_core=int(sim["target_core"]),
            duration=float(sim["duration_s"]),
            sample_interval=float(sim["sample_interval_s"]),
            averaging_time=None if avg is None else float(avg),
            phase_diffusion=float(sim["phase_diffusion_rad2_per_s"]),
            temperature_c=float(sim["temperature_c"]),
            seed=int(sim["seed"]),
            substeps_per_sample=int(sim["substeps_per_sample"]),
            walkoff=float(sim["walkoff_s_per_m"]),
            wavelength_nm=float(sim["wavelength_nm"]),
            thermal=thermal,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid config value: {exc}") from exc
    cfg.validate()
    return cfg, source


def parse_config(text: str) -> LoadedConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML: {exc}") from exc
    sections = _merge(raw)
    sim, source = _build(sections)
    scenario = dict(sections["scenario"]) if "scenario" in raw else None
    return LoadedConfig(sim, source, scenario, sections, config_hash(text))


def load_config(path=None) -> LoadedConfig:
    """Load a config file; ``None`` gives the built-in defaults."""
    if path is None:
        return parse_config("")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


def sim_config_to_dict(cfg: SimConfig) -> dict:
    """Plain, JSON-ready description of a configuration."""
    g = cfg.geometry
    return {
        "geometry": {
            "core_radius_um": g.core_radius_a,
            "trench_width_um": g.trench_width_wt,
            "n_core": g.n_core,
            "n_cladding": g.n_cladding,
            "n_trench": g.n_trench,
            "length_m": g.length_L,
            "bend_radius_m": g.bend_radius_R,
            "twist_rate_rad_per_m": g.twist_rate_gamma,
            "xt_floor_db": float(db(g.xt_floor)) if g.xt_floor > 0 else None,
        },
        "layout": {"positions_um": [list(p) for p in cfg.layout.core_positions]},
        "thermal": {k: getattr(cfg.thermal, k) for k in _THERMAL_KEYS},
        "simulation": {
            "duration_s": cfg.duration,
            "sample_interval_s": cfg.sample_interval,
            "averaging_time_s": cfg.averaging_time,
            "phase_diffusion_rad2_per_s": cfg.phase_diffusion,
            "temperature_c": cfg.temperature_c,
            "seed": int(cfg.seed),
            "substeps_per_sample": cfg.substeps_per_sample,
            "walkoff_s_per_m": cfg.walkoff,
            "wavelength_nm": cfg.wavelength_nm,
            "excited_cores": list(cfg.excited_cores),
            "target_core": cfg.target_core,
        },
        "source": {**cfg.source.metadata(), "label": cfg.source.label, "n_lines": cfg.source.n_lines},
    }


def sim_config_hash(cfg: SimConfig) -> str:
    text = json.dumps(sim_config_to_dict(cfg), sort_keys=True, default=str)
    return config_hash(text)
