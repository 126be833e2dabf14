"""CSV files for crosstalk series and power-meter logs, plus JSON sidecars.

Floats are written with ``repr`` (shortest round-tripping form), so a
write/read cycle reproduces every sample bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError
from .series import XtSeries

__all__ = [
    "SERIES_HEADER",
    "METER_RANGE_DBM",
    "METER_SENSITIVITY_DBM",
    "PowerLog",
    "write_series_csv",
    "read_series_csv",
    "sidecar_path",
    "write_sidecar",
    "read_sidecar",
    "read_power_log",
    "write_power_log",
    "ingest_power_log",
    "sha256_bytes",
    "sha256_file",
]

SERIES_HEADER = ("time_s", "xt_db")
METER_RANGE_DBM = (-90.0, 10.0)
METER_SENSITIVITY_DBM = -80.0
SIDECAR_KEYS = (
    "seed", "source_kind", "baud", "prbs_i", "qam_m", "temperature_c",
    "averaging_time_s", "excited_cores", "target_core",
)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def sidecar_path(csv_path) -> Path:
    """``run.csv`` -> ``run.json``."""
    return Path(csv_path).with_suffix(".json")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


def write_sidecar(series: XtSeries, csv_path) -> Path:
    meta = {k: None for k in SIDECAR_KEYS}
    meta.update(series.metadata)
    meta["averaging_time_s"] = series.averaging_time
    path = sidecar_path(csv_path)
    path.write_text(dump_json(meta), encoding="utf-8")
    return path


def read_sidecar(csv_path) -> dict | None:
    path = sidecar_path(csv_path)
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON sidecar: {exc.msg}", exc.lineno) from exc


def write_series_csv(series: XtSeries, path, sidecar: bool = True) -> Path:
    """Write ``time_s,xt_db`` rows (UTF-8, LF) and, by default, the sidecar."""
    path = Path(path)
    lines = [",".join(SERIES_HEADER)]
    lines.extend(f"{t!r},{x!r}" for t, x in zip(series.timestamps.tolist(), series.xt_db.tolist()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if sidecar:
        write_sidecar(series, path)
    return path


def _parse_float(text, line, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} {text!r} as a number", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} {text!r}", line)
    return value


def _read_rows(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text") from exc
    rows = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        rows.append((lineno, [c.strip() for c in row]))
    if not rows:
        raise ParseError(f"{path}: empty file", 1)
    return rows


def read_series_csv(path, averaging_time: float | None = None) -> XtSeries:
    """Read a series CSV and its sidecar (when present).

    The averaging time comes from the argument, else the sidecar, else the
    median timestamp spacing.
    """
    rows = _read_rows(path)
    head_line, header = rows[0]
    if tuple(h.lower() for h in header) != SERIES_HEADER:
        raise ParseError(f"expected header {','.join(SERIES_HEADER)!r}, got {','.join(header)!r}", head_line)
    t, x = [], []
    for lineno, row in rows[1:]:
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
        t.append(_parse_float(row[0], lineno, "time"))
        x.append(_parse_float(row[1], lineno, "xt_db"))
        if len(t) > 1 and t[-1] <= t[-2]:
            raise ParseError("timestamps must be strictly increasing", lineno)
    if not t:
        raise ParseError("no data rows", head_line)
    meta = read_sidecar(path) or {}
    if averaging_time is None:
        averaging_time = meta.get("averaging_time_s")
    if averaging_time is None:
        averaging_time = float(np.median(np.diff(t))) if len(t) > 1 else 1.0
    meta["source_file"] = str(path)
    return XtSeries(np.array(t), np.array(x), float(averaging_time), meta)


@dataclass(frozen=True)
class PowerLog:
    """Timestamped per-channel optical powers in dBm.

    ``flagged`` marks rows where any channel reads below the meter
    sensitivity; ``channel_cores`` optionally maps channel numbers to cores.
    """

    timestamps: np.ndarray
    powers_dbm: np.ndarray  # (rows, channels)
    flagged: np.ndarray = field(default=None)
    channel_cores: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        p = np.asarray(self.powers_dbm, dtype=float)
        if p.ndim != 2 or p.shape[0] != t.size:
            raise ConfigurationError("powers_dbm must have one row per timestamp")
        if not 1 <= p.shape[1] <= 8:
            raise ConfigurationError("a power log carries 1 to 8 channels")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ConfigurationError("timestamps must be strictly increasing")
        lo, hi = METER_RANGE_DBM
        if np.any((p < lo) | (p > hi)):
            raise ConfigurationError(f"powers must lie within [{lo:g}, {hi:g}] dBm")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "powers_dbm", p)
        if self.flagged is None:
            object.__setattr__(self, "flagged", np.any(p < METER_SENSITIVITY_DBM, axis=1))

    @property
    def n_channels(self) -> int:
        return int(self.powers_dbm.shape[1])

    def channel(self, ch: int) -> np.ndarray:
        if not 1 <= ch <= self.n_channels:
            raise ConfigurationError(f"channel {ch} not in log (1..{self.n_channels})")
        return self.powers_dbm[:, ch - 1]


def read_power_log(path) -> PowerLog:
    """Parse a ``time_s,ch1_dbm,...,chN_dbm`` log."""
    rows = _read_rows(path)
    head_line, header = rows[0]
    if not header or header[0].lower() != "time_s":
        raise ParseError("first column must be time_s", head_line)
    n_ch = len(header) - 1
    expected = [f"ch{i}_dbm" for i in range(1, n_ch + 1)]
    if not 1 <= n_ch <= 8 or [h.lower() for h in header[1:]] != expected:
        raise ParseError(f"expected header time_s,{','.join(expected) or 'ch1_dbm'} (1 to 8 channels)", head_line)
    lo, hi = METER_RANGE_DBM
    t, p = [], []
    for lineno, row in rows[1:]:
        if len(row) != n_ch + 1:
            raise ParseError(f"expected {n_ch + 1} columns, got {len(row)}", lineno)
        ts = _parse_float(row[0], lineno, "time")
        if t and ts <= t[-1]:
            raise ParseError("timestamps must be strictly increasing", lineno)
        vals = [_parse_float(c, lineno, f"ch{i}_dbm") for i, c in enumerate(row[1:], start=1)]
        for i, v in enumerate(vals, start=1):
            if not lo <= v <= hi:
                raise ParseError(f"ch{i} power {v:g} dBm outside the meter range [{lo:g}, {hi:g}] dBm", lineno)
        t.append(ts)
        p.append(vals)
    if len(t) < 2:
        raise ParseError("a power log needs at least 2 rows", rows[-1][0])
    return PowerLog(np.array(t), np.array(p))


def write_power_log(log: PowerLog, path) -> Path:
    path = Path(path)
    header = ["time_s"] + [f"ch{i}_dbm" for i in range(1, log.n_channels + 1)]
    lines = [",".join(header)]
    for ts, row in zip(log.timestamps.tolist(), log.powers_dbm.tolist()):
        lines.append(",".join([repr(ts)] + [repr(v) for v in row]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def _channel_number(ch) -> int:
    if isinstance(ch, str):
        s = ch.lower().removeprefix("ch").removesuffix("_dbm")
        try:
            return int(s)
        except ValueError:
            raise ConfigurationError(f"unrecognized channel {ch!r}") from None
    return int(ch)


def ingest_power_log(path, excited_channel, target_channel) -> XtSeries:
    """Crosstalk series ``P_target - P_excited`` (dB) from a power log.

    Rows with any channel below the meter sensitivity are kept but listed
    in ``metadata["flagged_rows"]`` (0-based data-row indices).
    """
    log = path if isinstance(path, PowerLog) else read_power_log(path)
    ex, tg = _channel_number(excited_channel), _channel_number(target_channel)
    if ex == tg:
        raise ConfigurationError("excited and target channels must differ")
    for ch in (ex, tg):
        if not 1 <= ch <= log.n_channels:
            raise ParseError(f"channel ch{ch} missing from log with {log.n_channels} channel(s)", 1)
    xt = log.channel(tg) - log.channel(ex)
    spacing = float(np.median(np.diff(log.timestamps)))
    meta = {
        "source_kind": None,
        "averaging_time_s": spacing,
        "excited_channel": ex,
        "target_channel": tg,
        "excited_cores": [log.channel_cores.get(ex, ex)],
        "target_core": log.channel_cores.get(tg, tg),
        "flagged_rows": np.flatnonzero(log.flagged).tolist(),
    }
    if not isinstance(path, PowerLog):
        meta["source_file"] = str(path)
    return XtSeries(log.timestamps, xt, spacing, meta)
