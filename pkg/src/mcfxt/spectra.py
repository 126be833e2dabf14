"""Discrete power spectra of the signalling sources.

A spectrum is a set of lines (offset from the optical carrier in Hz, fraction
of total power) plus the fraction of power left in the unmodulated carrier.
Intensity-modulated PRBS sources produce a line comb with spacing
``baud / (2**i - 1)`` under an NRZ ``sinc^2`` envelope; QAM sources use a
dense grid because their patterns are not PRBS combs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sici

from .errors import ConfigurationError, DomainError

__all__ = [
    "SourceKind",
    "SourceSpectrum",
    "SUPPORTED_PRBS_ORDERS",
    "SUPPORTED_QAM_ORDERS",
    "prbs_line_spacing",
    "alphabet_carrier_fraction",
    "build_cw_spectrum",
    "build_ase_spectrum",
    "build_ook_spectrum",
    "build_pam4_spectrum",
    "build_qam_spectrum",
    "build_spectrum",
    "carrier_to_signal_ratio",
]

SUPPORTED_PRBS_ORDERS = (7, 9, 10, 11, 15, 20, 23, 31)
SUPPORTED_QAM_ORDERS = (4, 16, 64, 256)
QAM_BAUD_RANGE = (15e9, 80e9)
MAX_COMB_LINES = 4097
QAM_GRID_DIVISOR = 1024
DEFAULT_ASE_BANDWIDTH_HZ = 150e9
DEFAULT_ASE_LINES = 301

OOK_LEVELS = (0.0, 1.0)
PAM4_LEVELS = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)


class SourceKind(str, enum.Enum):
    CW = "CW"
    ASE = "ASE"
    OOK = "OOK"
    PAM4 = "PAM4"
    QAM = "QAM"


@dataclass(frozen=True)
class SourceSpectrum:
    """Immutable discrete spectrum; invariants are checked on construction."""

    kind: SourceKind
    offsets_hz: np.ndarray
    fractions: np.ndarray
    carrier_fraction: float = 0.0
    baud: float = 0.0
    prbs_order_i: int = 0
    qam_order_m: int = 0
    osnr_db: float | None = None
    bin_width_hz: float = 0.0  # spacing of the stored lines (after any decimation)
    label: str = field(default="", compare=False)

    def __post_init__(self):
        off = np.array(self.offsets_hz, dtype=float)
        frac = np.array(self.fractions, dtype=float)
        if off.ndim != 1 or off.shape != frac.shape or off.size == 0:
            raise ConfigurationError("offsets and fractions must be equal-length 1-D arrays")
        if np.any(frac < 0):
            raise ConfigurationError("line power fractions must be >= 0")
        if off.size > 1 and np.any(np.diff(off) <= 0):
            raise ConfigurationError("line offsets must be strictly increasing")
        if not 0.0 <= self.carrier_fraction <= 1.0:
            raise ConfigurationError("carrier_fraction must lie in [0, 1]")
        total = frac.sum() + self.carrier_fraction
        if abs(total - 1.0) > 1e-9:
            raise ConfigurationError(f"spectrum not normalized: total power {total!r}")
        kind = SourceKind(self.kind)
        if kind is SourceKind.CW and not (off.size == 1 and off[0] == 0.0 and frac[0] == 1.0):
            raise ConfigurationError("CW spectrum must be a single unit line at offset 0")
        if kind is SourceKind.QAM and self.carrier_fraction != 0.0:
            raise ConfigurationError("QAM spectra carry no residual carrier")
        off.setflags(write=False)
        frac.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "offsets_hz", off)
        object.__setattr__(self, "fractions", frac)
        if not self.label:
            object.__setattr__(self, "label", _default_label(self))

    @property
    def n_lines(self) -> int:
        return int(self.offsets_hz.size)

    def with_carrier_line(self):
        """(offsets, weights) with the carrier folded in as a line at 0 Hz."""
        if self.carrier_fraction == 0.0:
            return self.offsets_hz, self.fractions
        off = np.concatenate([[0.0], self.offsets_hz])
        w = np.concatenate([[self.carrier_fraction], self.fractions])
        return off, w

    def metadata(self) -> dict:
        return {
            "source_kind": self.kind.value,
            "baud": self.baud,
            "prbs_i": self.prbs_order_i,
            "qam_m": self.qam_order_m,
            "osnr_db": self.osnr_db,
            "n_lines": self.n_lines,
            "carrier_fraction": self.carrier_fraction,
        }


def _default_label(s: SourceSpectrum) -> str:
    if s.kind is SourceKind.QAM:
        return f"{s.qam_order_m}QAM-{s.baud / 1e9:g}G"
    if s.kind in (SourceKind.OOK, SourceKind.PAM4):
        return f"{s.kind.value}-{s.baud / 1e9:g}G-PRBS{s.prbs_order_i}"
    return s.kind.value


def prbs_line_spacing(baud: float, i: int) -> float:
    """Comb spacing of a PRBS 2^i - 1 pattern at ``baud`` (Hz)."""
    if i not in SUPPORTED_PRBS_ORDERS:
        raise ConfigurationError(f"unsupported PRBS order {i}; choose from {SUPPORTED_PRBS_ORDERS}")
    if not baud > 0:
        raise ConfigurationError("baud must be > 0")
    return baud / (2**i - 1)


def alphabet_carrier_fraction(levels) -> float:
    """Residual-carrier fraction |E[field]|^2 / E[|field|^2] of an equiprobable alphabet."""
    lv = np.asarray(levels, dtype=float)
    return float(lv.mean() ** 2 / np.mean(lv**2))


def _sinc2_integral(x):
    """Antiderivative of sinc^2(x) = (sin(pi x) / (pi x))^2, odd in x."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    nz = x != 0
    px = np.pi * x[nz]
    si, _ = sici(2.0 * px)
    out[nz] = si / np.pi - np.sin(px) ** 2 / (np.pi * px)
    return out


def _comb(baud, spacing, truncation, max_lines, include_zero=False):
    """Lines of a sinc^2 comb, decimated if needed.

    The 0 Hz line is dropped unless ``include_zero`` (PRBS combs carry it as
    the residual carrier instead).

    Returns offsets, unnormalized powers and the stored line spacing.
    """
    kmax = int(math.floor(truncation / spacing * (1 + 1e-12)))
    if 2 * kmax + 1 <= max_lines:
        k = np.arange(-kmax, kmax + 1)
        if not include_zero:
            k = k[k != 0]
        off = k * spacing
        power = np.sinc(off / baud) ** 2
        period = baud / spacing
        if abs(period - round(period)) < 1e-9 * period:
            power[(k != 0) & (k % int(round(period)) == 0)] = 0.0  # exact envelope nulls
        return off, power, spacing
    # Group g consecutive lines (g odd keeps the bins symmetric about 0) and
    # give each bin the envelope integral over its span.
    g = int(math.ceil((2 * kmax + 1) / max_lines)) | 1
    while 2 * int(round(kmax / g)) + 1 > max_lines:
        g += 2
    jmax = int(round(kmax / g))
    j = np.arange(-jmax, jmax + 1)
    width = g * spacing
    lo = np.clip((j - 0.5) * width, -truncation, truncation)
    hi = np.clip((j + 0.5) * width, -truncation, truncation)
    power = (_sinc2_integral(hi / baud) - _sinc2_integral(lo / baud)) * baud / spacing
    return j * width, power, width


def _modulated(kind, baud, i, levels, truncation_bandwidth, max_lines):
    if not baud > 0:
        raise ConfigurationError("baud must be > 0")
    spacing = prbs_line_spacing(baud, i)
    if truncation_bandwidth is None:
        truncation_bandwidth = 2.0 * baud
    if truncation_bandwidth < 2.0 * baud * (1 - 1e-12):
        raise ConfigurationError(
            f"truncation bandwidth {truncation_bandwidth:.4g} Hz cuts into the main lobe; "
            f"need >= 2 * baud = {2 * baud:.4g} Hz"
        )
    carrier = alphabet_carrier_fraction(levels)
    off, p, width = _comb(baud, spacing, truncation_bandwidth, max_lines)
    keep = p > 0
    off, p = off[keep], p[keep]
    frac = p / p.sum() * (1.0 - carrier)
    return SourceSpectrum(
        kind=kind,
        offsets_hz=off,
        fractions=frac,
        carrier_fraction=carrier,
        baud=baud,
        prbs_order_i=i,
        bin_width_hz=width,
    )


def build_ook_spectrum(baud, i, truncation_bandwidth=None, max_lines=MAX_COMB_LINES):
    """NRZ on-off keying driven by a PRBS 2^i - 1 pattern."""
    return _modulated(SourceKind.OOK, baud, i, OOK_LEVELS, truncation_bandwidth, max_lines)


def build_pam4_spectrum(baud, i, truncation_bandwidth=None, max_lines=MAX_COMB_LINES):
    """NRZ PAM-4 with equiprobable field levels {0, 1/3, 2/3, 1}."""
    return _modulated(SourceKind.PAM4, baud, i, PAM4_LEVELS, truncation_bandwidth, max_lines)


def build_qam_spectrum(baud, m, truncation_bandwidth=None, osnr_db=None, max_lines=MAX_COMB_LINES):
    """Carrier-suppressed m-QAM on a dense baud/1024 grid."""
    if m not in SUPPORTED_QAM_ORDERS:
        raise ConfigurationError(f"unsupported QAM order {m}; choose from {SUPPORTED_QAM_ORDERS}")
    lo, hi = QAM_BAUD_RANGE
    if not lo <= baud <= hi:
        raise ConfigurationError(f"QAM baud {baud:.4g} outside [{lo:.0e}, {hi:.0e}]")
    if truncation_bandwidth is None:
        truncation_bandwidth = 2.0 * baud
    if truncation_bandwidth < 2.0 * baud * (1 - 1e-12):
        raise ConfigurationError("truncation bandwidth must be >= 2 * baud")
    spacing = baud / QAM_GRID_DIVISOR
    off, p, width = _comb(baud, spacing, truncation_bandwidth, max_lines, include_zero=True)
    keep = p > 0
    off, p = off[keep], p[keep]
    return SourceSpectrum(
        kind=SourceKind.QAM,
        offsets_hz=off,
        fractions=p / p.sum(),
        carrier_fraction=0.0,
        baud=baud,
        qam_order_m=m,
        osnr_db=osnr_db,
        bin_width_hz=width,
    )


def build_cw_spectrum() -> SourceSpectrum:
    return SourceSpectrum(kind=SourceKind.CW, offsets_hz=[0.0], fractions=[1.0])


def build_ase_spectrum(bandwidth=DEFAULT_ASE_BANDWIDTH_HZ, n_lines=DEFAULT_ASE_LINES) -> SourceSpectrum:
    """Flat broadband source: ``n_lines`` equal lines spanning ``bandwidth`` Hz."""
    if not bandwidth > 0:
        raise ConfigurationError("ASE bandwidth must be > 0")
    if n_lines < 1:
        raise ConfigurationError("ASE needs at least one line")
    if n_lines == 1:
        off = np.zeros(1)
    else:
        off = np.linspace(-bandwidth / 2.0, bandwidth / 2.0, n_lines)
    return SourceSpectrum(
        kind=SourceKind.ASE,
        offsets_hz=off,
        fractions=np.full(n_lines, 1.0 / n_lines),
        bin_width_hz=bandwidth / max(n_lines - 1, 1),
    )


def build_spectrum(kind, baud=25e9, prbs_i=15, qam_m=4, ase_bandwidth=DEFAULT_ASE_BANDWIDTH_HZ,
                   ase_lines=DEFAULT_ASE_LINES, truncation_bandwidth=None, osnr_db=None):
    """Dispatch on a kind name (``CW``, ``ASE``, ``OOK``, ``PAM4``, ``QAM`` or ``16QAM`` style)."""
    name = str(kind).upper().replace("-", "").replace("_", "")
    if name.endswith("QAM") and name[:-3].isdigit():
        qam_m = int(name[:-3])
        name = "QAM"
    try:
        kind = SourceKind(name)
    except ValueError:
        known = ", ".join(k.value for k in SourceKind)
        raise ConfigurationError(f"unknown source kind {kind!r} (known: {known}, or e.g. 16QAM)") from None
    if kind is SourceKind.CW:
        return build_cw_spectrum()
    if kind is SourceKind.ASE:
        return build_ase_spectrum(ase_bandwidth, ase_lines)
    if kind is SourceKind.OOK:
        return build_ook_spectrum(baud, prbs_i, truncation_bandwidth)
    if kind is SourceKind.PAM4:
        return build_pam4_spectrum(baud, prbs_i, truncation_bandwidth)
    return build_qam_spectrum(baud, qam_m, truncation_bandwidth, osnr_db=osnr_db)


def carrier_to_signal_ratio(s: SourceSpectrum) -> float:
    """Carrier-to-signal power ratio in dB; ``-inf`` when no carrier is present."""
    c = s.carrier_fraction
    if c >= 1.0:
        raise DomainError("pure carrier: carrier-to-signal ratio undefined")
    if c == 0.0:
        return float("-inf")
    return 10.0 * math.log10(c / (1.0 - c))
