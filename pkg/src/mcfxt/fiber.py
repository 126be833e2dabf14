"""Coupled-mode model of a trench-assisted multi-core fiber.

Units follow the conventions used throughout the package: core radius,
trench width and core pitch in micrometres, fiber length and bend radius in
metres, wavelength in nanometres, twist rate in rad/m.  Everything returned
is SI (rad/m, 1/m, linear power ratios).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import ConfigurationError, DomainError, ModelDomainError
from .special import bessel_k1

__all__ = [
    "FiberGeometry",
    "CoreLayout",
    "ThermalCoefficients",
    "ModeParameters",
    "propagation_constant",
    "mode_parameters",
    "mode_coupling_coefficient",
    "mean_crosstalk",
    "discrete_coupling",
    "pmp_density",
    "pmp_count",
    "apply_temperature",
    "calibrated_geometry",
    "eight_core_layout",
    "db",
    "from_db",
]

WAVELENGTH_RANGE_NM = (1200.0, 1700.0)
TEMPERATURE_STEP_RANGE_K = (-30.0, 60.0)

# Rudolph-Neumann fit of the LP01 cladding parameter, W ~ 1.1428 V - 0.9960
# (weakly guiding step index, accurate to ~0.1 % for 1.5 < V < 2.5).
_RN_SLOPE = 1.1428
_RN_OFFSET = 0.9960


def db(x):
    """Linear power ratio to dB."""
    return 10.0 * np.log10(x)


def from_db(x_db):
    """dB to linear power ratio."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class FiberGeometry:
    """Index profile and mechanical parameters of a homogeneous TA-MCF.

    The relative index differences are derived from the three indices with
    the weakly-guiding convention ``delta1 = (n1^2 - n0^2) / (2 n1^2)`` and
    ``delta2 = (nt^2 - n0^2) / (2 n0^2)``, so that ``V1`` and ``V2`` below
    are consistent with ``U^2 + W^2 = V^2``.  Use :meth:`from_deltas` to
    build a geometry from the contrasts directly.
    """

    core_radius_a: float = 3.0  # um
    trench_width_wt: float = 4.0  # um
    n_core: float = 1.4505
    n_cladding: float = 1.444
    n_trench: float = 1.434
    length_L: float = 1000.0  # m
    bend_radius_R: float = 0.17  # m
    twist_rate_gamma: float = 0.5  # rad/m
    xt_floor: float = 0.0  # linear

    def __post_init__(self):
        problems = []
        if not self.core_radius_a > 0:
            problems.append("core_radius_a > 0")
        if not self.trench_width_wt >= 0:
            problems.append("trench_width_wt >= 0")
        if not self.length_L > 0:
            problems.append("length_L > 0")
        if not self.bend_radius_R > 0:
            problems.append("bend_radius_R > 0")
        if not self.twist_rate_gamma > 0:
            problems.append("twist_rate_gamma > 0")
        if not self.n_core > self.n_cladding:
            problems.append("n_core > n_cladding")
        if not self.n_trench <= self.n_cladding:
            problems.append("n_trench <= n_cladding (delta2 <= 0)")
        if not self.xt_floor >= 0:
            problems.append("xt_floor >= 0")
        if problems:
            raise ConfigurationError("invalid FiberGeometry, violated: " + ", ".join(problems))

    @classmethod
    def from_deltas(cls, n_cladding, delta1, delta2, **kwargs):
        if not delta1 > 0:
            raise ConfigurationError("delta1 must be > 0")
        if not delta2 <= 0:
            raise ConfigurationError("delta2 must be <= 0")
        n_core = n_cladding / math.sqrt(1.0 - 2.0 * delta1)
        n_trench = n_cladding * math.sqrt(1.0 + 2.0 * delta2)
        return cls(n_core=n_core, n_cladding=n_cladding, n_trench=n_trench, **kwargs)

    @property
    def delta1(self) -> float:
        return (self.n_core**2 - self.n_cladding**2) / (2.0 * self.n_core**2)

    @property
    def delta2(self) -> float:
        return (self.n_trench**2 - self.n_cladding**2) / (2.0 * self.n_cladding**2)


@dataclass(frozen=True)
class CoreLayout:
    """Core centre coordinates (um); core ids are 1-based."""

    core_positions: tuple[tuple[float, float], ...]
    _pitch: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.core_positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or len(pos) < 2:
            raise ConfigurationError("core_positions must be a list of >= 2 (x, y) pairs")
        object.__setattr__(self, "core_positions", tuple(map(tuple, pos.tolist())))
        diff = pos[:, None, :] - pos[None, :, :]
        pitch = np.sqrt((diff**2).sum(-1))
        pitch.setflags(write=False)
        object.__setattr__(self, "_pitch", pitch)

    @property
    def n_cores(self) -> int:
        return len(self.core_positions)

    @property
    def pitch_matrix(self) -> np.ndarray:
        return self._pitch

    def pitch(self, core_a: int, core_b: int) -> float:
        for c in (core_a, core_b):
            if not 1 <= c <= self.n_cores:
                raise ConfigurationError(f"core id {c} not in layout (1..{self.n_cores})")
        return float(self._pitch[core_a - 1, core_b - 1])

    def validate_for(self, geom: FiberGeometry) -> None:
        for i, j in combinations(range(self.n_cores), 2):
            if not self._pitch[i, j] > 2.0 * geom.core_radius_a:
                raise ConfigurationError(
                    f"cores {i + 1} and {j + 1} overlap: pitch {self._pitch[i, j]:.3g} um "
                    f"<= 2 a = {2 * geom.core_radius_a:.3g} um"
                )


def eight_core_layout(h_pitch=35.0, v_pitch=45.0) -> CoreLayout:
    """Two rows of four cores: 35 um horizontal, 45 um vertical neighbours.

    Numbering puts (1,3), (4,6) on horizontal neighbours and (5,6), (7,8) on
    vertical neighbours; the remaining pairs sit at >= 57 um.
    """
    xs = [(-1.5 + i) * h_pitch for i in range(4)]
    top, bottom = v_pitch / 2.0, -v_pitch / 2.0
    return CoreLayout(
        (
            (xs[0], top),  # 1
            (xs[0], bottom),  # 2
            (xs[1], top),  # 3
            (xs[1], bottom),  # 4
            (xs[2], top),  # 5
            (xs[2], bottom),  # 6
            (xs[3], top),  # 7
            (xs[3], bottom),  # 8
        )
    )


@dataclass(frozen=True)
class ThermalCoefficients:
    """Temperature coefficients of the fiber.

    ``dn_dT_*`` are absolute index changes per kelvin; the common budget is
    1.1e-5 /K and the default core value is lowered so that heating shrinks
    the core-cladding contrast.  ``length_coeff`` is the relative length
    change per kelvin and ``walkoff_coeff`` the relative walk-off change per
    kelvin used by the simulator.
    """

    dn_dT_core: float = 1.1e-5 - 5.23112287e-06
    dn_dT_cladding: float = 1.1e-5
    dn_dT_trench: float = 1.1e-5
    length_coeff: float = 4.1e-7
    walkoff_coeff: float = 0.01

    @classmethod
    def uniform(cls, dn_dT=1.1e-5, **kwargs):
        return cls(dn_dT_core=dn_dT, dn_dT_cladding=dn_dT, dn_dT_trench=dn_dT, **kwargs)


@dataclass(frozen=True)
class ModeParameters:
    k: float  # 1/m
    V1: float
    U1: float
    W1: float
    V2: float
    W2: float
    beta_eff: float  # rad/m


def _check_wavelength(wavelength_nm):
    lo, hi = WAVELENGTH_RANGE_NM
    if not lo <= wavelength_nm <= hi:
        raise DomainError(f"wavelength {wavelength_nm} nm outside [{lo:g}, {hi:g}] nm")


def propagation_constant(geom: FiberGeometry, wavelength_nm: float) -> float:
    """beta = 2 pi n_core / lambda in rad/m."""
    _check_wavelength(wavelength_nm)
    return 2.0 * math.pi * geom.n_core / (wavelength_nm * 1e-9)


def mode_parameters(geom: FiberGeometry, wavelength_nm: float) -> ModeParameters:
    """Normalized LP01 parameters entering the coupling coefficient.

    ``W1`` comes from the Rudolph-Neumann approximation; ``U1`` closes
    ``U1^2 + W1^2 = V1^2``.  The implied effective index lies strictly
    between the cladding and core indices whenever ``W1 > 0``.
    """
    _check_wavelength(wavelength_nm)
    k = 2.0 * math.pi / (wavelength_nm * 1e-9)
    a = geom.core_radius_a * 1e-6
    n1, n0 = geom.n_core, geom.n_cladding
    V1 = k * a * n1 * math.sqrt(2.0 * geom.delta1)
    W1 = _RN_SLOPE * V1 - _RN_OFFSET
    if not W1 > 0.0:
        raise ModelDomainError(
            f"mode not guided: W1 = {W1:.4g} <= 0 (requires beta > k n0, i.e. V1 = {V1:.4g} "
            f"> {_RN_OFFSET / _RN_SLOPE:.4f})"
        )
    U1 = math.sqrt(V1 * V1 - W1 * W1)
    V2 = k * a * n0 * math.sqrt(2.0 * abs(geom.delta2))
    W2 = math.sqrt(V2 * V2 + W1 * W1)
    beta_eff = math.sqrt((k * n1) ** 2 - (U1 / a) ** 2)
    return ModeParameters(k=k, V1=V1, U1=U1, W1=W1, V2=V2, W2=W2, beta_eff=beta_eff)


def mode_coupling_coefficient(geom: FiberGeometry, pitch_um: float, wavelength_nm: float) -> float:
    """Mode coupling coefficient kappa (1/m) between two identical TA cores."""
    if not pitch_um > 0:
        raise DomainError(f"pitch must be > 0, got {pitch_um}")
    m = mode_parameters(geom, wavelength_nm)
    a = geom.core_radius_a * 1e-6
    cp = pitch_um * 1e-6
    wt = geom.trench_width_wt * 1e-6
    gamma_t = m.W1 / (m.W1 + (m.W2 - m.W1) * wt / cp)
    prefactor = math.sqrt(geom.delta1) / a * m.U1**2 / (m.V1**3 * bessel_k1(m.W1) ** 2)
    overlap = math.sqrt(math.pi * a * gamma_t / (m.W1 * cp))
    exponent = -m.W1 * cp / a - 2.0 * (m.W2 - m.W1) * wt / a
    return prefactor * overlap * math.exp(exponent)


def _mean_crosstalk_no_floor(geom, pitch_um, wavelength_nm):
    kappa = mode_coupling_coefficient(geom, pitch_um, wavelength_nm)
    beta = propagation_constant(geom, wavelength_nm)
    return 2.0 * kappa**2 * geom.bend_radius_R * geom.length_L / (beta * pitch_um * 1e-6)


def mean_crosstalk(geom: FiberGeometry, pitch_um: float, wavelength_nm: float) -> float:
    """Statistical-mean crosstalk 2 kappa^2 R L / (beta Cp) plus the fan-in/out floor."""
    return _mean_crosstalk_no_floor(geom, pitch_um, wavelength_nm) + geom.xt_floor


def discrete_coupling(geom: FiberGeometry, pitch_um: float, wavelength_nm: float) -> float:
    """Per-PMP coupling magnitude |K| = sqrt(2 pi kappa^2 R / (beta Cp gamma))."""
    kappa = mode_coupling_coefficient(geom, pitch_um, wavelength_nm)
    beta = propagation_constant(geom, wavelength_nm)
    return math.sqrt(
        2.0 * math.pi * kappa**2 * geom.bend_radius_R
        / (beta * pitch_um * 1e-6 * geom.twist_rate_gamma)
    )


def pmp_density(length_L: float, twist_rate_gamma: float) -> float:
    """Expected (non-integer) number of phase-matching points, L gamma / pi."""
    if not (length_L > 0 and twist_rate_gamma > 0):
        raise ConfigurationError("length_L and twist_rate_gamma must both be > 0")
    return length_L * twist_rate_gamma / math.pi


def pmp_count(length_L: float, twist_rate_gamma: float) -> int:
    """Integer number of phase-matching points, rounded half away from zero."""
    n = int(math.floor(pmp_density(length_L, twist_rate_gamma) + 0.5))
    if n < 1:
        raise ConfigurationError(
            f"L gamma / pi = {length_L * twist_rate_gamma / math.pi:.3g} gives no phase-matching "
            "point; fiber too short or twist rate too low for the discrete model"
        )
    return n


def apply_temperature(
    geom: FiberGeometry, delta_t: float, coeffs: ThermalCoefficients | None = None
) -> FiberGeometry:
    """Return the geometry after a temperature change of ``delta_t`` kelvin."""
    lo, hi = TEMPERATURE_STEP_RANGE_K
    if not lo <= delta_t <= hi:
        raise ConfigurationError(f"temperature step {delta_t} K outside [{lo:g}, {hi:g}] K")
    if delta_t == 0:
        return geom
    c = coeffs or ThermalCoefficients()
    return replace(
        geom,
        n_core=geom.n_core + c.dn_dT_core * delta_t,
        n_cladding=geom.n_cladding + c.dn_dT_cladding * delta_t,
        n_trench=geom.n_trench + c.dn_dT_trench * delta_t,
        length_L=geom.length_L * (1.0 + c.length_coeff * delta_t),
    )


# Values produced by scripts/calibrate.py; see calibrated_geometry().
CALIBRATED_CORE_RADIUS_UM = 3.4110114434
CALIBRATED_TRENCH_WIDTH_UM = 3.5969541919
CALIBRATED_DELTA1 = 0.0045
CALIBRATED_DELTA2 = -0.007
CALIBRATED_N_CLADDING = 1.444
DEFAULT_XT_FLOOR_DB = -63.5


def calibrated_geometry(**overrides) -> FiberGeometry:
    """Default 1 km, R = 0.17 m fiber tuned to -45.95 dB at 1550 nm / 35 um.

    Core radius and trench width were fitted (with the fan-in/out floor
    included) so the mean crosstalk hits -45.95 dB and its slope over
    1480-1630 nm is 0.113 dB/nm; contrasts and cladding index are fixed
    typical values.
    """
    params = dict(
        n_cladding=CALIBRATED_N_CLADDING,
        delta1=CALIBRATED_DELTA1,
        delta2=CALIBRATED_DELTA2,
        core_radius_a=CALIBRATED_CORE_RADIUS_UM,
        trench_width_wt=CALIBRATED_TRENCH_WIDTH_UM,
        length_L=1000.0,
        bend_radius_R=0.17,
        twist_rate_gamma=0.5,
        xt_floor=float(from_db(DEFAULT_XT_FLOOR_DB)),
    )
    params.update(overrides)
    return FiberGeometry.from_deltas(**params)
