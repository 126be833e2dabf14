"""Time-dependent crosstalk from the discrete phase-matching-point model.

Each excited core couples into the target core through ``N`` phase-matching
points (PMPs) at random positions ``z_l``.  In the low-crosstalk limit the
field reaching the target core at optical offset ``omega`` is

    A(omega, t) = -j K sum_l exp(-j [Phi_l(t) + s z_l omega])

where the phases ``Phi_l`` perform independent Brownian motions.  Two
polarizations are carried as independent phase sets, each with half the
launched power, and the source spectrum weights the per-line powers.

Phases are sampled on a two-level grid: the values at the end of every
sample interval (anchors) come from one random stream per polarization,
and the intermediate substep values are filled in with a Brownian bridge
from a second stream.  Changing ``substeps_per_sample`` therefore only
refines the averaging inside each sample; the anchor path is unchanged.

For a fixed PMP set the map from the phasor vector ``exp(-j Phi)`` to the
spectrally weighted power is a fixed quadratic form, so it is factorized
once (SVD) into R orthogonal components; R is 1 for a CW source and grows
with the product of signal bandwidth and skew.  The time loop then runs in
the compiled kernel :func:`mcfxt.kernels.projected_power`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import AnalysisError, ConfigurationError
from .fiber import (
    CoreLayout,
    FiberGeometry,
    ThermalCoefficients,
    _mean_crosstalk_no_floor,
    apply_temperature,
    calibrated_geometry,
    eight_core_layout,
    pmp_count,
)
from .series import XtSeries
from .spectra import SourceSpectrum, build_cw_spectrum

__all__ = [
    "SimConfig",
    "PmpState",
    "init_pmps",
    "evolve_phases",
    "transfer_power",
    "instantaneous_xt",
    "spectral_projection",
    "simulate_series",
    "bridge_times",
    "set_temperature",
    "fluctuation_speed",
    "N_POLARIZATIONS",
    "DEFAULT_PHASE_DIFFUSION",
]

N_POLARIZATIONS = 2
DEFAULT_PHASE_DIFFUSION = 0.05  # rad^2/s
DEFAULT_WALKOFF = 1e-13  # s/m, 100 ps skew over 1 km
REFERENCE_TEMPERATURE_C = 23.0
TEMPERATURE_RANGE_C = (20.0, 80.0)
_POSITION_STREAM = 1000
_BRIDGE_STREAM = 2000
_SVD_RTOL = 1e-13
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class SimConfig:
    """Everything one simulation run depends on (including the seed)."""

    geometry: FiberGeometry = field(default_factory=calibrated_geometry)
    layout: CoreLayout = field(default_factory=eight_core_layout)
    source: SourceSpectrum = field(default_factory=build_cw_spectrum)
    excited_cores: tuple[int, ...] = (1,)
    target_core: int = 3
    duration: float = 600.0  # s
    sample_interval: float = 0.025  # s, 40 Hz power meter
    averaging_time: float | None = None  # s, defaults to sample_interval
    phase_diffusion: float = DEFAULT_PHASE_DIFFUSION  # rad^2/s
    temperature_c: float = REFERENCE_TEMPERATURE_C
    seed: int = 0
    substeps_per_sample: int = 8
    walkoff: float = DEFAULT_WALKOFF  # s/m
    wavelength_nm: float = 1550.0
    thermal: ThermalCoefficients = field(default_factory=ThermalCoefficients)

    def __post_init__(self):
        object.__setattr__(self, "excited_cores", tuple(int(c) for c in self.excited_cores))
        if self.averaging_time is None:
            object.__setattr__(self, "averaging_time", self.sample_interval)

    @property
    def substep(self) -> float:
        return self.averaging_time / self.substeps_per_sample

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.sample_interval + 1e-9))

    def validate(self) -> None:
        problems = []
        if not self.duration > 0:
            problems.append("duration > 0")
        if not self.sample_interval > 0:
            problems.append("sample_interval > 0")
        if not (self.averaging_time is not None and 0 < self.averaging_time <= self.sample_interval * (1 + 1e-12)):
            problems.append("0 < averaging_time <= sample_interval")
        if not (isinstance(self.substeps_per_sample, (int, np.integer)) and self.substeps_per_sample >= 1):
            problems.append("substeps_per_sample >= 1 (integer)")
        if not self.excited_cores:
            problems.append("excited_cores non-empty")
        if self.target_core in self.excited_cores:
            problems.append("target_core not among excited_cores")
        if len(set(self.excited_cores)) != len(self.excited_cores):
            problems.append("excited_cores unique")
        for c in (*self.excited_cores, self.target_core):
            if not 1 <= c <= self.layout.n_cores:
                problems.append(f"core {c} in layout (1..{self.layout.n_cores})")
        if not self.phase_diffusion >= 0:
            problems.append("phase_diffusion >= 0")
        if not self.walkoff >= 0:
            problems.append("walkoff >= 0")
        if not 0 <= int(self.seed) < 2**64:
            problems.append("seed is a 64-bit unsigned integer")
        if self.duration > 0 and self.sample_interval > 0 and self.n_samples < 1:
            problems.append("duration >= sample_interval")
        if problems:
            raise ConfigurationError("invalid SimConfig, violated: " + "; ".join(problems))
        self.layout.validate_for(self.geometry)
        pmp_count(self.geometry.length_L, self.geometry.twist_rate_gamma)


@dataclass
class PmpState:
    """Phase-matching points coupling one excited core into the target.

    ``phases`` has one row per polarization.  ``rngs`` holds one generator
    per polarization for the sample-to-sample increments; ``bridge_rngs``
    fills in the substeps between them.
    """

    positions_z: np.ndarray
    phases: np.ndarray
    walkoff_s: float
    coupling_K: float
    rngs: tuple
    core: int = 0
    bridge_rngs: tuple = ()

    def __post_init__(self):
        z = self.positions_z
        if z.ndim != 1 or z.size < 1:
            raise ConfigurationError("need at least one PMP")
        if z.size > 1 and np.any(np.diff(z) <= 0):
            raise ConfigurationError("PMP positions must be strictly increasing")
        if self.phases.shape != (len(self.rngs), z.size):
            raise ConfigurationError("one phase row per polarization, one phase per PMP")
        if not self.walkoff_s >= 0:
            raise ConfigurationError("walkoff_s must be >= 0")

    @property
    def n_pmp(self) -> int:
        return int(self.positions_z.size)


def _stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def init_pmps(config: SimConfig, core: int, pitch_um: float | None = None) -> PmpState:
    """Draw the PMP set for excited ``core`` (deterministic in ``config.seed``).

    Positions are uniform on [0, L] and sorted; initial phases are uniform on
    [0, 2 pi).  The per-PMP coupling is set so that ``N K^2`` equals the
    statistical-mean crosstalk exactly for the integer ``N``.
    """
    geom = config.geometry
    if pitch_um is None:
        pitch_um = config.layout.pitch(core, config.target_core)
    n = pmp_count(geom.length_L, geom.twist_rate_gamma)
    mean_xt = _mean_crosstalk_no_floor(geom, pitch_um, config.wavelength_nm)
    pos_rng = _stream(config.seed, core, _POSITION_STREAM)
    z = np.sort(pos_rng.uniform(0.0, geom.length_L, n))
    rngs = tuple(_stream(config.seed, core, pol) for pol in range(N_POLARIZATIONS))
    bridge = tuple(_stream(config.seed, core, _BRIDGE_STREAM + pol) for pol in range(N_POLARIZATIONS))
    phases = np.stack([r.uniform(0.0, 2.0 * math.pi, n) for r in rngs])
    return PmpState(
        positions_z=z,
        phases=np.ascontiguousarray(phases),
        walkoff_s=config.walkoff,
        coupling_K=math.sqrt(mean_xt / n),
        rngs=rngs,
        core=core,
        bridge_rngs=bridge,
    )


def evolve_phases(state: PmpState, dt: float, diffusion: float) -> PmpState:
    """Advance every phase by an independent N(0, 2 D dt) increment.

    The increments come from the state's own per-polarization streams, so
    the returned state shares (and advances) those generators.
    """
    if not dt > 0:
        raise ConfigurationError("dt must be > 0")
    if not diffusion >= 0:
        raise ConfigurationError("phase diffusion must be >= 0")
    if diffusion == 0:
        return replace(state, phases=state.phases.copy())
    sd = math.sqrt(2.0 * diffusion * dt)
    steps = np.stack([r.standard_normal(state.n_pmp) for r in state.rngs])
    return replace(state, phases=state.phases + sd * steps)


def transfer_power(state: PmpState, omega) -> np.ndarray:
    """|K sum_l exp(-j (Phi_l + s z_l omega))|^2 per polarization.

    Returns an array of shape ``(n_pol,) + np.shape(omega)``.
    """
    w = np.asarray(omega, dtype=float)
    delay = state.walkoff_s * state.positions_z  # (N,)
    arg = state.phases[:, :, None] + delay[None, :, None] * w.reshape(1, 1, -1)
    amp = np.exp(-1j * arg).sum(axis=1)
    out = state.coupling_K**2 * (amp.real**2 + amp.imag**2)
    return out.reshape((state.phases.shape[0],) + w.shape)


def instantaneous_xt(states, spectrum: SourceSpectrum, xt_floor: float = 0.0) -> float:
    """Spectrally weighted crosstalk summed over polarizations and excited cores."""
    if isinstance(states, PmpState):
        states = [states]
    off, w = spectrum.with_carrier_line()
    omega = 2.0 * math.pi * off
    total = 0.0
    for st in states:
        if st.phases.shape[0] != N_POLARIZATIONS:
            raise ConfigurationError("instantaneous_xt needs both polarization states")
        total += float((transfer_power(st, omega) @ w).sum()) / N_POLARIZATIONS
    return total + xt_floor


def spectral_projection(state: PmpState, spectrum: SourceSpectrum) -> np.ndarray:
    """Factor the spectral quadratic form of ``state`` into an (N x R) matrix P.

    For every phase vector ``phi`` of one polarization,
    ``sum_j |exp(-1j phi) @ P[:, j]|**2`` equals that polarization's
    contribution to :func:`instantaneous_xt`.
    """
    off, w = spectrum.with_carrier_line()
    keep = w > 0
    off, w = off[keep], w[keep]
    omega = 2.0 * math.pi * off
    scale = state.coupling_K * np.sqrt(w / N_POLARIZATIONS)
    b = scale[:, None] * np.exp(-1j * state.walkoff_s * omega[:, None] * state.positions_z[None, :])
    if b.shape[0] == 1:
        return np.ascontiguousarray(b.T)
    _, s, vh = np.linalg.svd(b, full_matrices=False)
    energy = s**2
    tail = np.cumsum(energy[::-1])[::-1]  # energy dropped if truncating at index j
    r = int(np.count_nonzero(tail > _SVD_RTOL * energy.sum()))
    r = max(r, 1)
    return np.ascontiguousarray((s[:r, None] * vh[:r]).T)


def bridge_times(config: SimConfig) -> np.ndarray:
    """Evaluation instants within one sample interval, measured from its start.

    The last instant is the interval end; the others are spaced one substep
    apart, covering the final ``averaging_time`` of the interval.
    """
    sub = config.substeps_per_sample
    j = np.arange(1, sub + 1)
    return config.sample_interval - (sub - j) * config.substep


def _phase_path(start, anchor_normals, bridge_normals, times, interval, diffusion):
    """Phases at every evaluation instant of a block of samples.

    ``start`` (N,) is the phase at the start of the block, ``anchor_normals``
    (B, N) drive the interval-end values and ``bridge_normals`` (B, S-1, N)
    the Brownian-bridge points in between.  Returns (B * S, N).
    """
    nb, n = anchor_normals.shape
    sub = times.size
    steps = math.sqrt(2.0 * diffusion * interval) * anchor_normals
    ends = np.cumsum(np.vstack([start[None, :], steps]), axis=0)[1:]  # sequential, block-size independent
    path = np.empty((nb, sub, n))
    path[:, -1] = ends
    left = np.vstack([start[None, :], ends[:-1]])
    u_prev = 0.0
    for j in range(sub - 1):
        u = times[j]
        frac = (u - u_prev) / (interval - u_prev)
        sd = math.sqrt(2.0 * diffusion * (u - u_prev) * (interval - u) / (interval - u_prev))
        left = left + frac * (ends - left) + sd * bridge_normals[:, j]
        path[:, j] = left
        u_prev = u
    return path.reshape(nb * sub, n)


def simulate_series(config: SimConfig, block_elements: int = _BLOCK_ELEMENTS) -> XtSeries:
    """Generate a crosstalk series as a power meter would record it.

    Each emitted sample averages the linear power at ``substeps_per_sample``
    instants spread over the last ``averaging_time`` of its interval.
    """
    config.validate()
    states = [init_pmps(config, c) for c in config.excited_cores]
    projections = [spectral_projection(st, config.source) for st in states]
    n = config.n_samples
    sub = config.substeps_per_sample
    interval = config.sample_interval
    diffusion = config.phase_diffusion
    times = bridge_times(config)

    n_pmp = states[0].n_pmp
    block = max(1, block_elements // (sub * n_pmp))
    power = np.empty(n)
    for start in range(0, n, block):
        nb = min(block, n - start)
        rows = nb * sub
        acc = np.zeros(rows)
        for st, proj in zip(states, projections):
            for pol in range(N_POLARIZATIONS):
                phase = st.phases[pol]
                if diffusion > 0:
                    anchors = st.rngs[pol].standard_normal((nb, n_pmp))
                    bridge = st.bridge_rngs[pol].standard_normal((nb, sub - 1, n_pmp)) if sub > 1 else None
                    path = _phase_path(phase, anchors, bridge, times, interval, diffusion)
                    phase[:] = path[-1]
                else:
                    path = np.broadcast_to(phase, (rows, n_pmp))
                acc += kernels.projected_power(path, proj)
        power[start:start + nb] = acc.reshape(nb, sub).mean(axis=1)

    power += config.geometry.xt_floor
    src = config.source.metadata()
    meta = {
        "seed": int(config.seed),
        **src,
        "source_label": config.source.label,
        "temperature_c": config.temperature_c,
        "averaging_time_s": config.averaging_time,
        "sample_interval_s": config.sample_interval,
        "excited_cores": list(config.excited_cores),
        "target_core": config.target_core,
        "phase_diffusion": diffusion,
        "walkoff_s_per_m": config.walkoff,
        "wavelength_nm": config.wavelength_nm,
        "n_pmp": n_pmp,
        "kernel_backend": kernels.BACKEND,
    }
    return XtSeries(
        timestamps=np.arange(n) * config.sample_interval,
        xt_db=10.0 * np.log10(power),
        averaging_time=config.averaging_time,
        metadata=meta,
    )


def set_temperature(config: SimConfig, temperature_c: float) -> SimConfig:
    """Move a configuration to ``temperature_c`` (geometry and walk-off)."""
    lo, hi = TEMPERATURE_RANGE_C
    if not lo <= temperature_c <= hi:
        raise ConfigurationError(f"temperature {temperature_c} C outside [{lo:g}, {hi:g}] C")
    delta = temperature_c - config.temperature_c
    if delta == 0:
        return config
    return replace(
        config,
        geometry=apply_temperature(config.geometry, delta, config.thermal),
        walkoff=config.walkoff * (1.0 + config.thermal.walkoff_coeff * delta),
        temperature_c=temperature_c,
    )


def fluctuation_speed(series: XtSeries, threshold_db: float = 0.5) -> float:
    """Peaks plus troughs per hour, counted with ``threshold_db`` hysteresis."""
    if len(series) < 3:
        raise AnalysisError("fluctuation speed needs at least 3 samples")
    count = kernels.count_extrema(series.xt_db, threshold_db)
    return count / (series.span / 3600.0)
