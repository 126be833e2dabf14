"""Statistics over crosstalk series: window metrics, resampling,
correlation, step-distribution and chi-square fits, coefficient extraction.

All averaging happens on linear power; results are reported in dB.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import AnalysisError, DomainError, FitError
from .series import XtSeries

__all__ = [
    "WindowStats",
    "PvpFit",
    "ChiSqFit",
    "ConvergencePoint",
    "CoefficientFit",
    "Axis",
    "select_window",
    "crop",
    "static_xt",
    "dynamic_xt",
    "worst_case_xt",
    "window_stats",
    "resample_average",
    "averaging_ladder",
    "circular_correlation",
    "step_sequence",
    "pvp_pdf",
    "sample_pvp",
    "density_histogram",
    "fit_pvp",
    "chisq4_pdf",
    "fit_chisq4",
    "r2_score",
    "window_convergence",
    "distribution_similarity",
    "extract_coefficients",
]

_LN2 = math.log(2.0)
_MAX_FIT_EVALS = 2000


# ---------------------------------------------------------------- windows

@dataclass(frozen=True)
class WindowStats:
    window_length: float  # s
    static_xt_db: float
    dynamic_xt_db: float
    worst_case_xt_db: float
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise AnalysisError("WindowStats needs at least one sample")
        if self.dynamic_xt_db < 0:
            raise AnalysisError("dynamic XT must be >= 0")
        if self.worst_case_xt_db < self.static_xt_db - 1e-9:
            raise AnalysisError("worst-case XT must be >= static XT")


def _window_mask(series: XtSeries, window) -> np.ndarray:
    t = series.timestamps
    if window is None:
        return np.ones(t.size, dtype=bool)
    if np.ndim(window) == 0:
        length = float(window)
        if not length > 0:
            raise AnalysisError("window length must be > 0")
        if length > series.span * (1 + 1e-9):
            raise AnalysisError(f"window {length:g} s exceeds series span {series.span:g} s")
        t0, t1 = t[0], t[0] + length
    else:
        t0, t1 = (float(v) for v in window)
        if t1 <= t0:
            raise AnalysisError("window end must follow its start")
        if t0 < t[0] - 1e-9 or t0 > t[-1]:
            raise AnalysisError(f"window start {t0:g} s outside series [{t[0]:g}, {t[-1]:g}] s")
    # small tolerance so float-accumulated timestamps land in the intended window
    eps = 1e-9 * max(series.sample_interval, 1e-12)
    return (t >= t0 - eps) & (t < t1 - eps)


def select_window(series: XtSeries, window=None) -> np.ndarray:
    """dB samples with ``t0 <= t < t1``.

    ``window`` is None (whole series), a length in seconds counted from the
    first sample, or a ``(t0, t1)`` pair.
    """
    sel = series.xt_db[_window_mask(series, window)]
    if sel.size == 0:
        raise AnalysisError("empty window")
    return sel


def crop(series: XtSeries, window) -> XtSeries:
    """Sub-series covering ``window`` (same conventions as :func:`select_window`)."""
    mask = _window_mask(series, window)
    if not mask.any():
        raise AnalysisError("empty window")
    return replace(series, timestamps=series.timestamps[mask], xt_db=series.xt_db[mask])


def static_xt(series: XtSeries, window=None) -> float:
    """10 log10 of the mean linear power in the window."""
    sel = select_window(series, window)
    return float(10.0 * np.log10(np.mean(10.0 ** (sel / 10.0))))


def dynamic_xt(series: XtSeries, window=None) -> float:
    """Max minus min of the dB samples in the window."""
    sel = select_window(series, window)
    return float(sel.max() - sel.min())


def worst_case_xt(series: XtSeries, window=None) -> float:
    return float(select_window(series, window).max())


def window_stats(series: XtSeries, window=None) -> WindowStats:
    sel = select_window(series, window)
    static = float(10.0 * np.log10(np.mean(10.0 ** (sel / 10.0))))
    return WindowStats(
        window_length=sel.size * series.sample_interval,
        static_xt_db=static,
        dynamic_xt_db=float(sel.max() - sel.min()),
        worst_case_xt_db=max(float(sel.max()), static),
        sample_count=int(sel.size),
    )


# ------------------------------------------------------------- resampling

def resample_average(series: XtSeries, new_averaging_time: float) -> XtSeries:
    """Average non-overlapping blocks of samples in linear power.

    The block length must be an integer number of samples; a trailing
    partial block is dropped.
    """
    base = series.sample_interval
    ratio = new_averaging_time / base
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-6 * max(1.0, ratio):
        lo = max(1, math.floor(ratio))
        hi = max(1, math.ceil(ratio))
        raise AnalysisError(
            f"averaging time {new_averaging_time:g} s is not an integer multiple of the "
            f"{base:g} s sample interval; nearest valid values: {lo * base:g} s, {hi * base:g} s"
        )
    if factor == 1:
        return series
    n_blocks = len(series) // factor
    if n_blocks < 1:
        raise AnalysisError(f"series of {len(series)} samples is shorter than one {factor}-sample block")
    m = n_blocks * factor
    lin = series.linear[:m].reshape(n_blocks, factor).mean(axis=1)
    meta = dict(series.metadata)
    meta["averaging_time_s"] = factor * series.averaging_time
    meta["sample_interval_s"] = factor * base
    meta["resample_factor"] = factor * int(series.metadata.get("resample_factor", 1))
    return XtSeries(
        timestamps=series.timestamps[:m:factor],
        xt_db=10.0 * np.log10(lin),
        averaging_time=factor * series.averaging_time,
        metadata=meta,
    )


def averaging_ladder(start: float = 0.025, stop: float = 48.0) -> list[float]:
    """x2 ladder from ``start`` up to the first value reaching ``stop``.

    With 25 ms and 48 s this gives 25 ms ... 51.2 s (12 rungs), every rung
    an integer multiple of all the previous ones.
    """
    out = [start]
    while out[-1] < stop * (1 - 1e-9):
        out.append(out[-1] * 2)
    return out


# ------------------------------------------------------------ correlation

def circular_correlation(series) -> tuple[np.ndarray, float]:
    """Normalized circular autocorrelation of the mean-removed dB samples.

    Returns the profile over lags 0..n-1 (lag 0 is 1) and the largest
    absolute value at a non-zero lag.
    """
    x = np.asarray(series.xt_db if isinstance(series, XtSeries) else series, dtype=float)
    if x.size < 16:
        raise AnalysisError("circular correlation needs at least 16 samples")
    x = x - x.mean()
    if not np.any(x):
        raise AnalysisError("zero-variance series has no defined correlation")
    spec = np.fft.rfft(x)
    r = np.fft.irfft(spec.real**2 + spec.imag**2, n=x.size)
    r = r / r[0]
    r = 0.5 * (r + np.roll(r[::-1], 1))  # exact lag k / n-k symmetry
    r[0] = 1.0
    return r, float(np.max(np.abs(r[1:])))


# ------------------------------------------------------- step distribution

def step_sequence(series) -> np.ndarray:
    """Consecutive dB differences; length n - 1."""
    x = np.asarray(series.xt_db if isinstance(series, XtSeries) else series, dtype=float)
    if x.size < 2:
        raise AnalysisError("step sequence needs at least 2 samples")
    return np.diff(x)


def pvp_pdf(zeta, mu: float, sigma: float, alpha: float):
    """Pseudo-Voigt density: Gaussian and Lorentzian mixture with shared mean.

    ``sigma`` is the half width at half maximum of both parts, so the
    Gaussian standard deviation is ``sigma / sqrt(2 ln 2)``.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    z = np.asarray(zeta, dtype=float) - mu
    sg = sigma / math.sqrt(2.0 * _LN2)
    gauss = np.exp(-0.5 * (z / sg) ** 2) / (sg * math.sqrt(2.0 * math.pi))
    lorentz = sigma / (math.pi * (z * z + sigma * sigma))
    out = (1.0 - alpha) * gauss + alpha * lorentz
    return float(out) if np.ndim(out) == 0 else out


def sample_pvp(n: int, mu: float, sigma: float, alpha: float, rng=None) -> np.ndarray:
    """Draw from the mixture (requires ``0 <= alpha <= 1``)."""
    if not 0 <= alpha <= 1:
        raise DomainError("sampling needs alpha in [0, 1]")
    if not sigma > 0:
        raise DomainError("sigma must be > 0")
    rng = np.random.default_rng(rng)
    is_lorentz = rng.random(n) < alpha
    g = rng.normal(0.0, sigma / math.sqrt(2.0 * _LN2), n)
    c = sigma * rng.standard_cauchy(n)
    return mu + np.where(is_lorentz, c, g)


def density_histogram(values, bins="fd", value_range=None, clip=(0.005, 0.995)):
    """Density-normalized histogram; returns ``(centers, density, edges)``.

    Densities are normalized by the total sample count, so clipping the
    range (default: 0.5 % and 99.5 % quantiles) does not bias the values.
    """
    x = np.asarray(values, dtype=float)
    x = x[np.isfinite(x)]
    if x.size < 2:
        raise AnalysisError("histogram needs at least 2 finite values")
    if value_range is None:
        lo, hi = np.quantile(x, clip) if clip is not None else (x.min(), x.max())
    else:
        lo, hi = value_range
    if not hi > lo:
        raise AnalysisError("degenerate histogram range (constant data?)")
    if isinstance(bins, str):
        if bins != "fd":
            raise AnalysisError(f"unknown binning rule {bins!r}")
        q1, q3 = np.quantile(x, [0.25, 0.75])
        width = 2.0 * (q3 - q1) / x.size ** (1 / 3)
        nb = int(np.clip(math.ceil((hi - lo) / width), 10, 1000)) if width > 0 else 10
        edges = np.linspace(lo, hi, nb + 1)
    elif np.ndim(bins) == 0:
        edges = np.linspace(lo, hi, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts, edges = np.histogram(x, bins=edges)
    density = counts / (x.size * np.diff(edges))
    return 0.5 * (edges[1:] + edges[:-1]), density, edges


def r2_score(observed, model) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot (may be negative)."""
    y = np.asarray(observed, dtype=float)
    f = np.asarray(model, dtype=float)
    if y.shape != f.shape or y.ndim != 1 or y.size < 2:
        raise AnalysisError("r2_score needs equal-length 1-D arrays of at least 2 bins")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise AnalysisError("observed values have zero total variance")
    ss_res = float(np.sum((y - f) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class PvpFit:
    mu: float
    sigma: float
    alpha: float
    r2: float
    alpha_outside_unit: bool = False
    histogram: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise FitError("fitted sigma must be > 0")


def fit_pvp(steps, bins="fd", clip=(0.005, 0.995)) -> PvpFit:
    """Least-squares fit of :func:`pvp_pdf` to the step histogram.

    Starts from median / half IQR / 0.5 and bounds alpha to [-0.1, 1.1];
    ``alpha_outside_unit`` flags fits that leave [0, 1].
    """
    z = np.asarray(steps.xt_db if isinstance(steps, XtSeries) else steps, dtype=float)
    if z.size < 500:
        raise AnalysisError(f"PVP fit needs at least 500 steps, got {z.size}")
    centers, density, _ = density_histogram(z, bins=bins, clip=clip)
    q1, med, q3 = np.quantile(z, [0.25, 0.5, 0.75])
    spread = max(q3 - q1, 1e-12)
    lo, hi = float(centers[0]), float(centers[-1])
    x0 = [float(med), spread / 2.0, 0.5]

    def resid(p):
        return pvp_pdf(centers, p[0], p[1], p[2]) - density

    res = least_squares(
        resid, x0,
        bounds=([lo, spread * 1e-4, -0.1], [hi, 10.0 * spread + (hi - lo), 1.1]),
        max_nfev=_MAX_FIT_EVALS, x_scale=[spread, spread, 1.0],
    )
    if not res.success or not np.all(np.isfinite(res.x)):
        raise FitError(f"PVP fit did not converge: {res.message}", residual=float(np.sqrt(np.mean(res.fun**2))))
    mu, sigma, alpha = (float(v) for v in res.x)
    model = pvp_pdf(centers, mu, sigma, alpha)
    return PvpFit(
        mu=mu, sigma=sigma, alpha=alpha,
        r2=r2_score(density, model),
        alpha_outside_unit=not 0.0 <= alpha <= 1.0,
        histogram=(centers, density, model),
    )


# ------------------------------------------------------------- chi-square

@dataclass(frozen=True)
class ChiSqFit:
    scale: float
    r2: float
    dof: int = 4
    histogram: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.scale > 0:
            raise FitError("fitted scale must be > 0")


def chisq4_pdf(x, scale: float):
    """Density of ``scale * Y`` with ``Y`` chi-square distributed, 4 degrees of freedom."""
    if not scale > 0:
        raise DomainError("scale must be > 0")
    u = np.clip(np.asarray(x, dtype=float) / scale, 0.0, None)
    return u * np.exp(-0.5 * u) / (4.0 * scale)


def fit_chisq4(series, bins="fd", clip=(0.0, 0.999)) -> ChiSqFit:
    """Fit the scale of a 4-DOF chi-square to the linear-power histogram."""
    p = np.asarray(series.linear if isinstance(series, XtSeries) else series, dtype=float)
    if p.size < 10_000:
        raise AnalysisError(f"chi-square fit needs at least 1e4 samples, got {p.size}")
    if np.any(p < 0):
        raise AnalysisError("linear powers must be non-negative")
    lo, hi = 0.0, float(np.quantile(p, clip[1]))
    centers, density, _ = density_histogram(p, bins=bins, value_range=(lo, hi))
    s0 = float(p.mean() / 4.0)

    def resid(v):
        return (chisq4_pdf(centers, v[0] * s0) - density) * s0

    res = least_squares(resid, [1.0], bounds=([1e-6], [1e6]), max_nfev=_MAX_FIT_EVALS)
    if not res.success or not np.isfinite(res.x[0]):
        raise FitError(f"chi-square fit did not converge: {res.message}", residual=float(np.sqrt(np.mean(res.fun**2))))
    scale = float(res.x[0] * s0)
    model = chisq4_pdf(centers, scale)
    return ChiSqFit(scale=scale, r2=r2_score(density, model), histogram=(centers, density, model))


def distribution_similarity(reference, candidate, bins="fd") -> float:
    """R² between the density histograms of two samples on shared bins."""
    a = np.asarray(reference, dtype=float)
    b = np.asarray(candidate, dtype=float)
    _, dens_a, edges = density_histogram(a, bins=bins)
    _, dens_b, _ = density_histogram(b, bins=edges)
    return r2_score(dens_a, dens_b)


# ------------------------------------------------------------ convergence

@dataclass(frozen=True)
class ConvergencePoint:
    window_s: float
    static_xt_db: float
    dynamic_xt_db: float
    static_delta_db: float
    dynamic_delta_db: float
    convergence_pct: float


DEFAULT_WINDOW_LADDER_MIN = (10, 20, 40, 80, 160, 300)
_REFERENCE_SPAN_S = 12 * 3600.0


def window_convergence(series: XtSeries, benchmark_window=None, ladder=None) -> list[ConvergencePoint]:
    """Compare leading windows of increasing length against a benchmark window.

    The default ladder is 10 ... 300 min for a 12 h benchmark, scaled in
    proportion to the actual benchmark length.  The benchmark itself is
    appended as the final point.  Convergence is
    ``100 (1 - |dyn(w) - dyn(bench)| / |dyn(bench)|)``.
    """
    bench_len = series.span if benchmark_window is None else float(benchmark_window)
    bench_static = static_xt(series, bench_len)
    bench_dyn = dynamic_xt(series, bench_len)
    if ladder is None:
        ladder = [m * 60.0 * bench_len / _REFERENCE_SPAN_S for m in DEFAULT_WINDOW_LADDER_MIN]
    windows = [float(w) for w in ladder]
    too_long = [w for w in windows if w > bench_len * (1 + 1e-9)]
    if too_long:
        warnings.warn(f"dropping {len(too_long)} window(s) longer than the benchmark ({bench_len:g} s)", stacklevel=2)
        windows = [w for w in windows if w not in too_long]
    if not windows or abs(windows[-1] - bench_len) > 1e-9 * bench_len:
        windows.append(bench_len)
    out = []
    for w in windows:
        if w < series.sample_interval:
            raise AnalysisError(f"window {w:g} s is shorter than one sample")
        s, d = static_xt(series, w), dynamic_xt(series, w)
        dd = abs(d - bench_dyn)
        conv = 100.0 * (1.0 - dd / abs(bench_dyn)) if bench_dyn != 0 else (100.0 if dd == 0 else 0.0)
        out.append(ConvergencePoint(w, s, d, abs(s - bench_static), dd, conv))
    return out


# ---------------------------------------------------- coefficient fitting

class Axis(str, Enum):
    TEMPERATURE = "temperature"
    WAVELENGTH = "wavelength"
    PRBS_LOG2 = "prbs_log2"
    BAUD_EXP = "baud_exp"


@dataclass(frozen=True)
class CoefficientFit:
    """Fitted dependence along one sweep axis.

    Linear axes: ``y = slope * x' + intercept`` where ``x'`` is the axis
    value (log2 of the PRBS order for ``prbs_log2``).  ``baud_exp`` fits
    ``y = A * B**x`` on dynamic XT; ``slope``/``intercept`` then hold
    ``ln B`` and ``ln A``.
    """

    axis: Axis
    metric: str
    slope: float
    intercept: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    @property
    def A(self) -> float:
        return math.exp(self.intercept)

    @property
    def B(self) -> float:
        return math.exp(self.slope)

    @property
    def rms_residual(self) -> float:
        return float(np.sqrt(np.mean(self.residuals**2)))

    def coefficients(self) -> dict:
        if self.axis is Axis.BAUD_EXP:
            return {"A": self.A, "B": self.B}
        return {"slope": self.slope, "intercept": self.intercept}


def extract_coefficients(runs, axis, metric: str | None = None) -> CoefficientFit:
    """Fit a dependence coefficient from labeled window statistics.

    ``runs`` is a mapping or a sequence of ``(axis_value, WindowStats)``.
    ``metric`` defaults to ``"dynamic"`` for ``baud_exp`` and ``"static"``
    otherwise.
    """
    axis = Axis(axis)
    items = list(runs.items()) if isinstance(runs, Mapping) else list(runs)
    if len(items) < 3:
        raise AnalysisError(f"need at least 3 runs along {axis.value}, got {len(items)}")
    metric = metric or ("dynamic" if axis is Axis.BAUD_EXP else "static")
    attr = {"static": "static_xt_db", "dynamic": "dynamic_xt_db", "worst": "worst_case_xt_db"}.get(metric)
    if attr is None:
        raise AnalysisError(f"unknown metric {metric!r}")
    x = np.array([float(v) for v, _ in items])
    y = np.array([float(getattr(ws, attr)) for _, ws in items])
    if axis is Axis.PRBS_LOG2:
        if np.any(x <= 0):
            raise AnalysisError("PRBS orders must be positive")
        xt = np.log2(x)
    else:
        xt = x
    if axis is Axis.BAUD_EXP:
        if np.any(y <= 0):
            raise AnalysisError("exponential fit needs positive values")
        yt = np.log(y)
    else:
        yt = y
    design = np.column_stack([xt, np.ones_like(xt)])
    coef, _, rank, _ = np.linalg.lstsq(design, yt, rcond=None)
    if rank < 2:
        raise FitError(f"rank-deficient sweep along {axis.value}: need two distinct axis values", residual=float("nan"))
    slope, intercept = float(coef[0]), float(coef[1])
    fitted = slope * xt + intercept
    model = np.exp(fitted) if axis is Axis.BAUD_EXP else fitted
    return CoefficientFit(axis, metric, slope, intercept, x, y, y - model)
