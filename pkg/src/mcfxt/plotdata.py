"""Column-oriented text for external plotting tools.

Each output starts with ``#`` comment lines naming the artifact and the
columns with units, followed by whitespace-separated rows.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .analysis import ChiSqFit, CoefficientFit, ConvergencePoint, PvpFit, WindowStats
from .errors import UsageError
from .series import XtSeries
from .spectra import SourceSpectrum

__all__ = ["emit_plot_data"]


def _table(title: str, columns: Sequence[str], rows) -> str:
    lines = [f"# {title}", "# " + " ".join(columns)]
    for row in rows:
        lines.append(" ".join(repr(float(v)) if not isinstance(v, str) else v for v in row))
    return "\n".join(lines) + "\n"


def _is_window_sweep(obj) -> bool:
    return (
        isinstance(obj, Sequence)
        and len(obj) > 0
        and all(isinstance(p, tuple) and len(p) == 2 and isinstance(p[1], WindowStats) for p in obj)
    )


def emit_plot_data(artifact) -> str:
    """Render an analysis artifact as commented columns.

    Recognized: window-stats sweeps (``[(axis_value, WindowStats), ...]``),
    :class:`PvpFit`, :class:`ChiSqFit`, correlation results
    (``(profile, max_offzero)``), convergence curves, coefficient fits,
    series and source spectra.
    """
    if isinstance(artifact, PvpFit) or isinstance(artifact, ChiSqFit):
        if artifact.histogram is None:
            raise UsageError("fit carries no histogram to emit")
        centers, observed, model = artifact.histogram
        if isinstance(artifact, PvpFit):
            title = f"pvp fit mu={artifact.mu!r} dB sigma={artifact.sigma!r} dB alpha={artifact.alpha!r} r2={artifact.r2!r}"
            cols = ("zeta_bin_db", "observed_density_per_db", "model_density_per_db")
        else:
            title = f"chi-square(4) fit scale={artifact.scale!r} r2={artifact.r2!r}"
            cols = ("power_bin_linear", "observed_density", "model_density")
        return _table(title, cols, zip(centers, observed, model))
    if _is_window_sweep(artifact):
        rows = [(v, w.static_xt_db, w.dynamic_xt_db, w.worst_case_xt_db, w.sample_count) for v, w in artifact]
        return _table("window statistics sweep",
                      ("axis_value", "static_db", "dynamic_db", "worst_case_db", "samples"), rows)
    if isinstance(artifact, WindowStats):
        return emit_plot_data([(artifact.window_length, artifact)])
    if isinstance(artifact, tuple) and len(artifact) == 2 and isinstance(artifact[0], np.ndarray) and np.ndim(artifact[1]) == 0:
        profile, peak = artifact
        return _table(f"circular correlation max_offzero={float(peak)!r}", ("lag_samples", "correlation"),
                      enumerate(profile))
    if isinstance(artifact, Sequence) and artifact and all(isinstance(p, ConvergencePoint) for p in artifact):
        rows = [(p.window_s, p.static_xt_db, p.dynamic_xt_db, p.static_delta_db, p.dynamic_delta_db, p.convergence_pct)
                for p in artifact]
        return _table("window convergence", ("window_s", "static_db", "dynamic_db", "static_delta_db",
                                             "dynamic_delta_db", "convergence_pct"), rows)
    if isinstance(artifact, CoefficientFit):
        coeffs = " ".join(f"{k}={v!r}" for k, v in artifact.coefficients().items())
        return _table(f"{artifact.axis.value} fit on {artifact.metric} xt: {coeffs}",
                      ("axis_value", "xt_db", "residual_db"), zip(artifact.x, artifact.y, artifact.residuals))
    if isinstance(artifact, XtSeries):
        return _table(f"crosstalk series averaging_time={artifact.averaging_time!r} s", ("time_s", "xt_db"),
                      zip(artifact.timestamps, artifact.xt_db))
    if isinstance(artifact, SourceSpectrum):
        off, w = artifact.with_carrier_line()
        return _table(f"source spectrum {artifact.label} carrier_fraction={artifact.carrier_fraction!r}",
                      ("offset_hz", "power_fraction"), zip(off, w))
    raise UsageError(f"no plot-data layout for {type(artifact).__name__}")
