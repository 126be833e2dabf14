"""Inter-core crosstalk in trench-assisted multi-core fiber.

Closed-form mean crosstalk, a discrete phase-matching-point simulator of its
time dependence, source spectra, and the statistics used to characterize
measured or simulated crosstalk series.
"""

from .analysis import (
    ChiSqFit,
    CoefficientFit,
    PvpFit,
    WindowStats,
    circular_correlation,
    dynamic_xt,
    extract_coefficients,
    fit_chisq4,
    fit_pvp,
    pvp_pdf,
    r2_score,
    resample_average,
    static_xt,
    step_sequence,
    window_convergence,
    window_stats,
)
from .errors import (
    AnalysisError,
    ConfigurationError,
    DomainError,
    FitError,
    McfXtError,
    ModelDomainError,
    ParseError,
    UsageError,
)
from .fiber import (
    CoreLayout,
    FiberGeometry,
    ThermalCoefficients,
    apply_temperature,
    calibrated_geometry,
    discrete_coupling,
    eight_core_layout,
    mean_crosstalk,
    mode_coupling_coefficient,
    pmp_count,
    pmp_density,
    propagation_constant,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .series import XtSeries
from .io import ingest_power_log, read_power_log, read_series_csv, write_series_csv
from .simulator import (
    PmpState,
    SimConfig,
    evolve_phases,
    fluctuation_speed,
    init_pmps,
    instantaneous_xt,
    set_temperature,
    simulate_series,
    transfer_power,
)
from .special import bessel_k1
from .spectra import (
    SourceKind,
    SourceSpectrum,
    build_ase_spectrum,
    build_cw_spectrum,
    build_ook_spectrum,
    build_pam4_spectrum,
    build_qam_spectrum,
    build_spectrum,
    carrier_to_signal_ratio,
    prbs_line_spacing,
)

__version__ = "0.1.0"
