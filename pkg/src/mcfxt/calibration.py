"""One-off fits that produce the shipped default geometry and thermal split.

The fiber's index profile is not published, only its crosstalk targets, so
core radius and trench width are solved for such that the mean crosstalk
(floor included) hits ``TARGET_XT_DB`` at 1550 nm / 35 um and has slope
``TARGET_SLOPE_DB_PER_NM`` across 1480-1630 nm.  The thermal split is then
chosen so a 30 K rise gives ``TARGET_THERMAL_SHIFT_DB``.

Run ``python scripts/calibrate.py`` to regenerate the constants in
:mod:`mcfxt.fiber`.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from scipy.optimize import brentq, fsolve

from .fiber import (
    CALIBRATED_DELTA1,
    CALIBRATED_DELTA2,
    CALIBRATED_N_CLADDING,
    DEFAULT_XT_FLOOR_DB,
    FiberGeometry,
    ThermalCoefficients,
    apply_temperature,
    db,
    from_db,
    mean_crosstalk,
)

TARGET_XT_DB = -45.95
TARGET_SLOPE_DB_PER_NM = 0.113
TARGET_THERMAL_SHIFT_DB = 1.5
CAL_PITCH_UM = 35.0
CAL_WAVELENGTH_NM = 1550.0
SLOPE_BAND_NM = (1480.0, 1630.0)


def _geometry(a_um, wt_um):
    return FiberGeometry.from_deltas(
        n_cladding=CALIBRATED_N_CLADDING,
        delta1=CALIBRATED_DELTA1,
        delta2=CALIBRATED_DELTA2,
        core_radius_a=a_um,
        trench_width_wt=wt_um,
        xt_floor=float(from_db(DEFAULT_XT_FLOOR_DB)),
    )


def wavelength_slope(geom, pitch_um=CAL_PITCH_UM, band=SLOPE_BAND_NM, points=31):
    """Least-squares slope (dB/nm) of the mean crosstalk across ``band``."""
    lam = np.linspace(band[0], band[1], points)
    xt = [db(mean_crosstalk(geom, pitch_um, x)) for x in lam]
    return float(np.polyfit(lam, xt, 1)[0])


def calibrate_geometry(start=(3.3, 3.8)):
    """Return ``(core_radius_um, trench_width_um)`` meeting both targets."""

    def residual(p):
        g = _geometry(*p)
        return [
            db(mean_crosstalk(g, CAL_PITCH_UM, CAL_WAVELENGTH_NM)) - TARGET_XT_DB,
            (wavelength_slope(g) - TARGET_SLOPE_DB_PER_NM) * 100.0,
        ]

    sol, info, ier, msg = fsolve(residual, start, full_output=True, xtol=1e-12)
    if ier != 1:
        raise RuntimeError(f"geometry calibration failed: {msg}")
    return float(sol[0]), float(sol[1])


def thermal_shift_db(geom, coeffs, delta_t=30.0):
    base = db(mean_crosstalk(geom, CAL_PITCH_UM, CAL_WAVELENGTH_NM))
    hot = db(mean_crosstalk(apply_temperature(geom, delta_t, coeffs), CAL_PITCH_UM, CAL_WAVELENGTH_NM))
    return hot - base


def calibrate_thermal_split(geom: FiberGeometry, delta_t=30.0, budget=1.1e-5):
    """Core dn/dT offset (below the common budget) giving the target shift."""
    base = ThermalCoefficients.uniform(budget)

    def f(offset):
        c = replace(base, dn_dT_core=budget + offset)
        return thermal_shift_db(geom, c, delta_t) - TARGET_THERMAL_SHIFT_DB

    offset = brentq(f, -1e-5, 0.0, xtol=1e-16)
    return float(offset)
