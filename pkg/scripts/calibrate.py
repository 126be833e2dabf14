"""Regenerate the default-geometry constants shipped in mcfxt.fiber."""

from mcfxt.calibration import (
    _geometry,
    calibrate_geometry,
    calibrate_thermal_split,
    thermal_shift_db,
    wavelength_slope,
)
from mcfxt.fiber import ThermalCoefficients, db, mean_crosstalk


def main():
    a, wt = calibrate_geometry()
    geom = _geometry(a, wt)
    offset = calibrate_thermal_split(geom)
    print(f"CALIBRATED_CORE_RADIUS_UM = {a:.10f}")
    print(f"CALIBRATED_TRENCH_WIDTH_UM = {wt:.10f}")
    print(f"dn_dT_core offset = {offset:.8e}")
    print(f"check: XT(1550 nm, 35 um) = {db(mean_crosstalk(geom, 35.0, 1550.0)):.4f} dB")
    print(f"check: slope = {wavelength_slope(geom):.5f} dB/nm")
    coeffs = ThermalCoefficients(dn_dT_core=1.1e-5 + offset)
    print(f"check: +30 K shift = {thermal_shift_db(geom, coeffs):.4f} dB")


if __name__ == "__main__":
    main()
