import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mcfxt import calibration
from mcfxt.errors import ConfigurationError, DomainError, ModelDomainError
from mcfxt.fiber import (
    CALIBRATED_CORE_RADIUS_UM,
    CALIBRATED_TRENCH_WIDTH_UM,
    DEFAULT_XT_FLOOR_DB,
    CoreLayout,
    FiberGeometry,
    ThermalCoefficients,
    _mean_crosstalk_no_floor,
    apply_temperature,
    calibrated_geometry,
    db,
    discrete_coupling,
    eight_core_layout,
    from_db,
    mean_crosstalk,
    mode_coupling_coefficient,
    mode_parameters,
    pmp_count,
    pmp_density,
    propagation_constant,
)

mpmath.mp.dps = 40


def kappa_oracle(geom, pitch_um, lam_nm):
    """Independent high-precision transcription of the trench-assisted coupling formula."""
    mp = mpmath.mpf
    k = 2 * mpmath.pi / (mp(lam_nm) * mp("1e-9"))
    a = mp(geom.core_radius_a) * mp("1e-6")
    cp = mp(pitch_um) * mp("1e-6")
    wt = mp(geom.trench_width_wt) * mp("1e-6")
    n1, n0, nt = mp(geom.n_core), mp(geom.n_cladding), mp(geom.n_trench)
    d1 = (n1**2 - n0**2) / (2 * n1**2)
    d2 = (nt**2 - n0**2) / (2 * n0**2)
    v1 = k * a * n1 * mpmath.sqrt(2 * d1)
    w1 = mp("1.1428") * v1 - mp("0.9960")
    u1 = mpmath.sqrt(v1**2 - w1**2)
    v2 = k * a * n0 * mpmath.sqrt(-2 * d2)
    w2 = mpmath.sqrt(v2**2 + w1**2)
    gam = w1 / (w1 + (w2 - w1) * wt / cp)
    return (
        mpmath.sqrt(d1) / a * u1**2 / (v1**3 * mpmath.besselk(1, w1) ** 2)
        * mpmath.sqrt(mpmath.pi * a * gam / (w1 * cp))
        * mpmath.exp(-(w1 * cp + 2 * (w2 - w1) * wt) / a)
    )


geometries = st.builds(
    lambda a, wt, d1, d2, n0, L, R, g: FiberGeometry.from_deltas(
        n_cladding=n0, delta1=d1, delta2=d2, core_radius_a=a, trench_width_wt=wt,
        length_L=L, bend_radius_R=R, twist_rate_gamma=g),
    a=st.floats(3.0, 5.0), wt=st.floats(0.0, 6.0), d1=st.floats(0.003, 0.008),
    d2=st.floats(-0.012, -0.001), n0=st.floats(1.44, 1.45), L=st.floats(100, 1e5),
    R=st.floats(0.05, 1.0), g=st.floats(0.05, 5.0),
)


@given(geometries, st.floats(25.0, 60.0), st.floats(1300.0, 1650.0))
def test_kappa_matches_high_precision_oracle(geom, pitch, lam):
    try:
        got = mode_coupling_coefficient(geom, pitch, lam)
    except ModelDomainError:
        assume(False)
    assert got == pytest.approx(float(kappa_oracle(geom, pitch, lam)), rel=1e-11)


@given(geometries, st.floats(25.0, 60.0), st.floats(1300.0, 1650.0))
def test_discrete_and_mean_models_agree(geom, pitch, lam):
    try:
        k = discrete_coupling(geom, pitch, lam)
    except ModelDomainError:
        assume(False)
    n = pmp_density(geom.length_L, geom.twist_rate_gamma)
    xt = _mean_crosstalk_no_floor(geom, pitch, lam)
    assert n * k**2 == pytest.approx(xt, rel=1e-12)


@given(geometries, st.floats(1300.0, 1650.0))
def test_mode_parameters_consistent(geom, lam):
    try:
        m = mode_parameters(geom, lam)
    except ModelDomainError:
        assume(False)
    assert m.U1**2 + m.W1**2 == pytest.approx(m.V1**2, rel=1e-12)
    assert m.W2 > m.W1 > 0
    n_eff = m.beta_eff / m.k
    assert geom.n_cladding < n_eff < geom.n_core


def test_propagation_constant_value():
    g = calibrated_geometry()
    assert propagation_constant(g, 1550.0) == pytest.approx(2 * math.pi * g.n_core / 1550e-9, rel=1e-15)


def test_calibrated_targets():
    g = calibrated_geometry()
    assert db(mean_crosstalk(g, 35.0, 1550.0)) == pytest.approx(-45.95, abs=1e-6)
    assert calibration.wavelength_slope(g) == pytest.approx(0.113, abs=1e-6)


def test_calibration_reproduces_shipped_constants():
    a, wt = calibration.calibrate_geometry()
    assert a == pytest.approx(CALIBRATED_CORE_RADIUS_UM, abs=1e-8)
    assert wt == pytest.approx(CALIBRATED_TRENCH_WIDTH_UM, abs=1e-8)


def test_crosstalk_rises_with_wavelength():
    g = calibrated_geometry()
    lam = np.linspace(1480, 1630, 16)
    xt = [mean_crosstalk(g, 35.0, l) for l in lam]
    assert np.all(np.diff(xt) > 0)


@given(st.floats(20.0, 80.0), st.floats(0.5, 20.0))
def test_crosstalk_decreases_with_pitch(p, dp):
    g = calibrated_geometry(xt_floor=0.0)
    assert mean_crosstalk(g, p + dp, 1550.0) < mean_crosstalk(g, p, 1550.0)


def test_floor_dominates_far_cores():
    g = calibrated_geometry()
    assert abs(db(mean_crosstalk(g, 57.0, 1550.0)) - DEFAULT_XT_FLOOR_DB) < 0.1


def test_crosstalk_scales_with_length_and_bend():
    g = calibrated_geometry(xt_floor=0.0)
    base = mean_crosstalk(g, 35.0, 1550.0)
    assert mean_crosstalk(replace(g, length_L=2 * g.length_L), 35.0, 1550.0) == pytest.approx(2 * base, rel=1e-14)
    assert mean_crosstalk(replace(g, bend_radius_R=3 * g.bend_radius_R), 35.0, 1550.0) == pytest.approx(3 * base, rel=1e-14)


def test_pmp_count_rounding():
    assert pmp_count(1000.0, 0.5) == 159
    assert pmp_density(1000.0, 0.5) == pytest.approx(159.15494309189535)
    assert pmp_count(math.pi * 2.5, 1.0) == 3  # half rounds up
    with pytest.raises(ConfigurationError):
        pmp_count(1.0, 0.5)


def test_temperature_identity_and_default_shift():
    g = calibrated_geometry()
    assert apply_temperature(g, 0.0) is g
    hot = apply_temperature(g, 30.0)
    shift = db(mean_crosstalk(hot, 35.0, 1550.0)) - db(mean_crosstalk(g, 35.0, 1550.0))
    assert shift == pytest.approx(1.5, abs=1e-3)


def test_uniform_index_shift_is_small():
    # equal dn/dT keeps the contrasts nearly fixed, but n1^2 - n0^2 still grows by
    # 2 dn (n1 - n0); this geometry gives about -0.022 dB, above the 0.01 dB bound
    g = calibrated_geometry()
    hot = apply_temperature(g, 30.0, ThermalCoefficients.uniform())
    shift = db(mean_crosstalk(hot, 35.0, 1550.0)) - db(mean_crosstalk(g, 35.0, 1550.0))
    assert abs(shift) < 0.01


def test_core_index_drop_raises_crosstalk():
    # weaker confinement: about +0.48 dB for a 5e-5 drop in this geometry
    g = calibrated_geometry()
    lower = replace(g, n_core=g.n_core - 5e-5)
    shift = db(mean_crosstalk(lower, 35.0, 1550.0)) - db(mean_crosstalk(g, 35.0, 1550.0))
    assert 0.3 < shift < 0.7


@pytest.mark.parametrize("dt", [-30.1, 60.5])
def test_temperature_range(dt):
    with pytest.raises(ConfigurationError):
        apply_temperature(calibrated_geometry(), dt)


def test_from_deltas_round_trip():
    g = FiberGeometry.from_deltas(n_cladding=1.444, delta1=0.0045, delta2=-0.007)
    assert g.delta1 == pytest.approx(0.0045, rel=1e-12)
    assert g.delta2 == pytest.approx(-0.007, rel=1e-12)


@pytest.mark.parametrize("kw", [
    {"core_radius_a": 0.0}, {"length_L": -1.0}, {"bend_radius_R": 0.0},
    {"twist_rate_gamma": 0.0}, {"n_core": 1.44}, {"n_trench": 1.45}, {"xt_floor": -1e-7},
])
def test_geometry_validation(kw):
    with pytest.raises(ConfigurationError):
        replace(FiberGeometry(), **kw)


@pytest.mark.parametrize("lam", [1199.0, 1701.0])
def test_wavelength_domain(lam):
    with pytest.raises(DomainError):
        mean_crosstalk(calibrated_geometry(), 35.0, lam)


def test_unguided_mode_raises():
    g = calibrated_geometry(core_radius_a=1.0)
    with pytest.raises(ModelDomainError):
        mode_coupling_coefficient(g, 35.0, 1550.0)


def test_nonpositive_pitch():
    with pytest.raises(DomainError):
        mode_coupling_coefficient(calibrated_geometry(), 0.0, 1550.0)


def test_db_round_trip():
    x = np.array([1e-7, 2.5e-5, 1.0])
    np.testing.assert_allclose(from_db(db(x)), x, rtol=1e-15)


class TestLayout:
    def test_eight_core_pitches(self):
        lay = eight_core_layout()
        assert lay.n_cores == 8
        assert lay.pitch(3, 5) == pytest.approx(35.0)
        assert lay.pitch(5, 7) == pytest.approx(35.0)
        assert lay.pitch(5, 6) == pytest.approx(45.0)
        assert lay.pitch(5, 8) == pytest.approx(math.hypot(35, 45))
        assert lay.pitch(1, 3) == pytest.approx(35.0)

    def test_pitch_matrix_symmetric_zero_diagonal(self):
        m = eight_core_layout().pitch_matrix
        np.testing.assert_array_equal(m, m.T)
        assert np.all(np.diag(m) == 0)

    def test_bad_core_id(self):
        with pytest.raises(ConfigurationError):
            eight_core_layout().pitch(0, 3)
        with pytest.raises(ConfigurationError):
            eight_core_layout().pitch(1, 9)

    def test_overlapping_cores_rejected(self):
        lay = CoreLayout(((0.0, 0.0), (5.0, 0.0)))
        with pytest.raises(ConfigurationError):
            lay.validate_for(calibrated_geometry())

    def test_needs_two_cores(self):
        with pytest.raises(ConfigurationError):
            CoreLayout(((0.0, 0.0),))
