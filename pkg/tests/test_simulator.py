import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcfxt import kernels
from mcfxt.analysis import dynamic_xt, static_xt
from mcfxt.errors import AnalysisError, ConfigurationError
from mcfxt.fiber import _mean_crosstalk_no_floor, db, eight_core_layout, mean_crosstalk
from mcfxt.series import XtSeries
from mcfxt.simulator import (
    N_POLARIZATIONS,
    SimConfig,
    bridge_times,
    evolve_phases,
    fluctuation_speed,
    init_pmps,
    instantaneous_xt,
    set_temperature,
    simulate_series,
    spectral_projection,
    transfer_power,
)
from mcfxt.spectra import (
    build_ase_spectrum,
    build_cw_spectrum,
    build_ook_spectrum,
    build_pam4_spectrum,
    build_qam_spectrum,
)

SHORT = SimConfig(duration=5.0)


def oracle_series(cfg):
    """Sample-by-sample re-implementation: scalar bridge, direct spectral sums, no SVD."""
    states = [init_pmps(cfg, c) for c in cfg.excited_cores]
    d, dt = cfg.phase_diffusion, cfg.sample_interval
    times = bridge_times(cfg)
    off, w = cfg.source.with_carrier_line()
    omega = 2 * np.pi * off
    out = []
    for _ in range(cfg.n_samples):
        vals = np.zeros(times.size)
        for s in states:
            for p in range(N_POLARIZATIONS):
                end = s.phases[p] + math.sqrt(2 * d * dt) * s.rngs[p].standard_normal(s.n_pmp)
                xi = s.bridge_rngs[p].standard_normal((times.size - 1, s.n_pmp))
                left, u_prev, points = s.phases[p].copy(), 0.0, []
                for j, u in enumerate(times[:-1]):
                    mean = left + (u - u_prev) / (dt - u_prev) * (end - left)
                    left = mean + math.sqrt(2 * d * (u - u_prev) * (dt - u) / (dt - u_prev)) * xi[j]
                    points.append(left)
                    u_prev = u
                points.append(end)
                s.phases[p] = end
                for j, ph in enumerate(points):
                    amp = np.exp(-1j * (ph[:, None] + s.walkoff_s * s.positions_z[:, None] * omega)).sum(0)
                    vals[j] += s.coupling_K**2 * (np.abs(amp) ** 2 @ w) / N_POLARIZATIONS
        out.append(10 * np.log10(vals.mean() + cfg.geometry.xt_floor))
    return np.array(out)


@pytest.mark.parametrize("cfg", [
    replace(SHORT, duration=2.0, substeps_per_sample=1),
    replace(SHORT, duration=2.0, substeps_per_sample=3, averaging_time=0.02,
            source=build_ook_spectrum(25e9, 7), excited_cores=(1, 2)),
    replace(SHORT, duration=1.0, substeps_per_sample=4, source=build_qam_spectrum(25e9, 16)),
], ids=["cw-1sub", "ook-2cores-gap", "qam"])
def test_matches_sample_by_sample_oracle(cfg):
    got = simulate_series(cfg).xt_db
    np.testing.assert_allclose(got, oracle_series(cfg), rtol=0, atol=1e-9)


def test_evolve_phases_reproduces_single_substep_run():
    cfg = replace(SHORT, duration=1.0, substeps_per_sample=1)
    series = simulate_series(cfg)
    state = init_pmps(cfg, 1)
    xs = []
    for _ in range(cfg.n_samples):
        state = evolve_phases(state, cfg.sample_interval, cfg.phase_diffusion)
        xs.append(db(instantaneous_xt(state, cfg.source, cfg.geometry.xt_floor)))
    np.testing.assert_allclose(series.xt_db, xs, atol=1e-9)


def test_deterministic_and_block_size_independent():
    cfg = replace(SHORT, source=build_pam4_spectrum(25e9, 9), excited_cores=(1, 4))
    a = simulate_series(cfg)
    assert a.equals(simulate_series(cfg))
    assert a.equals(simulate_series(cfg, block_elements=1))
    assert a.equals(simulate_series(cfg, block_elements=50_000))


def test_seed_changes_output():
    a, b = simulate_series(SHORT), simulate_series(replace(SHORT, seed=1))
    assert not np.array_equal(a.xt_db, b.xt_db)


@pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="compiled backend not built")
def test_backends_give_same_series():
    cfg = replace(SHORT, source=build_ook_spectrum(25e9, 15))
    with kernels.use_backend("python"):
        py = simulate_series(cfg)
    with kernels.use_backend("cython"):
        cy = simulate_series(cfg)
    np.testing.assert_allclose(py.xt_db, cy.xt_db, rtol=0, atol=1e-10)


def test_zero_diffusion_gives_constant_series():
    s = simulate_series(replace(SHORT, phase_diffusion=0.0))
    assert dynamic_xt(s) == 0.0


def test_substep_refinement_keeps_anchor_path():
    base = replace(SHORT, duration=120.0)
    ref = static_xt(simulate_series(base))
    finer = static_xt(simulate_series(replace(base, substeps_per_sample=2 * base.substeps_per_sample)))
    assert abs(finer - ref) <= 0.05


def test_bridge_times():
    cfg = replace(SHORT, sample_interval=0.1, averaging_time=0.04, substeps_per_sample=4)
    np.testing.assert_allclose(bridge_times(cfg), [0.07, 0.08, 0.09, 0.1])


def test_bridge_increment_variance():
    # every substep increment must have variance 2 D dt regardless of the two-level sampling
    cfg = replace(SHORT, duration=40.0, substeps_per_sample=4, phase_diffusion=0.5)
    from mcfxt.simulator import _phase_path
    rng = np.random.default_rng(0)
    n, nb = 200, cfg.n_samples
    times = bridge_times(cfg)
    path = _phase_path(np.zeros(n), rng.standard_normal((nb, n)), rng.standard_normal((nb, 3, n)),
                       times, cfg.sample_interval, cfg.phase_diffusion)
    inc = np.diff(np.vstack([np.zeros(n), path]), axis=0).reshape(nb, 4, n)
    dts = np.diff(np.concatenate([[0.0], times]))
    for j in range(4):
        var = inc[:, j].var()
        assert var == pytest.approx(2 * cfg.phase_diffusion * dts[j], rel=0.03)


class TestPmps:
    def test_count_positions_and_coupling(self):
        st_ = init_pmps(SHORT, 1)
        g = SHORT.geometry
        assert st_.n_pmp == 159
        assert np.all(np.diff(st_.positions_z) > 0)
        assert 0 <= st_.positions_z[0] and st_.positions_z[-1] <= g.length_L
        assert st_.phases.shape == (2, 159)
        assert st_.n_pmp * st_.coupling_K**2 == pytest.approx(_mean_crosstalk_no_floor(g, 35.0, 1550.0), rel=1e-12)

    def test_deterministic_per_core(self):
        a, b = init_pmps(SHORT, 1), init_pmps(SHORT, 1)
        np.testing.assert_array_equal(a.positions_z, b.positions_z)
        np.testing.assert_array_equal(a.phases, b.phases)
        c = init_pmps(SHORT, 2)
        assert not np.array_equal(a.positions_z, c.positions_z)

    def test_core_streams_do_not_depend_on_other_cores(self):
        one = init_pmps(replace(SHORT, excited_cores=(1,)), 1)
        two = init_pmps(replace(SHORT, excited_cores=(1, 2)), 1)
        np.testing.assert_array_equal(one.phases, two.phases)

    def test_evolve_zero_diffusion_copies(self):
        s = init_pmps(SHORT, 1)
        t = evolve_phases(s, 0.1, 0.0)
        np.testing.assert_array_equal(s.phases, t.phases)
        assert t.phases is not s.phases

    def test_evolve_variance(self):
        s = replace(init_pmps(SHORT, 1), phases=np.zeros((2, 159)))
        t = evolve_phases(s, 2.0, 0.25)
        assert t.phases.var() == pytest.approx(1.0, rel=0.2)

    def test_evolve_errors(self):
        s = init_pmps(SHORT, 1)
        with pytest.raises(ConfigurationError):
            evolve_phases(s, 0.0, 0.1)
        with pytest.raises(ConfigurationError):
            evolve_phases(s, 0.1, -1.0)


class TestSpectralModel:
    def test_transfer_power_shape_and_cw_value(self):
        s = init_pmps(SHORT, 1)
        tp = transfer_power(s, np.zeros((3, 4)))
        assert tp.shape == (2, 3, 4)
        direct = s.coupling_K**2 * np.abs(np.exp(-1j * s.phases).sum(axis=1)) ** 2
        np.testing.assert_allclose(tp[:, 0, 0], direct, rtol=1e-13)
        assert transfer_power(s, 0.0).shape == (2,)

    @pytest.mark.parametrize("src", [build_cw_spectrum(), build_ase_spectrum(), build_ook_spectrum(25e9, 15),
                                     build_pam4_spectrum(60e9, 11), build_qam_spectrum(80e9, 64)],
                             ids=lambda s: s.label)
    def test_projection_reproduces_direct_spectral_sum(self, src):
        s = init_pmps(SHORT, 1)
        proj = spectral_projection(s, src)
        rng = np.random.default_rng(1)
        for _ in range(3):
            s.phases[:] = rng.uniform(0, 2 * np.pi, s.phases.shape)
            via_proj = sum(kernels.projected_power(s.phases[p][None, :], proj)[0] for p in range(2))
            assert via_proj == pytest.approx(instantaneous_xt(s, src), rel=1e-10)

    def test_projection_rank(self):
        s = init_pmps(SHORT, 1)
        assert spectral_projection(s, build_cw_spectrum()).shape == (159, 1)
        assert spectral_projection(s, build_ook_spectrum(80e9, 15)).shape[1] < spectral_projection(
            s, build_ook_spectrum(15e9, 15)).shape[1] + 100

    @pytest.mark.parametrize("src", [build_cw_spectrum(), build_ook_spectrum(25e9, 9)], ids=lambda s: s.label)
    def test_phase_average_equals_mean_crosstalk(self, src):
        # over uniformly random phases the expected power is N K^2 for any fixed PMP set
        s = init_pmps(SHORT, 1)
        rng = np.random.default_rng(2)
        vals = []
        for _ in range(3000):
            s.phases[:] = rng.uniform(0, 2 * np.pi, s.phases.shape)
            vals.append(instantaneous_xt(s, src))
        expected = _mean_crosstalk_no_floor(SHORT.geometry, 35.0, 1550.0)
        assert np.mean(vals) == pytest.approx(expected, rel=0.05)

    def test_tiny_ase_band_behaves_like_cw(self):
        cw = simulate_series(SHORT)
        narrow = simulate_series(replace(SHORT, source=build_ase_spectrum(bandwidth=1.0, n_lines=11)))
        np.testing.assert_allclose(narrow.xt_db, cw.xt_db, atol=1e-6)

    def test_multicore_powers_add(self):
        cfg = replace(SHORT, excited_cores=(1, 5), duration=1.0)
        both = simulate_series(cfg).linear
        floor = cfg.geometry.xt_floor
        a = simulate_series(replace(cfg, excited_cores=(1,))).linear - floor
        b = simulate_series(replace(cfg, excited_cores=(5,))).linear - floor
        np.testing.assert_allclose(both - floor, a + b, rtol=1e-9)


def test_long_run_mean_converges():
    s = simulate_series(replace(SHORT, duration=900.0, phase_diffusion=0.2, substeps_per_sample=2))
    expected = db(mean_crosstalk(SHORT.geometry, 35.0, 1550.0))
    assert abs(static_xt(s) - expected) < 0.5


def test_metadata_and_timestamps():
    s = simulate_series(replace(SHORT, source=build_ook_spectrum(25e9, 7), seed=7))
    assert isinstance(s, XtSeries) and len(s) == 200
    np.testing.assert_allclose(s.timestamps[:3], [0.0, 0.025, 0.05])
    m = s.metadata
    assert m["seed"] == 7 and m["source_kind"] == "OOK" and m["prbs_i"] == 7
    assert m["excited_cores"] == [1] and m["target_core"] == 3 and m["temperature_c"] == 23.0


@pytest.mark.parametrize("kw", [
    {"duration": 0.0}, {"sample_interval": -1.0}, {"averaging_time": 0.05},
    {"substeps_per_sample": 0}, {"excited_cores": ()}, {"excited_cores": (3,)},
    {"excited_cores": (1, 1)}, {"target_core": 9}, {"phase_diffusion": -0.1}, {"walkoff": -1e-13},
    {"seed": -1}, {"duration": 0.01},
])
def test_config_errors_reported_before_running(kw):
    with pytest.raises(ConfigurationError):
        simulate_series(replace(SHORT, **kw))


def test_overlapping_layout_rejected():
    lay = eight_core_layout(h_pitch=6.0, v_pitch=45.0)
    with pytest.raises(ConfigurationError):
        simulate_series(replace(SHORT, layout=lay))


class TestTemperature:
    def test_identity(self):
        assert set_temperature(SHORT, SHORT.temperature_c) is SHORT

    def test_updates_geometry_and_walkoff(self):
        hot = set_temperature(SHORT, 53.0)
        assert hot.temperature_c == 53.0
        assert hot.walkoff == pytest.approx(SHORT.walkoff * 1.3)
        shift = db(mean_crosstalk(hot.geometry, 35, 1550)) - db(mean_crosstalk(SHORT.geometry, 35, 1550))
        assert shift == pytest.approx(1.5, abs=0.01)

    @pytest.mark.parametrize("t", [19.9, 80.1])
    def test_range(self, t):
        with pytest.raises(ConfigurationError):
            set_temperature(SHORT, t)


class TestFluctuationSpeed:
    def _series(self, x, dt=0.025):
        return XtSeries(np.arange(len(x)) * dt, x, dt)

    def test_constant_is_zero(self):
        assert fluctuation_speed(self._series(np.full(100, -45.0))) == 0.0

    def test_sinusoid(self):
        f, T, dt = 0.05, 3600.0, 0.025
        t = np.arange(0, T, dt)
        s = self._series(-45 + 2 * np.sin(2 * np.pi * f * t), dt)
        assert fluctuation_speed(s) == pytest.approx(2 * f * T, abs=2)

    def test_threshold(self):
        t = np.arange(0, 600, 0.025)
        s = self._series(-45 + 0.2 * np.sin(t))
        assert fluctuation_speed(s) == 0
        assert fluctuation_speed(s, threshold_db=0.1) > 0

    def test_too_short(self):
        with pytest.raises(AnalysisError):
            fluctuation_speed(self._series(np.array([-45.0, -44.0])))


def test_position_mean_over_seeds():
    n = init_pmps(SHORT, 1).n_pmp
    L = SHORT.geometry.length_L
    means = [init_pmps(replace(SHORT, seed=s), 1).positions_z.mean() for s in range(200)]
    tol = 3 * L / (2 * math.sqrt(3 * n)) / math.sqrt(len(means))
    assert abs(np.mean(means) - L / 2) < tol
    for m in means[:20]:
        assert abs(m - L / 2) < 3 * L / (2 * math.sqrt(3 * n)) * 1.5


def test_different_seeds_decorrelate():
    a = init_pmps(SHORT, 1)
    b = init_pmps(replace(SHORT, seed=99), 1)
    da = evolve_phases(a, 1.0, 0.5).phases - a.phases
    db_ = evolve_phases(b, 1.0, 0.5).phases - b.phases
    r = np.corrcoef(da.ravel(), db_.ravel())[0, 1]
    assert abs(r) < 3 / math.sqrt(da.size)


def test_transfer_power_limits():
    s = init_pmps(SHORT, 1)
    s.phases[:] = 0.0
    n, k2 = s.n_pmp, s.coupling_K**2
    np.testing.assert_allclose(transfer_power(s, 0.0), n * n * k2, rtol=1e-12)
    assert np.all(transfer_power(s, np.linspace(-1e11, 1e11, 9)) <= n * n * k2 * (1 + 1e-12))
    one = replace(s, positions_z=s.positions_z[:1], phases=np.array([[0.3], [2.0]]))
    np.testing.assert_allclose(transfer_power(one, np.array([0.0, 5e10])), k2, rtol=1e-12)


def test_monte_carlo_mean_over_1e5_phase_draws():
    s = init_pmps(SHORT, 1)
    proj = spectral_projection(s, build_cw_spectrum())
    rng = np.random.default_rng(21)
    total = 0.0
    for _ in range(10):
        phases = rng.uniform(0, 2 * np.pi, (10_000, s.n_pmp))
        total += kernels.projected_power(phases, proj).sum()
    per_pol_mean = total / 100_000
    expected = _mean_crosstalk_no_floor(SHORT.geometry, 35.0, 1550.0)
    assert N_POLARIZATIONS * per_pol_mean == pytest.approx(expected, rel=0.02)
