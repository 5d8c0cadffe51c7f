import numpy as np
import pytest

import cdcycle as cc
from cdcycle.experiments import (
    REFERENCE_CORRELATION_COEFFS,
    RankDeficiencyWarning,
    fidelity_vs_tf,
    fig5_data,
    fig6_data,
    fit_degree8,
    peak_avg_population,
    reference_correlation_curve,
    spearman_rank_correlation,
    v_scan_correlation,
)
from cdcycle.propagate import Trajectory

from reference_values import ANCHOR_TOL, CD_PEAK_AVG_V0


def synthetic_trajectory(p_target, dim=3):
    n = p_target.size
    pops = np.zeros((n, dim))
    pops[:, dim - 1] = p_target
    pops[:, 0] = 1.0 - p_target
    taus = np.linspace(0.0, 1.0, n)
    return Trajectory(
        grid=taus,
        t_ns=taus,
        amplitudes=np.zeros((n, dim), dtype=complex),
        populations=pops,
        followed_overlap=np.zeros(n),
        followed_index=np.zeros(n, dtype=int),
        cycle_index=np.zeros(n, dtype=int),
    )


class TestPeakAveragedPopulation:
    def test_sinusoid_with_equal_maxima(self):
        taus = np.linspace(0.0, 1.0, 2001)
        traj = synthetic_trajectory(0.5 + 0.1 * np.sin(40 * np.pi * taus))
        assert peak_avg_population(traj, n_peaks=20) == pytest.approx(0.6, abs=1e-6)

    def test_constant_zero(self):
        traj = synthetic_trajectory(np.zeros(100))
        assert peak_avg_population(traj) == 0.0

    def test_clean_transfer_returns_max(self):
        taus = np.linspace(0.0, 1.0, 501)
        traj = synthetic_trajectory(np.exp(-((taus - 0.5) ** 2) / 0.01))  # one broad peak
        assert peak_avg_population(traj) == pytest.approx(1.0, abs=1e-6)

    def test_unequal_maxima_average_the_largest(self):
        # 25 triangular bumps with heights 0.30, 0.32, ..., 0.78: the 20
        # largest are 0.40..0.78, mean 0.59.
        heights = 0.30 + 0.02 * np.arange(25)
        signal = np.zeros(25 * 21)
        for i, h in enumerate(heights):
            bump = h * np.concatenate([np.linspace(0, 1, 11), np.linspace(1, 0, 11)[1:]])
            signal[i * 21 : (i + 1) * 21] = bump
        traj = synthetic_trajectory(signal)
        expected = np.mean(np.sort(heights)[-20:])
        assert peak_avg_population(traj, n_peaks=20) == pytest.approx(expected, abs=1e-12)

    def test_cd_protocol_peak(self, params):
        cfg = cc.default_config().with_sweep(k=1)
        from cdcycle.experiments import run_single

        traj = run_single(cfg)
        peak = peak_avg_population(traj)
        assert peak > 0.99
        assert peak == pytest.approx(CD_PEAK_AVG_V0, abs=ANCHOR_TOL)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            peak_avg_population(synthetic_trajectory(np.array([])))


class TestFitDegree8:
    def test_recovers_reference_coefficients(self):
        x = np.linspace(0.05, 2.9, 60)
        y = np.polyval(REFERENCE_CORRELATION_COEFFS, x)
        fit = fit_degree8(np.column_stack([x, y]))
        got = np.array(fit.coefficients)
        want = np.array(REFERENCE_CORRELATION_COEFFS)
        np.testing.assert_allclose(got, want, rtol=1e-6)
        assert fit.residual_norm < 1e-9

    def test_line_collapses_high_orders(self):
        x = np.linspace(0.0, 3.0, 30)
        fit = fit_degree8(np.column_stack([x, 2.0 * x + 1.0]))
        assert max(abs(c) for c in fit.coefficients[:7]) < 1e-10
        assert fit.coefficients[7] == pytest.approx(2.0, rel=1e-10)
        assert fit.coefficients[8] == pytest.approx(1.0, rel=1e-10)

    def test_too_few_points_rejected(self):
        pts = np.column_stack([np.arange(5.0), np.arange(5.0)])
        with pytest.raises(ValueError):
            fit_degree8(pts)

    def test_constant_abscissae_rejected(self):
        pts = np.column_stack([np.ones(12), np.arange(12.0)])
        with pytest.raises(ValueError):
            fit_degree8(pts)

    def test_ill_conditioned_warns(self):
        x = np.linspace(1.0, 1.0 + 1e-7, 12)  # microscopic abscissa range
        with pytest.warns(RankDeficiencyWarning):
            fit_degree8(np.column_stack([x, np.sin(x)]))

    def test_reference_curve_endpoint(self):
        assert reference_correlation_curve(0.0) == pytest.approx(-0.00435)


class TestSpearman:
    def test_monotone_is_one(self):
        x = np.array([0.1, 0.4, 0.9, 2.0, 3.5])
        assert spearman_rank_correlation(x, np.exp(x)) == pytest.approx(1.0)

    def test_reversed_is_minus_one(self):
        x = np.array([0.1, 0.4, 0.9, 2.0, 3.5])
        assert spearman_rank_correlation(x, -x) == pytest.approx(-1.0)

    def test_ties_are_averaged(self):
        rho = spearman_rank_correlation(
            np.array([1.0, 1.0, 2.0, 3.0]), np.array([0.0, 0.0, 1.0, 2.0])
        )
        assert rho == pytest.approx(1.0)


@pytest.fixture(scope="module")
def small_scan():
    cfg = cc.default_config().with_sweep(k=1)
    return v_scan_correlation(cfg, v_grid=[-6.0, -2.0, -0.75, -0.25])


class TestShiftScan:
    def test_all_points_recorded(self, small_scan):
        assert [r["v"] for r in small_scan.records] == [-6.0, -2.0, -0.75, -0.25]
        assert all(r["status"] == "ok" for r in small_scan.records)

    def test_population_and_phase_grow_with_shift(self, small_scan):
        pops = small_scan.column("peak_avg_population")
        gammas = small_scan.column("gamma_abs")
        assert np.all(np.diff(pops) > 0)
        assert np.all(np.diff(gammas) > 0)

    def test_broken_flag_consistency(self, small_scan):
        for r in small_scan.records:
            assert r["transfer_broken"] == (r["peak_avg_population"] < 0.99)

    def test_determinism(self, small_scan):
        cfg = cc.default_config().with_sweep(k=1)
        again = v_scan_correlation(cfg, v_grid=[-6.0, -2.0, -0.75, -0.25])
        assert again.fingerprint == small_scan.fingerprint
        for a, b in zip(again.records, small_scan.records):
            assert a == b

    def test_parallel_matches_serial(self, small_scan):
        cfg = cc.default_config().with_sweep(k=1)
        par = v_scan_correlation(cfg, v_grid=[-6.0, -2.0, -0.75, -0.25], workers=2)
        for a, b in zip(par.records, small_scan.records):
            assert a == b

    def test_fig6_bundle(self):
        cfg = cc.default_config().with_sweep(k=1)
        v_grid = np.linspace(-4.0, -0.25, 12)
        data = fig6_data(cfg, v_grid=v_grid)
        assert data["n_ok"] == 12
        assert data["fit"] is not None
        assert np.isfinite(data["spearman"])
        fitted = data["fit"](data["scan"].column("gamma_abs"))
        assert fitted.shape == (12,)

    def test_failed_points_are_recorded_not_dropped(self):
        # A fully degenerate model makes the counterdiabatic construction
        # fail at every point; the scan must keep the points with a failure
        # status instead of dropping them.
        degenerate = cc.from_dict(
            {
                "model": {"eps_S": 0.0, "eps_T": 0.0, "omega_1S": 0.0,
                          "omega_ST": 0.0, "omega_1T_abs": 0.0},
                "sweep": {"profile": "polynomial", "coefficients": [0.0] * 9, "k": 1},
            }
        )
        scan = v_scan_correlation(degenerate, v_grid=[-1.0, -0.5])
        assert len(scan.records) == 2
        for rec in scan.records:
            assert rec["status"].startswith("failed:")
            assert np.isnan(rec["peak_avg_population"])
            assert rec["transfer_broken"] is True


class TestFidelityVsDuration:
    def test_fast_protocol_is_diabatic(self):
        cfg = cc.default_config()
        scan = fidelity_vs_tf(cfg, tf_values=[100.0])
        assert len(scan.records) == 1  # one record per duration
        rec = scan.records[0]
        for name in ("arctan", "polynomial"):
            assert rec[f"fidelity_mid_{name}"] < 0.5  # far below the adiabatic plateau
            assert rec[f"fingerprint_{name}"]

    def test_grid_refinement_oracle(self, params):
        # The recorded mid-protocol fidelity at t_f = 5000 ns must match an
        # independent re-run on a twice finer grid.
        sweep = cc.polynomial_sweep(t_f=5000.0)
        assembly = cc.make_assembly(params, sweep, dim=3, cd_enabled=False)
        base = cc.propagate(assembly, cc.bare_state("1", 3))
        fine_grid = np.linspace(0.0, 1.0, 2 * (base.n_samples - 1) + 1)
        fine = cc.propagate(assembly, cc.bare_state("1", 3), fine_grid)
        f_base = base.populations[(base.n_samples - 1) // 2, 2]
        f_fine = fine.populations[(fine.n_samples - 1) // 2, 2]
        assert abs(f_base - f_fine) < 1e-6

    def test_rejects_nonpositive_durations(self):
        with pytest.raises(ValueError):
            fidelity_vs_tf(cc.default_config(), tf_values=[0.0, 100.0])


class TestBlochLoopPanels:
    def test_three_panels_with_expected_modulations(self):
        cfg = cc.default_config()
        panels = fig5_data(cfg)
        assert set(panels) == {"a", "b", "c"}
        assert panels["a"]["modulation"] == {"sign_mode": True, "k": 0}
        assert panels["b"]["modulation"] == {"sign_mode": False, "k": 1}
        assert panels["c"]["modulation"] == {"sign_mode": False, "k": 2}
        for panel in panels.values():
            radii = np.linalg.norm(panel["bloch"], axis=1)
            np.testing.assert_allclose(radii, 1.0, atol=1e-9)
            assert panel["min_subspace_population"] > 0.999

    def test_winding_panels_close(self):
        panels = fig5_data(cc.default_config())
        for name in ("b", "c"):
            loop = panels[name]["bloch"]
            assert np.linalg.norm(loop[0] - loop[-1]) < 1e-3
