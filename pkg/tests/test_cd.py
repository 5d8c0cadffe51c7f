import numpy as np
import pytest

import cdcycle as cc
from cdcycle.errors import DegenerateGapError
from cdcycle.sweeps import SweepKinkWarning

from reference_values import ANCHOR_TOL, HCD_NORM_TAU025

SZ = np.diag([1.0, -1.0]).astype(complex)
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1j], [1j, 0.0]])


def landau_zener_cd(eps, deps_dt, delta):
    """Closed-form counterdiabatic term for H0 = (eps/2) sz + delta sx.

    Derivation: the field angle is theta = arctan(2 delta / eps), and the
    term that transports the eigenbasis is (theta_dot / 2) sy with
    theta_dot = -2 delta eps_dot / (eps^2 + 4 delta^2).
    """
    return -(delta * deps_dt / (eps**2 + 4.0 * delta**2)) * SY


def projector_formula_cd(h_path, tau, t_f, dim, step=1e-6):
    """Independent construction: i * sum_n |dn/dt><n| from parallel-transported
    eigenvectors differentiated by central finite differences."""
    grid = np.array([tau - step, tau, tau + step])
    seed = np.zeros(dim, dtype=complex)
    seed[0] = 1.0
    frames = cc.track_frames(h_path, grid, seed)
    vdot = (frames[2].eigenvectors - frames[0].eigenvectors) / (2 * step) / t_f
    h_alt = 1j * (vdot @ frames[1].eigenvectors.conj().T)
    return 0.5 * (h_alt + h_alt.conj().T)


class TestCdHamiltonian:
    def test_zero_derivative_gives_zero(self, rng):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        frame = cc.eigen_frame(a + a.conj().T)
        hcd = cc.cd_hamiltonian(frame, np.zeros((3, 3), dtype=complex))
        np.testing.assert_array_equal(hcd, 0.0)

    def test_landau_zener_closed_form(self, rng):
        for _ in range(32):
            eps = rng.uniform(-3.0, 3.0)
            deps = rng.uniform(-3.0, 3.0)
            delta = rng.uniform(0.2, 3.0)
            frame = cc.eigen_frame(0.5 * eps * SZ + delta * SX)
            got = cc.cd_hamiltonian(frame, 0.5 * deps * SZ)
            np.testing.assert_allclose(got, landau_zener_cd(eps, deps, delta), atol=1e-12)

    def test_cd_drives_exact_following(self):
        # The defining property, independent of any matrix-element formula:
        # with the counterdiabatic term added, the state pinned to one
        # instantaneous eigenstate stays there at arbitrary speed.
        params = cc.ModelParams()
        assembly = cc.make_assembly(params, cc.polynomial_sweep(t_f=5.0), dim=2, cd_enabled=True)
        traj = cc.propagate(assembly, cc.bare_state("1", 2), np.linspace(0, 1, 2001))
        assert traj.followed_overlap.min() > 1.0 - 1e-4

    def test_matches_projector_formula(self, params, poly_sweep):
        h_path = lambda t: cc.build_h0(t, params, poly_sweep)
        frame = cc.eigen_frame(cc.build_h0(0.25, params, poly_sweep), 0.25)
        dh0_dt = cc.build_dh0_dtau(0.25, params, poly_sweep) / poly_sweep.t_f
        direct = cc.cd_hamiltonian(frame, dh0_dt)
        alt = projector_formula_cd(h_path, 0.25, poly_sweep.t_f, 3)
        np.testing.assert_allclose(direct, alt, atol=1e-8)
        # regression anchor for the magnitude at the reference slice
        norm = float(np.max(np.abs(np.linalg.eigvalsh(direct))))
        assert norm == pytest.approx(HCD_NORM_TAU025, abs=ANCHOR_TOL)

    def test_hermitian_and_zero_eigenbasis_diagonal(self, params, poly_sweep, rng):
        for tau in rng.uniform(0.02, 0.98, size=8):
            frame = cc.eigen_frame(cc.build_h0(tau, params, poly_sweep), tau)
            dh0_dt = cc.build_dh0_dtau(tau, params, poly_sweep) / poly_sweep.t_f
            hcd = cc.cd_hamiltonian(frame, dh0_dt)
            scale = max(np.max(np.abs(hcd)), 1e-300)
            assert cc.hermiticity_defect(hcd) < 1e-12 * scale
            diag = np.diag(frame.eigenvectors.conj().T @ hcd @ frame.eigenvectors)
            assert np.max(np.abs(diag)) < 1e-10 * scale

    def test_gauge_invariance(self, params, poly_sweep, rng):
        frame = cc.eigen_frame(cc.build_h0(0.3, params, poly_sweep), 0.3)
        dh0_dt = cc.build_dh0_dtau(0.3, params, poly_sweep) / poly_sweep.t_f
        base = cc.cd_hamiltonian(frame, dh0_dt)
        rephased = cc.EigenFrame(
            frame.tau,
            frame.eigenvalues,
            frame.eigenvectors * np.exp(2j * np.pi * rng.uniform(size=3))[None, :],
            frame.followed_index,
        )
        np.testing.assert_allclose(cc.cd_hamiltonian(rephased, dh0_dt), base, atol=1e-12)

    def test_degenerate_gap_raises(self):
        frame = cc.eigen_frame(np.diag([0.0, 0.0, 1.0]).astype(complex))
        dh = np.diag([1.0, -1.0, 0.0]).astype(complex)
        with pytest.raises(DegenerateGapError):
            cc.cd_hamiltonian(frame, dh)


class TestTotalHamiltonian:
    def test_disabled_equals_bare(self, params, poly_sweep, rng):
        assembly = cc.make_assembly(params, poly_sweep, dim=3, cd_enabled=False)
        tau = rng.uniform(0.0, 1.0, size=8)
        np.testing.assert_array_equal(
            cc.total_hamiltonian(assembly, tau), assembly.h0_at(tau)
        )

    def test_constant_drive_adds_nothing(self):
        h = np.diag([0.0, 1.0]).astype(complex) + 0.3 * SX
        assembly = cc.constant_assembly(h, t_f=10.0)
        got = cc.total_hamiltonian(assembly, 0.4)
        np.testing.assert_allclose(got, h, atol=1e-15)

    def test_counterdiabatic_term_scales_inversely_with_duration(self, params):
        tau = np.linspace(0.05, 0.95, 19)
        slow = cc.make_assembly(params, cc.polynomial_sweep(t_f=100.0), dim=3, cd_enabled=True)
        fast = cc.make_assembly(params, cc.polynomial_sweep(t_f=50.0), dim=3, cd_enabled=True)
        hcd_slow = cc.total_hamiltonian(slow, tau) - slow.h0_at(tau)
        hcd_fast = cc.total_hamiltonian(fast, tau) - fast.h0_at(tau)
        np.testing.assert_allclose(2.0 * hcd_slow, hcd_fast, rtol=1e-10, atol=1e-14)

    def test_arctan_drive_warns(self, params):
        with pytest.warns(SweepKinkWarning):
            cc.make_assembly(params, cc.arctan_sweep(), dim=3, cd_enabled=True)

    def test_norm_profile(self, params, poly_sweep):
        assembly = cc.make_assembly(params, poly_sweep, dim=3, cd_enabled=True)
        grid = np.linspace(0.0, 1.0, 101)
        norms = cc.cd_norm_profile(assembly, grid)
        assert norms.shape == (101,)
        assert np.all(norms >= 0)
        # the counterdiabatic effort peaks near the avoided crossings
        assert norms.max() > 10 * norms[0]
