"""Built-in invariant checks, runnable without any reference data.

These are quick structural checks (Hermiticity, unitarity, gauge invariance,
closed-form cross-checks) used by the ``check`` CLI command; the full test
suite covers the same ground more thoroughly.
"""

from __future__ import annotations

import numpy as np

from .cd import cd_hamiltonian, make_assembly
from .config import RunConfig
from .model import RawFourLevelParams, derive_couplings, hermiticity_defect
from .observables import berry_phase_wilson
from .propagate import bare_state, propagate
from .spectral import EigenFrame, eigen_frame, track_frames
from .sweeps import SweepSpec


def _check_builders_hermitian(cfg: RunConfig, rng) -> tuple[bool, str]:
    taus = rng.uniform(0.0, 1.0, size=64)
    worst = 0.0
    for dim in (3, 2):
        assembly = make_assembly(cfg.model, cfg.sweep, dim=dim, cd_enabled=False)
        worst = max(worst, hermiticity_defect(assembly.h0_at(taus)))
    ok = worst < 1e-12
    return ok, f"max Hermiticity defect {worst:.2e}"


def _check_coupling_identity(cfg: RunConfig, rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(32):
        raw = RawFourLevelParams(
            delta_c=rng.uniform(1.0, 50.0),
            Delta_so=rng.uniform(1.0, 50.0),
            Omega_c=rng.uniform(0.1, 10.0),
            Omega_p=rng.uniform(0.1, 10.0),
            alpha=rng.uniform(-1.0, 1.0),
            beta=rng.uniform(-1.0, 1.0),
        )
        params, _ = derive_couplings(raw)
        lhs = params.omega_ST**2
        rhs = params.eps_S * (params.eps_T + raw.Delta_so)
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    ok = worst < 1e-10
    return ok, f"max relative identity violation {worst:.2e}"


def _check_two_level_cd(cfg: RunConfig, rng) -> tuple[bool, str]:
    sz = np.diag([1.0, -1.0]).astype(complex)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sy = np.array([[0.0, -1j], [1j, 0.0]])
    worst = 0.0
    for _ in range(16):
        eps, deps, delta = rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(0.2, 3.0)
        frame = eigen_frame(0.5 * eps * sz + delta * sx)
        got = cd_hamiltonian(frame, 0.5 * deps * sz)
        want = -(delta * deps / (eps**2 + 4.0 * delta**2)) * sy
        worst = max(worst, float(np.max(np.abs(got - want))))
    ok = worst < 1e-12
    return ok, f"max deviation from closed form {worst:.2e}"


def _check_unitarity(cfg: RunConfig, rng) -> tuple[bool, str]:
    assembly = make_assembly(cfg.model, cfg.sweep, dim=3, cd_enabled=True)
    traj = propagate(assembly, bare_state("1", 3), np.linspace(0.0, 1.0, 501))
    drift = traj.meta["max_norm_drift"]
    ok = drift < 1e-9
    return ok, f"norm drift {drift:.2e} over a cycle"


def _check_wilson_gauge(cfg: RunConfig, rng) -> tuple[bool, str]:
    sweep = SweepSpec(k=1, t_f=cfg.sweep.t_f)
    assembly = make_assembly(cfg.model, sweep, dim=2, cd_enabled=False)
    grid = np.linspace(0.0, 1.0, 801)
    frames = track_frames(assembly.h0_at, grid, np.array([1.0, 0.0], dtype=complex))
    base = berry_phase_wilson(frames, fill_solid_angle=False).gamma_B
    rephased = [
        EigenFrame(
            f.tau,
            f.eigenvalues,
            f.eigenvectors * np.exp(2j * np.pi * rng.uniform(size=f.dim))[None, :],
            f.followed_index,
        )
        for f in frames
    ]
    change = abs(berry_phase_wilson(rephased, fill_solid_angle=False).gamma_B - base)
    ok = change < 1e-10
    return ok, f"phase change under random re-gauging {change:.2e}"


def _check_eigen_residuals(cfg: RunConfig, rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(16):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = a + a.conj().T
        frame = eigen_frame(h)
        resid = h @ frame.eigenvectors - frame.eigenvectors * frame.eigenvalues[None, :]
        worst = max(worst, float(np.max(np.abs(resid)) / np.max(np.abs(h))))
    ok = worst < 1e-10
    return ok, f"max relative eigen residual {worst:.2e}"


CHECKS = (
    ("hermiticity of constructed Hamiltonians", _check_builders_hermitian),
    ("raw-coupling reduction identity", _check_coupling_identity),
    ("two-level counterdiabatic closed form", _check_two_level_cd),
    ("propagator unitarity", _check_unitarity),
    ("Wilson-loop gauge invariance", _check_wilson_gauge),
    ("eigendecomposition residuals", _check_eigen_residuals),
)


def run_checks(cfg: RunConfig, seed: int = 7) -> list[tuple[str, bool, str]]:
    """Run all self-checks; returns (name, passed, detail) triples."""
    rng = np.random.default_rng(seed)
    return [(name, *fn(cfg, rng)) for name, fn in CHECKS]
