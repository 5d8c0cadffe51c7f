"""Counterdiabatic driving terms and the total driven Hamiltonian.

Given the instantaneous eigenframe of the bare Hamiltonian and its analytic
time derivative, the counterdiabatic term

    H_CD = i * sum_{n != m} |n><n| dH0/dt |m><m| / (E_n - E_m)

cancels diabatic transitions exactly, so the driven evolution follows the
instantaneous eigenstate it started from at any protocol speed.  The time
derivative enters through the chain rule dtau/dt = 1/t_f, which is why the
counterdiabatic term shrinks linearly as the protocol is slowed down.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import model
from .errors import ConfigError
from .spectral import DEGENERACY_TOL, EigenFrame, _check_gaps, decompose_batch
from .sweeps import ArctanProfile, SweepKinkWarning, SweepSpec


@dataclass(frozen=True)
class DriveAssembly:
    """A runnable drive: bare Hamiltonian, its time derivative, and the CD flag.

    ``h0_at`` and ``dh0_dt_at`` map an array (or scalar) of taus to matrix
    stacks; ``dh0_dt_at`` already contains the 1/t_f chain-rule factor and is
    therefore in 1/ns^2.
    """

    h0_at: Callable[[np.ndarray], np.ndarray]
    dh0_dt_at: Callable[[np.ndarray], np.ndarray]
    cd_enabled: bool
    t_f: float
    dim: int
    label: str = ""
    meta: dict = field(default_factory=dict)


def make_assembly(
    params: model.ModelParams,
    sweep: SweepSpec,
    *,
    dim: int = 3,
    cd_enabled: bool = True,
    phase_targets=model.DEFAULT_PHASE_TARGETS,
) -> DriveAssembly:
    """Assemble the driven three-level (or reduced two-level) system."""
    if dim == 3:
        h0 = lambda tau: model.build_h0(tau, params, sweep, phase_targets=phase_targets)
        dh0_dtau = lambda tau: model.build_dh0_dtau(
            tau, params, sweep, phase_targets=phase_targets
        )
    elif dim == 2:
        h0 = lambda tau: model.build_h_eff(tau, params, sweep)
        dh0_dtau = lambda tau: model.build_dheff_dtau(tau, params, sweep)
    else:
        raise ConfigError(f"model dimension must be 2 or 3, got {dim}")
    if cd_enabled and isinstance(sweep.profile, ArctanProfile):
        warnings.warn(
            "counterdiabatic driving with the arctan sweep: the drive derivative "
            "is discontinuous at tau=0.5 (the polynomial sweep avoids this)",
            SweepKinkWarning,
            stacklevel=2,
        )
    dh0_dt = lambda tau: dh0_dtau(tau) / sweep.t_f
    meta = {"phase_targets": tuple(phase_targets), "sweep": sweep, "params": params}
    return DriveAssembly(
        h0_at=h0,
        dh0_dt_at=dh0_dt,
        cd_enabled=cd_enabled,
        t_f=sweep.t_f,
        dim=dim,
        label=f"{dim}-level",
        meta=meta,
    )


def constant_assembly(h: np.ndarray, t_f: float) -> DriveAssembly:
    """Assembly for a time-independent Hamiltonian (mainly for tests/demos)."""
    h = np.asarray(h, dtype=complex)
    dim = h.shape[-1]

    def h0_at(tau):
        t = np.asarray(tau, dtype=float)
        return np.broadcast_to(h, t.shape + (dim, dim)).copy()

    def dh0_dt_at(tau):
        t = np.asarray(tau, dtype=float)
        return np.zeros(t.shape + (dim, dim), dtype=complex)

    return DriveAssembly(h0_at, dh0_dt_at, cd_enabled=False, t_f=float(t_f), dim=dim)


def cd_hamiltonian(
    frame: EigenFrame, dh0_dt: np.ndarray, *, degeneracy_tol: float = DEGENERACY_TOL
) -> np.ndarray:
    """Counterdiabatic term built from one eigenframe and dH0/dt.

    With dH0/dt in 1/ns^2 and eigenvalue gaps in 1/ns the result is in 1/ns.
    It is Hermitian, has zero diagonal in the frame's eigenbasis, and is
    invariant under re-phasing of the frame's eigenvectors.
    """
    _check_gaps(frame.eigenvalues, degeneracy_tol)
    return _cd_from_parts(frame.eigenvalues, frame.eigenvectors, np.asarray(dh0_dt, complex))


def _cd_from_parts(evals: np.ndarray, vecs: np.ndarray, dh0_dt: np.ndarray) -> np.ndarray:
    """Vectorized core of the counterdiabatic construction (batch friendly).

    In the eigenbasis, <n|H_CD|m> = i <n|dH0/dt|m> / (E_m - E_n) for n != m:
    this equals i <n| d/dt |m>, the generator that transports the eigenbasis,
    which is the sign that cancels diabatic transitions (the reversed
    denominator would amplify them instead).
    """
    m_eig = np.swapaxes(vecs, -1, -2).conj() @ dh0_dt @ vecs
    denom = evals[..., None, :] - evals[..., :, None]  # [n, m] -> E_m - E_n
    eye = np.eye(evals.shape[-1], dtype=bool)
    denom = np.where(eye, 1.0, denom)  # diagonal is masked out below
    a = np.where(eye, 0.0, m_eig / denom)
    return 1j * (vecs @ a @ np.swapaxes(vecs, -1, -2).conj())


def total_hamiltonian(assembly: DriveAssembly, tau) -> np.ndarray:
    """H0(tau), plus the counterdiabatic term when the assembly enables it."""
    t = np.asarray(tau, dtype=float)
    scalar = t.ndim == 0
    t_arr = t.reshape(-1) if scalar else t
    h0 = assembly.h0_at(t_arr)
    if assembly.cd_enabled:
        evals, vecs = decompose_batch(h0)
        _check_gaps(evals, DEGENERACY_TOL)
        h = h0 + _cd_from_parts(evals, vecs, assembly.dh0_dt_at(t_arr))
    else:
        h = h0
    return h[0] if scalar else h


def cd_norm_profile(assembly: DriveAssembly, grid) -> np.ndarray:
    """Spectral norm of the counterdiabatic term along a tau grid.

    Useful as a feasibility diagnostic: the counterdiabatic coupling strength
    is what an experiment would actually have to supply.
    """
    t = np.asarray(grid, dtype=float)
    h0 = assembly.h0_at(t)
    evals, vecs = decompose_batch(h0)
    _check_gaps(evals, DEGENERACY_TOL)
    hcd = _cd_from_parts(evals, vecs, assembly.dh0_dt_at(t))
    return np.max(np.abs(np.linalg.eigvalsh(hcd)), axis=-1)
