"""Hamiltonian constructors for the driven three-level system.

Basis ordering is (|1>, |S>, |T>): the swept level first, then the two
constant levels.  The only time dependence sits in the swept diagonal entry
and, optionally, in a modulated coupling between the swept level and |T>.
The reduced two-level model keeps just the (|1>, |T>) block, which is the
subspace the protocol actually moves population through.

Hermitian matrices are plain complex ndarrays; all constructors fill both
triangles so Hermiticity holds by construction.  Every constructor accepts a
scalar tau or an array of taus and returns a correspondingly batched stack of
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateDenominatorError
from .sweeps import SweepSpec, coupling_modulation, sweep_derivative, sweep_value

BARE_LABELS = {3: ("1", "S", "T"), 2: ("1", "T")}

# Off-diagonal couplings the phase/sign modulation may be applied to.  The
# default modulates only the 1-T coupling; the other choices mirror what a
# complex mixing amplitude in the underlying four-level model would do.
PHASE_TARGET_CHOICES = ("omega_1T", "omega_1S", "omega_ST")
DEFAULT_PHASE_TARGETS = ("omega_1T",)


@dataclass(frozen=True)
class ModelParams:
    """Constant energies and couplings of the three-level Hamiltonian (1/ns).

    Defaults are the reference parameter set used throughout; the 1-T
    coupling is stored as a magnitude, its sign/phase is supplied by the
    sweep's coupling modulation (with modulation = 1 the constructed
    coupling is -omega_1T_abs, reproducing the constant -0.0432).
    """

    eps_S: float = 0.00447
    eps_T: float = -4.74001
    omega_1S: float = 0.11196
    omega_ST: float = 0.01158
    omega_1T_abs: float = 0.0432

    def __post_init__(self):
        vals = (self.eps_S, self.eps_T, self.omega_1S, self.omega_ST, self.omega_1T_abs)
        if not all(np.isfinite(v) for v in vals):
            raise ConfigError("model parameters must be finite")
        if self.omega_1T_abs < 0:
            raise ConfigError("omega_1T_abs is a magnitude and must be >= 0")


@dataclass(frozen=True)
class RawFourLevelParams:
    """Raw parameters of the four-level parent model (1/ns, amplitudes unitless).

    The pump detuning that drives the swept diagonal is always supplied by a
    SweepSpec; ``delta_p`` is kept only as an informational label.
    """

    delta_c: float
    Delta_so: float
    Omega_c: float
    Omega_p: float
    alpha: float
    beta: float
    delta_p: str = "sweep"


def derive_couplings(
    raw: RawFourLevelParams, *, denominator_tol: float = 1e-12
) -> tuple[ModelParams, float]:
    """Reduce raw four-level parameters to three-level constants.

    Returns ``(params, omega_1T_sign)``: the derived constants plus the sign
    of the 1-T coupling (-beta*Omega_p/2), reported separately so callers can
    fold it into the phase convention if they need to.

    Raises DegenerateDenominatorError when |delta_c + Delta_so| is below
    tolerance (relative to the larger of the two terms).
    """
    denom = raw.delta_c + raw.Delta_so
    scale = max(abs(raw.delta_c), abs(raw.Delta_so), 1.0)
    if abs(denom) <= denominator_tol * scale:
        raise DegenerateDenominatorError(
            f"delta_c + Delta_so = {denom:g} is degenerate (tolerance {denominator_tol:g})"
        )
    quotient = raw.Omega_c**2 / (4.0 * denom)
    omega_1t = -raw.beta * raw.Omega_p / 2.0
    params = ModelParams(
        eps_S=raw.beta**2 * quotient,
        eps_T=-raw.Delta_so + raw.alpha**2 * quotient,
        omega_1S=raw.alpha * raw.Omega_p / 2.0,
        omega_ST=raw.alpha * raw.beta * quotient,
        omega_1T_abs=abs(omega_1t),
    )
    sign = 0.0 if omega_1t == 0.0 else float(np.sign(omega_1t))
    return params, sign


def _check_phase_targets(phase_targets) -> tuple[str, ...]:
    targets = tuple(phase_targets)
    for t in targets:
        if t not in PHASE_TARGET_CHOICES:
            raise ConfigError(
                f"unknown phase target {t!r}; choose from {PHASE_TARGET_CHOICES}"
            )
    return targets


def build_h0(
    tau,
    params: ModelParams,
    sweep: SweepSpec,
    *,
    phase_targets=DEFAULT_PHASE_TARGETS,
) -> np.ndarray:
    """Three-level Hamiltonian at tau; shape (3, 3) or (N, 3, 3) for array tau.

    Diagonal: (swept energy, eps_S, eps_T).  Couplings omega_1S and omega_ST
    are real constants; the 1-T entry is -omega_1T_abs * m(tau) with m the
    sweep's coupling modulation.  Couplings named in ``phase_targets`` carry
    the modulation; all others stay constant.
    """
    targets = _check_phase_targets(phase_targets)
    t = np.asarray(tau, dtype=float)
    eps1 = np.asarray(sweep_value(sweep, t))
    m, _ = coupling_modulation(sweep, t)
    m = np.asarray(m)
    one = np.ones_like(t, dtype=complex)

    h = np.zeros(t.shape + (3, 3), dtype=complex)
    h[..., 0, 0] = eps1
    h[..., 1, 1] = params.eps_S
    h[..., 2, 2] = params.eps_T
    c_1s = params.omega_1S * (m if "omega_1S" in targets else one)
    c_1t = -params.omega_1T_abs * (m if "omega_1T" in targets else one)
    c_st = params.omega_ST * (m if "omega_ST" in targets else one)
    h[..., 0, 1] = c_1s
    h[..., 1, 0] = np.conj(c_1s)
    h[..., 0, 2] = c_1t
    h[..., 2, 0] = np.conj(c_1t)
    h[..., 1, 2] = c_st
    h[..., 2, 1] = np.conj(c_st)
    return h


def build_dh0_dtau(
    tau,
    params: ModelParams,
    sweep: SweepSpec,
    *,
    phase_targets=DEFAULT_PHASE_TARGETS,
) -> np.ndarray:
    """Analytic d/dtau of build_h0 (same shape conventions)."""
    targets = _check_phase_targets(phase_targets)
    t = np.asarray(tau, dtype=float)
    deps1 = np.asarray(sweep_derivative(sweep, t))
    _, dm = coupling_modulation(sweep, t)
    dm = np.asarray(dm)
    zero = np.zeros_like(t, dtype=complex)

    dh = np.zeros(t.shape + (3, 3), dtype=complex)
    dh[..., 0, 0] = deps1
    d_1s = params.omega_1S * (dm if "omega_1S" in targets else zero)
    d_1t = -params.omega_1T_abs * (dm if "omega_1T" in targets else zero)
    d_st = params.omega_ST * (dm if "omega_ST" in targets else zero)
    dh[..., 0, 1] = d_1s
    dh[..., 1, 0] = np.conj(d_1s)
    dh[..., 0, 2] = d_1t
    dh[..., 2, 0] = np.conj(d_1t)
    dh[..., 1, 2] = d_st
    dh[..., 2, 1] = np.conj(d_st)
    return dh


def build_h_eff(tau, params: ModelParams, sweep: SweepSpec) -> np.ndarray:
    """Reduced two-level Hamiltonian on the (|1>, |T>) subspace.

    Diagonal (swept energy, eps_T); off-diagonal -omega_1T_abs * m(tau).
    Equals the (1, T) submatrix of build_h0 when omega_1S = omega_ST = 0
    and the modulation targets only the 1-T coupling.
    """
    t = np.asarray(tau, dtype=float)
    eps1 = np.asarray(sweep_value(sweep, t))
    m, _ = coupling_modulation(sweep, t)
    m = np.asarray(m)

    h = np.zeros(t.shape + (2, 2), dtype=complex)
    h[..., 0, 0] = eps1
    h[..., 1, 1] = params.eps_T
    c = -params.omega_1T_abs * m
    h[..., 0, 1] = c
    h[..., 1, 0] = np.conj(c)
    return h


def build_dheff_dtau(tau, params: ModelParams, sweep: SweepSpec) -> np.ndarray:
    """Analytic d/dtau of build_h_eff."""
    t = np.asarray(tau, dtype=float)
    deps1 = np.asarray(sweep_derivative(sweep, t))
    _, dm = coupling_modulation(sweep, t)
    dm = np.asarray(dm)

    dh = np.zeros(t.shape + (2, 2), dtype=complex)
    dh[..., 0, 0] = deps1
    dc = -params.omega_1T_abs * dm
    dh[..., 0, 1] = dc
    dh[..., 1, 0] = np.conj(dc)
    return dh


def hermiticity_defect(h: np.ndarray) -> float:
    """Largest absolute deviation from H = H^dagger over a matrix or batch."""
    return float(np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))))


def bare_state_index(label: str | int, dim: int) -> int:
    """Map a bare-state label ('1', 'S', 'T' or an index) to its basis index."""
    labels = BARE_LABELS[dim]
    if isinstance(label, int):
        if not 0 <= label < dim:
            raise ConfigError(f"bare state index {label} out of range for dim {dim}")
        return label
    try:
        return labels.index(str(label))
    except ValueError:
        raise ConfigError(
            f"unknown bare state {label!r} for dimension {dim}; choose from {labels}"
        ) from None
