"""Time profiles of the drive.

The swept diagonal energy is either a piecewise-arctan ramp (up for the first
half of the protocol, mirrored back down for the second half) or a degree-8
polynomial fit of that ramp, which removes the derivative kink at the
inversion point.  On top of the diagonal sweep, the coupling between the swept
level and the target level can be modulated by a smooth sign flip and/or a
uniformly winding complex phase.  All profiles expose analytic tau-derivatives
because the counterdiabatic construction differentiates the Hamiltonian in
time and finite differences across the arctan kink would inject spurious
spikes.

Times are dimensionless, tau = t / t_f in [0, 1]; energies are in 1/ns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Piecewise-arctan ramp parameters: a*arctan(b*tau) - c on the way up.
ARCTAN_A = 10.0  # 1/ns
ARCTAN_B = 20.0  # dimensionless
ARCTAN_C = 18.6  # 1/ns

# Degree-8 fit of the arctan ramp over [0, 1], highest power first.
POLY_COEFFS: tuple[float, ...] = (
    -6.95332e3,
    2.78132e4,
    -4.71818e4,
    4.41991e4,
    -2.49587e4,
    8.70096e3,
    -1.85047e3,
    2.30968e2,
    -1.86840e1,
)

DEFAULT_SIGN_STEEPNESS = 20.0
DEFAULT_T_F = 50.0  # ns

# Default grid for the constant-shift scan: [-10, -0.25] in 40 equidistant steps.
SHIFT_SCAN_START = -10.0
SHIFT_SCAN_STOP = -0.25
SHIFT_SCAN_POINTS = 40


class SweepKinkWarning(UserWarning):
    """Emitted when a derivative is taken across the arctan profile's kink."""


@dataclass(frozen=True)
class ArctanProfile:
    """Piecewise-arctan ramp, mirror symmetric about tau = 0.5."""

    a: float = ARCTAN_A
    b: float = ARCTAN_B
    c: float = ARCTAN_C


@dataclass(frozen=True)
class PolynomialProfile:
    """Degree-8 polynomial ramp; coefficients ordered highest power first."""

    coeffs: tuple[float, ...] = POLY_COEFFS

    def __post_init__(self):
        if len(self.coeffs) != 9:
            raise ConfigError("polynomial profile expects 9 coefficients (degree 8)")


@dataclass(frozen=True)
class SweepSpec:
    """One fully specified drive: diagonal ramp plus coupling modulation.

    Attributes
    ----------
    profile : ArctanProfile | PolynomialProfile
        Shape of the swept diagonal energy.
    v : float
        Constant shift added to the ramp (1/ns).
    k : int
        Integer winding number of the coupling phase, phi_k(tau) = 2*pi*k*tau.
    sign_mode : bool
        If True the coupling is multiplied by a smooth sign flip crossing
        zero at tau = 0.5 with steepness ``d``.
    d : float
        Steepness of the smooth sign flip (only used when sign_mode).
    t_f : float
        Protocol duration in ns (converts tau-derivatives to time derivatives).
    """

    profile: ArctanProfile | PolynomialProfile = field(default_factory=PolynomialProfile)
    v: float = 0.0
    k: int = 0
    sign_mode: bool = False
    d: float = DEFAULT_SIGN_STEEPNESS
    t_f: float = DEFAULT_T_F

    def __post_init__(self):
        if not self.t_f > 0:
            raise ConfigError(f"t_f must be positive, got {self.t_f}")
        if self.k != int(self.k):
            raise ConfigError(f"phase winding k must be an integer, got {self.k}")
        if self.sign_mode and not self.d > 0:
            raise ConfigError(f"sign steepness d must be positive, got {self.d}")


def arctan_sweep(**kwargs) -> SweepSpec:
    """SweepSpec with the default arctan ramp; kwargs override SweepSpec fields."""
    return SweepSpec(profile=ArctanProfile(), **kwargs)


def polynomial_sweep(**kwargs) -> SweepSpec:
    """SweepSpec with the default polynomial ramp; kwargs override SweepSpec fields."""
    return SweepSpec(profile=PolynomialProfile(), **kwargs)


def default_shift_grid() -> np.ndarray:
    """Equidistant grid of constant shifts used by the correlation scan."""
    return np.linspace(SHIFT_SCAN_START, SHIFT_SCAN_STOP, SHIFT_SCAN_POINTS)


def _as_array(tau):
    arr = np.asarray(tau, dtype=float)
    return arr, arr.ndim == 0


def sweep_value(spec: SweepSpec, tau):
    """Swept diagonal energy at tau (scalar or array), including the shift v."""
    t, scalar = _as_array(tau)
    p = spec.profile
    if isinstance(p, ArctanProfile):
        t_eff = np.where(t < 0.5, t, 1.0 - t)
        val = p.a * np.arctan(p.b * t_eff) - p.c
    else:
        val = np.polyval(p.coeffs, t)
    val = val + spec.v
    return float(val) if scalar else val


def sweep_derivative(spec: SweepSpec, tau):
    """Analytic d/dtau of the swept diagonal energy.

    The arctan branch is not smooth at tau = 0.5; evaluating exactly there
    returns the left limit and emits a SweepKinkWarning.
    """
    t, scalar = _as_array(tau)
    p = spec.profile
    if isinstance(p, ArctanProfile):
        up = p.a * p.b / (1.0 + (p.b * t) ** 2)
        down = -p.a * p.b / (1.0 + (p.b * (1.0 - t)) ** 2)
        val = np.where(t < 0.5, up, down)
        at_kink = t == 0.5
        if np.any(at_kink):
            warnings.warn(
                "arctan sweep derivative evaluated at the non-smooth point "
                "tau=0.5; returning the left limit",
                SweepKinkWarning,
                stacklevel=2,
            )
            left = p.a * p.b / (1.0 + (0.5 * p.b) ** 2)
            val = np.where(at_kink, left, val)
    else:
        dcoeffs = np.polyder(np.asarray(p.coeffs))
        val = np.polyval(dcoeffs, t)
    return float(val) if scalar else val


def _smooth_sign(d: float, tau: np.ndarray) -> np.ndarray:
    return 2.0 / (1.0 + np.exp(-d * (tau - 0.5))) - 1.0


def coupling_modulation(spec: SweepSpec, tau):
    """Complex coupling modulation m(tau) and its analytic tau-derivative.

    m(tau) = s(tau) * exp(i * 2*pi*k * tau), where s is the smooth sign flip
    when sign_mode is enabled and 1 otherwise.  Returns ``(m, dm_dtau)``.
    """
    t, scalar = _as_array(tau)
    phase = np.exp(2j * np.pi * spec.k * t)
    dphase_factor = 2j * np.pi * spec.k
    if spec.sign_mode:
        s = _smooth_sign(spec.d, t)
        ds = 0.5 * spec.d * (1.0 - s * s)  # logistic identity
    else:
        s = np.ones_like(t)
        ds = np.zeros_like(t)
    m = s * phase
    dm = (ds + s * dphase_factor) * phase
    if scalar:
        return complex(m), complex(dm)
    return m, dm
