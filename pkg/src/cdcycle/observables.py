"""Fidelity, Bloch-sphere reduction, Berry phase and solid angle.

The geometric phase of the followed level around one protocol cycle is
computed two ways and cross-validated:

* Wilson loop (Pancharatnam product): minus the accumulated phase of the
  consecutive-eigenvector overlaps around the closed loop.  The product is
  invariant under any per-sample gauge, so this is the reference method.
* Connection integral: the Riemann discretization of -i * integral of
  <n | d n/dtau> around the loop, evaluated in an explicitly smooth gauge.

Both unwrapped (accumulated) and mod-2pi values are reported.  Unwrapping
needs a gauge that is smooth along the whole loop; we anchor the eigenvector
phase on the component that dominates the followed level at the start of the
protocol, which for these drives never passes through zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import model as _model
from .cd import make_assembly
from .errors import DimensionMismatchError, OpenLoopError, SubspaceError
from .propagate import QuantumState
from .spectral import EigenFrame, track_frames
from .sweeps import SweepSpec

BLOCH_CLOSURE_TOL = 1e-3
SUBSPACE_FLOOR = 1e-6
ANCHOR_FLOOR = 1e-8


@dataclass(frozen=True)
class BlochPoint:
    """Cartesian point on (or inside) the unit sphere; |1> maps to +z."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


@dataclass(frozen=True)
class BerryResult:
    """Geometric phase of one closed loop.

    ``gamma_B`` is the canonical (unwrapped, accumulated) value; the mod-2pi
    companion and the independent connection-integral estimate are carried
    for cross-validation.  ``solid_angle`` is filled when the followed level
    admits a faithful two-level Bloch reduction.
    """

    gamma_B: float
    gamma_mod_2pi: float
    gamma_connection: float
    method: str
    loop_closed: bool
    solid_angle: float | None = None
    min_subspace_population: float | None = None
    n_samples: int = 0

    @property
    def method_delta(self) -> float:
        """Disagreement between the Wilson-loop and connection-integral values."""
        return abs(self.gamma_B - self.gamma_connection)


def fidelity(state: QuantumState, target: QuantumState) -> float:
    """Squared overlap |<target|state>|^2."""
    if state.dim != target.dim:
        raise DimensionMismatchError(
            f"state dim {state.dim} != target dim {target.dim}"
        )
    return float(np.abs(np.vdot(target.amplitudes, state.amplitudes)) ** 2)


def _bloch_xyz(amp_up: np.ndarray, amp_dn: np.ndarray) -> tuple[np.ndarray, ...]:
    norm2 = np.abs(amp_up) ** 2 + np.abs(amp_dn) ** 2
    cross = np.conj(amp_up) * amp_dn
    x = 2.0 * cross.real / norm2
    y = 2.0 * cross.imag / norm2
    z = (np.abs(amp_up) ** 2 - np.abs(amp_dn) ** 2) / norm2
    return x, y, z


def bloch_reduce(
    state: QuantumState | np.ndarray,
    subspace: tuple[int, int] = (0, 2),
    *,
    population_floor: float = SUBSPACE_FLOOR,
) -> BlochPoint:
    """Project a state onto a two-level subspace and map it to the Bloch sphere.

    The two amplitudes are renormalized within the subspace; the first index
    of ``subspace`` sits at the north pole (z = +1).  Raises SubspaceError
    when the subspace holds less than ``population_floor`` of the state.
    """
    amps = state.amplitudes if isinstance(state, QuantumState) else np.asarray(state, complex)
    i, j = subspace
    pop = float(np.abs(amps[i]) ** 2 + np.abs(amps[j]) ** 2)
    if pop <= population_floor:
        raise SubspaceError(
            f"subspace {subspace} population {pop:.3e} below floor {population_floor:g}"
        )
    x, y, z = _bloch_xyz(amps[i], amps[j])
    return BlochPoint(float(x), float(y), float(z))


def bloch_path(
    amplitudes: np.ndarray,
    subspace: tuple[int, int] = (0, 2),
    *,
    population_floor: float = SUBSPACE_FLOOR,
) -> np.ndarray:
    """Bloch points, shape (N, 3), for a stack of state vectors."""
    path, _ = bloch_path_with_population(
        amplitudes, subspace, population_floor=population_floor
    )
    return path


def bloch_path_with_population(
    amplitudes: np.ndarray,
    subspace: tuple[int, int] = (0, 2),
    *,
    population_floor: float = SUBSPACE_FLOOR,
) -> tuple[np.ndarray, float]:
    """Bloch path plus the minimum subspace population along it."""
    amps = np.asarray(amplitudes, dtype=complex)
    i, j = subspace
    pops = np.abs(amps[:, i]) ** 2 + np.abs(amps[:, j]) ** 2
    min_pop = float(np.min(pops))
    if min_pop <= population_floor:
        raise SubspaceError(
            f"subspace {subspace} population dropped to {min_pop:.3e} along the path"
        )
    x, y, z = _bloch_xyz(amps[:, i], amps[:, j])
    return np.column_stack([x, y, z]), min_pop


def _wrap_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    return float(-((-a + np.pi) % (2.0 * np.pi) - np.pi))


def _followed_vectors(frames: Sequence[EigenFrame]) -> np.ndarray:
    cols = [f.followed_vector() for f in frames]
    return np.asarray(cols)  # shape (N, dim)


def _anchor_gauge(vectors: np.ndarray) -> np.ndarray:
    """Re-phase each vector so one fixed component is real positive.

    The anchor component is the dominant component of the first vector; a
    gauge anchored there is smooth along the loop as long as that component
    never vanishes, which makes the per-step Wilson phases small and hence
    the accumulated (unwrapped) phase well defined.
    """
    anchor = int(np.argmax(np.abs(vectors[0])))
    lead = vectors[:, anchor]
    small = np.abs(lead) < ANCHOR_FLOOR
    if np.any(small):
        raise OpenLoopError(
            "anchor component of the followed eigenvector vanishes along the loop; "
            "the unwrapped phase is not defined in this gauge"
        )
    return vectors * np.exp(-1j * np.angle(lead))[:, None]


def berry_phase_wilson(
    frames: Sequence[EigenFrame],
    *,
    closure_tol: float = 1e-2,
    fill_solid_angle: bool = True,
) -> BerryResult:
    """Geometric phase of the followed level around a closed parameter loop.

    ``frames`` must be a tracked sequence covering tau in [0, 1]; the final
    bracket closes onto the first frame.  Closure of the loop is checked on
    the eigenvalues and the followed eigenvector (relative tolerance
    ``closure_tol``); a fit-based drive closes only to its fit accuracy,
    which is why the default tolerance is loose rather than machine level.
    """
    if len(frames) < 3:
        raise OpenLoopError("need at least 3 frames to close a loop")
    dim = frames[0].dim

    ev0, ev1 = frames[0].eigenvalues, frames[-1].eigenvalues
    scale = max(float(np.max(np.abs(ev0))), 1e-300)
    w = _followed_vectors(frames)
    closure_gap = float(np.max(np.abs(ev1 - ev0))) / scale
    vec_gap = 1.0 - float(np.abs(np.vdot(w[-1], w[0])))
    loop_closed = closure_gap <= closure_tol and vec_gap <= closure_tol
    if not loop_closed:
        raise OpenLoopError(
            f"loop endpoints disagree (eigenvalue gap {closure_gap:.3e}, "
            f"eigenvector gap {vec_gap:.3e}, tolerance {closure_tol:g})"
        )

    # Gauge-invariant mod-2pi value from the raw Pancharatnam product.
    brackets = np.einsum("ni,ni->n", w.conj(), np.roll(w, -1, axis=0))
    gamma_mod = _wrap_angle(-float(np.sum(np.angle(brackets))))

    # Unwrapped value: same product evaluated in the smooth anchored gauge,
    # where each per-step phase is small and the sum accumulates windings.
    w_s = _anchor_gauge(w)
    brackets_s = np.einsum("ni,ni->n", w_s.conj(), np.roll(w_s, -1, axis=0))
    step_phases = np.angle(brackets_s)
    if np.max(np.abs(step_phases)) > 0.5 * np.pi:
        warnings.warn(
            "large per-step Wilson phase; the unwrapped value may alias "
            "(refine the loop sampling)",
            stacklevel=2,
        )
    gamma_unwrapped = -float(np.sum(step_phases))

    # Independent discretization: forward-difference connection integral
    # -i * sum <n_j | n_{j+1} - n_j> in the same smooth gauge.
    gamma_conn = -float(np.sum(brackets_s.imag))

    solid = None
    min_pop = None
    if fill_solid_angle:
        try:
            pts, min_pop = bloch_path_with_population(w_s, (0, dim - 1))
            # Measure the swept area about the anchor pole: the unwrapped
            # phase equals half that area (same gauge axis), and the loop's
            # azimuth winds slowly about it.
            anchor = int(np.argmax(np.abs(w_s[0])))
            if anchor == 0:
                pole = np.array([0.0, 0.0, 1.0])
            elif anchor == dim - 1:
                pole = np.array([0.0, 0.0, -1.0])
            else:
                pole = None
            solid = solid_angle(pts, closed=True, reference=pole)
        except (SubspaceError, OpenLoopError):
            solid = None
    return BerryResult(
        gamma_B=gamma_unwrapped,
        gamma_mod_2pi=gamma_mod,
        gamma_connection=gamma_conn,
        method="wilson_loop",
        loop_closed=loop_closed,
        solid_angle=solid,
        min_subspace_population=min_pop,
        n_samples=len(frames),
    )


def solid_angle(
    loop: np.ndarray,
    closed: bool = True,
    *,
    closure_tol: float = BLOCH_CLOSURE_TOL,
    reference: np.ndarray | None = None,
) -> float:
    """Signed spherical area swept by a closed loop of unit Bloch vectors.

    The loop is fanned into spherical triangles against a fixed interior
    reference point and the signed triangle excesses are summed; each excess
    is evaluated stably in the frame whose pole is the reference point, where
    it reduces to (1 - z_mid) * dphi per step.  Increments accumulate, so
    loops winding several times about the reference axis report the total
    swept area, not a mod-4pi remainder.

    ``reference`` fixes the fan origin; it should sit well away from the
    loop (its antipodal axis determines the azimuth used for accumulation).
    By default the normalized loop centroid is used, or a coordinate axis
    clear of the loop for balanced loops such as great circles.  With
    ``closed`` the endpoints must agree within ``closure_tol``.
    """
    pts = np.asarray(loop, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("loop must have shape (N, 3)")
    if pts.shape[0] < 2:
        return 0.0
    radii = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(radii - 1.0) > 1e-3):
        raise ValueError("loop points must lie on the unit sphere")
    pts = pts / radii[:, None]
    if closed and float(np.linalg.norm(pts[0] - pts[-1])) > closure_tol:
        raise OpenLoopError(
            f"loop endpoints {np.linalg.norm(pts[0] - pts[-1]):.3e} apart "
            f"(tolerance {closure_tol:g})"
        )

    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        ref = ref / np.linalg.norm(ref)
    else:
        centroid = pts.mean(axis=0)
        c_norm = float(np.linalg.norm(centroid))
        if c_norm > 0.1:
            ref = centroid / c_norm
        else:
            # Loop balanced around the origin (e.g. a great circle): pick the
            # coordinate axis farthest from every loop point.
            axes = np.eye(3)
            ref = axes[int(np.argmin(np.max(np.abs(pts @ axes.T), axis=0)))]

    helper = np.eye(3)[int(np.argmin(np.abs(ref)))]
    e1 = np.cross(helper, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(ref, e1)
    x, y, z = pts @ e1, pts @ e2, pts @ ref
    phi = np.arctan2(y, x)
    dphi = np.diff(np.concatenate([phi, phi[:1]]))
    dphi = (dphi + np.pi) % (2.0 * np.pi) - np.pi
    weight = 1.0 - 0.5 * (z + np.concatenate([z[1:], z[:1]]))
    big = np.abs(dphi) > 0.5 * np.pi
    if np.any(big & (weight > 1e-6)):
        warnings.warn(
            "large azimuth step around the reference axis; the swept area "
            "may alias (densify the loop or move the reference)",
            stacklevel=2,
        )
    return float(np.sum(weight * dphi))


def berry_equivalence_check(
    params: _model.ModelParams,
    sweep: SweepSpec,
    *,
    n_samples: int = 4001,
    phase_targets=_model.DEFAULT_PHASE_TARGETS,
) -> dict:
    """Geometric phase of the followed level in the two- and three-level models.

    Both models are tracked from the swept bare level over the same loop; the
    report carries both phases and their absolute difference.
    """
    grid = np.linspace(0.0, 1.0, n_samples)
    report: dict = {"k": sweep.k, "v": sweep.v, "n_samples": n_samples}
    for dim in (3, 2):
        assembly = make_assembly(
            params, sweep, dim=dim, cd_enabled=False, phase_targets=phase_targets
        )
        psi0 = np.zeros(dim, dtype=complex)
        psi0[0] = 1.0
        frames = track_frames(assembly.h0_at, grid, psi0)
        res = berry_phase_wilson(frames)
        report[f"gamma_{dim}_level"] = res.gamma_B
        report[f"solid_angle_{dim}_level"] = res.solid_angle
    report["difference"] = abs(report["gamma_3_level"] - report["gamma_2_level"])
    return report
