"""Instantaneous eigendecomposition and eigenbasis tracking.

The protocol's observables are all phrased in terms of the instantaneous
eigenvalues and eigenvectors of the driven Hamiltonian.  Two ingredients are
provided here: a gauge-fixed decomposition of a single 2x2 or 3x3 Hermitian
matrix, and a tracker that walks a time grid matching eigenvectors between
consecutive samples by overlap (so a level keeps its identity through avoided
crossings) while rotating phases into the discrete parallel-transport gauge.

2x2 matrices are decomposed in closed form; 3x3 matrices go through LAPACK.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AmbiguousTrackingError, DegenerateGapError, DimensionMismatchError

DEGENERACY_TOL = 1e-9  # 1/ns; well below the smallest avoided-crossing gap
AMBIGUITY_MARGIN = 0.1  # min separation of best vs second-best |overlap|
HERMITICITY_TOL = 1e-12  # relative


@dataclass(frozen=True)
class EigenFrame:
    """Eigenvalues (ascending) and gauge-fixed eigenvector columns at one tau."""

    tau: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    followed_index: int | None = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def followed_vector(self) -> np.ndarray:
        if self.followed_index is None:
            raise ValueError("frame has no followed level assigned")
        return self.eigenvectors[:, self.followed_index]

    def min_gap(self) -> float:
        return float(np.min(np.diff(self.eigenvalues)))


def _fix_gauge(vecs: np.ndarray) -> np.ndarray:
    """Rotate each eigenvector column so its largest component is real positive."""
    idx = np.argmax(np.abs(vecs), axis=-2)
    lead = np.take_along_axis(vecs, idx[..., None, :], axis=-2)[..., 0, :]
    phase = np.where(np.abs(lead) > 0, lead / np.maximum(np.abs(lead), 1e-300), 1.0)
    return vecs * np.conj(phase)[..., None, :]


def _eigh2_closed(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form decomposition of 2x2 Hermitian matrices (batched).

    Eigenvalues ascending.  The eigenvector branch is picked by the sign of
    the diagonal asymmetry so the formulas stay well conditioned as the
    off-diagonal vanishes.
    """
    a = h[..., 0, 0].real
    c = h[..., 1, 1].real
    b = h[..., 0, 1]
    mean = 0.5 * (a + c)
    delta = 0.5 * (a - c)
    r = np.hypot(delta, np.abs(b))
    evals = np.stack([mean - r, mean + r], axis=-1)

    # Upper-state eigenvector: (r + delta, conj(b)) for delta >= 0,
    # (b, r - delta) otherwise; both solve (H - E+)*v = 0.
    pos = delta >= 0
    u0 = np.where(pos, (r + delta).astype(complex), b)
    u1 = np.where(pos, np.conj(b), (r - delta).astype(complex))
    norm = np.sqrt(np.abs(u0) ** 2 + np.abs(u1) ** 2)
    deg = norm < 1e-300  # fully degenerate point: fall back to the basis
    norm = np.where(deg, 1.0, norm)
    u0 = np.where(deg, 0.0, u0 / norm)
    u1 = np.where(deg, 1.0, u1 / norm)

    vecs = np.empty(h.shape, dtype=complex)
    vecs[..., 0, 1] = u0
    vecs[..., 1, 1] = u1
    # Lower state: the orthogonal complement of the upper one.
    vecs[..., 0, 0] = -np.conj(u1)
    vecs[..., 1, 0] = np.conj(u0)
    return evals, vecs


def decompose_batch(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and gauge-fixed eigenvectors for a matrix stack."""
    dim = h.shape[-1]
    if h.shape[-2] != dim or dim not in (2, 3):
        raise DimensionMismatchError(f"expected trailing 2x2 or 3x3 matrices, got {h.shape}")
    if dim == 2:
        evals, vecs = _eigh2_closed(h)
    else:
        evals, vecs = np.linalg.eigh(h)
    return evals, _fix_gauge(vecs)


def eigen_frame(h: np.ndarray, tau: float = 0.0) -> EigenFrame:
    """Decompose one Hermitian matrix into a gauge-fixed EigenFrame."""
    h = np.asarray(h, dtype=complex)
    scale = max(float(np.max(np.abs(h))), 1e-300)
    defect = float(np.max(np.abs(h - h.conj().T)))
    if defect > HERMITICITY_TOL * scale * 10:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e} at scale {scale:.3e})")
    evals, vecs = decompose_batch(h)
    return EigenFrame(tau=float(tau), eigenvalues=evals, eigenvectors=vecs)


def _check_gaps(evals: np.ndarray, tol: float) -> None:
    gaps = np.diff(evals, axis=-1)
    if np.any(gaps < tol):
        raise DegenerateGapError(
            f"eigenvalue gap {float(np.min(gaps)):.3e} below degeneracy tolerance {tol:g}"
        )


def match_columns(
    v_prev: np.ndarray, v_new: np.ndarray, *, margin: float = AMBIGUITY_MARGIN
) -> np.ndarray:
    """Match each new eigenvector column to a predecessor column by |overlap|.

    Returns ``perm`` with perm[m] = index of the new column continuing old
    column m.  Raises AmbiguousTrackingError when the assignment is not a
    clear permutation (best and runner-up overlaps closer than ``margin``).
    """
    overlap = np.abs(v_prev.conj().T @ v_new)  # overlap[m, n] = |<old_m|new_n>|
    dim = overlap.shape[0]
    perm = np.argmax(overlap, axis=1)
    if sorted(perm.tolist()) != list(range(dim)):
        raise AmbiguousTrackingError(
            "overlap matrix is not close to a permutation; refine the grid"
        )
    sorted_over = np.sort(overlap, axis=1)
    gaps = sorted_over[:, -1] - sorted_over[:, -2]
    if np.any(gaps < margin):
        raise AmbiguousTrackingError(
            f"ambiguous eigenvector continuation: best vs second-best overlap differ "
            f"by {float(np.min(gaps)):.3f} < {margin}; refine the grid"
        )
    return perm


def track_frames(
    h_path: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    grid: Sequence[float] | np.ndarray,
    initial_state: np.ndarray,
    *,
    degeneracy_tol: float = DEGENERACY_TOL,
    ambiguity_margin: float = AMBIGUITY_MARGIN,
) -> list[EigenFrame]:
    """Eigenframes along a grid with continuous level identity and gauge.

    ``h_path`` is either a callable mapping an array of taus to a matrix
    stack, or a precomputed stack aligned with ``grid``.  The followed level
    starts as the one with maximal |overlap| with ``initial_state``; at each
    subsequent sample every eigenvector is matched to its predecessor by
    maximal |overlap| and its phase is rotated so that overlap is real
    positive (discrete parallel transport).  Eigenvalues stay ascending
    within each frame; identity flows through the matching.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a non-empty 1-D array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")

    h_stack = h_path(grid) if callable(h_path) else np.asarray(h_path, dtype=complex)
    if h_stack.shape[0] != grid.size:
        raise DimensionMismatchError("h_path stack does not align with the grid")
    evals, vecs = decompose_batch(h_stack)

    psi0 = np.asarray(initial_state, dtype=complex).reshape(-1)
    if psi0.shape[0] != h_stack.shape[-1]:
        raise DimensionMismatchError("initial state dimension does not match the Hamiltonian")

    frames: list[EigenFrame] = []
    _check_gaps(evals[0], degeneracy_tol)
    followed = int(np.argmax(np.abs(vecs[0].conj().T @ psi0)))
    frames.append(EigenFrame(float(grid[0]), evals[0], vecs[0], followed))

    v_prev = vecs[0]
    for j in range(1, grid.size):
        _check_gaps(evals[j], degeneracy_tol)
        v_new = vecs[j].copy()
        perm = match_columns(v_prev, v_new, margin=ambiguity_margin)
        # Parallel transport: make <old_m | new_perm[m]> real positive.
        for m in range(v_new.shape[1]):
            n = perm[m]
            ov = np.vdot(v_prev[:, m], v_new[:, n])
            if abs(ov) > 0:
                v_new[:, n] *= np.conj(ov) / abs(ov)
        followed = int(perm[followed])
        frames.append(EigenFrame(float(grid[j]), evals[j], v_new, followed))
        v_prev = v_new
    return frames


def follow_levels(
    vecs: np.ndarray,
    initial_state: np.ndarray | None = None,
    *,
    seed_index: int | None = None,
    ambiguity_margin: float = AMBIGUITY_MARGIN,
) -> np.ndarray:
    """Index of the followed level at every sample of an eigenvector stack.

    Lightweight companion to track_frames for trajectory diagnostics: only
    the permutation bookkeeping, no phase transport.  The first frame's level
    is either ``seed_index`` or the level of maximal |overlap| with
    ``initial_state``.
    """
    n = vecs.shape[0]
    followed = np.empty(n, dtype=int)
    if seed_index is not None:
        followed[0] = int(seed_index)
    else:
        psi0 = np.asarray(initial_state, dtype=complex).reshape(-1)
        followed[0] = int(np.argmax(np.abs(vecs[0].conj().T @ psi0)))
    # Batched consecutive overlap matrices; the composition stays sequential.
    overlaps = np.abs(np.einsum("nij,nik->njk", vecs[:-1].conj(), vecs[1:]))
    perms = np.argmax(overlaps, axis=2)
    sorted_over = np.sort(overlaps, axis=2)
    margins = sorted_over[..., -1] - sorted_over[..., -2]
    if np.any(margins < ambiguity_margin):
        j = int(np.argwhere(margins < ambiguity_margin)[0, 0])
        raise AmbiguousTrackingError(
            f"ambiguous eigenvector continuation at step {j}; refine the grid"
        )
    for j in range(n - 1):
        followed[j + 1] = perms[j, followed[j]]
    return followed
