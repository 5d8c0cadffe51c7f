"""Cyclic state preparation in a driven three-level quantum system.

A numpy library (plus a small CLI) for simulating adiabatic and
counterdiabatically accelerated population transfer through an avoided
crossing, repeating the cycle, and characterizing the loop geometry through
Bloch-sphere trajectories, Berry phases and solid angles.
"""

from .cd import DriveAssembly, cd_hamiltonian, cd_norm_profile, constant_assembly, make_assembly, total_hamiltonian
from .config import RunConfig, RunOptions, default_config, from_dict, load_config
from .errors import (
    AmbiguousTrackingError,
    CdcycleError,
    ConfigError,
    DegenerateDenominatorError,
    DegenerateGapError,
    DimensionMismatchError,
    OpenLoopError,
    StepSizeError,
    SubspaceError,
)
from .experiments import (
    FitResult,
    ScanResult,
    fidelity_vs_tf,
    fit_degree8,
    peak_avg_population,
    spearman_rank_correlation,
    v_scan_correlation,
)
from .model import (
    ModelParams,
    RawFourLevelParams,
    build_dh0_dtau,
    build_dheff_dtau,
    build_h0,
    build_h_eff,
    derive_couplings,
    hermiticity_defect,
)
from .observables import (
    BerryResult,
    BlochPoint,
    berry_equivalence_check,
    berry_phase_wilson,
    bloch_path,
    bloch_reduce,
    fidelity,
    solid_angle,
)
from .propagate import QuantumState, Trajectory, bare_state, default_grid, propagate, repeat_cycles
from .spectral import EigenFrame, eigen_frame, track_frames
from .sweeps import (
    ArctanProfile,
    PolynomialProfile,
    SweepKinkWarning,
    SweepSpec,
    arctan_sweep,
    coupling_modulation,
    default_shift_grid,
    polynomial_sweep,
    sweep_derivative,
    sweep_value,
)

__version__ = "0.1.0"
