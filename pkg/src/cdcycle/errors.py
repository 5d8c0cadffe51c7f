"""Exception hierarchy shared across the package."""


class CdcycleError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(CdcycleError):
    """Invalid, unknown or inconsistent configuration input."""


class DegenerateDenominatorError(CdcycleError):
    """Raw four-level parameters with |delta_c + Delta_so| below tolerance."""


class DegenerateGapError(CdcycleError):
    """Consecutive instantaneous eigenvalues closer than the degeneracy tolerance."""


class AmbiguousTrackingError(CdcycleError):
    """Eigenvector continuation could not be resolved (grid too coarse near a crossing)."""


class StepSizeError(CdcycleError):
    """Time step too coarse: one-step norm drift exceeded the unitarity budget."""


class OpenLoopError(CdcycleError):
    """A closed loop was required but the endpoints do not match."""


class SubspaceError(CdcycleError):
    """Two-level reduction requested for a state with negligible subspace population."""


class DimensionMismatchError(CdcycleError):
    """Operands with incompatible Hilbert-space dimensions."""
