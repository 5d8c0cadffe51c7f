import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import cdcycle as cc


@pytest.fixture(scope="session")
def params():
    return cc.ModelParams()


@pytest.fixture(scope="session")
def poly_sweep():
    return cc.polynomial_sweep()


@pytest.fixture(scope="session")
def arctan_sweep_spec():
    return cc.arctan_sweep()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def cd_trajectory(params, poly_sweep):
    """Reference counterdiabatic run: 3-level, t_f = 50 ns, default grid."""
    assembly = cc.make_assembly(params, poly_sweep, dim=3, cd_enabled=True)
    return cc.propagate(assembly, cc.bare_state("1", 3))


@pytest.fixture(scope="session")
def tracked_frames_k1(params):
    """Tracked 2-level frames for one phase winding, 4001 samples."""
    sweep = cc.polynomial_sweep(k=1)
    assembly = cc.make_assembly(params, sweep, dim=2, cd_enabled=False)
    grid = np.linspace(0.0, 1.0, 4001)
    return cc.track_frames(assembly.h0_at, grid, np.array([1.0, 0.0j]))
