"""Fast cyclic state preparation with counterdiabatic driving.

The protocol sweeps the energy of level |1> up through an avoided crossing
with |T> and back.  Run slowly, the system follows the lowest instantaneous
eigenstate and the population rides |1> -> |T> -> |1>.  Run fast, the
crossing is jumped diabatically and the transfer fails.  Adding the
counterdiabatic term makes the fast run follow exactly, so the 50 ns cycle
can be repeated without losing fidelity.
"""

from pathlib import Path

import numpy as np

import cdcycle as cc

OUT = Path(__file__).parent / "output"

params = cc.ModelParams()
sweep = cc.polynomial_sweep(t_f=50.0)
psi0 = cc.bare_state("1", 3)

print("Driven three-level system, polynomial sweep, t_f = 50 ns")
print(f"  couplings: 1-S {params.omega_1S}, S-T {params.omega_ST}, "
      f"1-T magnitude {params.omega_1T_abs} (all 1/ns)\n")

for cd_enabled in (False, True):
    assembly = cc.make_assembly(params, sweep, dim=3, cd_enabled=cd_enabled)
    traj = cc.propagate(assembly, psi0)
    mid = (traj.n_samples - 1) // 2
    label = "counterdiabatic" if cd_enabled else "plain          "
    print(f"{label}: P_T(t_f/2) = {traj.populations[mid, 2]:.6f}   "
          f"P_1(t_f) = {traj.populations[-1, 0]:.6f}   "
          f"min eigenstate overlap = {traj.followed_overlap.min():.6f}")

print("\nThe plain 50 ns run barely transfers anything: it crosses the gap")
print("diabatically.  With the counterdiabatic term the state follows the")
print("instantaneous eigenvector to its limit (the eigenvector itself keeps")
print("a ~0.3% admixture of |1> at mid-protocol for these constants).\n")

assembly = cc.make_assembly(params, sweep, dim=3, cd_enabled=True)
cycles = cc.repeat_cycles(assembly, psi0, n_cycles=3)
print(f"3 repeated CD cycles: final P_1 = {cycles.populations[-1, 0]:.6f} "
      f"(norm drift {cycles.meta['max_norm_drift']:.1e})")

path = OUT / "fast_cycles.csv"
from cdcycle.output import write_csv

write_csv(path, cycles.csv_header(), cycles.csv_rows())
print(f"full 3-cycle trajectory -> {path}")

# How strong does the auxiliary drive have to be?
grid = np.linspace(0.0, 1.0, 501)
norms = cc.cd_norm_profile(assembly, grid)
print(f"\ncounterdiabatic drive strength: peak {norms.max():.4f} 1/ns at "
      f"tau = {grid[np.argmax(norms)]:.3f} (the avoided crossing), "
      f"median {np.median(norms):.4f} 1/ns")
