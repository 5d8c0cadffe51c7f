"""Loop geometry: Bloch-sphere trajectories and the geometric phase.

Restricted to the (|1>, |T>) subspace, one protocol cycle draws a closed
loop on the Bloch sphere.  Two ways to make the loop enclose area: flip the
coupling's sign smoothly at mid-protocol, or wind its complex phase k full
turns over the cycle.  The geometric phase accumulated by the followed
eigenstate equals (in magnitude) half the solid angle the loop encloses,
and the two- and three-level descriptions of the same drive agree on it.
"""

from pathlib import Path

import numpy as np

import cdcycle as cc
from cdcycle.experiments import berry_report_data, fig5_data
from cdcycle.output import write_csv, write_json

OUT = Path(__file__).parent / "output"

cfg = cc.default_config()

print("closed Bloch loops of the driven dynamics (counterdiabatic, t_f = 50 ns)\n")
panels = fig5_data(cfg)
for name, panel in panels.items():
    mods = panel["modulation"]
    loop = panel["bloch"]
    closure = np.linalg.norm(loop[0] - loop[-1])
    kind = "sign flip" if mods["sign_mode"] else f"k={mods['k']} phase winding"
    if closure < 1e-3:
        omega = cc.solid_angle(loop, reference=[0.0, 0.0, 1.0])
        area = f"swept solid angle = {omega:+.4f} sr"
    else:
        area = "open endpoints, area not defined"
    print(f"  panel {name} ({kind:>18}): closure |r(1)-r(0)| = {closure:.2e}, {area}")
    write_csv(OUT / f"bloch_loop_{name}.csv", ["tau", "x", "y", "z"],
              np.column_stack([panel["trajectory"].grid, loop]))

print("\n(the sign-flip loop does not close: the drive itself ends with the")
print(" coupling sign reversed, so its endpoints sit on mirrored meridians)\n")

for k in (1, 2):
    report = berry_report_data(cfg.with_sweep(k=k))
    print(f"k={k}: gamma = {report['gamma_3_level']:+.6f} (3-level) "
          f"vs {report['gamma_2_level']:+.6f} (2-level), "
          f"|Omega|/2 = {abs(report['solid_angle_2_level']) / 2:.6f}")
    write_json(OUT / f"berry_report_k{k}.json", report)

print("\nDoubling the winding number doubles the phase: the polar profile of")
print("the loop is set by the sweep alone, so the phase is linear in k.")
print(f"reports -> {OUT}/berry_report_k*.json")
