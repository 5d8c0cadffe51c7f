"""How slow does the plain protocol have to be?

Without the counterdiabatic term the transfer quality depends entirely on
the protocol duration.  This scans t_f over two decades for both sweep
shapes and prints the mid-protocol fidelity towards |T>, showing the climb
onto the adiabatic plateau.

Expect roughly a minute of runtime: the long protocols keep the same time
step, so a 10 us run integrates 400k steps.
"""

from pathlib import Path

import numpy as np

import cdcycle as cc
from cdcycle.experiments import fidelity_vs_tf
from cdcycle.output import write_csv

OUT = Path(__file__).parent / "output"

cfg = cc.default_config()
tf_values = np.logspace(np.log10(100.0), np.log10(10000.0), 9)

print("mid-protocol fidelity F(t_f/2) vs |T>, plain sweep (no CD)\n")
scan = fidelity_vs_tf(cfg, tf_values)

print(f"{'t_f (ns)':>10}  {'arctan':>10}  {'polynomial':>10}")
for rec in scan.records:
    print(f"{rec['t_f']:>10.0f}  {rec['fidelity_mid_arctan']:>10.5f}  "
          f"{rec['fidelity_mid_polynomial']:>10.5f}")

path = write_csv(OUT / "fidelity_vs_duration.csv", scan.columns, scan.csv_rows())
print(f"\nscan data -> {path}")

print("\nBelow ~1 us the crossing is traversed too fast and the population")
print("stays on |1>.  The plateau near 0.997 is the eigenvector limit: even")
print("a perfectly adiabatic run inherits the eigenvector's residual |1>")
print("admixture at mid-protocol.  The counterdiabatic run in demo 01")
print("reaches the same plateau 200x faster.")
