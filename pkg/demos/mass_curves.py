"""Mass inside the unit disk over time for two GCA flows and three Lifshitz flows.

Prints a coarse table of each curve, the crossing time of the two GCA curves
and the monotonicity of the Lifshitz ones.
"""
import numpy as np

from confluid.figures import fig3, fig5
from confluid.kinematics import QuadratureConfig

quad = QuadratureConfig(n=128)

gca = fig3(quad=quad)
print("unit-disk mass, ell = 1/2 and 5/2 (d = 2)")
m1, m2 = (np.asarray(tab.rows) for tab in gca.tables)
for i in range(0, len(m1), 10):
    print(f"  t = {m1[i, 0]:5.2f}   {m1[i, 1]:.5f}   {m2[i, 1]:.5f}")
print("curves cross at t =", [round(c, 4) for c in gca.summary["crossings"]])

lif = fig5(quad=quad)
print("\nLifshitz unit-disk mass (d = 2)")
for tab in lif.tables:
    rows = np.asarray(tab.rows)
    print(f"  {tab.name}: m(0.1) = {rows[0, 1]:.4f}, m(10) = {rows[-1, 1]:.4f}")
print("monotonicity:", lif.summary["monotonicity"])
