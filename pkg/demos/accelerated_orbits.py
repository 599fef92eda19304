"""Particle paths of the accelerated scaling flow and their large-time direction.

The flow is the ell = 1 scaling flow in the plane shifted by
a0 + a1 t + a2 t^2 with the three vectors below (each the previous one
turned clockwise by 120 degrees). Paths are traced with RK4 and compared with
the exact quadratic paths.
"""
import numpy as np

from confluid.figures import ROTATED_TRIPLE, fig4, fig4_field, fig4_labels, fig4_start
from confluid.kinematics import trace_orbit

a0, a1, a2 = map(np.asarray, ROTATED_TRIPLE)
data = fig4(h=1e-3)
print(f"{'b':>12} {'x(t=0.001)':>26} {'max error':>10}")
for b, table in zip(fig4_labels(), data.tables):
    rows = np.asarray(table.rows)
    ts, xs = rows[:, 0], rows[:, 1:]
    exact = a0 + np.outer(ts, b) + np.outer(ts**2, a2)
    print(f"{str(b.round(2)):>12} {str(xs[0].round(6)):>26} {np.abs(xs - exact).max():10.1e}")

# for large t the t^2 term wins and the flow lines up with a2
sol = fig4_field()
orbit = trace_orbit(sol, fig4_start([0.1, 0.5]), (1.0, 100.0), h=0.05)
for t_probe in (2.0, 10.0, 100.0):
    v = sol.velocity(np.array([t_probe]), orbit.at(t_probe)[None, :])[0]
    angle = np.arccos(v @ a2 / np.linalg.norm(v))
    print(f"t = {t_probe:6.1f}: angle between v and a2 = {angle:.4f} rad")
