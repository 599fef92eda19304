"""Walk through one scaling flow: fields, residuals, a symmetry image and its kinematics.

Run with `python demos/scaling_flow_tour.py`.
"""
import numpy as np

from confluid import (
    Grid,
    Sl2Element,
    apply_sl2,
    covariance_suite,
    gca_scaling_solution,
    kinematic_decomposition,
    residual_suite,
)

sol = gca_scaling_solution(ell="5/2", d=2, a=0.5, c=0.1)
print(sol.label, "with pressure exponent", sol.eos.exponent)

t = np.array([2.0, 4.0])
x = np.array([[0.5, -0.25], [1.0, 1.0]])
print("rho:", sol.density(t, x))
print("v:  ", sol.velocity(t, x).tolist())

# residuals of continuity and the generalized Euler equation on a sampled grid
grid = Grid.parse("t=2:6:20,x=-3:3:30", 2, max_points=2000, seed=1)
for eq, rep in residual_suite(sol, grid).items():
    print(f"{eq.value:>14}: relative residual {rep.relative:.2e} on {rep.t.size} points ({rep.path})")

# push the flow through a special conformal map; it is still a solution
g = Sl2Element.special_conformal(0.3)
image = apply_sl2(g, sol)
cov = covariance_suite(g, sol, grid)
print("image residuals:", {k.value: f"{r.relative:.2e}" for k, r in cov.image.items()}, "passed:", cov.passed)

# the velocity gradient of a scaling flow is pure expansion
dec = kinematic_decomposition(sol, t, x)
print("expansion:", dec.expansion, "expected", 2 * 2.5 / t)
print("max |vorticity|, |shear|:", np.abs(dec.vorticity).max(), np.abs(dec.shear).max())

dec = kinematic_decomposition(image, t, x)
print("image expansion:", dec.expansion)
