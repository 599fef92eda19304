"""Exact solutions of perfect and viscous fluid equations with conformal
Galilei or Lifshitz symmetry, plus tools to verify them numerically and
symbolically."""

__version__ = "0.1.0"

from .core import EllParameter, EquationOfState, Family, FluidSolution, SpacetimeDomain, ell_product, validate_ell, validate_z
from .algebra import commutator, generator_basis, make_generator, verify_structure_relations
from .material import StencilConfig, material_derivative_fd, material_derivative_radial, velocity_gradient
from .catalog import (
    CATALOG,
    AccelerationFamilyParams,
    GcaScalingParams,
    LifshitzParams,
    Quartic1dParams,
    ViscousParams,
    acceleration_deformed_solution,
    acceleration_solution,
    build_solution,
    catalog_manifest,
    conformal_deformed_solution,
    continuity_branch_1d_solution,
    gca_scaling_solution,
    lifshitz_scaling_solution,
    quartic_1d_solution,
    viscous_solution,
)
from .residuals import (
    Equation,
    Grid,
    ResidualReport,
    continuity_residual,
    corrupt_density,
    euler_residual_galilei,
    euler_residual_lifshitz,
    euler_residual_viscous,
    ode_first_integral_check,
    residual_suite,
)
from .transforms import (
    AccelerationElement,
    LifshitzElement,
    Sl2Element,
    apply_acceleration,
    apply_lifshitz,
    apply_sl2,
    apply_transform,
    covariance_suite,
    parse_transform,
)
from .kinematics import (
    KinematicDecomposition,
    Orbit,
    QuadratureConfig,
    kinematic_decomposition,
    mass_in_ball,
    trace_orbit,
    trace_orbits,
)
