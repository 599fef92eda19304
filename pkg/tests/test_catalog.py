import json
import math
from fractions import Fraction

import numpy as np
import pytest

from confluid.catalog import (
    CATALOG,
    GcaScalingParams,
    ViscousParams,
    acceleration_constraints,
    acceleration_solution,
    build_solution,
    catalog_manifest,
    conformal_deformed_solution,
    continuity_branch_1d_solution,
    gca_scaling_solution,
    inviscid_constant,
    lifshitz_scaling_solution,
    quartic_1d_solution,
    quartic_uw,
    viscous_equation,
    viscous_roots,
    viscous_solution,
)
from confluid.errors import (
    AmbiguousRoot,
    BranchCollision,
    DynamicalExponentOutOfRange,
    EmptyPositivityDomain,
    InadmissibleEll,
    InvalidParameter,
    NoBoundedSolution,
    NonPositiveDensity,
    NoRootInBracket,
)

rng = np.random.default_rng(7)


def pts(d, n=50, t=(0.5, 4.0), x=3.0):
    return rng.uniform(*t, n), rng.uniform(-x, x, (n, d))


def test_integer_scaling_example():
    sol = gca_scaling_solution(ell=1, d=2, a=0.5, c=0.1)
    x = np.array([[0.3, -2.0], [5.0, 1.0]])
    assert np.allclose(sol.density(np.ones(2), x), 0.1, rtol=0, atol=1e-15)
    assert np.allclose(sol.velocity(np.ones(2), x), x)


def test_half_integer_scaling_examples():
    sol = gca_scaling_solution(ell="1/2", d=1, a=0.5, c=0.1)
    assert math.isclose(sol.density(2.0, 0.0), math.sqrt(0.05), rel_tol=1e-15)
    assert sol.velocity(2.0, 0.0)[0] == 0.0
    sol = gca_scaling_solution(ell="1/2", d=1, a=3.7, c=1.0)
    assert math.isclose(sol.density(1.0, 0.0), 1.0)


def test_scaling_density_formula():
    ell, d, a, c, t0 = Fraction(5, 2), 2, 0.5, 0.1, 0.3
    sol = gca_scaling_solution(ell=ell, d=d, a=a, c=c, t0=t0)
    t, x = pts(d)
    tau = t + t0
    P = -225 / 64
    expected = (c / tau - P * np.sum(x**2, -1) / (2 * a * (1 + 5) * tau**6)) ** 5
    assert np.allclose(sol.density(t, x), expected, rtol=1e-13)
    assert np.allclose(sol.velocity(t, x), 2.5 * x / tau[:, None], rtol=1e-15)


@pytest.mark.parametrize("ell", ["3/2", "7/2", "11/2"])
def test_inadmissible_ell_rejected(ell):
    with pytest.raises(InadmissibleEll):
        gca_scaling_solution(ell=ell, d=1, a=0.5, c=0.1)


def test_quartic_degenerate_constants():
    with pytest.raises(EmptyPositivityDomain):
        quartic_1d_solution(c1=0, c2=0, a=0.5)
    with pytest.raises(BranchCollision):
        quartic_1d_solution(c1=1, c2=1, a=0.5, sign1=1, sign2=-1)


def test_quartic_reduced_values():
    # radicals at y = 2: sqrt(4 - 1) = sqrt(3) and sqrt(1) = 1
    u, w = quartic_uw(2.0, 1.0, 0.0, 1 / 3)
    assert math.isclose(u, 1.5 + math.sqrt(3) / 2, rel_tol=1e-15)
    assert math.isclose(w, 0.25 * 2 / (u - 1), rel_tol=1e-15)
    assert math.isclose(w, (math.sqrt(3) - 1) / 2, rel_tol=1e-14)


def test_quartic_fields_and_domain():
    sol = quartic_1d_solution(c1=1, c2=0, a=1 / 3)
    assert sol.metadata["positivity_intervals"] == [(0.0, math.inf)]
    t = np.array([1.0])
    x = np.array([[math.sqrt(2.0)]])
    u, w = quartic_uw(2.0, 1.0, 0.0, 1 / 3)
    assert math.isclose(sol.velocity(t, x)[0, 0], u / math.sqrt(2))
    assert math.isclose(sol.density(t, x)[0], w / math.sqrt(2))


def test_continuity_branch():
    sol = continuity_branch_1d_solution(c=0, a=1 / 12)
    assert math.isclose(sol.density(1.0, 2.0), 2.0, rel_tol=1e-14)
    ref = gca_scaling_solution(ell="1/2", d=1, a=0.5, c=0.1)
    t, x = np.array([1.0, 2.5]), np.array([[0.4], [3.0]])
    assert np.array_equal(sol.velocity(t, x), ref.velocity(t, x))
    with pytest.raises(EmptyPositivityDomain):
        continuity_branch_1d_solution(c=0, a=0.5, sign=-1, half_line="x>0")


def test_acceleration_constraints():
    assert acceleration_constraints("1/2", 1).free == {"c_minus1": True, "c_0": False}
    assert acceleration_constraints("1/2", 0).free == {"c_minus1": False, "c_0": True}
    assert acceleration_constraints("5/2", 3).free == {"c_minus1": True, "c_0": True}
    with pytest.raises(InvalidParameter):
        acceleration_solution(ell="1/2", n=1, c=0.1, c_minus1=0.3, c_0=0.2)
    with pytest.raises(InvalidParameter):
        acceleration_solution(ell="1/2", n=0, c=0.1, c_minus1=0.3)
    sol = acceleration_solution(ell="1/2", n=0, c=0.1, c_0=0.7)
    assert np.allclose(sol.velocity(np.array([2.0]), np.array([[1.0]])), 0.7)
    assert np.allclose(sol.density(np.array([2.0]), np.array([[1.0]])), 0.1)


def test_acceleration_n1_fields():
    sol = acceleration_solution(ell="1/2", n=1, c=0.2, c_minus1=0.5)
    t, x = np.array([2.0]), np.array([[1.0]])
    assert np.isclose(sol.density(t, x)[0], 0.1)
    assert np.isclose(sol.velocity(t, x)[0, 0], 0.75)


def test_runaway_rejected():
    with pytest.raises(NoBoundedSolution):
        acceleration_solution(ell="5/2", n=2, c=0.1, runaway={1: 1.0})


def test_lifshitz_z1_density():
    sol = lifshitz_scaling_solution(z=1, d=2, a=0.5, c=0.1)
    t, x = pts(2)
    assert np.allclose(sol.density(t, x), 0.1 / t + np.sum(x**2, -1) / (16 * 0.5 * t**2), rtol=1e-14)


def test_lifshitz_general_formula():
    z, d, a, c = Fraction(3, 5), 2, 0.5, 0.1
    sol = lifshitz_scaling_solution(z=z, d=d, a=a, c=c)
    t, x = pts(d)
    zf = float(z)
    inner = c / t ** (2 - 1 / zf) + (2 * zf - 1) ** 2 * np.sum(x**2, -1) / (4 * a * zf**2 * (d + 2 * (2 * zf - 1)) * t**2)
    assert np.allclose(sol.density(t, x), inner ** (d / (2 * (2 * zf - 1))), rtol=1e-13)
    assert np.allclose(sol.velocity(t, x), x / (2 * zf * t[:, None]))


@pytest.mark.parametrize("z", ["1/2", 0.4])
def test_lifshitz_rejects_small_z(z):
    with pytest.raises(DynamicalExponentOutOfRange):
        lifshitz_scaling_solution(z=z, d=1, a=0.5, c=0.1)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_lifshitz_z1_equals_schrodinger(d):
    a, c = 0.7, 0.3
    lif = lifshitz_scaling_solution(z=1, d=d, a=a, c=c)
    gca = gca_scaling_solution(ell="1/2", d=d, a=a, c=c)
    t, x = pts(d, 1000)
    assert np.max(np.abs(lif.density(t, x) - gca.density(t, x)) / gca.density(t, x)) <= 1e-12
    assert np.max(np.abs(lif.velocity(t, x) - gca.velocity(t, x))) <= 1e-12


def test_conformal_deformed_closed_form():
    p = GcaScalingParams(ell=1, d=2, a=0.5, c=0.1)
    sol = conformal_deformed_solution(p, 0.3)
    t, x = pts(2)
    s = t * (1 + 0.3 * t)
    assert np.allclose(sol.density(t, x), 0.1 / s**2, rtol=1e-14)
    assert np.allclose(sol.velocity(t, x), (1 + 0.6 * t)[:, None] * x / s[:, None], rtol=1e-14)
    near = conformal_deformed_solution(GcaScalingParams(ell="1/2", d=1, a=0.5, c=0.1), 1e-12)
    base = gca_scaling_solution(ell="1/2", d=1, a=0.5, c=0.1)
    t, x = pts(1)
    assert np.allclose(near.density(t, x), base.density(t, x), rtol=1e-10)


def test_viscous_integer_example():
    sol = viscous_solution(ell=1, d=2, a=0.5, c=0.1, eta0=0.3, xi0=0.2)
    t, x = np.array([2.0]), np.array([[0.4, -1.0]])
    assert np.isclose(sol.density(t, x)[0], 0.025)
    assert np.isclose(sol.shear_viscosity(t, x)[0], 0.0075)
    assert np.isclose(sol.volume_viscosity(t, x)[0], 0.005)


def test_viscous_inviscid_reduction():
    sol = viscous_solution(ell="1/2", d=1, a=0.5, c=0.75, eta0=0.0, xi0=0.0)
    assert np.isclose(sol.density(np.array([1.0]), np.array([[0.0]]))[0], 1.0)
    for ell, d in (("1/2", 2), ("5/2", 1), ("9/2", 2)):
        p = ViscousParams(ell=ell, d=d, a=0.5, c=0.4, eta0=0.1, xi0=0.0)
        vis = viscous_solution(p)
        ref = gca_scaling_solution(ell=ell, d=d, a=0.5, c=inviscid_constant(p))
        t, x = pts(d, 30, (1.0, 3.0), 1.0)
        assert np.allclose(vis.density(t, x), ref.density(t, x), rtol=1e-12)


def test_viscous_roots_are_roots():
    p = ViscousParams(ell="1/2", d=1, a=0.5, c=0.75, eta0=0.3, xi0=0.1)
    ysq = np.linspace(0, 9, 40)
    upper, lower = viscous_roots(ysq, p)
    assert np.all(upper > lower)
    assert np.max(np.abs(viscous_equation(upper, ysq, p))) <= 1e-12
    ok = lower > 0
    assert np.max(np.abs(viscous_equation(lower[ok], ysq[ok], p))) <= 1e-12


def test_viscous_branch_flag():
    sol = viscous_solution(ell="1/2", d=1, a=0.5, c=0.75, eta0=0.3, xi0=0.1)
    assert sol.metadata["ambiguous_root"] is True
    with pytest.raises(AmbiguousRoot):
        viscous_solution(ell="1/2", d=1, a=0.5, c=0.75, eta0=0.3, xi0=0.1, on_ambiguous="raise")
    with pytest.raises(NoRootInBracket):
        viscous_solution(ell="5/2", d=2, a=0.5, c=0.01, eta0=0.3, xi0=0.1)


def test_density_positive_on_domains():
    fams = [
        gca_scaling_solution(ell="9/2", d=3, a=0.5, c=0.1),
        lifshitz_scaling_solution(z="7/3", d=2, a=0.5, c=0.1),
        viscous_solution(ell="1/2", d=2, a=0.5, c=0.75, eta0=0.3, xi0=0.1),
    ]
    for sol in fams:
        t, x = pts(sol.dim, 10_000 if sol.dim < 3 else 2000)
        assert np.all(sol.density(t, x) > 0)


def test_negative_density_is_an_error():
    sol = quartic_1d_solution(c1=1, c2=0, a=1 / 3)
    with pytest.raises(Exception):
        sol.density(np.array([1.0]), np.array([[-1.0]]))
    flipped = continuity_branch_1d_solution(c=0.5, a=0.5)
    bad = flipped.density_fn(np.array([1.0]), np.array([[-1.0]]))
    assert bad[0] < 0
    with pytest.raises(NonPositiveDensity):
        from dataclasses import replace

        replace(flipped, domain=gca_scaling_solution(ell="1/2", d=1, a=0.5, c=0.1).domain).density(np.array([1.0]), np.array([[-1.0]]))


def test_time_offset_is_a_shift():
    a = gca_scaling_solution(ell="5/2", d=1, a=0.5, c=0.1, t0=0.7)
    b = gca_scaling_solution(ell="5/2", d=1, a=0.5, c=0.1)
    t, x = pts(1)
    assert np.allclose(a.density(t, x), b.density(t + 0.7, x), rtol=1e-15)


def test_crossing_property_at_origin():
    ts = np.linspace(0.01, 10, 4000)
    pairs = [("5/2", "1/2"), ("9/2", "5/2"), ("13/2", "1/2")]
    for hi, lo in pairs:
        r_hi = gca_scaling_solution(ell=hi, d=1, a=0.5, c=0.1).density(ts, np.zeros(len(ts)))
        r_lo = gca_scaling_solution(ell=lo, d=1, a=0.5, c=0.1).density(ts, np.zeros(len(ts)))
        diff = np.sign(r_hi - r_lo)
        changes = np.nonzero(diff[:-1] != diff[1:])[0]
        assert len(changes) == 1
        assert diff[0] < 0 < diff[-1] or diff[0] > 0 > diff[-1]


def test_catalog_manifest_and_builder():
    manifest = catalog_manifest()
    assert len(manifest) == 9
    json.dumps(manifest)
    assert set(CATALOG) == {m["family"] for m in manifest}
    sol = build_solution("gca-scaling", {"ell": "5/2", "d": "1", "a": "0.5", "c": "0.1"})
    assert sol.ell.value == Fraction(5, 2)
    with pytest.raises(InvalidParameter):
        build_solution("gca-scaling", {"ell": "5/2", "d": "1", "a": "0.5", "c": "0.1", "zz": 1})
    with pytest.raises(InvalidParameter):
        build_solution("nope", {})
    with pytest.raises(InvalidParameter):
        build_solution("viscous-integer", {"ell": "1/2", "d": 1, "a": 0.5, "c": 0.75, "eta0": 0, "xi0": 0})
