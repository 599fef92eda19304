import math

import numpy as np
import pytest

from confluid.catalog import gca_scaling_solution, lifshitz_scaling_solution
from confluid.errors import DomainExceeded, InvalidParameter
from confluid.figures import ROTATED_TRIPLE, fig3, fig4, fig4_labels
from confluid.kinematics import (
    QuadratureConfig,
    decompose_gradient,
    kinematic_decomposition,
    mass_in_ball,
    sign_changes,
    trace_orbit,
    trace_orbits,
)
from confluid.transforms import Sl2Element, apply_sl2


def test_bjorken_orbit_is_a_ray():
    sol = gca_scaling_solution(ell=1, d=1, a=0.5, c=0.1)
    o = trace_orbit(sol, [0.7], (2.0, 5.0), h=1e-2)
    assert o.complete and o.t[0] == 2.0 and o.t[-1] == 5.0
    assert np.max(np.abs(o.x[:, 0] - 0.7 * o.t / 2.0)) <= 1e-12


@pytest.mark.parametrize("ell", ["1/2", 1, "5/2"])
def test_scaling_orbits(ell):
    sol = gca_scaling_solution(ell=ell, d=2, a=0.5, c=0.1)
    b = np.array([0.2, -0.1])
    o = trace_orbit(sol, b, (1.0, 3.0), h=1e-3)
    p = float(sol.ell.value)
    exact = b * (o.t[:, None] / 1.0) ** p
    assert np.max(np.abs(o.x - exact)) <= 1e-9


def test_backward_trace_is_increasing_in_time():
    sol = gca_scaling_solution(ell=1, d=1, a=0.5, c=0.1)
    o = trace_orbit(sol, [1.0], (2.0, 0.5), h=0.1)
    assert np.all(np.diff(o.t) > 0)
    assert o.t[0] == 0.5 and o.t[-1] == 2.0
    assert np.isclose(o.at(1.0)[0], 0.5)


def test_zero_field_orbit_stays_put():
    o = trace_orbit(lambda t, x: np.zeros(2), [0.3, 0.4], (0.0, 1.0), h=0.1)
    assert np.all(o.x == [0.3, 0.4])
    assert len(o.t) == 11


def test_partial_orbit_flag():
    base = gca_scaling_solution(ell=1, d=1, a=0.5, c=0.1)
    sol = apply_sl2(Sl2Element.special_conformal(-0.1), base, t_range=(0.0, 5.0))
    o = trace_orbit(sol, [0.5], (1.0, 20.0), h=0.01, strict=False)
    assert not o.complete and o.t[-1] <= 5.0
    with pytest.raises(DomainExceeded) as info:
        trace_orbit(sol, [0.5], (1.0, 20.0), h=0.01)
    assert not info.value.orbit.complete
    with pytest.raises(InvalidParameter):
        trace_orbit(sol, [0.5], (1.0, 2.0), h=0.0)


def test_fig4_orbits_follow_quadratic_paths():
    data = fig4(h=1e-3, t_end=1e-3)
    assert len(data.tables) == 10
    a0, a1, a2 = map(np.asarray, ROTATED_TRIPLE)
    for b, table in zip(fig4_labels(), data.tables):
        rows = np.asarray(table.rows)
        t, x = rows[:, 0], rows[:, 1:]
        exact = a0 + np.outer(t, b) + np.outer(t**2, a2)
        assert np.max(np.abs(x - exact)) <= 1e-6
        assert t[0] == pytest.approx(1e-3) and t[-1] == 1.0


def test_batch_tracing_matches_single():
    from confluid.figures import fig4_field, fig4_start

    sol = fig4_field()
    starts = [fig4_start(b) for b in fig4_labels()[:3]]
    batch = trace_orbits(sol, starts, (1.0, 0.5), h=1e-2)
    for s, o in zip(starts, batch):
        single = trace_orbit(sol, s, (1.0, 0.5), h=1e-2)
        assert np.array_equal(single.x, o.x)


def test_scaling_decomposition():
    sol = gca_scaling_solution(ell="5/2", d=3, a=0.5, c=0.1)
    t = np.array([2.0, 3.0])
    x = np.array([[0.1, 0.2, -0.1], [0.0, 0.3, 0.2]])
    dec = kinematic_decomposition(sol, t, x)
    assert np.allclose(dec.expansion, 3 * 2.5 / t, rtol=1e-8)
    assert np.max(np.abs(dec.vorticity)) <= 1e-8
    assert np.max(np.abs(dec.shear)) <= 1e-8


def test_lifshitz_expansion():
    sol = lifshitz_scaling_solution(z="3/5", d=2, a=0.5, c=0.1)
    t = np.array([1.0, 4.0])
    x = np.array([[0.2, 0.1], [-0.3, 0.5]])
    dec = kinematic_decomposition(sol, t, x)
    assert np.allclose(dec.expansion, 2 / (2 * 0.6 * t), rtol=1e-8)


def test_rigid_rotation_is_pure_vorticity():
    G = np.array([[0.0, -1.0], [1.0, 0.0]])
    dec = decompose_gradient(G)
    assert np.allclose(dec.vorticity, 2 * G)
    assert np.allclose(dec.shear, 0) and dec.expansion == 0


def test_reassembly_on_random_gradients():
    rng = np.random.default_rng(7)
    for d in (1, 2, 3):
        dec = decompose_gradient(rng.normal(size=(50, d, d)))
        assert dec.reassembly_error() <= 1e-12
        assert np.allclose(np.trace(dec.shear, axis1=-2, axis2=-1), 0)


def test_unit_disk_mass():
    sol = gca_scaling_solution(ell=1, d=2, a=0.5, c=0.1)
    assert abs(mass_in_ball(sol, [0, 0], 1.0, 1.0) - 0.1 * math.pi) <= 1e-6
    assert mass_in_ball(sol, [0, 0], 0.0, 1.0) == 0.0


def test_quadrature_converges_at_second_order():
    sol = gca_scaling_solution(ell="1/2", d=2, a=0.5, c=0.1)
    ref = mass_in_ball(sol, [0.1, 0.0], 1.0, 2.0, QuadratureConfig(n=1024))
    ns = np.array([16, 32, 64, 128])
    errs = [abs(mass_in_ball(sol, [0.1, 0.0], 1.0, 2.0, QuadratureConfig(n=int(n))) - ref) for n in ns]
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert abs(slope - 2) <= 0.2


def test_small_ball_mass_scales_with_volume():
    sol = gca_scaling_solution(ell=1, d=3, a=0.5, c=0.1)
    rho = sol.density(np.array([2.0]), np.zeros((1, 3)))[0]
    for r in (1e-2, 1e-3):
        m = mass_in_ball(sol, np.zeros(3), r, 2.0, QuadratureConfig(n=16))
        assert m == pytest.approx(rho * 4 / 3 * math.pi * r**3, rel=2e-3)


def test_mask_quadrature_is_available():
    sol = gca_scaling_solution(ell=1, d=2, a=0.5, c=0.1)
    m = mass_in_ball(sol, [0, 0], 1.0, 1.0, QuadratureConfig(n=1000, method="mask"))
    assert abs(m - 0.1 * math.pi) <= 1e-4


def test_fig3_single_crossing():
    data = fig3(n_t=45, quad=QuadratureConfig(n=64))
    (cross,) = data.summary["crossings"]
    assert 0.9 < cross < 0.97


def test_sign_changes():
    t = np.linspace(0, 1, 11)
    assert sign_changes(t, t - 0.55) == pytest.approx([0.55])
    assert sign_changes(t, np.ones(11)) == []
