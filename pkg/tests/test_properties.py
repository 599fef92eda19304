"""Randomized invariants (hypothesis)."""
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from confluid.algebra import commutator, make_generator
from confluid.core import ell_product, validate_ell
from confluid.kinematics import decompose_gradient
from confluid.material import (
    AffineVelocity1d,
    LaurentPolynomial,
    material_derivative_affine,
    material_derivative_radial,
)
from confluid.residuals import Grid
from confluid.transforms import AccelerationElement, Sl2Element

doubled_ell = st.integers(min_value=1, max_value=20)
small_fracs = st.fractions(min_value=-5, max_value=5, max_denominator=6)
laurent = st.dictionaries(st.integers(-4, 4), small_fracs, max_size=4).map(LaurentPolynomial)


@given(doubled_ell)
def test_admissible_iff_product_nonpositive(m):
    ell = validate_ell(Fraction(m, 2))
    assert ell.is_admissible() == (ell_product(ell) <= 0)
    assert (ell_product(ell) == 0) == ell.is_integer()


@given(doubled_ell)
def test_ell_string_round_trip(m):
    ell = validate_ell(Fraction(m, 2))
    assert validate_ell(Fraction(str(ell))) == ell


@given(laurent, laurent, laurent)
def test_laurent_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert (p - p).is_zero()


@given(laurent, laurent)
def test_laurent_leibniz(p, q):
    assert (p * q).derivative() == p.derivative() * q + p * q.derivative()


@given(laurent, st.floats(0.5, 3.0))
def test_laurent_evaluation_is_a_homomorphism(p, t):
    q = p * p
    assert np.isclose(q(t), p(t) ** 2, rtol=1e-9, atol=1e-9)


@given(doubled_ell, st.integers(0, 8))
def test_radial_material_derivative_matches_affine(m, k):
    ell = Fraction(m, 2)
    v = AffineVelocity1d(LaurentPolynomial.monomial(-1, ell), LaurentPolynomial())
    dk = material_derivative_affine(v, k)
    assert dk.B.is_zero()
    assert dk.A == LaurentPolynomial.monomial(-(k + 1), material_derivative_radial(ell, k))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["1/2", "1", "3/2", "5/2"]), st.sampled_from("HDK"), st.sampled_from("HDK"))
def test_commutator_antisymmetry(ell, a, b):
    ga, gb = make_generator(a, ell, 2), make_generator(b, ell, 2)
    assert (commutator(ga, gb) + commutator(gb, ga)).is_zero()


@given(st.floats(0.5, 2.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5),
       st.floats(0.5, 2.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0.1, 1.0))
def test_sl2_action_is_a_group_action(a1, b1, c1, a2, b2, c2, t):
    g, h = Sl2Element.completing(a1, b1, c1), Sl2Element.completing(a2, b2, c2)
    inner = h.act(t)
    if abs(h.gamma * t + h.delta) < 1e-3 or abs(g.gamma * inner + g.delta) < 1e-3:
        return
    assert np.isclose((g @ h).act(t), g.act(inner), rtol=1e-9, atol=1e-9)


@given(st.lists(st.lists(st.floats(-2, 2), min_size=2, max_size=2), min_size=1, max_size=4),
       st.lists(st.lists(st.floats(-2, 2), min_size=2, max_size=2), min_size=1, max_size=4))
def test_acceleration_composition_commutes(u, w):
    a, b = AccelerationElement(u), AccelerationElement(w)
    assert np.array_equal((a @ b).vectors, (b @ a).vectors)


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_decomposition_reassembles(d, seed):
    G = np.random.default_rng(seed).normal(size=(5, d, d))
    dec = decompose_gradient(G)
    assert dec.reassembly_error() <= 1e-12
    assert np.allclose(dec.vorticity, -np.swapaxes(dec.vorticity, -1, -2))
    assert np.allclose(dec.shear, np.swapaxes(dec.shear, -1, -2))


@settings(deadline=None)
@given(st.integers(1, 3), st.integers(2, 12), st.integers(0, 1000))
def test_grid_subsample_is_seeded(d, n, seed):
    spec = f"t=1:2:{n},x=-1:1:{n}"
    a = Grid.parse(spec, d, max_points=7, seed=seed).points()
    b = Grid.parse(spec, d, max_points=7, seed=seed).points()
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert a[0].size == min(7, n ** (d + 1))
