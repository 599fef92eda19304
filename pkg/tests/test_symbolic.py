"""Independent symbolic checks with sympy."""
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from confluid.catalog import gca_scaling_solution, quartic_1d_solution
from confluid.core import ell_product
from confluid.material import material_derivative_radial

t, A, C = sp.symbols("t a c", positive=True)


def scaling_fields(ell, d):
    xs = sp.symbols(f"x1:{d + 1}", real=True)
    r2 = sum(x**2 for x in xs)
    ell = sp.Rational(ell)
    prod = sp.Rational(str(ell_product(Fraction(str(ell)))))
    base = C / t - prod * r2 / (2 * A * (1 + ell * d) * t ** (2 * ell + 1))
    # integer ell: the bracket collapses to c/t and the density is c / t^(ell d)
    rho = C / t ** (ell * d) if ell.is_integer else base ** (ell * d)
    v = [ell * x / t for x in xs]
    p = A * rho ** (1 + 1 / (ell * d))
    return xs, rho, v, p


def material(f, v, xs, k):
    for _ in range(k):
        f = sp.diff(f, t) + sum(vi * sp.diff(f, x) for vi, x in zip(v, xs))
    return f


@pytest.mark.parametrize("ell,d", [("1/2", 1), ("1/2", 2), ("5/2", 1), ("9/2", 1), ("2", 2)])
def test_scaling_solution_solves_the_equations(ell, d):
    xs, rho, v, p = scaling_fields(ell, d)
    cont = sp.diff(rho, t) + sum(sp.diff(rho * vi, x) for vi, x in zip(v, xs))
    assert sp.simplify(cont / rho) == 0
    k = int(2 * sp.Rational(ell))
    for i, x in enumerate(xs):
        euler = rho * material(v[i], v, xs, k) + sp.diff(p, x)
        assert sp.simplify(euler / rho) == 0


@pytest.mark.parametrize("ell,d", [("1/2", 2), ("5/2", 1), (1, 3)])
def test_library_density_matches_symbolic_form(ell, d):
    xs, rho, _, _ = scaling_fields(ell, d)
    sol = gca_scaling_solution(ell=ell, d=d, a=0.5, c=0.1)
    f = sp.lambdify((t, *xs), rho.subs({A: 0.5, C: 0.1}), "numpy")
    tt = np.array([2.0, 3.5])
    pts = np.array([[0.1 * (i + 1) for i in range(d)], [-0.2] * d])
    assert np.allclose(sol.density(tt, pts), f(tt, *pts.T), rtol=1e-13)


@pytest.mark.parametrize("k", range(7))
def test_radial_material_derivative_coefficients(k):
    x = sp.Symbol("x", real=True)
    for ell in ("1/2", "2", "5/2"):
        v = sp.Rational(ell) * x / t
        dk = sp.simplify(material(v, [v], [x], k) * t ** (k + 1) / x)
        assert dk == sp.Rational(str(material_derivative_radial(Fraction(ell), k)))


def test_quartic_family_residuals_at_high_precision():
    c1, c2, a = 1, 0, sp.Rational(1, 3)
    x = sp.Symbol("x", positive=True)
    y = x**2 / t
    u = y / 2 + sp.sqrt((y / 2 + c1) ** 2 - c1**2) / 2 + sp.sqrt((y / 2 + c2) ** 2 - c2**2) / 2
    w = (c1 - c2) / (4 * sp.sqrt(3 * a)) * y / (u - y / 2)
    v, rho = u / x, w / x
    cont = sp.diff(rho, t) + sp.diff(rho * v, x)
    euler = rho * (sp.diff(v, t) + v * sp.diff(v, x)) + sp.diff(a * rho**3, x)
    sol = quartic_1d_solution(c1=1, c2=0, a=1 / 3)
    for tv, xv in ((1.0, 0.5), (2.0, 1.3), (3.0, 4.0)):
        subs = {t: sp.Float(tv, 50), x: sp.Float(xv, 50)}
        scale = abs(rho.evalf(50, subs=subs)) * abs(sp.diff(v, t).evalf(50, subs=subs)) + 1
        assert abs(cont.evalf(50, subs=subs)) / scale < 1e-40
        assert abs(euler.evalf(50, subs=subs)) / scale < 1e-40
        assert sol.density(np.array([tv]), np.array([[xv]]))[0] == pytest.approx(float(rho.evalf(30, subs=subs)), rel=1e-13)
        assert sol.velocity(np.array([tv]), np.array([[xv]]))[0, 0] == pytest.approx(float(v.evalf(30, subs=subs)), rel=1e-13)


@pytest.mark.parametrize("ell", ["1/2", "5/2"])
def test_sl2_image_top_material_derivative(ell):
    from confluid.transforms import Sl2Element, apply_sl2

    # symbolic image of v = ell x / t under t' = (al t + be)/(ga t + de)
    al, be, ga = sp.Rational(11, 10), sp.Rational(1, 5), sp.Rational(-1, 20)
    de = (1 + be * ga) / al
    x = sp.Symbol("x", real=True)
    lv = sp.Rational(ell)
    n = int(2 * lv)
    s = -ga * t + al  # h_gamma t + h_delta with h the inverse element
    tb = (de * t - be) / s
    xb = x * s ** (-2 * lv)
    v_img = s ** (2 * lv - 2) * (lv * xb / tb) + 2 * lv * (-ga) * s ** (2 * lv - 1) * xb
    dn = sp.simplify(material(v_img, [v_img], [x], n))

    image = apply_sl2(Sl2Element(float(al), float(be), float(ga), float(de)), gca_scaling_solution(ell=ell, d=1, a=0.5, c=0.1))
    tt = np.array([2.0, 3.0, 3.7])
    xx = np.array([[0.3], [-0.8], [1.5]])
    got = image.exact_material_derivative(tt, xx, n)[:, 0]
    assert np.allclose(got, sp.lambdify((t, x), dn, "numpy")(tt, xx[:, 0]), rtol=1e-12, atol=1e-15)
