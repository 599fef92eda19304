from fractions import Fraction

import numpy as np
import pytest

from confluid.core import (
    EllParameter,
    EquationOfState,
    ExcludedRegion,
    SpacetimeDomain,
    ell_product,
    validate_ell,
    validate_z,
)
from confluid.errors import DynamicalExponentOutOfRange, EllTooLarge, InvalidParameter, NonPositive, NotHalfInteger


def test_integer_ell_is_admissible():
    ell = validate_ell(1)
    assert ell.is_integer() and not ell.is_half_integer()
    assert ell.is_admissible()


def test_five_halves_is_admissible_half_integer():
    ell = validate_ell("5/2")
    assert ell.is_half_integer()
    assert ell.is_admissible()
    assert ell.doubled == 5


def test_three_halves_is_valid_but_not_admissible():
    ell = validate_ell(Fraction(3, 2))
    assert isinstance(ell, EllParameter)
    assert not ell.is_admissible()
    assert ell_product(ell) == Fraction(9, 16)


def test_rejections():
    with pytest.raises(NotHalfInteger):
        validate_ell(Fraction(2, 3))
    with pytest.raises(NonPositive):
        validate_ell(0)
    with pytest.raises(NonPositive):
        validate_ell(Fraction(-1, 2))
    with pytest.raises(EllTooLarge):
        validate_ell(Fraction(21, 2))


@pytest.mark.parametrize("ell, expected", [(1, Fraction(0)), ("1/2", Fraction(-1, 4)), ("5/2", Fraction(-225, 64))])
def test_ell_product_values(ell, expected):
    assert ell_product(validate_ell(ell)) == expected


def test_ell_product_sign_pattern():
    for k in range(5):
        assert ell_product(Fraction(1 + 4 * k, 2)) < 0
        if 3 + 4 * k <= 20:
            assert ell_product(Fraction(3 + 4 * k, 2)) > 0
    for n in range(1, 11):
        assert ell_product(n) == 0


def test_equation_of_state_exponents():
    assert EquationOfState.galilei(0.5, Fraction(5, 2), 2).exponent == Fraction(6, 5)
    assert EquationOfState.lifshitz(0.5, Fraction(3, 5), 2).exponent == 1 + Fraction(2, 10)
    eos = EquationOfState.galilei(2.0, 1, 3)
    rho = np.linspace(1e-3, 5, 200)
    assert np.all(np.diff(eos.pressure(rho)) > 0)
    with pytest.raises(InvalidParameter):
        EquationOfState.galilei(0.0, 1, 1)


def test_z_validation():
    assert validate_z("7/3") == Fraction(7, 3)
    for bad in ("1/2", 0.4):
        with pytest.raises(DynamicalExponentOutOfRange):
            validate_z(bad)


def test_domain_sampling_skips_excluded_points():
    dom = SpacetimeDomain(1, (0.0, 5.0), ((-1.0, 1.0),), (ExcludedRegion("x = 0", lambda t, x: x[..., 0] == 0),))
    t, x = dom.sample(5, 11)
    assert t.min() > 0
    assert not np.any(x[:, 0] == 0)
    assert len(t) == 5 * 10


def test_domain_rejects_negative_start():
    with pytest.raises(InvalidParameter):
        SpacetimeDomain(1, (-1.0, 1.0))
