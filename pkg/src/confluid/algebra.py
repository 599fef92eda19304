"""Infinitesimal symmetry generators as vector fields on (t, x, rho, v) space.

Coefficients are polynomials with exact rational coefficients, so Lie brackets
and the structure relations are checked with no rounding at all.

Variables are indexed positionally: t is 0, x_i is i, rho is d + 1 and v_i is
d + 1 + i for i = 1..d.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .core import Rational, to_fraction, validate_ell, validate_z
from .errors import InvalidParameter, OutOfRangeAccelerationIndex, ParameterMismatch

Exponents = tuple[int, ...]


def variable_names(d: int) -> tuple[str, ...]:
    if d == 1:
        return ("t", "x", "rho", "v")
    return ("t", *(f"x{i}" for i in range(1, d + 1)), "rho", *(f"v{i}" for i in range(1, d + 1)))


class MultivariatePolynomial:
    """Sparse polynomial over the rationals in a fixed number of variables."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Exponents, Rational] | None = None):
        self.nvars = nvars
        clean = {}
        for exps, coeff in (terms or {}).items():
            if len(exps) != nvars:
                raise ValueError(f"exponent tuple {exps} does not have {nvars} entries")
            coeff = to_fraction(coeff)
            if coeff:
                clean[tuple(exps)] = clean.get(tuple(exps), 0) + coeff
        self.terms = {e: c for e, c in clean.items() if c}

    @classmethod
    def constant(cls, nvars: int, value: Rational) -> "MultivariatePolynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def monomial(cls, nvars: int, powers: Mapping[int, int], coeff: Rational = 1) -> "MultivariatePolynomial":
        exps = [0] * nvars
        for var, p in powers.items():
            if p < 0:
                raise ValueError("negative powers are not polynomial")
            exps[var] += p
        return cls(nvars, {tuple(exps): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "MultivariatePolynomial"):
        if self.nvars != other.nvars:
            raise ValueError("polynomials over different variable sets")

    def __add__(self, other):
        if not isinstance(other, MultivariatePolynomial):
            other = MultivariatePolynomial.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return _raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return _raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultivariatePolynomial):
            k = to_fraction(other)
            if not k:
                return _raw(self.nvars, {})
            return _raw(self.nvars, {e: c * k for e, c in self.terms.items()})
        self._check(other)
        out: dict[Exponents, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return _raw(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def derivative(self, var: int) -> "MultivariatePolynomial":
        out = {}
        for e, c in self.terms.items():
            p = e[var]
            if p:
                out[e[:var] + (p - 1,) + e[var + 1 :]] = c * p
        return _raw(self.nvars, out)

    def evaluate(self, point: Iterable[Rational]) -> Fraction:
        point = [to_fraction(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            term = c
            for v, p in zip(point, e):
                if p:
                    term *= v**p
            total += term
        return total

    def __eq__(self, other):
        if isinstance(other, MultivariatePolynomial):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == MultivariatePolynomial.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def format(self, names: tuple[str, ...] | None = None) -> str:
        if not self.terms:
            return "0"
        names = names or tuple(f"z{i}" for i in range(self.nvars))
        pieces = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            factors = [n if p == 1 else f"{n}**{p}" for n, p in zip(names, e) if p]
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = "*".join([f"({abs(c)})" if c.denominator != 1 else str(abs(c)), *factors])
            pieces.append(("-" if c < 0 else "+", body))
        first_sign, first = pieces[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"MultivariatePolynomial({self.format()})"


def _raw(nvars: int, terms: dict) -> MultivariatePolynomial:
    poly = MultivariatePolynomial.__new__(MultivariatePolynomial)
    poly.nvars = nvars
    poly.terms = terms
    return poly


@dataclass(frozen=True, eq=False)
class VectorFieldGenerator:
    """First-order differential operator sum_k coefficient_k * d/d(var_k).

    Only nonzero coefficients are stored. ``family`` is ``"gca"`` or
    ``"lifshitz"`` and ``parameter`` holds ell or z respectively.
    """

    d: int
    family: str
    parameter: Fraction
    coefficients: Mapping[int, MultivariatePolynomial]
    label: str = ""
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def nvars(self) -> int:
        return 2 * self.d + 2

    def coefficient(self, var: int) -> MultivariatePolynomial:
        return self.coefficients.get(var) or _raw(self.nvars, {})

    def apply(self, poly: MultivariatePolynomial) -> MultivariatePolynomial:
        """Action on a polynomial function of (t, x, rho, v)."""
        out = _raw(self.nvars, {})
        for var, coeff in self.coefficients.items():
            dp = poly.derivative(var)
            if dp.terms:
                out = out + coeff * dp
        return out

    def _like(self, coefficients: Mapping[int, MultivariatePolynomial], label: str) -> "VectorFieldGenerator":
        coefficients = {k: c for k, c in coefficients.items() if c.terms}
        return VectorFieldGenerator(self.d, self.family, self.parameter, coefficients, label)

    def is_zero(self) -> bool:
        return not self.coefficients

    def __add__(self, other: "VectorFieldGenerator") -> "VectorFieldGenerator":
        _same_space(self, other)
        keys = set(self.coefficients) | set(other.coefficients)
        return self._like({k: self.coefficient(k) + other.coefficient(k) for k in keys}, f"{self.label} + {other.label}")

    def __neg__(self):
        return self._like({k: -c for k, c in self.coefficients.items()}, f"-{self.label}")

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar: Rational):
        scalar = to_fraction(scalar)
        return self._like({k: c * scalar for k, c in self.coefficients.items()}, f"({scalar})*{self.label}")

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, VectorFieldGenerator):
            return NotImplemented
        return (
            self.d == other.d
            and self.family == other.family
            and self.parameter == other.parameter
            and dict(self.coefficients) == dict(other.coefficients)
        )

    def __hash__(self):
        return hash((self.d, self.family, self.parameter, frozenset(self.coefficients.items())))

    def format(self) -> str:
        if self.is_zero():
            return "0"
        names = variable_names(self.d)
        text = ""
        for var in sorted(self.coefficients):
            coeff = self.coefficients[var].format(names)
            if len(self.coefficients[var].terms) > 1:
                coeff = f"({coeff})"
            sign = "-" if coeff.startswith("-") else "+"
            body = f"{coeff.lstrip('-')}*d_{names[var]}"
            text = (("-" if sign == "-" else "") + body) if not text else f"{text} {sign} {body}"
        return text

    def __repr__(self):
        return f"VectorFieldGenerator[{self.label}]({self.format()})"


def _same_space(a: VectorFieldGenerator, b: VectorFieldGenerator):
    if (a.d, a.family, a.parameter) != (b.d, b.family, b.parameter):
        raise ParameterMismatch(
            f"generators live on different algebras: ({a.family}, {a.parameter}, d={a.d}) "
            f"vs ({b.family}, {b.parameter}, d={b.d})"
        )


def commutator(a: VectorFieldGenerator, b: VectorFieldGenerator) -> VectorFieldGenerator:
    """Lie bracket [a, b] = a(b^k) - b(a^k) for every component k."""
    _same_space(a, b)
    keys = set(a.coefficients) | set(b.coefficients)
    coeffs = {k: a.apply(b.coefficient(k)) - b.apply(a.coefficient(k)) for k in keys}
    return a._like(coeffs, f"[{a.label},{b.label}]")


def make_generator(
    label: str,
    ell_or_z: Rational | float,
    d: int,
    n: int | None = None,
    i: int = 1,
    family: str = "gca",
) -> VectorFieldGenerator:
    """Field-extended generator H, D, K or C (acceleration C^(n)_i).

    For the Lifshitz family only H, D and C with n in {0, 1} exist.
    """
    if d < 1:
        raise InvalidParameter("spatial dimension must be positive")
    if not 1 <= i <= d:
        raise InvalidParameter(f"component index {i} outside 1..{d}")
    nv = 2 * d + 2
    t, rho = 0, d + 1
    xs = list(range(1, d + 1))
    vs = list(range(d + 2, 2 * d + 2))

    def mono(coeff, **powers):
        return MultivariatePolynomial.monomial(nv, {_var(k, d): p for k, p in powers.items()}, coeff)

    label = label.upper()
    if family == "gca":
        ell = validate_ell(ell_or_z)
        p = ell.value
        coeffs: dict[int, MultivariatePolynomial] = {}
        if label == "H":
            coeffs[t] = mono(1)
        elif label == "D":
            coeffs[t] = mono(1, t=1)
            coeffs[rho] = mono(-p * d, rho=1)
            for j in range(d):
                coeffs[xs[j]] = MultivariatePolynomial.monomial(nv, {xs[j]: 1}, p)
                coeffs[vs[j]] = MultivariatePolynomial.monomial(nv, {vs[j]: 1}, p - 1)
        elif label == "K":
            coeffs[t] = mono(1, t=2)
            coeffs[rho] = MultivariatePolynomial.monomial(nv, {t: 1, rho: 1}, -2 * p * d)
            for j in range(d):
                coeffs[xs[j]] = MultivariatePolynomial.monomial(nv, {t: 1, xs[j]: 1}, 2 * p)
                coeffs[vs[j]] = MultivariatePolynomial.monomial(nv, {xs[j]: 1}, 2 * p) + MultivariatePolynomial.monomial(
                    nv, {t: 1, vs[j]: 1}, 2 * (p - 1)
                )
        elif label == "C":
            if n is None or not 0 <= n <= ell.doubled:
                raise OutOfRangeAccelerationIndex(f"acceleration index {n} outside 0..{ell.doubled}")
            coeffs[xs[i - 1]] = MultivariatePolynomial.monomial(nv, {t: n})
            if n:
                coeffs[vs[i - 1]] = MultivariatePolynomial.monomial(nv, {t: n - 1}, n)
        else:
            raise InvalidParameter(f"unknown generator {label!r}")
        name = label if label != "C" else f"C{n}_{i}"
        return VectorFieldGenerator(d, "gca", p, coeffs, name, {"rho_coefficient_of_C": "zero (density invariant)"})

    if family == "lifshitz":
        z = validate_z(ell_or_z)
        coeffs = {}
        if label == "H":
            coeffs[t] = mono(1)
        elif label == "D":
            coeffs[t] = mono(z, t=1)
            coeffs[rho] = mono(Fraction(-d, 2), rho=1)
            for j in range(d):
                coeffs[xs[j]] = MultivariatePolynomial.monomial(nv, {xs[j]: 1}, Fraction(1, 2))
                coeffs[vs[j]] = MultivariatePolynomial.monomial(nv, {vs[j]: 1}, Fraction(1, 2) - z)
        elif label == "C":
            if n not in (0, 1):
                raise OutOfRangeAccelerationIndex(f"Lifshitz acceleration index must be 0 or 1, got {n}")
            coeffs[xs[i - 1]] = MultivariatePolynomial.monomial(nv, {t: n})
            if n:
                coeffs[vs[i - 1]] = mono(1)
        else:
            raise InvalidParameter(f"generator {label!r} is not part of the Lifshitz algebra")
        name = label if label != "C" else f"C{n}_{i}"
        return VectorFieldGenerator(d, "lifshitz", z, coeffs, name)

    raise InvalidParameter(f"unknown algebra family {family!r}")


def _var(key: str, d: int) -> int:
    return {"t": 0, "rho": d + 1}[key]


def generator_basis(family: str, ell_or_z, d: int) -> list[VectorFieldGenerator]:
    """All generators of the algebra (rotations excluded)."""
    if family == "gca":
        ell = validate_ell(ell_or_z)
        basis = [make_generator(lbl, ell.value, d) for lbl in "HDK"]
        basis += [make_generator("C", ell.value, d, n=n, i=i) for n in range(ell.doubled + 1) for i in range(1, d + 1)]
        return basis
    if family == "lifshitz":
        basis = [make_generator(lbl, ell_or_z, d, family="lifshitz") for lbl in "HD"]
        basis += [make_generator("C", ell_or_z, d, n=n, i=i, family="lifshitz") for n in (0, 1) for i in range(1, d + 1)]
        return basis
    raise InvalidParameter(f"unknown algebra family {family!r}")


def _expected_bracket(family: str, a: VectorFieldGenerator, b: VectorFieldGenerator, lookup) -> VectorFieldGenerator:
    """Right-hand side of [a, b] from the tabulated structure relations."""
    zero = a._like({}, "0")
    ka, kb = _kind(a), _kind(b)
    if ka == kb and a.label == b.label:
        return zero
    if family == "gca":
        ell = a.parameter
        table = {
            ("H", "D"): lambda: lookup("H"),
            ("H", "K"): lambda: 2 * lookup("D"),
            ("D", "K"): lambda: lookup("K"),
        }
        if (ka[0], kb[0]) in table:
            return table[(ka[0], kb[0])]()
        if (kb[0], ka[0]) in table:
            return -table[(kb[0], ka[0])]()
        if ka[0] == "C" and kb[0] == "C":
            return zero
        if kb[0] == "C":
            n, i = kb[1], kb[2]
            if ka[0] == "H":
                return n * lookup(f"C{n - 1}_{i}") if n else zero
            if ka[0] == "D":
                return (n - ell) * lookup(f"C{n}_{i}")
            if ka[0] == "K":
                return (n - 2 * ell) * lookup(f"C{n + 1}_{i}") if n - 2 * ell else zero
        if ka[0] == "C":
            return -_expected_bracket(family, b, a, lookup)
    else:
        z = a.parameter
        if (ka[0], kb[0]) == ("H", "D"):
            return z * lookup("H")
        if (ka[0], kb[0]) == ("D", "H"):
            return -z * lookup("H")
        if ka[0] == "C" and kb[0] == "C":
            return zero
        if kb[0] == "C":
            n, i = kb[1], kb[2]
            if ka[0] == "H":
                return lookup(f"C0_{i}") if n == 1 else zero
            if ka[0] == "D":
                return (n - Fraction(1, 2) if n == 0 else z - Fraction(1, 2)) * lookup(f"C{n}_{i}")
        if ka[0] == "C":
            return -_expected_bracket(family, b, a, lookup)
    raise AssertionError(f"no structure relation for [{a.label},{b.label}]")


def _kind(g: VectorFieldGenerator):
    if g.label.startswith("C"):
        n, i = g.label[1:].split("_")
        return ("C", int(n), int(i))
    return (g.label,)


@dataclass
class AlgebraReport:
    family: str
    parameter: Fraction
    d: int
    relations: list[dict]
    jacobi_checked: int = 0
    jacobi_failures: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r["match"] for r in self.relations) and not self.jacobi_failures

    def mismatches(self) -> list[dict]:
        return [r for r in self.relations if not r["match"]]

    def to_json(self) -> str:
        payload = {
            "family": self.family,
            "parameter": str(self.parameter),
            "d": self.d,
            "ok": self.ok,
            "relations": self.relations,
            "jacobi_checked": self.jacobi_checked,
            "jacobi_failures": self.jacobi_failures,
            "metadata": self.metadata,
        }
        return json.dumps(payload, indent=2)


def verify_structure_relations(family: str, ell_or_z, d: int, jacobi: bool = False) -> AlgebraReport:
    """Compare every bracket of basis generators against the structure relations.

    ``family`` is ``"gca"`` (ell-conformal Galilei) or ``"lifshitz"``. Mismatches
    are recorded in the report rather than raised.
    """
    family = {"galileiconformal": "gca", "galilei": "gca"}.get(family.lower(), family.lower())
    basis = generator_basis(family, ell_or_z, d)
    by_label = {g.label: g for g in basis}
    relations = []
    brackets = {}
    for a, b in itertools.combinations(basis, 2):
        lhs = commutator(a, b)
        brackets[(a.label, b.label)] = lhs
        rhs = _expected_bracket(family, a, b, by_label.__getitem__)
        relations.append({"relation": f"[{a.label},{b.label}]", "lhs": lhs.format(), "rhs": rhs.format(), "match": lhs == rhs})
    report = AlgebraReport(family, basis[0].parameter, d, relations)
    report.metadata["field_extended"] = True
    if family == "gca":
        report.metadata["acceleration_rho_coefficient"] = "0, density invariant under accelerations"
    if jacobi:
        for a, b, c in itertools.combinations(basis, 3):
            total = (
                commutator(a, brackets[(b.label, c.label)])
                + commutator(b, -brackets[(a.label, c.label)])
                + commutator(c, brackets[(a.label, b.label)])
            )
            report.jacobi_checked += 1
            if not total.is_zero():
                report.jacobi_failures.append(f"({a.label},{b.label},{c.label}): {total.format()}")
    return report
