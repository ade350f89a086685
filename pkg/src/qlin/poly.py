"""Rational polynomials in one variable.

Backed by FLINT's ``fmpq_poly`` for the large z-polynomials that appear in the
auxiliary forms; small helpers convert to and from ``Fraction`` data.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from flint import fmpq, fmpq_poly

from .places import NEG_INF

RationalPolynomial = fmpq_poly

ZERO = fmpq_poly([])
ONE = fmpq_poly([1])


def to_fmpq(x) -> fmpq:
    x = Fraction(x)
    return fmpq(x.numerator, x.denominator)


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(int(x.p), int(x.q))


def from_coeffs(coeffs: Sequence) -> fmpq_poly:
    """Build a polynomial from ascending coefficients."""
    return fmpq_poly([to_fmpq(c) for c in coeffs])


def coeffs(poly: fmpq_poly) -> list[Fraction]:
    return [to_fraction(c) for c in poly.coeffs()]


def degree(poly: fmpq_poly):
    """Degree, with ``-inf`` for the zero polynomial."""
    d = poly.degree()
    return NEG_INF if d < 0 else d


def monomial(c, k: int) -> fmpq_poly:
    """``c * z**k``."""
    return fmpq_poly([0] * k + [to_fmpq(c)])


def shift(poly: fmpq_poly, k: int) -> fmpq_poly:
    """Multiply by ``z**k`` (k >= 0)."""
    if k == 0 or poly.is_zero():
        return poly
    return poly.left_shift(k)


def ord_z(poly: fmpq_poly) -> int | float:
    """Least exponent with nonzero coefficient; ``inf`` for zero."""
    if poly.is_zero():
        return math.inf
    for i, c in enumerate(poly.coeffs()):
        if c != 0:
            return i
    raise AssertionError("unreachable")


def evaluate(poly: fmpq_poly, x) -> Fraction:
    if poly.is_zero():
        return Fraction(0)
    return to_fraction(poly(to_fmpq(x)))


def eval_dense(cs: Sequence[Fraction], x) -> Fraction:
    """Horner evaluation of an ascending coefficient list."""
    acc = Fraction(0)
    for c in reversed(cs):
        acc = acc * x + c
    return acc


def trim(cs: Sequence) -> list[Fraction]:
    cs = [Fraction(c) for c in cs]
    while cs and cs[-1] == 0:
        cs.pop()
    return cs


def dense_degree(cs: Sequence):
    cs = trim(cs)
    return len(cs) - 1 if cs else NEG_INF


def integer_content_ok(poly: fmpq_poly) -> bool:
    """True when every coefficient is an integer."""
    return poly.denom() == 1
