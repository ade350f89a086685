import math
from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from qlin.places import (
    INFINITY,
    Place,
    abs_value,
    format_rational,
    height_poly,
    height_poly_excluding,
    height_scalar,
    height_vector,
    length,
    log2_lower,
    log2_upper,
    parse_rational,
    place_product,
    poly_norm_v,
    support,
    valuation,
)

nonzero = st.fractions(max_denominator=10**6).filter(lambda x: x != 0)
P2 = Place(2)


def test_abs_value_examples():
    assert abs_value(P2, F(8)) == F(1, 8)
    assert abs_value(INFINITY, F(-3, 2)) == F(3, 2)
    assert abs_value(P2, F(3, 2)) == 2
    assert abs_value(Place(5), 0) == 0


def test_place_validation_and_parsing():
    with pytest.raises(ValueError):
        Place(4)
    assert Place.parse("p:7") == Place(7)
    assert Place.parse("infinity") is INFINITY or Place.parse("infinity") == INFINITY
    assert str(Place(3)) == "p:3" and Place(3).local_degree == 1


def test_height_vector_examples():
    assert height_vector([1, F(3, 2)]) == 3
    assert height_vector([2, 3]) == 3
    assert height_vector([7, 7]) == 1
    with pytest.raises(ValueError, match="height of zero vector undefined"):
        height_vector([0, 0])


def test_poly_norm_and_heights():
    poly = [0, F(-1, 2), 3]
    assert poly_norm_v(poly, INFINITY) == F(7, 2)
    assert poly_norm_v(poly, P2) == 2
    assert poly_norm_v([0, 1], Place(11)) == 1
    assert height_poly([2, 3]) == 5
    assert height_poly([F(1, 2)]) == 1
    assert height_poly_excluding([2, 3], INFINITY) == 1
    assert length(poly) == F(7, 2) and length([]) == 0 and length([1, 0, 1, 1]) == 3
    with pytest.raises(ValueError):
        poly_norm_v([0, 0], INFINITY)


def test_rational_serialization():
    assert format_rational(F(-1, 2)) == "-1/2"
    assert format_rational(F(3)) == "3"
    assert parse_rational("6/4") == F(3, 2)
    with pytest.raises(ValueError):
        parse_rational("1/0")


@settings(max_examples=200)
@given(nonzero)
def test_product_formula(x):
    assert math.prod(abs_value(v, x) for v in support([x])) == 1


@settings(max_examples=200)
@given(nonzero)
def test_fundamental_inequality(x):
    H = height_scalar(x)
    for v in support([x]):
        a = abs_value(v, x)
        assert 1 / H <= a <= H


@settings(max_examples=500)
@given(nonzero)
def test_scalar_height_closed_form(x):
    assert height_scalar(x) == max(abs(x.numerator), x.denominator)


@given(st.lists(st.fractions(max_denominator=1000), min_size=2, max_size=5).filter(any), nonzero)
def test_height_projective_invariance_and_oracle(vec, t):
    assert height_vector(vec) == height_vector([t * a for a in vec])
    assert height_vector(vec) == place_product(vec)


@given(nonzero, st.sampled_from([2, 3, 5, 7]))
def test_valuation_matches_factorization(x, p):
    num = sympy.factorint(abs(x.numerator)).get(p, 0)
    den = sympy.factorint(x.denominator).get(p, 0)
    assert valuation(x, p) == num - den


@given(st.fractions(min_value=F(1, 10**6), max_value=10**6))
def test_log2_bounds_are_outward(x):
    lo, hi = log2_lower(x), log2_upper(x)
    assert lo <= hi
    assert hi - lo <= F(1, 2**18)
    # the bounds carry 2**-20 slack, far above float error
    assert float(lo) <= math.log2(x) <= float(hi)
