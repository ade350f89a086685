import random
from fractions import Fraction as F

import sympy

from qlin.hankel import bareiss_det, det, hankel_matrix, leading_minors


def _random_matrix(rng, n, zero_rate=0.0):
    return [[0 if rng.random() < zero_rate else F(rng.randint(-30, 30), rng.randint(1, 6)) for _ in range(n)] for _ in range(n)]


def test_det_matches_sympy():
    rng = random.Random(3)
    for n in range(1, 8):
        for rate in (0.0, 0.5):
            m = _random_matrix(rng, n, rate)
            assert det(m) == sympy.Matrix(m).det()


def test_pivoting_case():
    assert bareiss_det([[0, 1], [1, 0]]) == -1
    assert bareiss_det([[0, 0], [1, 2]]) == 0
    assert bareiss_det([]) == 1


def test_leading_minors_with_zero_pivot():
    rng = random.Random(5)
    for _ in range(20):
        m = _random_matrix(rng, 6, 0.4)
        m[0][0] = 0
        expect = [det([row[:k] for row in m[:k]]) for k in range(1, 7)]
        assert leading_minors(m) == expect


def test_hankel_matrix_shape():
    assert hankel_matrix([1, 2, 3], 2) == [[1, 2], [2, 3]]
