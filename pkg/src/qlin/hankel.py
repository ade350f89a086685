"""Exact determinants by fraction-free (Bareiss) elimination."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Sequence


def _to_integer_matrix(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[int]], int]:
    den = reduce(math.lcm, (Fraction(x).denominator for row in rows for x in row), 1)
    ints = [[int(Fraction(x) * den) for x in row] for row in rows]
    return ints, den


def bareiss_det(matrix: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix, with row pivoting."""
    a = [list(row) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k][k]
        for i in range(k + 1, n):
            row_i, row_k = a[i], a[k]
            aik = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
    return sign * a[n - 1][n - 1]


def det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    ints, den = _to_integer_matrix(rows)
    return Fraction(bareiss_det(ints), den ** len(rows))


def hankel_matrix(seq: Sequence[Fraction], n: int) -> list[list[Fraction]]:
    return [[seq[i + j] for j in range(n)] for i in range(n)]


def leading_minors(matrix: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    """All leading principal minors ``det(M[:k, :k])`` for k = 1..n.

    Without pivoting the Bareiss pivots are exactly these minors; after the
    first zero pivot the remaining minors are computed one by one.
    """
    ints, den = _to_integer_matrix(matrix)
    n = len(ints)
    a = [list(row) for row in ints]
    minors: list[int] = []
    prev = 1
    k = 0
    while k < n:
        pivot = a[k][k]
        minors.append(pivot)
        if pivot == 0:
            break
        for i in range(k + 1, n):
            row_i, row_k = a[i], a[k]
            aik = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
        k += 1
    for size in range(len(minors) + 1, n + 1):
        minors.append(bareiss_det([row[:size] for row in ints[:size]]))
    return [Fraction(mnr, den ** (i + 1)) for i, mnr in enumerate(minors)]
