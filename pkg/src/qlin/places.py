"""Places of Q, normalized absolute values and heights.

Every quantity here is an exact :class:`~fractions.Fraction`.  The normalization
is the usual one: ``|p|_p = 1/p`` and ``|x|_inf = |x|``, so the product formula
holds with all local degrees equal to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import sympy

Rational = Fraction

#: degree of the zero polynomial; excluded from every max()
NEG_INF = float("-inf")


def parse_rational(text) -> Fraction:
    """Parse ``"num/den"`` (or an int / Fraction) into a reduced Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    text = str(text).strip()
    if not text:
        raise ValueError("empty rational")
    try:
        if "/" in text:
            num, den = text.split("/")
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True, order=True)
class Place:
    """A place of Q: ``prime is None`` is the archimedean place."""

    prime: int | None = None

    def __post_init__(self):
        if self.prime is not None and not sympy.isprime(self.prime):
            raise ValueError(f"{self.prime} is not prime")

    @property
    def local_degree(self) -> int:
        return 1

    @property
    def is_archimedean(self) -> bool:
        return self.prime is None

    @classmethod
    def parse(cls, text: str) -> "Place":
        text = text.strip().lower()
        if text in ("infinity", "inf", "oo"):
            return INFINITY
        if text.startswith("p:"):
            return cls(int(text[2:]))
        raise ValueError(f"unknown place {text!r}; use 'infinity' or 'p:<prime>'")

    def __str__(self) -> str:
        return "infinity" if self.prime is None else f"p:{self.prime}"


INFINITY = Place(None)


def valuation(x, p: int) -> int | float:
    """p-adic valuation of a rational; ``inf`` for zero."""
    x = Fraction(x)
    if x == 0:
        return math.inf
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def abs_value(v: Place, x) -> Fraction:
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    if v.is_archimedean:
        return abs(x)
    e = valuation(x, v.prime)
    return Fraction(v.prime) ** (-e)


def support(values: Iterable) -> list[Place]:
    """Places where some nonzero value has absolute value different from 1.

    The archimedean place is always included.  Uses integer factorization, so
    only meant for numbers of moderate size.
    """
    primes: set[int] = set()
    for x in values:
        x = Fraction(x)
        if x == 0:
            continue
        for n in (abs(x.numerator), x.denominator):
            if n > 1:
                primes.update(sympy.factorint(n))
    return [INFINITY] + [Place(p) for p in sorted(primes)]


def _primitive(values: Sequence) -> tuple[list[int], Fraction]:
    """Write a nonzero rational vector as ``b / c`` with ``b`` a primitive integer vector."""
    vals = [Fraction(a) for a in values]
    den = reduce(math.lcm, (a.denominator for a in vals), 1)
    ints = [a.numerator * (den // a.denominator) for a in vals]
    g = reduce(math.gcd, ints, 0)
    if g == 0:
        raise ValueError("height of zero vector undefined")
    return [n // g for n in ints], Fraction(den, g)


def height_vector(a: Sequence) -> Fraction:
    """Projective height ``prod_v max_i |a_i|_v``.

    Computed through the primitive integer representative: the finite places
    contribute exactly ``c`` for ``a = b/c``, so the product collapses to
    ``max |b_i|``.
    """
    b, _ = _primitive(a)
    return Fraction(max(abs(n) for n in b))


def height_scalar(x) -> Fraction:
    """Absolute height ``H(x) = H((1, x))``."""
    return height_vector([1, x])


def _nonzero(coeffs: Sequence) -> list[Fraction]:
    coeffs = [Fraction(c) for c in coeffs]
    if not any(coeffs):
        raise ValueError("norm of zero polynomial undefined")
    return coeffs


def poly_norm_v(coeffs: Sequence, v: Place) -> Fraction:
    """``|A|_v``: sum of |coeff|_v at infinity, max at a prime."""
    coeffs = _nonzero(coeffs)
    if v.is_archimedean:
        return sum((abs(c) for c in coeffs), Fraction(0))
    return max(abs_value(v, c) for c in coeffs)


def height_poly(coeffs: Sequence) -> Fraction:
    """``H(A) = prod_v |A|_v``; with ``A = b/c`` this is ``sum |b_i|``."""
    _nonzero(coeffs)
    b, _ = _primitive(coeffs)
    return Fraction(sum(abs(n) for n in b))


def height_poly_excluding(coeffs: Sequence, w: Place) -> Fraction:
    """``H_w(A)``: the product over all places except ``w``."""
    return height_poly(coeffs) / poly_norm_v(coeffs, w)


def length(coeffs: Sequence) -> Fraction:
    return sum((abs(Fraction(c)) for c in coeffs), Fraction(0))


def place_product(values: Sequence, norm=max) -> Fraction:
    """Direct product over the support places of ``norm(|a_i|_v)``.

    Slow reference used to cross-check the closed forms above.
    """
    out = Fraction(1)
    for v in support(values):
        out *= norm([abs_value(v, a) for a in values])
    return out


def log2_upper(x: Fraction) -> Fraction:
    """A dyadic rational >= log2(x) for x > 0 (within 2**-20)."""
    return _log2_round(x, up=True)


def log2_lower(x: Fraction) -> Fraction:
    return _log2_round(x, up=False)


def _log2_round(x: Fraction, up: bool, bits: int = 20) -> Fraction:
    # log2(x) = e + log2(m) with m in [1, 2); refine m by squaring
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of nonpositive number")
    e = x.numerator.bit_length() - x.denominator.bit_length()
    m = x / Fraction(2) ** e
    if m < 1:
        m *= 2
        e -= 1
    elif m >= 2:
        m /= 2
        e += 1
    # truncate m so squaring stays cheap; rounding direction keeps the bound one-sided
    scale = 1 << 64
    lo = Fraction(math.floor(m * scale), scale)
    hi = Fraction(math.ceil(m * scale), scale)
    frac_lo = _log2_frac(lo, bits, up=False)
    frac_hi = _log2_frac(hi, bits, up=True)
    return e + (frac_hi if up else frac_lo)


def _log2_frac(m: Fraction, bits: int, up: bool) -> Fraction:
    # digit-by-digit binary logarithm of m in [1, 2]; result within 2**-bits
    acc = Fraction(0)
    scale = 1 << 80
    for i in range(1, bits + 1):
        m = m * m
        m = Fraction((math.ceil if up else math.floor)(m * scale), scale)
        if m >= 2:
            m /= 2
            acc += Fraction(1, 1 << i)
    if up:
        acc += Fraction(1, 1 << bits)
    return acc


def log_height(x) -> float:
    """Natural log of a height-like positive rational, as a float for reports."""
    x = Fraction(x)
    return math.log(x.numerator) - math.log(x.denominator)
