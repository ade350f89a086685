"""Rigorous enclosures of real and p-adic values with exact rational data.

``Interval`` holds exact rational endpoints at the archimedean place.
``PAdicBall`` holds an approximant ``a`` and an integer ``prec`` such that the
true value ``x`` satisfies ``|x - a|_p <= p**(-prec)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .places import INFINITY, Place, abs_value, format_rational, valuation

DEFAULT_BITS = 128


class PlaceMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    place = INFINITY

    @classmethod
    def exact(cls, x) -> "Interval":
        x = Fraction(x)
        return cls(x, x)

    @classmethod
    def around(cls, x, radius) -> "Interval":
        x, radius = Fraction(x), Fraction(radius)
        return cls(x - radius, x + radius)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def _check(self, other):
        if not isinstance(other, Interval):
            raise PlaceMismatch("cannot combine archimedean and p-adic enclosures")

    def __add__(self, other):
        if not isinstance(other, (Interval, PAdicBall)):
            return Interval(self.lo + other, self.hi + other)
        self._check(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, (Interval, PAdicBall)):
            return self.scale(other)
        self._check(other)
        ps = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    def scale(self, c) -> "Interval":
        c = Fraction(c)
        a, b = self.lo * c, self.hi * c
        return Interval(min(a, b), max(a, b))

    def contains(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        self._check(other)
        return self.lo <= other.hi and other.lo <= self.hi

    def abs_upper(self) -> Fraction:
        return max(abs(self.lo), abs(self.hi))

    def abs_lower(self) -> Fraction:
        if self.lo <= 0 <= self.hi:
            return Fraction(0)
        return min(abs(self.lo), abs(self.hi))

    def compress(self, bits: int = DEFAULT_BITS) -> "Interval":
        """Round endpoints outward to multiples of ``2**-bits``."""
        s = 1 << bits
        return Interval(
            Fraction(math.floor(self.lo * s), s), Fraction(math.ceil(self.hi * s), s)
        )

    def __str__(self) -> str:
        return f"[{format_rational(self.lo)}, {format_rational(self.hi)}]"

    def to_json(self) -> dict:
        return {"place": "infinity", "lower": format_rational(self.lo), "upper": format_rational(self.hi)}


@dataclass(frozen=True)
class PAdicBall:
    p: int
    approx: Fraction
    prec: int | float

    @classmethod
    def exact(cls, p: int, x) -> "PAdicBall":
        return cls(p, Fraction(x), math.inf)

    @property
    def place(self) -> Place:
        return Place(self.p)

    def _check(self, other):
        if not isinstance(other, PAdicBall) or other.p != self.p:
            raise PlaceMismatch("enclosures live at different places")

    def __add__(self, other):
        if not isinstance(other, (Interval, PAdicBall)):
            return PAdicBall(self.p, self.approx + Fraction(other), self.prec)
        self._check(other)
        return PAdicBall(self.p, self.approx + other.approx, min(self.prec, other.prec))

    __radd__ = __add__

    def __neg__(self):
        return PAdicBall(self.p, -self.approx, self.prec)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, (Interval, PAdicBall)):
            return self.scale(other)
        self._check(other)
        # (a + e1)(b + e2) = ab + a e2 + b e1 + e1 e2
        va, vb = valuation(self.approx, self.p), valuation(other.approx, self.p)
        prec = min(va + other.prec, vb + self.prec, self.prec + other.prec)
        return PAdicBall(self.p, self.approx * other.approx, prec)

    __rmul__ = __mul__

    def scale(self, c) -> "PAdicBall":
        c = Fraction(c)
        if c == 0:
            return PAdicBall.exact(self.p, 0)
        return PAdicBall(self.p, self.approx * c, self.prec + valuation(c, self.p))

    @property
    def approx_valuation(self):
        return valuation(self.approx, self.p)

    def determined(self) -> bool:
        """True when the valuation of the true value is known exactly."""
        return self.approx_valuation < self.prec

    def abs_upper(self) -> Fraction:
        if self.determined():
            return abs_value(self.place, self.approx)
        if self.prec == math.inf:
            return Fraction(0)
        return Fraction(self.p) ** (-self.prec)

    def abs_lower(self) -> Fraction:
        if self.determined():
            return abs_value(self.place, self.approx)
        return Fraction(0)

    def contains(self, x) -> bool:
        return valuation(Fraction(x) - self.approx, self.p) >= self.prec

    def overlaps(self, other: "PAdicBall") -> bool:
        self._check(other)
        return valuation(self.approx - other.approx, self.p) >= min(self.prec, other.prec)

    def compress(self, digits: int) -> "PAdicBall":
        """Truncate the approximant modulo ``p**digits``; the error bound becomes
        ``min(prec, digits)``."""
        target = min(self.prec, digits)
        if target == math.inf or self.approx == 0:
            return self
        a = self.approx
        e = min(valuation(a, self.p), 0)
        shifted = a / Fraction(self.p) ** e
        mod = self.p ** (target - e) if target > e else 1
        den_inv = pow(shifted.denominator, -1, mod) if mod > 1 else 0
        r = (shifted.numerator * den_inv) % mod
        return PAdicBall(self.p, Fraction(r) * Fraction(self.p) ** e, target)

    def __str__(self) -> str:
        tail = "exact" if self.prec == math.inf else f"O({self.p}^{self.prec})"
        return f"{format_rational(self.approx)} + {tail}"

    def to_json(self) -> dict:
        return {
            "place": f"p:{self.p}",
            "approximant": format_rational(self.approx),
            "error_valuation": None if self.prec == math.inf else int(self.prec),
        }


Enclosure = Interval | PAdicBall


def exact_enclosure(place: Place, x) -> Enclosure:
    if place.is_archimedean:
        return Interval.exact(x)
    return PAdicBall.exact(place.prime, x)
