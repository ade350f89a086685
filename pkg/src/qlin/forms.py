"""Auxiliary linear forms u_n, v_n, v_{l,n} and L_{l,n} in the variables x.

A form is a coefficient vector indexed like the configuration: position 0 is
x0, then one slot per ``(j, k, sigma)``.  Symbolic forms carry polynomials in
z (``fmpq_poly``); specialized forms carry Fractions.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from flint import fmpq_poly

from . import poly as zp
from .enclosure import Enclosure, Interval, PAdicBall
from .hankel import det, hankel_matrix, leading_minors
from .places import format_rational, height_poly, height_poly_excluding, valuation
from .qseries import EvalConfig, PrecisionError, ProblemInstance, falling, series_tail, series_term


@dataclass(frozen=True)
class LinearForm:
    coeffs: tuple
    symbolic: bool

    def __len__(self):
        return len(self.coeffs)

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.symbolic)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.symbolic)

    def scale(self, c) -> "LinearForm":
        if self.symbolic:
            c = c if isinstance(c, fmpq_poly) else zp.to_fmpq(c)
        return LinearForm(tuple(a * c for a in self.coeffs), self.symbolic)

    def at(self, z) -> "LinearForm":
        """Specialize a symbolic form at z."""
        if not self.symbolic:
            return self
        return LinearForm(tuple(zp.evaluate(a, z) for a in self.coeffs), False)

    def __call__(self, omega: Sequence) -> Fraction:
        if self.symbolic:
            raise TypeError("specialize the form before evaluating it")
        return sum((a * Fraction(w) for a, w in zip(self.coeffs, omega)), Fraction(0))

    @property
    def is_zero(self) -> bool:
        if self.symbolic:
            return all(a.is_zero() for a in self.coeffs)
        return not any(self.coeffs)

    def to_json(self) -> list:
        if self.symbolic:
            return [[format_rational(c) for c in zp.coeffs(a)] for a in self.coeffs]
        return [format_rational(c) for c in self.coeffs]


def ord_z(form: LinearForm):
    """Least z-exponent over all coefficients; ``inf`` for the zero form."""
    if not form.symbolic:
        raise TypeError("ord_z needs a symbolic form")
    return min(zp.ord_z(a) for a in form.coeffs)


def deg_z(form: LinearForm):
    return max(zp.degree(a) for a in form.coeffs)


def _u_coeff(alpha: Fraction, k: int, sigma: int, n: int, z):
    """sigma! C(n, sigma) (alpha z**k)**(n - sigma); z None means symbolic."""
    if sigma > n:
        return Fraction(0) if z is not None else zp.ZERO
    c = falling(n, sigma) * alpha ** (n - sigma)
    if z is None:
        return zp.monomial(c, k * (n - sigma))
    return c * Fraction(z) ** (k * (n - sigma))


def u_n(cfg: EvalConfig, n: int, mode: str = "symbolic", q=None) -> LinearForm:
    z = None if mode == "symbolic" else Fraction(q)
    head = zp.ZERO if z is None else Fraction(0)
    coeffs = [head] + [_u_coeff(cfg.alphas[j - 1], k, sig, n, z) for j, k, sig in cfg.index]
    return LinearForm(tuple(coeffs), z is None)


@dataclass(frozen=True)
class OperatorExpansion:
    """``prod (I - gamma B)**e = sum_t coeffs[t] B**t``."""

    coeffs: tuple
    symbolic: bool
    factors: tuple

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def at(self, z) -> tuple[Fraction, ...]:
        if not self.symbolic:
            return self.coeffs
        return tuple(zp.evaluate(c, z) for c in self.coeffs)


def _case(inst: ProblemInstance, case: str | None) -> str:
    case = case or inst.pipeline
    if inst.case_tag not in (case, "Both"):
        raise ValueError(f"case ({case.lower()}) does not hold for this instance")
    return case


def min_n(inst: ProblemInstance, cfg: EvalConfig, l: int, case: str | None = None) -> int:
    case = _case(inst, case)
    if case == "A":
        return (cfg.S + cfg.m * inst.h) * l + cfg.m * sum(
            math.floor(inst.g1 * k) for k in range(l)
        )
    return (cfg.S + inst.eps0) * l + (cfg.m + inst.eps0) * sum(
        math.floor(inst.g2 * k) for k in range(l)
    )


def operator_factors(inst: ProblemInstance, cfg: EvalConfig, l: int, case: str | None = None):
    """List of ``(gamma, exponent)``; gamma is a Fraction (case A) or
    ``(constant, z-power)`` (case B)."""
    case = _case(inst, case)
    out = []
    for k in range(l):
        if case == "A":
            for j in range(cfg.m):
                gamma = cfg.alphas[j] * inst.q ** (cfg.d0 - 1 - inst.d - k)
                out.append((gamma, cfg.s_max[j] + inst.h + math.floor(inst.g1 * k)))
        else:
            extra = math.floor(inst.g2 * k)
            p0 = inst.p_at(0, 0)
            if p0:
                out.append(((p0, k), 1 + extra))
            for j in range(cfg.m):
                out.append(((cfg.alphas[j], k), cfg.s_max[j] + extra))
    return out


def operator_expansion(
    inst: ProblemInstance, cfg: EvalConfig, l: int, case: str | None = None
) -> OperatorExpansion:
    case = _case(inst, case)
    factors = operator_factors(inst, cfg, l, case)
    if case == "A":
        coeffs = [Fraction(1)]
        for gamma, e in factors:
            for _ in range(e):
                coeffs = [
                    (coeffs[t] if t < len(coeffs) else 0) - (gamma * coeffs[t - 1] if t else 0)
                    for t in range(len(coeffs) + 1)
                ]
        return OperatorExpansion(tuple(coeffs), False, tuple(factors))
    coeffs = [zp.ONE]
    for (c, k), e in factors:
        g = zp.monomial(c, k)
        for _ in range(e):
            nxt = [coeffs[0]]
            for t in range(1, len(coeffs)):
                nxt.append(coeffs[t] - g * coeffs[t - 1])
            nxt.append(-g * coeffs[-1])
            coeffs = nxt
    return OperatorExpansion(tuple(coeffs), True, tuple(factors))


def case_a_exponent(inst: ProblemInstance, cfg: EvalConfig, l: int) -> int:
    return sum(
        (cfg.s_max[j] + inst.h + math.floor(inst.g1 * k)) * (k + 1)
        for k in range(l)
        for j in range(cfg.m)
    )


class AuxForms:
    """Cached construction of the auxiliary forms for one ``(instance, config)``."""

    def __init__(self, inst: ProblemInstance, cfg: EvalConfig):
        self.inst = inst
        self.cfg = cfg
        self._v_sym: list[LinearForm] = []
        self._v_q: list[LinearForm] = []
        self._ops: dict = {}
        self._vln: dict = {}
        self._lock = threading.Lock()

    @property
    def denominator(self) -> int:
        return self.cfg.denominator(self.inst)

    def case(self, case=None) -> str:
        return _case(self.inst, case)

    # -- u_n, v_n ----------------------------------------------------------
    def u(self, n: int, symbolic: bool = True) -> LinearForm:
        if symbolic:
            return u_n(self.cfg, n, "symbolic")
        return u_n(self.cfg, n, "at_q", self.inst.q)

    def v(self, n: int, symbolic: bool = True) -> LinearForm:
        seq = self._v_sym if symbolic else self._v_q
        if len(seq) <= n:
            with self._lock:
                while len(seq) <= n:
                    k = len(seq)
                    u = self.u(k, symbolic)
                    if k == 0:
                        one = zp.ONE if symbolic else Fraction(1)
                        seq.append(LinearForm((one,) + u.coeffs[1:], symbolic))
                        continue
                    if symbolic:
                        factor = self.inst.P_sym(k) / zp.to_fmpq(self.inst.Q_at(k))
                    else:
                        q = self.inst.q
                        factor = self.inst.P_at(k, q**k) / self.inst.Q_at(k)
                    seq.append(seq[-1].scale(factor) + u)
        return seq[n]

    def v_direct(self, n: int) -> LinearForm:
        """v_n from its closed form Pi_n (x0 + sum_{k<=n} u_k / Pi_k); test oracle."""
        pis = [self.inst.pi_sym(k) for k in range(n + 1)]
        coeffs = [pis[n]]
        for pos in range(1, self.cfg.dim):
            acc = zp.ZERO
            for k in range(n + 1):
                uk = self.u(k).coeffs[pos]
                if uk.is_zero():
                    continue
                quo, rem = divmod(pis[n] * uk, pis[k])
                if not rem.is_zero():
                    raise ArithmeticError("Pi_k does not divide Pi_n u_k")
                acc += quo
            coeffs.append(acc)
        return LinearForm(tuple(coeffs), True)

    # -- operators -----------------------------------------------------------
    def expansion(self, l: int, case=None) -> OperatorExpansion:
        case = self.case(case)
        key = (l, case)
        if key not in self._ops:
            self._ops[key] = operator_expansion(self.inst, self.cfg, l, case)
        return self._ops[key]

    def min_n(self, l: int, case=None) -> int:
        return min_n(self.inst, self.cfg, l, self.case(case))

    def _check_range(self, l, n, case):
        lo = self.min_n(l, case)
        if n < lo:
            raise ValueError(f"n = {n} is below min_n({l}) = {lo}")

    def v_ln(self, l: int, n: int, case=None) -> LinearForm:
        """Case A: specialized at z = q.  Case B: symbolic in z."""
        case = self.case(case)
        self._check_range(l, n, case)
        key = (l, n, case)
        if key in self._vln:
            return self._vln[key]
        ops = self.expansion(l, case)
        symbolic = case == "B"
        dim = self.cfg.dim
        acc = [zp.ZERO if symbolic else Fraction(0)] * dim
        for t, c in enumerate(ops.coeffs):
            if (c.is_zero() if symbolic else c == 0):
                continue
            vt = self.v(n - t, symbolic)
            acc = [a + c * b for a, b in zip(acc, vt.coeffs)]
        form = LinearForm(tuple(acc), symbolic)
        self._vln[key] = form
        return form

    def normalizer(self, l: int, n: int, case=None) -> Fraction:
        case = self.case(case)
        if case == "A":
            return self.inst.q ** case_a_exponent(self.inst, self.cfg, l)
        order = ord_z(self.v_ln(l, n, case))
        if order == math.inf:
            return Fraction(1)
        return self.inst.q ** (-order)

    def L_ln(self, l: int, n: int, case=None) -> LinearForm:
        case = self.case(case)
        form = self.v_ln(l, n, case)
        if form.symbolic:
            form = form.at(self.inst.q)
        return form.scale(self.normalizer(l, n, case))

    # -- Hankel determinants -------------------------------------------------
    def hankel_value(self, n: int, omega: Sequence) -> Fraction:
        if n < 1:
            raise ValueError("n must be >= 1")
        seq = [self.v(i, symbolic=False)(omega) for i in range(2 * n - 1)]
        return det(hankel_matrix(seq, n))

    def hankel_values(self, n_max: int, omega: Sequence) -> list[Fraction]:
        """V_1 .. V_{n_max} at (q, omega)."""
        seq = [self.v(i, symbolic=False)(omega) for i in range(2 * n_max - 1)]
        return leading_minors(hankel_matrix(seq, n_max))

    # -- integrality -----------------------------------------------------------
    def I(self, n: int) -> int:
        out = Fraction(self.denominator) ** n
        for k in range(1, n + 1):
            out *= self.inst.Q_at(k)
        assert out.denominator == 1
        return int(out)

    def integrality_check(self, n: int) -> bool:
        scale = zp.to_fmpq(self.I(n))
        return all(zp.integer_content_ok(c * scale) for c in self.v(n).coeffs)

    # -- remainders ---------------------------------------------------------
    def combination_enclosure(
        self, coeffs_at_q: Sequence[Fraction], norm: Fraction, n: int, omega1: Sequence, bits: int = 64
    ) -> Enclosure:
        """Enclose ``norm * sum_t c_t v_{n-t}(q, omega)`` where omega0 is defined by
        ``omega0 + sum omega_i f^(sigma_i)(alpha_j q^k) = 0``.

        Uses ``v_s(q, omega) = -Pi_s(q) sum_{j>s} u_j(q, omega)/Pi_j(q)``; the finite
        part is summed exactly and only one series tail per coordinate is
        enclosed.  The width is at most ``2**-bits`` times the magnitude.
        """
        inst, w = self.inst, self.inst.place
        omega1 = [Fraction(x) for x in omega1]
        if len(omega1) != self.cfg.dim - 1:
            raise ValueError("omega1 has the wrong dimension")
        active = [(i, x) for i, x in enumerate(omega1) if x]
        if not active:
            return Interval.exact(0) if w.is_archimedean else PAdicBall.exact(w.prime, 0)
        points = self.cfg.points(inst)
        # M = sum_t c_t Pi_{n-t};  K = sum_t c_t Pi_{n-t} sum_{j=n-t+1..n} u_j / Pi_j
        M = Fraction(0)
        K = Fraction(0)
        for t, c in enumerate(coeffs_at_q):
            if not c:
                continue
            pi = inst.pi_q(n - t)
            M += c * pi
            part = Fraction(0)
            for j in range(n - t + 1, n + 1):
                for i, x in active:
                    beta, sig = points[i]
                    part += x * series_term(inst, beta, sig, j)
            K += c * pi * part
        scale = norm * M
        if w.is_archimedean:
            b = bits + 64 + max(0, abs(scale).numerator.bit_length() - abs(scale).denominator.bit_length())
            for _ in range(16):
                radius = Fraction(1, 1 << b)
                tail = Interval.exact(0)
                for i, x in active:
                    beta, sig = points[i]
                    tail = tail + series_tail(inst, beta, sig, n + 1, radius).scale(x)
                enc = (tail.scale(scale) + norm * K).scale(-1)
                if enc.width * (1 << bits) <= enc.abs_lower():
                    return enc
                b *= 2
        else:
            p = w.prime
            target = bits + 16 - (valuation(scale, p) if scale else 0)
            for _ in range(16):
                tail = PAdicBall.exact(p, 0)
                for i, x in active:
                    beta, sig = points[i]
                    tail = tail + series_tail(inst, beta, sig, n + 1, target).scale(x)
                enc = (tail.scale(scale) + norm * K).scale(-1)
                if enc.determined() and enc.prec - enc.approx_valuation >= bits:
                    return enc
                target = 2 * max(target, 1)
        raise PrecisionError("precision unreachable with iteration cap")

    def remainder_enclosure(self, n: int, omega1: Sequence, bits: int = 64) -> Enclosure:
        """Enclosure of v_n(q, omega) for omega on the vanishing hyperplane."""
        return self.combination_enclosure([Fraction(1)], Fraction(1), n, omega1, bits)

    def v_ln_omega(self, l: int, n: int, omega1: Sequence, bits: int = 64, case=None) -> Enclosure:
        case = self.case(case)
        self._check_range(l, n, case)
        return self.combination_enclosure(self.expansion(l, case).at(self.inst.q), Fraction(1), n, omega1, bits)

    def L_omega_enclosure(self, l: int, n: int, omega1: Sequence, bits: int = 64, case=None) -> Enclosure:
        case = self.case(case)
        self._check_range(l, n, case)
        return self.combination_enclosure(
            self.expansion(l, case).at(self.inst.q), self.normalizer(l, n, case), n, omega1, bits
        )

    def L_omega_bound(self, l: int, n: int, omega1: Sequence, bits: int = 64, case=None) -> Fraction:
        """Rigorous upper bound on |L_{l,n}(omega)|_w."""
        return self.L_omega_enclosure(l, n, omega1, bits, case).abs_upper()

    # -- heights -------------------------------------------------------------
    def heights(self, l: int, n: int, case=None) -> tuple[Fraction, Fraction]:
        """``(H(L_{l,n}), H_w(L_{l,n}))``."""
        L = self.L_ln(l, n, case)
        return height_poly(L.coeffs), height_poly_excluding(L.coeffs, self.inst.place)


# module-level entry points mirroring the operation names


def v_n(inst, cfg, n, mode="symbolic") -> LinearForm:
    return AuxForms(inst, cfg).v(n, symbolic=(mode == "symbolic"))


def v_ln(inst, cfg, l, n, case=None) -> LinearForm:
    return AuxForms(inst, cfg).v_ln(l, n, case)


def L_ln(inst, cfg, l, n) -> LinearForm:
    return AuxForms(inst, cfg).L_ln(l, n)


def hankel_value(inst, cfg, n, omega) -> Fraction:
    return AuxForms(inst, cfg).hankel_value(n, omega)


def remainder_enclosure(inst, cfg, n, omega1, precision=64) -> Enclosure:
    return AuxForms(inst, cfg).remainder_enclosure(n, omega1, precision)


def L_omega_bound(inst, cfg, l, n, omega1, precision=64) -> Fraction:
    return AuxForms(inst, cfg).L_omega_bound(l, n, omega1, precision)


def integrality_check(inst, cfg, n) -> bool:
    return AuxForms(inst, cfg).integrality_check(n)
