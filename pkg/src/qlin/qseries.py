"""Problem instances and rigorous evaluation of the q-series

    f(z) = sum_{n >= 0} z**n / Pi_n(q),   Pi_n(z) = prod_{k=1..n} P(k, z**k) / Q(k),

at rational points, in the completion of Q at the place ``w``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Sequence

from flint import fmpq_poly

from . import poly as zp
from .enclosure import Enclosure, Interval, PAdicBall
from .places import (
    INFINITY,
    NEG_INF,
    Place,
    abs_value,
    format_rational,
    length,
    parse_rational,
    valuation,
)

MAX_TERMS = 100_000


class InstanceError(ValueError):
    """Raised when instance or configuration data violates a hypothesis."""


class PrecisionError(RuntimeError):
    pass


def _deg(cs: Sequence[Fraction]):
    return zp.dense_degree(cs)


def _lc(cs: Sequence[Fraction]) -> Fraction:
    return zp.trim(cs)[-1]


def _root_bound(cs: Sequence[Fraction]) -> int:
    """Integer strictly above every real root (Cauchy bound)."""
    cs = zp.trim(cs)
    if len(cs) <= 1:
        return 0
    lead = abs(cs[-1])
    return 1 + math.floor(max(abs(c) / lead for c in cs[:-1])) + 1


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Validated data ``(P, Q, q, w)`` together with derived constants.

    ``P[nu]`` holds the ascending coefficients of ``p_nu(x)``.  ``Q`` has integer
    coefficients; a constant ``Q`` is normalized to 1 (``P`` divided accordingly)
    and otherwise ``P`` and ``Q`` are scaled by the common denominator of
    ``Q``, which leaves every ``Pi_n`` unchanged.
    """

    P: tuple[tuple[Fraction, ...], ...]
    Q: tuple[Fraction, ...]
    q: Fraction
    place: Place
    d: int
    h: int
    eps0: int
    g1: Fraction
    g2: Fraction
    case_tag: str
    n_star: int
    pipeline: str
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    # -- small evaluators -------------------------------------------------
    def p(self, nu: int) -> tuple[Fraction, ...]:
        return self.P[nu] if nu < len(self.P) else ()

    def p_at(self, nu: int, x) -> Fraction:
        return zp.eval_dense(self.p(nu), Fraction(x))

    def P_at(self, x, y) -> Fraction:
        y = Fraction(y)
        return sum((self.p_at(nu, x) * y**nu for nu in range(self.d + 1)), Fraction(0))

    def Q_at(self, x) -> Fraction:
        return zp.eval_dense(self.Q, Fraction(x))

    def P_sym(self, n: int) -> fmpq_poly:
        """``P(n, z**n)`` as a polynomial in z."""
        cs = [Fraction(0)] * (n * self.d + 1)
        for nu in range(self.d + 1):
            cs[n * nu] += self.p_at(nu, n)
        return zp.from_coeffs(cs)

    @property
    def deg_pd(self) -> int:
        return _deg(self.P[self.d])

    @property
    def denominator(self) -> int:
        """Common denominator of the coefficients of P."""
        return reduce(math.lcm, (c.denominator for row in self.P for c in row), 1)

    def with_pipeline(self, pipeline: str) -> "ProblemInstance":
        if pipeline not in ("A", "B"):
            raise ValueError("pipeline must be 'A' or 'B'")
        if self.case_tag not in (pipeline, "Both"):
            raise InstanceError(f"case ({pipeline.lower()}) does not hold for this instance")
        return _build(self.P, self.Q, self.q, self.place, pipeline)

    # -- Pi_n --------------------------------------------------------------
    def _extend(self, key, n, step, start):
        seq = self._cache.get(key)
        if seq is None or len(seq) <= n:
            with self._lock:
                seq = self._cache.setdefault(key, [start])
                while len(seq) <= n:
                    k = len(seq)
                    seq.append(step(seq[-1], k))
        return seq

    def pi_q(self, n: int) -> Fraction:
        seq = self._extend(
            "pi_q", n, lambda prev, k: prev * self.P_at(k, self.q**k) / self.Q_at(k), Fraction(1)
        )
        return seq[n]

    def pi_sym(self, n: int) -> fmpq_poly:
        seq = self._extend(
            "pi_sym", n, lambda prev, k: prev * self.P_sym(k) / zp.to_fmpq(self.Q_at(k)), zp.ONE
        )
        return seq[n]

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "P": [[format_rational(c) for c in row] for row in self.P],
            "Q": [format_rational(c) for c in self.Q],
            "q": format_rational(self.q),
            "place": str(self.place),
        }


def check_q_place(q: Fraction, w: Place) -> None:
    """|q|_w > 1 and |q|_v <= 1 at every other place."""
    ok = True
    if q == 0:
        ok = False
    elif w.is_archimedean:
        ok = q.denominator == 1 and abs(q) > 1
    else:
        p = w.prime
        den = q.denominator
        k = valuation(Fraction(den), p)
        ok = k >= 1 and den == p**k and abs(q.numerator) <= den
    if not ok:
        raise InstanceError(f"q place condition violated for q={format_rational(q)} at {w}")


def _case_tag(P, Q) -> str:
    cond_a = _deg(P[-1]) == 0
    cond_b = _deg(P[0]) <= 0 and _deg(Q) == 0
    if cond_a and cond_b:
        return "Both"
    if cond_a:
        return "A"
    if cond_b:
        return "B"
    raise InstanceError("neither condition (a) nor (b) holds")


def _g1(P, h: int, d: int) -> Fraction:
    vals = [Fraction(h, d)]
    for nu in range(1, d + 1):
        deg = _deg(P[d - nu])
        if deg != NEG_INF:
            vals.append(Fraction(deg, nu))
    return max(vals)


def _g2(P, d: int) -> Fraction:
    vals = [Fraction(_deg(P[nu]), nu) for nu in range(1, d + 1) if _deg(P[nu]) != NEG_INF]
    return max(vals)


def dominance_threshold(P, q: Fraction, w: Place, factor: int = 1) -> int:
    """Smallest N such that for every n >= N the top term of P(n, q**n) beats the
    others by ``factor``: ``|p_d(n) q**(nd)|_w > factor * (sum or max of the rest)``.

    Also guarantees ``p_d(n) != 0`` for n >= N.  The returned N is proven: the
    bounding function is monotone from N onward.
    """
    d = len(P) - 1
    pd = P[d]
    dd = reduce(math.lcm, (c.denominator for c in pd), 1)
    len_d = length([c * dd for c in pd])
    deg_d = _deg(pd)
    start = max(1, _root_bound(pd))
    lower_terms = [(length(P[nu]), _deg(P[nu])) for nu in range(d) if _deg(P[nu]) != NEG_INF]
    if w.is_archimedean:
        base = abs(q)
        big_k = max((deg for _, deg in lower_terms), default=0)

        def holds(n):
            rest = sum((ln * n**deg for ln, deg in lower_terms), Fraction(0))
            return Fraction(base) ** n > factor * dd * rest

        def mono(n):  # base**n / rest(n) nondecreasing from n on
            return base * n**big_k >= (n + 1) ** big_k

    else:
        p = w.prime
        k = -valuation(q, p)
        pd_abs = abs_value(w, Fraction(dd))
        rest_max = max((max(abs_value(w, c) for c in P[nu] if c) for nu in range(d) if any(P[nu])),
                       default=Fraction(0))

        def holds(n):
            lower = Fraction(1) / (pd_abs * len_d * n**deg_d)
            return lower * Fraction(p) ** (k * n) > factor * rest_max

        def mono(n):
            return p**k * n**deg_d >= (n + 1) ** deg_d

    n = start
    while not mono(n):
        n += 1
    while not holds(n):
        n += 1
        if n > MAX_TERMS:
            raise InstanceError("could not establish dominance of the top coefficient")
    return n


def _build(P, Q, q, place, pipeline=None) -> ProblemInstance:
    d = len(P) - 1
    h = _deg(Q)
    tag = _case_tag(P, Q)
    if pipeline is None:
        pipeline = "B" if tag == "Both" else tag
    dom = dominance_threshold(P, q, place, factor=1)
    q_start = _root_bound(Q) + 1
    n_star = max(dom, q_start) - 1
    for n in range(1, n_star + 1):
        val = zp.eval_dense(Q, n) * sum(
            (zp.eval_dense(P[nu], n) * q ** (n * nu) for nu in range(d + 1)), Fraction(0)
        )
        if val == 0:
            raise InstanceError(f"P(n,q^n)Q(n) = 0 at n = {n}")
    eps0 = 0 if not any(P[0]) else 1
    g2 = _g2(P, d)
    return ProblemInstance(
        P=P, Q=Q, q=q, place=place, d=d, h=h, eps0=eps0,
        g1=_g1(P, h, d), g2=g2, case_tag=tag, n_star=n_star, pipeline=pipeline,
    )


def validate_instance(raw: dict, pipeline: str | None = None) -> ProblemInstance:
    """Parse and validate instance data (the instance-file JSON layout)."""
    try:
        P = [zp.trim(parse_rational(c) for c in row) for row in raw["P"]]
        Q = zp.trim(parse_rational(c) for c in raw["Q"])
        q = parse_rational(raw["q"])
        place = raw.get("place", "infinity")
        place = place if isinstance(place, Place) else Place.parse(place)
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance data: {exc}") from exc
    while P and not P[-1]:
        P.pop()
    if len(P) < 2:
        raise InstanceError("deg_y P must be at least 1")
    if not Q:
        raise InstanceError("Q must be nonzero")
    if len(Q) == 1:
        c = Q[0]
        P = [[a / c for a in row] for row in P]
        Q = [Fraction(1)]
    else:
        den = reduce(math.lcm, (c.denominator for c in Q), 1)
        P = [[a * den for a in row] for row in P]
        Q = [c * den for c in Q]
    check_q_place(q, place)
    P = tuple(tuple(row) for row in P)
    return _build(P, tuple(Q), q, place, pipeline)


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True, eq=False)
class EvalConfig:
    m: int
    d0: int
    alphas: tuple[Fraction, ...]
    s: tuple[tuple[int, ...], ...]

    @property
    def s_max(self) -> tuple[int, ...]:
        return tuple(max(row) for row in self.s)

    @property
    def S(self) -> int:
        return sum(self.s_max)

    @cached_property
    def index(self) -> tuple[tuple[int, int, int], ...]:
        """Coordinates after x0, as 1-based ``(j, k, sigma)``."""
        return tuple(
            (j + 1, k, sig)
            for j in range(self.m)
            for k in range(self.d0)
            for sig in range(self.s[j][k])
        )

    @property
    def dim(self) -> int:
        return 1 + len(self.index)

    @cached_property
    def _positions(self) -> dict:
        return {key: 1 + i for i, key in enumerate(self.index)}

    def position(self, j: int, k: int, sigma: int) -> int:
        return self._positions[(j, k, sigma)]

    def points(self, inst: ProblemInstance) -> list[tuple[Fraction, int]]:
        """``(alpha_j q**k, sigma)`` for every coordinate after x0."""
        return [(self.alphas[j - 1] * inst.q**k, sig) for j, k, sig in self.index]

    def denominator(self, inst: ProblemInstance) -> int:
        return reduce(math.lcm, (a.denominator for a in self.alphas), inst.denominator)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "d0": self.d0,
            "alphas": [format_rational(a) for a in self.alphas],
            "s": [list(row) for row in self.s],
        }


def q_exponent(inst: ProblemInstance, r: Fraction) -> int | None:
    """Integer t with r == q**t, or None."""
    r = Fraction(r)
    q = inst.q
    if r == 0:
        return None
    if inst.place.is_archimedean:
        est = (math.log(abs(r.numerator)) - math.log(r.denominator)) / math.log(abs(q))
        candidates = range(math.floor(est) - 1, math.floor(est) + 3)
    else:
        p = inst.place.prime
        vq = valuation(q, p)
        vr = valuation(r, p)
        if vr % vq:
            return None
        candidates = [vr // vq]
    for t in candidates:
        if q**t == r:
            return t
    return None


def validate_config(inst: ProblemInstance, raw: dict) -> EvalConfig:
    try:
        m = int(raw["m"])
        d0 = int(raw["d0"])
        alphas = tuple(parse_rational(a) for a in raw["alphas"])
        s = tuple(tuple(int(x) for x in row) for row in raw["s"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed config data: {exc}") from exc
    if m < 1 or len(alphas) != m or len(s) != m:
        raise InstanceError("config needs m >= 1 alphas and m rows of s")
    if d0 < inst.d:
        raise InstanceError(f"d0 = {d0} must be >= d = {inst.d}")
    if any(len(row) != d0 for row in s):
        raise InstanceError("each row of s needs d0 entries")
    if any(x < 1 for row in s for x in row):
        raise InstanceError("s_{j,k} must be positive integers")
    if any(a == 0 for a in alphas):
        raise InstanceError("alphas must be nonzero")
    problems = []
    for i in range(m):
        for j in range(i + 1, m):
            t = q_exponent(inst, alphas[i] / alphas[j])
            if t is not None:
                problems.append(
                    f"condition (i): alpha_{i + 1}/alpha_{j + 1} = q^{t}"
                )
    top = inst.deg_pd
    for j in range(m):
        for k in range(inst.d, d0):
            if s[j][k] > top:
                problems.append(
                    f"condition (ii): s_{{{j + 1},{k}}} = {s[j][k]} > deg p_d = {top}"
                )
    if _deg(inst.P[0]) == _deg(inst.Q):
        a, b = _lc(inst.P[0]), _lc(inst.Q)
        for j in range(m):
            t = q_exponent(inst, alphas[j] * b / a)
            if t is not None and t >= 1:
                problems.append(f"condition (iii): alpha_{j + 1} = (a/b) q^{t}")
    if problems:
        raise InstanceError("; ".join(problems))
    return EvalConfig(m=m, d0=d0, alphas=alphas, s=s)


# ---------------------------------------------------------------------------
# Pi_n and the series


def pi_n(inst: ProblemInstance, n: int, mode: str = "symbolic"):
    if n < 0:
        raise ValueError("n must be >= 0")
    if mode == "symbolic":
        return inst.pi_sym(n)
    if mode == "at_q":
        return inst.pi_q(n)
    raise ValueError(f"unknown mode {mode!r}")


def falling(n: int, sigma: int) -> int:
    """n (n-1) ... (n-sigma+1)."""
    return math.perm(n, sigma) if n >= sigma else 0


def series_term(inst: ProblemInstance, beta: Fraction, sigma: int, n: int) -> Fraction:
    """n-th term of the series of f^(sigma)(beta)."""
    if n < sigma:
        return Fraction(0)
    return falling(n, sigma) * Fraction(beta) ** (n - sigma) / inst.pi_q(n)


def _ratio_threshold(inst: ProblemInstance, beta: Fraction, sigma: int) -> int:
    """N such that |t_{n+1}/t_n|_w <= 1/2 (archimedean) or <= 1 (p-adic) for all n >= N."""
    key = ("ratio", beta, sigma)
    if key in inst._cache:
        return inst._cache[key]
    w = inst.place
    pd = inst.P[inst.d]
    dd = reduce(math.lcm, (c.denominator for c in pd), 1)
    len_d = length([c * dd for c in pd])
    deg_d = _deg(pd)
    h = inst.h
    if w.is_archimedean:
        half = dominance_threshold(inst.P, inst.q, w, factor=2)
        qa = abs(inst.q) ** inst.d
        lenq = length(inst.Q)

        def bound(n):  # bound on the ratio at index n -> n+1
            return (
                Fraction(n + 1, n + 1 - sigma) * abs(beta) * lenq * (n + 1) ** h * 2 * dd
                / qa ** (n + 1)
            )

        def mono(n):
            return (n + 2) ** h <= qa * (n + 1) ** h

        n = max(half - 1, sigma, 0)
        while not (mono(n) and bound(n) <= Fraction(1, 2)):
            n += 1
    else:
        p = w.prime
        k = -valuation(inst.q, p)
        dom = dominance_threshold(inst.P, inst.q, w, factor=1)
        qmax = max(abs_value(w, c) for c in inst.Q if c)
        beta_abs = abs_value(w, beta)
        pd_abs = abs_value(w, Fraction(dd))

        def unit(n):
            return n + 1 - sigma if sigma else 1

        def bound(n):
            return (
                unit(n) * beta_abs * qmax * pd_abs * len_d * (n + 1) ** deg_d
                / Fraction(p) ** (k * (n + 1) * inst.d)
            )

        def mono(n):
            return (unit(n + 1) * (n + 2) ** deg_d) <= p ** (k * inst.d) * unit(n) * (n + 1) ** deg_d

        n = max(dom - 1, sigma, 0)
        while not (mono(n) and bound(n) <= 1):
            n += 1
    inst._cache[key] = n
    return n


def series_tail(inst: ProblemInstance, beta, sigma: int, start: int, target) -> Enclosure:
    """Enclose ``sum_{n >= start} t_n`` for the series of f^(sigma)(beta).

    ``target`` is the allowed radius (archimedean, a Fraction) or the required
    error valuation (p-adic, an int).
    """
    beta = Fraction(beta)
    start = max(start, sigma)
    w = inst.place
    if beta == 0:
        val = series_term(inst, beta, sigma, sigma) if start <= sigma else Fraction(0)
        return Interval.exact(val) if w.is_archimedean else PAdicBall.exact(w.prime, val)
    nr = _ratio_threshold(inst, beta, sigma)
    total = Fraction(0)
    n = start
    term = series_term(inst, beta, sigma, n)
    while True:
        total += term
        nxt = series_term(inst, beta, sigma, n + 1)
        if n + 1 >= nr:
            if w.is_archimedean:
                radius = 2 * abs(nxt)
                if radius <= target:
                    return Interval(total - radius, total + radius)
            else:
                v = valuation(nxt, w.prime)
                if v >= target:
                    return PAdicBall(w.prime, total, v)
        n += 1
        term = nxt
        if n - start > MAX_TERMS:
            raise PrecisionError("precision unreachable with iteration cap")


def f_deriv_enclosure(inst: ProblemInstance, beta, sigma: int = 0, precision: int = 64) -> Enclosure:
    """Enclosure of f^(sigma)(beta).

    Archimedean: interval of width <= 2**-precision.  p-adic: ball whose error
    valuation is >= precision.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if inst.place.is_archimedean:
        enc = series_tail(inst, beta, sigma, 0, Fraction(1, 1 << (precision + 2)))
        return enc.compress(precision + 2)
    return series_tail(inst, beta, sigma, 0, precision)


# ---------------------------------------------------------------------------
# functional equation


@dataclass
class ResidualReport:
    N: int
    ok: bool
    first_failure: int | None
    residuals: list[Fraction]


def functional_equation_residual(
    inst: ProblemInstance, N: int, pi_values: Sequence[Fraction] | None = None
) -> ResidualReport:
    """Coefficientwise check of P(z d/dz, D_q) f = P(0,1) + Q(z d/dz)(z f).

    The coefficient of z**n reads ``P(n, q**n)/Pi_n(q) = [n=0] P(0,1) + [n>=1] Q(n)/Pi_{n-1}(q)``.
    ``pi_values`` overrides the cached Pi_n(q) values (used to test the check itself).
    """
    pis = list(pi_values) if pi_values is not None else [inst.pi_q(n) for n in range(N + 1)]
    residuals = []
    first = None
    for n in range(N + 1):
        lhs = inst.P_at(n, inst.q**n) / pis[n]
        rhs = inst.P_at(0, 1) if n == 0 else inst.Q_at(n) / pis[n - 1]
        r = lhs - rhs
        residuals.append(r)
        if r != 0 and first is None:
            first = n
    return ResidualReport(N=N, ok=first is None, first_failure=first, residuals=residuals)


# ---------------------------------------------------------------------------
# derivative reduction

ONE_KEY = "1"


def _theta(expr: dict) -> dict:
    """Apply z d/dz to {(nu, r) or ONE_KEY: coefficient poly}."""
    z = zp.monomial(1, 1)
    out: dict = {}
    for key, c in expr.items():
        if key == ONE_KEY:
            _acc(out, ONE_KEY, z * c.derivative())
            continue
        nu, r = key
        _acc(out, (nu, r), z * c.derivative())
        _acc(out, (nu, r + 1), z * c)
    return out


def _diff(expr: dict) -> dict:
    out: dict = {}
    for key, c in expr.items():
        if key == ONE_KEY:
            _acc(out, ONE_KEY, c.derivative())
            continue
        nu, r = key
        _acc(out, (nu, r), c.derivative())
        _acc(out, (nu, r + 1), c)
    return out


def _acc(out: dict, key, c: fmpq_poly):
    if c.is_zero():
        return
    prev = out.get(key)
    val = c if prev is None else prev + c
    if val.is_zero():
        out.pop(key, None)
    else:
        out[key] = val


def _add_scaled(out: dict, expr: dict, factor):
    f = zp.to_fmpq(factor)
    for key, c in expr.items():
        _acc(out, key, c * f)


def functional_identity(inst: ProblemInstance) -> dict:
    """E(z) with E = 0 identically: keys (nu, r) mean the function z -> d^r/dz^r f(q^nu z)."""
    expr: dict = {}
    for nu in range(inst.d + 1):
        term = {(nu, 0): zp.ONE}
        for i, coeff in enumerate(inst.P[nu]):
            if i:
                term = _theta(term)
            if coeff:
                _add_scaled(expr, term, coeff)
    term = {(0, 0): zp.monomial(1, 1)}
    for i, coeff in enumerate(inst.Q):
        if i:
            term = _theta(term)
        if coeff:
            _add_scaled(expr, term, -coeff)
    _acc(expr, ONE_KEY, zp.from_coeffs([-inst.P_at(0, 1)]))
    return expr


@dataclass
class Combination:
    """``target = constant + sum coeff * f^(sigma)(point)``."""

    target: tuple[Fraction, int]
    constant: Fraction
    terms: dict[tuple[Fraction, int], Fraction]

    def enclose(self, inst: ProblemInstance, precision: int = 64) -> Enclosure:
        w = inst.place
        acc = Interval.exact(self.constant) if w.is_archimedean else PAdicBall.exact(w.prime, self.constant)
        for (pt, sig), c in sorted(self.terms.items()):
            acc = acc + f_deriv_enclosure(inst, pt, sig, precision).scale(c)
        return acc


def reduce_derivative(inst: ProblemInstance, beta, s: int) -> Combination:
    """Express f^(s)(beta), s >= deg p_d, through 1, f^(sigma)(beta) with
    sigma < deg p_d and derivatives of f at beta q^-nu, 1 <= nu <= d."""
    beta = Fraction(beta)
    top = inst.deg_pd
    if s < top:
        raise ValueError(f"s = {s} is below deg p_d = {top}")
    if beta == 0:
        raise ValueError("beta must be nonzero")
    memo = inst._cache.setdefault(("reduce", beta), {})
    return _reduce(inst, beta, s, memo)


def _reduce(inst, beta, s, memo) -> Combination:
    if s in memo:
        return memo[s]
    top = inst.deg_pd
    expr = functional_identity(inst)
    for _ in range(s - top):
        expr = _diff(expr)
    z0 = beta / inst.q**inst.d
    const = Fraction(0)
    rel: dict[tuple[Fraction, int], Fraction] = {}
    for key, c in expr.items():
        val = zp.evaluate(c, z0)
        if val == 0:
            continue
        if key == ONE_KEY:
            const += val
            continue
        nu, r = key
        pt = z0 * inst.q**nu
        rel[(pt, r)] = rel.get((pt, r), Fraction(0)) + val * inst.q ** (nu * r)
    lead = rel.pop((beta, s), Fraction(0))
    if lead == 0:
        raise ArithmeticError(f"leading coefficient vanishes at beta = {format_rational(beta)}")
    out_const = -const / lead
    out: dict[tuple[Fraction, int], Fraction] = {}
    for (pt, r), c in rel.items():
        coef = -c / lead
        if pt == beta and r >= top:
            if r > s:
                raise ArithmeticError("reduction produced a higher derivative at beta")
            sub = _reduce(inst, beta, r, memo)
            out_const += coef * sub.constant
            for k2, c2 in sub.terms.items():
                out[k2] = out.get(k2, Fraction(0)) + coef * c2
        else:
            out[(pt, r)] = out.get((pt, r), Fraction(0)) + coef
    out = {k: v for k, v in out.items() if v}
    result = Combination(target=(beta, s), constant=out_const, terms=out)
    memo[s] = result
    return result


@dataclass
class PointNormalization:
    config: EvalConfig
    rows: list[str]
    matrix: list[list[Fraction]]


def normalize_points(inst: ProblemInstance, betas: Sequence, t: int) -> PointNormalization:
    """Rewrite 1, f^(tau)(beta_i) (tau < t) over a basis 1, f^(sigma)(alpha_j q^k)
    admissible for the independence theorem.

    Points sharing a q-orbit share one alpha (the lowest point of the orbit).
    Derivatives that condition (ii) forbids at k >= d are removed with the
    functional equation, which only ever moves them to lower points.
    """
    betas = [Fraction(b) for b in betas]
    if any(b == 0 for b in betas) or t < 1:
        raise ValueError("points must be nonzero and t >= 1")
    orbits: list[list[tuple[Fraction, int]]] = []
    for b in betas:
        for orb in orbits:
            e = q_exponent(inst, b / orb[0][0])
            if e is not None:
                orb.append((b, e))
                break
        else:
            orbits.append([(b, 0)])
    alphas = []
    located: dict[Fraction, tuple[int, int]] = {}
    for j, orb in enumerate(orbits):
        low = min(e for _, e in orb)
        alpha = orb[0][0] * inst.q**low
        alphas.append(alpha)
        for b, e in orb:
            located[b] = (j, e - low)

    top, d = inst.deg_pd, inst.d
    memo: dict = {}

    def express(j, k, sig):
        # returns (constant, {(j, k, sigma): coeff}) with all k >= d entries having sigma < top
        key = (j, k, sig)
        if key in memo:
            return memo[key]
        if k < d or sig < top:
            res = (Fraction(0), {key: Fraction(1)})
        else:
            comb = reduce_derivative(inst, alphas[j] * inst.q**k, sig)
            const = comb.constant
            acc: dict = {}
            for (pt, r), c in comb.terms.items():
                kk = q_exponent(inst, pt / alphas[j])
                c2, sub = express(j, kk, r)
                const += c * c2
                for k3, v in sub.items():
                    acc[k3] = acc.get(k3, Fraction(0)) + c * v
            res = (const, {k3: v for k3, v in acc.items() if v})
        memo[key] = res
        return res

    exprs = []
    for b in betas:
        j, k = located[b]
        for tau in range(t):
            exprs.append(((b, tau), express(j, k, tau)))
    used = [kk for _, (_, terms) in exprs for kk in terms]
    d0 = max([d] + [k + 1 for _, k, _ in used])
    s = [[1] * d0 for _ in alphas]
    for j, k, sig in used:
        s[j][k] = max(s[j][k], sig + 1)
    cfg = validate_config(
        inst, {"m": len(alphas), "d0": d0, "alphas": alphas, "s": s}
    )
    cols = cfg.index
    rows = ["1"]
    matrix = [[Fraction(1)] + [Fraction(0)] * len(cols)]
    for (b, tau), (const, terms) in exprs:
        rows.append(f"f^({tau})({format_rational(b)})")
        row = [const] + [Fraction(0)] * len(cols)
        for (j, k, sig), c in terms.items():
            row[1 + cols.index((j + 1, k, sig))] += c
        matrix.append(row)
    return PointNormalization(config=cfg, rows=rows, matrix=matrix)
