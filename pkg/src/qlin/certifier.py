"""Certified lower bounds for |A0 + sum A_{j,k,sigma} f^(sigma)(alpha_j q^k)|_w.

For a cell ``(l, n)`` put ``omega1 = A1`` and let ``omega0`` be the value making
``omega`` a relation.  Then ``L(A) - L(omega) = lambda0 * (A0 - omega0)`` and
``A0 - omega0`` is the linear form we bound.  ``L(A)`` and ``lambda0`` are
exact; ``L(omega)`` is enclosed rigorously.  Two chains are offered:

``sharp``
    ``|Lambda| >= (|L(A)| - |L(omega)|) / |lambda0|`` (ultrametric: ``|L(A)|/|lambda0|``),
    admissible when ``|L(omega)| <= |L(A)|/2``.
``theorem``
    the height chain: ``|L(A)| >= |A| / (H_w(L) H(A))`` by the product formula,
    ``|L(omega)| <= |A| * sum_i |L(e_i)|`` (uniform in A), and the bound
    ``|A| / (2 H_w(L) H(A) |L|_w)`` once the omega part is below half of
    the product-formula bound.  This is the chain whose size tracks the
    theorem's ``exp(-C (log H)^(4/3))`` shape.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .enclosure import Interval, PAdicBall
from .forms import AuxForms
from .places import (
    abs_value,
    format_rational,
    height_poly,
    height_poly_excluding,
    height_vector,
    log_height,
    parse_rational,
)
from .qseries import (
    EvalConfig,
    PrecisionError,
    ProblemInstance,
    f_deriv_enclosure,
    validate_config,
    validate_instance,
)

SCHEMA_VERSION = 1


class CertificationError(RuntimeError):
    def __init__(self, message: str, diagnostics: list[dict] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass
class CertifyOptions:
    l_max: int = 6
    n_window: int = 8
    bits: int = 64
    chain: str = "sharp"
    forced_l: int | None = None
    case: str | None = None
    budget: int | None = None  # maximum number of cells inspected


@dataclass
class Certificate:
    instance: dict
    config: dict
    A: list[Fraction]
    chain: str
    case: str
    l: int
    n: int
    L: list[Fraction]
    L_A: Fraction
    lambda0: Fraction
    omega_bits: int
    omega_bound: Fraction
    A_norm: Fraction
    H_A: Fraction
    H_L: Fraction
    Hw_L: Fraction
    lower_bound: Fraction
    trail: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        r = format_rational
        return {
            "schema_version": SCHEMA_VERSION,
            "instance_digest": digest(self.instance),
            "config_digest": digest(self.config),
            "instance": self.instance,
            "config": self.config,
            "A": [r(a) for a in self.A],
            "chain": self.chain,
            "case": self.case,
            "l": self.l,
            "n": self.n,
            "L": [r(c) for c in self.L],
            "L_A": r(self.L_A),
            "lambda0": r(self.lambda0),
            "omega_bits": self.omega_bits,
            "omega_bound": r(self.omega_bound),
            "A_norm": r(self.A_norm),
            "H_A": r(self.H_A),
            "H_L": r(self.H_L),
            "Hw_L": r(self.Hw_L),
            "lower_bound": r(self.lower_bound),
            "trail": self.trail,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "Certificate":
        p = parse_rational
        return cls(
            instance=data["instance"],
            config=data["config"],
            A=[p(a) for a in data["A"]],
            chain=data["chain"],
            case=data["case"],
            l=int(data["l"]),
            n=int(data["n"]),
            L=[p(c) for c in data["L"]],
            L_A=p(data["L_A"]),
            lambda0=p(data["lambda0"]),
            omega_bits=int(data["omega_bits"]),
            omega_bound=p(data["omega_bound"]),
            A_norm=p(data["A_norm"]),
            H_A=p(data["H_A"]),
            H_L=p(data["H_L"]),
            Hw_L=p(data["Hw_L"]),
            lower_bound=p(data["lower_bound"]),
            trail=list(data.get("trail", [])),
        )


def _step(name: str, lhs, rel: str, rhs) -> dict:
    return {"name": name, "lhs": format_rational(lhs), "rel": rel, "rhs": format_rational(rhs)}


def _holds(lhs: Fraction, rel: str, rhs: Fraction) -> bool:
    return {"<=": lhs <= rhs, ">=": lhs >= rhs, "==": lhs == rhs, ">": lhs > rhs, "!=": lhs != rhs}[rel]


def _vector_norm(place, values) -> Fraction:
    return max(abs_value(place, a) for a in values)


def _omega_enclosures(aux: AuxForms, l, n, A, bits, chain, case):
    """Rigorous upper bound for the omega part used by ``chain``.

    The theorem chain is uniform in A: it only uses ``|omega_1|_w <= |A|_w``.
    """
    w = aux.inst.place
    A1 = A[1:]
    if chain == "sharp":
        return aux.L_omega_enclosure(l, n, A1, bits, case).abs_upper()
    units = []
    for i in range(len(A1)):
        e = [0] * len(A1)
        e[i] = 1
        units.append(aux.L_omega_enclosure(l, n, e, bits, case).abs_upper())
    total = sum(units, Fraction(0)) if w.is_archimedean else max(units)
    return _vector_norm(w, A) * total


def _cell_bound(aux: AuxForms, A, l, n, bits, chain, case):
    """Evaluate one (l, n) cell; returns (Certificate | None, reason)."""
    inst, w = aux.inst, aux.inst.place
    L = aux.L_ln(l, n, case)
    L_A = L(A)
    lam0 = L.coeffs[0]
    if L_A == 0:
        return None, "L(A) = 0"
    if lam0 == 0:
        return None, "lambda0 = 0"
    H_A = height_vector(A)
    H_L = height_poly(L.coeffs)
    Hw_L = height_poly_excluding(L.coeffs, w)
    A_norm = _vector_norm(w, A)
    abs_LA = abs_value(w, L_A)
    abs_lam = abs_value(w, lam0)
    pf = A_norm / (Hw_L * H_A)
    omega = _omega_enclosures(aux, l, n, A, bits, chain, case)
    trail = [
        _step("L_A", L_A, "==", L_A),
        _step("lambda0", lam0, "==", lam0),
        _step("L_A_nonzero", L_A, "!=", 0),
        _step("lambda0_nonzero", lam0, "!=", 0),
        _step("product_formula", abs_LA, ">=", pf),
    ]
    if chain == "sharp":
        trail.append(_step("omega_enclosure", omega, ">=", omega))
        threshold = abs_LA / 2
        if omega > threshold:
            return None, "omega part above |L(A)|/2"
        trail.append(_step("half_condition", omega, "<=", threshold))
        if w.is_archimedean:
            bound = (abs_LA - omega) / abs_lam
        else:
            bound = abs_LA / abs_lam
    elif chain == "theorem":
        trail.append(_step("omega_enclosure", omega, ">=", omega))
        threshold = pf / 2
        if omega > threshold:
            return None, "omega part above half the product-formula bound"
        trail.append(_step("half_condition", omega, "<=", threshold))
        bound = pf / (2 * _vector_norm(w, L.coeffs))
    else:
        raise ValueError(f"unknown chain {chain!r}")
    trail.append(_step("final_chain", bound, "<=", bound))
    trail.append(_step("positive", bound, ">", 0))
    cert = Certificate(
        instance=inst.to_json(),
        config=aux.cfg.to_json(),
        A=list(A),
        chain=chain,
        case=case,
        l=l,
        n=n,
        L=list(L.coeffs),
        L_A=L_A,
        lambda0=lam0,
        omega_bits=bits,
        omega_bound=omega,
        A_norm=A_norm,
        H_A=H_A,
        H_L=H_L,
        Hw_L=Hw_L,
        lower_bound=bound,
        trail=trail,
    )
    return cert, "ok"


def seed_l(inst: ProblemInstance, cfg: EvalConfig, H: Fraction) -> int:
    """Starting l from ``floor((3 log H / (m g0 log H(q)))**(1/3))``.

    g0 has no explicit value; the growth constant of the active case stands in.
    """
    g0 = max(1, math.ceil(inst.g1 if inst.pipeline == "A" else inst.g2))
    hq = log_height(height_vector([1, inst.q]))
    return max(1, int((3 * log_height(H) / (cfg.m * g0 * hq)) ** (1 / 3)))


def search_cells(aux: AuxForms, A, opts: CertifyOptions) -> list[tuple[int, int]]:
    case = aux.case(opts.case)
    if opts.forced_l is not None:
        ls = [opts.forced_l]
    else:
        s = min(seed_l(aux.inst, aux.cfg, height_vector(A)), opts.l_max)
        ls = [s]
        for r in range(1, opts.l_max + 1):
            for l in (s - r, s + r):
                if 1 <= l <= opts.l_max:
                    ls.append(l)
    cells = []
    for l in ls:
        lo = aux.min_n(l, case)
        cells.extend((l, n) for n in range(lo, lo + opts.n_window + 1))
    if opts.budget is not None:
        cells = cells[: opts.budget]
    return cells


def _better(a: Certificate, b: Certificate | None) -> bool:
    if b is None:
        return True
    return (-a.lower_bound, a.l, a.n) < (-b.lower_bound, b.l, b.n)


def certify(
    inst: ProblemInstance,
    cfg: EvalConfig,
    A: Sequence,
    opts: CertifyOptions | None = None,
    aux: AuxForms | None = None,
) -> Certificate:
    """Best certificate over the searched (l, n) cells."""
    opts = opts or CertifyOptions()
    A = [parse_rational(a) for a in A]
    if len(A) != cfg.dim:
        raise ValueError(f"A needs {cfg.dim} entries, got {len(A)}")
    if not any(A):
        raise ValueError("A must be nonzero")
    aux = aux or AuxForms(inst, cfg)
    case = aux.case(opts.case)
    best = None
    diagnostics = []
    for l, n in search_cells(aux, A, opts):
        try:
            cert, why = _cell_bound(aux, A, l, n, opts.bits, opts.chain, case)
        except PrecisionError as exc:
            cert, why = None, str(exc)
        if cert is None:
            diagnostics.append({"l": l, "n": n, "reason": why})
        elif _better(cert, best):
            best = cert
    if best is None:
        raise CertificationError("no admissible (l,n) in budget", diagnostics)
    return best


@dataclass
class CheckResult:
    ok: bool
    failed_step: str | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_certificate(cert: Certificate | dict, extra_bits: int = 0) -> CheckResult:
    """Re-derive every quantity of ``cert`` and replay its inequality trail."""
    data = cert.to_json() if isinstance(cert, Certificate) else cert
    try:
        if data.get("schema_version") != SCHEMA_VERSION:
            return CheckResult(False, "schema", "unknown schema version")
        if digest(data["instance"]) != data["instance_digest"] or digest(data["config"]) != data["config_digest"]:
            return CheckResult(False, "digest", "embedded data does not match digests")
        c = Certificate.from_json(data)
        inst = validate_instance(c.instance)
        if c.case != inst.pipeline:
            inst = inst.with_pipeline(c.case)
        cfg = validate_config(inst, c.config)
    except Exception as exc:  # malformed certificate
        return CheckResult(False, "parse", str(exc))
    w = inst.place
    aux = AuxForms(inst, cfg)
    if len(c.A) != cfg.dim or not any(c.A):
        return CheckResult(False, "A", "coefficient vector has wrong shape or is zero")
    if c.n < aux.min_n(c.l, c.case):
        return CheckResult(False, "range", "n below the admissible threshold")
    L = aux.L_ln(c.l, c.n, c.case)
    L_A = L(c.A)
    lam0 = L.coeffs[0]
    checks = [
        ("L", list(L.coeffs) == c.L),
        ("L_A", L_A == c.L_A),
        ("lambda0", lam0 == c.lambda0),
        ("L_A_nonzero", L_A != 0),
        ("lambda0_nonzero", lam0 != 0),
        ("A_norm", _vector_norm(w, c.A) == c.A_norm),
        ("H_A", height_vector(c.A) == c.H_A),
        ("H_L", height_poly(L.coeffs) == c.H_L),
        ("Hw_L", height_poly_excluding(L.coeffs, w) == c.Hw_L),
    ]
    for name, ok in checks:
        if not ok:
            return CheckResult(False, name, f"recomputed {name} differs")
    abs_LA, abs_lam = abs_value(w, L_A), abs_value(w, lam0)
    pf = c.A_norm / (c.Hw_L * c.H_A)
    if not abs_LA >= pf:
        return CheckResult(False, "product_formula", "product-formula inequality fails")
    bits = max(c.omega_bits, c.omega_bits + extra_bits)
    fresh = _omega_enclosures(aux, c.l, c.n, c.A, bits, c.chain, c.case)
    if not fresh <= c.omega_bound:
        return CheckResult(False, "omega_enclosure", "recorded omega bound is below a fresh enclosure")
    if c.chain == "sharp":
        threshold = abs_LA / 2
        best = (abs_LA - c.omega_bound) / abs_lam if w.is_archimedean else abs_LA / abs_lam
    else:
        threshold = pf / 2
        best = pf / (2 * _vector_norm(w, L.coeffs))
    if not c.omega_bound <= threshold:
        return CheckResult(False, "half_condition", "omega bound exceeds the admissible threshold")
    if not c.lower_bound <= best:
        return CheckResult(False, "final_chain", "lower bound exceeds what the chain proves")
    if not c.lower_bound > 0:
        return CheckResult(False, "positive", "lower bound is not positive")
    for step in c.trail:
        lhs, rhs = parse_rational(step["lhs"]), parse_rational(step["rhs"])
        if not _holds(lhs, step["rel"], rhs):
            return CheckResult(False, step["name"], "trail inequality fails")
    return CheckResult(True)


def linear_form_enclosure(inst: ProblemInstance, cfg: EvalConfig, A: Sequence, precision: int = 256):
    """Enclosure of A0 + sum A_i f^(sigma_i)(alpha_j q^k)."""
    A = [parse_rational(a) for a in A]
    w = inst.place
    acc = Interval.exact(A[0]) if w.is_archimedean else PAdicBall.exact(w.prime, A[0])
    for a, (beta, sig) in zip(A[1:], cfg.points(inst)):
        if a:
            acc = acc + f_deriv_enclosure(inst, beta, sig, precision).scale(a)
    return acc


@dataclass
class SoundnessReport:
    ok: bool
    lower_bound: Fraction
    true_lower: Fraction
    true_upper: Fraction
    strict: bool  # lower_bound <= a proven lower bound of the true value


def soundness_crosscheck(
    inst: ProblemInstance, cfg: EvalConfig, A: Sequence, cert: Certificate, precision: int = 256
) -> SoundnessReport:
    enc = linear_form_enclosure(inst, cfg, A, precision)
    lo, hi = enc.abs_lower(), enc.abs_upper()
    b = cert.lower_bound
    return SoundnessReport(ok=0 < b <= hi, lower_bound=b, true_lower=lo, true_upper=hi, strict=b <= lo)


@dataclass
class ScanRow:
    H: Fraction
    l: int
    n: int
    lower_bound: Fraction
    neg_log_bound: float


@dataclass
class ExponentFit:
    exponent: float | None
    constant: float | None
    residuals: list[float]
    degenerate: bool
    note: str = ""


def neg_log(bound: Fraction, A_norm: Fraction) -> float:
    """``log(|A|_w / bound)``."""
    return log_height(A_norm / bound)


def exponent_scan(
    inst: ProblemInstance,
    cfg: EvalConfig,
    family: Iterable[Sequence],
    opts: CertifyOptions | None = None,
) -> tuple[list[ScanRow], ExponentFit]:
    opts = opts or CertifyOptions(chain="theorem")
    aux = AuxForms(inst, cfg)
    rows = []
    for A in family:
        cert = certify(inst, cfg, A, opts, aux=aux)
        rows.append(ScanRow(cert.H_A, cert.l, cert.n, cert.lower_bound, neg_log(cert.lower_bound, cert.A_norm)))
    return rows, fit_exponent(rows)


def fit_exponent(rows: Sequence[ScanRow]) -> ExponentFit:
    """Least squares for ``neg_log_bound ~ C (log H)^e`` in log-log coordinates."""
    pts = [(log_height(r.H), r.neg_log_bound) for r in rows]
    xs = [x for x, _ in pts]
    if len(set(xs)) < 2:
        return ExponentFit(None, None, [], True, "log H is constant over the family")
    if any(x <= 0 or y <= 0 for x, y in pts):
        return ExponentFit(None, None, [], True, "nonpositive log H or neg_log_bound")
    lx = np.log(np.array(xs))
    ly = np.log(np.array([y for _, y in pts]))
    e, logc = np.polyfit(lx, ly, 1)
    resid = ly - (e * lx + logc)
    return ExponentFit(float(e), float(np.exp(logc)), [float(r) for r in resid], False)
