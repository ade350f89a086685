"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import math
import time
from fractions import Fraction as F

import pytest

from conftest import (
    ACCEPTANCE,
    D0_2,
    SINGLE,
    TSCHAKALOFF,
    TSCHAKALOFF_2ADIC,
    Y2_MINUS_XY,
    Y_OVER_X,
    build,
)
from qlin import poly as zp
from qlin.certifier import CertifyOptions, certify, check_certificate, exponent_scan, soundness_crosscheck
from qlin.qseries import f_deriv_enclosure, functional_equation_residual
from qlin.verify import run_suite, split_rng


def record(k: int, ok: bool, detail: str):
    ACCEPTANCE[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[k])
    assert ok, detail


def _funceq_all_zero(raw, N=200):
    rep = functional_equation_residual(build(raw, SINGLE if raw is not Y2_MINUS_XY else D0_2)[0], N)
    return rep.ok and all(r == 0 for r in rep.residuals)


def test_criterion_01_exact_identities():
    t = time.perf_counter()
    ok = all(_funceq_all_zero(raw) for raw in (TSCHAKALOFF, Y_OVER_X, Y2_MINUS_XY))
    dt = time.perf_counter() - t
    record(1, ok and dt < 10, f"residuals exactly 0 for N=200 on 3 instances in {dt:.2f}s (limit 10s)")


def test_criterion_02_pi_closed_form():
    inst, _ = build(TSCHAKALOFF)
    ok = all(inst.pi_sym(n) == zp.monomial(1, n * (n + 1) // 2) for n in range(101))
    record(2, ok, "Pi_n(z) = z^(n(n+1)/2) for n <= 100")


def test_criterion_03_lemma2_grid():
    t = time.perf_counter()
    rep = run_suite("lemma2", *build(Y2_MINUS_XY, D0_2), l_max=4, n_max=40, n_cal=20)
    dt = time.perf_counter() - t
    s = rep.summary
    record(
        3,
        rep.ok and dt < 300,
        f"deficit <= c(n+1), c={s['c_calibrated']} fitted on n<=20, held on 20<n<=40 ({s['cells']} cells, {dt:.1f}s)",
    )


def test_criterion_04_lemma1_grid():
    rep = run_suite("lemma1", *build(Y_OVER_X), l_max=3, n_max=30, n_cal=20)
    s = rep.summary
    record(
        4,
        rep.ok,
        f"mean decrements {s['mean_decrement']}, l^3 coefficient {s['l3_coefficient']:.4f} vs m g1/6 = {s['l3_target']:.4f}"
        + ("" if rep.ok else f"; {rep.failures[:2]}"),
    )


def _nonvanish(raw, seed=0):
    return run_suite("nonvanish", *build(raw), n0_max=15, samples=20, seed=seed, c0_limit=10)


def test_criterion_05_nonvanishing():
    reps = [_nonvanish(TSCHAKALOFF), _nonvanish(Y_OVER_X)]
    c0 = [r.summary["c0_calibrated"] for r in reps]
    ok = all(r.ok for r in reps) and all(c != "inf" and c <= 10 for c in c0)
    record(5, ok, f"20 seeded omega per instance, windows [n0, 2n0+c0], n0<=15; calibrated c0 = {c0}")


def test_criterion_06_height_growth():
    rep = run_suite("heights", *build(Y_OVER_X), l_max=4, n_max=40, n_cal=20)
    s = rep.summary
    ok = rep.ok and s["max_logH_ratio_n_ge_cal"] <= 1 / 2 + 0.5 and s["C_Hw_calibrated"] <= 20
    record(
        6,
        ok,
        f"max logH/(logH(q) n^2) = {s['max_logH_ratio_n_ge_cal']:.3f} <= d/2+0.5 = 1.0; "
        f"H_w constant {s['C_Hw_calibrated']:.3f} <= 20, held on 20<n<=40",
    )


def _random_vectors(seed_name, count=50):
    rng = split_rng(0, seed_name)
    out = []
    while len(out) < count:
        A = (rng.randint(-100, 100), rng.randint(-100, 100))
        if A != (0, 0):
            out.append(A)
    return out


def _soundness_run(raw, name):
    inst, cfg = build(raw)
    bad = []
    for A in _random_vectors(name):
        cert = certify(inst, cfg, A)
        rep = soundness_crosscheck(inst, cfg, A, cert, precision=256)
        if not (check_certificate(cert) and rep.ok and cert.lower_bound > 0):
            bad.append(A)
    return bad


def test_criterion_07_certifier_soundness():
    t = time.perf_counter()
    bad = _soundness_run(TSCHAKALOFF, "acceptance.c7")
    dt = time.perf_counter() - t
    record(7, not bad and dt < 600, f"50 seeded A: {50 - len(bad)}/50 checked and sound at 256 bits in {dt:.1f}s")


def test_criterion_08_exponent_shape():
    inst, cfg = build(TSCHAKALOFF)
    fam = [(2**j, 1) for j in range(1, 25)]
    _, adaptive = exponent_scan(inst, cfg, fam, CertifyOptions(chain="theorem", l_max=8, n_window=30))
    _, forced = exponent_scan(inst, cfg, fam, CertifyOptions(chain="theorem", forced_l=1, n_window=30))
    e, e1 = adaptive.exponent, forced.exponent
    in_window = e is not None and 1.1 <= e <= 1.8
    below = e is not None and e1 is not None and e < e1
    record(8, in_window and below, f"adaptive e = {e:.3f} (window [1.1, 1.8]), forced l=1 e = {e1:.3f}, adaptive below forced: {below}")


def test_criterion_09_padic_path():
    inst, cfg = build(TSCHAKALOFF_2ADIC)
    c1 = _funceq_all_zero(TSCHAKALOFF_2ADIC)
    nv = _nonvanish(TSCHAKALOFF_2ADIC)
    bad = _soundness_run(TSCHAKALOFF_2ADIC, "acceptance.c9")
    enc = f_deriv_enclosure(inst, F(1), 0, 6)
    residue = enc.prec >= 4 and enc.compress(4).approx == 11
    ok = c1 and nv.ok and not bad and residue
    record(
        9,
        ok,
        f"funceq {c1}, nonvanish {nv.ok} (c0={nv.summary['c0_calibrated']}), 50 certificates sound: {not bad}, "
        f"f(1) = {enc.compress(6)} so f(1) = 11 mod 2^4: {residue}",
    )


def test_criterion_10_determinism():
    def reports():
        out = []
        out.append(run_suite("nonvanish", *build(TSCHAKALOFF), seed=42, n0_max=10, samples=8).csv_text())
        out.append(run_suite("lemma1", *build(Y_OVER_X), seed=42, l_max=2, n_max=22, n_cal=16).csv_text())
        out.append(certify(*build(TSCHAKALOFF), (17, -23)).dumps())
        return out

    ok = reports() == reports()
    record(10, ok, "nonvanish/lemma1 CSV and certificate JSON byte-identical across reruns with seed 42")
