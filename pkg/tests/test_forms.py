import math
import random
from fractions import Fraction as F

import pytest

from qlin import poly as zp
from qlin.forms import AuxForms, LinearForm, deg_z, min_n, operator_expansion, ord_z, u_n
from qlin.qseries import f_deriv_enclosure, validate_config

from conftest import Y_OVER_X, build

Z = zp.monomial(1, 1)


def P(*cs):
    return zp.from_coeffs(cs)


def test_u_n_examples(tsch):
    inst, _ = tsch
    cfg2 = validate_config(inst, {"m": 1, "d0": 1, "alphas": ["1"], "s": [[2]]})
    assert u_n(cfg2, 1).coeffs == (zp.ZERO, zp.ONE, zp.ONE)
    assert u_n(cfg2, 0).coeffs == (zp.ZERO, zp.ONE, zp.ZERO)
    cfg1 = tsch[1]
    for n in range(6):
        assert u_n(cfg1, n).coeffs == (zp.ZERO, zp.ONE)


def test_v_n_examples(tsch_aux):
    assert tsch_aux.v(0).coeffs == (zp.ONE, zp.ONE)
    assert tsch_aux.v(1).coeffs == (Z, P(1, 1))
    assert tsch_aux.v(2).coeffs == (P(0, 0, 0, 1), P(1, 0, 1, 1))


@pytest.mark.parametrize("raw", ["tsch", "case_a", "case_b"])
def test_recurrence_matches_closed_form(raw, request):
    inst, cfg = request.getfixturevalue(raw)
    aux = AuxForms(inst, cfg)
    for n in range(0, 61, 6):
        assert aux.v(n) == aux.v_direct(n)
        # specialized recurrence agrees with the symbolic one at z = q
        assert aux.v(n, symbolic=False) == aux.v(n).at(inst.q)


def test_deg_z_growth(tsch_aux, case_b):
    # |deg_z v_n - d n^2/2| <= C n with C fitted on n <= 30, asserted up to 60
    for aux, d in ((tsch_aux, 1), (AuxForms(*case_b), 2)):
        C = max(abs(deg_z(aux.v(n)) - d * n * n / 2) / n for n in range(1, 31))
        assert all(abs(deg_z(aux.v(n)) - d * n * n / 2) <= C * n for n in range(31, 61))


def test_min_n_examples(case_a, case_b, tsch):
    assert min_n(*case_b, 2) == 3
    assert min_n(*tsch, 0) == 0 and min_n(*case_a, 0) == 0
    assert min_n(*case_a, 1) == 2


def test_operator_expansion_examples(tsch, case_a):
    assert operator_expansion(*tsch, 1).coeffs == (zp.ONE, P(-1))
    assert operator_expansion(*tsch, 0).coeffs == (zp.ONE,)
    assert operator_expansion(*case_a, 1).coeffs == (1, -1, F(1, 4))


def test_v_ln_examples(tsch_aux, case_a_aux):
    v = tsch_aux.v_ln(1, 2)
    assert v.coeffs == (P(0, -1, 0, 1), P(0, -1, 1, 1))
    assert ord_z(v) == 1
    assert tsch_aux.v_ln(0, 5) == tsch_aux.v(5)
    assert case_a_aux.v_ln(1, 2).coeffs == (F(9, 4), F(17, 4))
    with pytest.raises(ValueError):
        case_a_aux.v_ln(1, 1)


def test_ord_z_examples(tsch_aux):
    assert ord_z(tsch_aux.v(0)) == 0
    assert ord_z(LinearForm((zp.ZERO, zp.ZERO), True)) == math.inf


def test_L_ln_examples(tsch_aux, case_a_aux):
    assert case_a_aux.L_ln(1, 2).coeffs == (9, 17)
    assert tsch_aux.L_ln(1, 2).coeffs == (3, 5)
    assert tsch_aux.L_ln(0, 0).coeffs == (1, 1)


def test_hankel_examples(tsch_aux):
    assert tsch_aux.hankel_value(1, [1, 1]) == 2
    assert tsch_aux.hankel_value(2, [1, 1]) == 17
    assert all(tsch_aux.hankel_value(n, [0, 0]) == 0 for n in (1, 2, 3))
    assert tsch_aux.hankel_values(6, [3, -2]) == [tsch_aux.hankel_value(n, [3, -2]) for n in range(1, 7)]


def test_hankel_homogeneity(tsch_aux):
    rng = random.Random(11)
    for _ in range(5):
        om = [F(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(2)]
        t = F(rng.randint(1, 9), rng.randint(-9, -1))
        for n in (1, 3, 5):
            assert tsch_aux.hankel_value(n, [t * x for x in om]) == t**n * tsch_aux.hankel_value(n, om)


def test_remainder_enclosure(tsch, tsch_aux):
    inst = tsch[0]
    enc = tsch_aux.remainder_enclosure(1, [1])
    f1 = f_deriv_enclosure(inst, F(1), 0, 80)
    direct = (f1.scale(-2) + 3)  # 2 omega0 + 3 omega1 with omega0 = -f(1)
    assert enc.overlaps(direct)
    assert abs(float(enc.mid) + 0.28326512131030768) < 1e-12
    assert tsch_aux.remainder_enclosure(4, [0]).width == 0


def test_remainder_decay(tsch_aux):
    mags = [tsch_aux.remainder_enclosure(n, [1]).abs_upper() for n in range(2, 12)]
    # |v_n(q, omega)| ~ |q|^(-n + O(1)): consecutive ratios settle near 1/2
    ratios = [float(b / a) for a, b in zip(mags, mags[1:])]
    assert all(0.3 < r < 0.7 for r in ratios[3:])


def test_L_omega_bound(tsch_aux, tsch):
    inst = tsch[0]
    # l = 0 is the remainder itself
    assert tsch_aux.L_omega_bound(0, 3, [1]) >= tsch_aux.remainder_enclosure(3, [1]).abs_upper()
    # l = 1, n = 2: q^-1 (v_2 - v_1)(q, omega)
    enc = tsch_aux.L_omega_enclosure(1, 2, [1])
    expect = (tsch_aux.remainder_enclosure(2, [1]) - tsch_aux.remainder_enclosure(1, [1])).scale(F(1, 2))
    assert enc.overlaps(expect)
    # decreasing in n at fixed l (Tschakaloff, l = 1)
    bounds = [tsch_aux.L_omega_bound(1, n, [1]) for n in range(3, 8)]
    assert all(b < a for a, b in zip(bounds, bounds[1:]))


def test_L_omega_matches_exact_form(case_a, case_a_aux):
    # L(omega) = L(A) - lambda0 (A0 - omega0) checked numerically
    inst, cfg = case_a
    f1 = f_deriv_enclosure(inst, F(1), 0, 120)
    for l, n in ((1, 3), (2, 6)):
        L = case_a_aux.L_ln(l, n)
        enc = case_a_aux.L_omega_enclosure(l, n, [F(2, 3)], 100)
        direct = f1.scale(-F(2, 3) * L.coeffs[0]) + F(2, 3) * L.coeffs[1]
        assert enc.overlaps(direct)


def test_integrality(tsch, case_a):
    assert all(AuxForms(*tsch).integrality_check(n) for n in range(12))
    aux = AuxForms(*case_a)
    assert aux.I(3) == 6 and all(aux.integrality_check(n) for n in range(12))
    inst, cfg = build(Y_OVER_X, {"m": 1, "d0": 1, "alphas": ["1/3"], "s": [[1]]})
    aux3 = AuxForms(inst, cfg)
    assert aux3.I(5) == 3**5 * math.factorial(5)
    assert all(aux3.integrality_check(n) for n in range(10))
    # without the denominator the check is genuinely needed
    assert not zp.integer_content_ok(aux3.v(3).coeffs[1])


def test_heights(tsch_aux):
    H, Hw = tsch_aux.heights(1, 2)
    assert (H, Hw) == (8, 1)
