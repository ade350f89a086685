from qlin.verify import run_suite, split_rng


def test_split_rng_is_deterministic_and_independent():
    a = [split_rng(1, "x").random() for _ in range(3)]
    assert a == [split_rng(1, "x").random() for _ in range(3)]
    assert split_rng(1, "x").random() != split_rng(1, "y").random()
    assert split_rng(1, "x").random() != split_rng(2, "x").random()


def test_funceq_suite(tsch):
    rep = run_suite("funceq", tsch[0], None, N=200)
    assert rep.ok and all(r["residual"] == 0 for r in rep.rows)
    assert rep.csv_text().splitlines()[0] == "n,residual"


def test_lemma2_small_grid(case_b):
    rep = run_suite("lemma2", *case_b, l_max=2, n_max=24, n_cal=14)
    assert rep.ok
    header = rep.csv_text().splitlines()[0]
    assert header == "case,l,n,ord_z,deg_z,logH,logHw,bound_exponent"


def test_lemma1_small_grid(case_a):
    rep = run_suite("lemma1", *case_a, l_max=2, n_max=24, n_cal=16)
    assert rep.ok, rep.failures


def test_nonvanish_and_determinism(tsch):
    a = run_suite("nonvanish", *tsch, seed=42, n0_max=8, samples=6)
    b = run_suite("nonvanish", *tsch, seed=42, n0_max=8, samples=6)
    assert a.ok and a.csv_text() == b.csv_text() and a.summary_json() == b.summary_json()


def test_worker_pool_matches_serial(case_a):
    serial = run_suite("heights", *case_a, l_max=3, n_max=26, n_cal=18)
    pooled = run_suite("heights", *case_a, l_max=3, n_max=26, n_cal=18, workers=2)
    assert serial.csv_text() == pooled.csv_text()
    assert serial.summary_json() == pooled.summary_json()


def test_suite_rejects_wrong_case(tsch, case_a):
    import pytest

    with pytest.raises(ValueError):
        run_suite("lemma1", *tsch)
    with pytest.raises(ValueError):
        run_suite("lemma2", *case_a)
    with pytest.raises(ValueError):
        run_suite("nope", *tsch)
