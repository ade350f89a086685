import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from qlin.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"
T = str(DATA / "tschakaloff.json")
T2 = str(DATA / "tschakaloff_2adic.json")
CFG = str(DATA / "cfg_single.json")


def run(*args):
    res = CliRunner().invoke(main, list(args))
    first = res.output.splitlines()[0] if res.output else ""
    return res.exit_code, first, res.output


def test_eval_archimedean():
    code, first, out = run("eval", "--instance", T, "--point", "1")
    assert code == 0 and first == "STATUS: ok"
    body = json.loads(out.split("\n", 1)[1])
    assert abs(body["lo_float"] - 1.6416325606551538) < 1e-15
    code, _, out = run("eval", "--instance", T, "--point", "1", "--sigma", "1")
    assert abs(json.loads(out.split("\n", 1)[1])["lo_float"] - 0.8009367251072778) < 1e-15


def test_eval_padic_display():
    code, _, out = run("eval", "--instance", T2, "--point", "1", "--precision-bits", "6", "--modulus-exp", "4")
    body = json.loads(out.split("\n", 1)[1])
    assert code == 0 and body["residue"] == "11 mod 2^4"
    assert body["error_valuation"] >= 6


def test_eval_invalid_point():
    assert run("eval", "--instance", T, "--point", "x")[:2] == (2, "STATUS: error")


def test_certify_and_check(tmp_path):
    cert = tmp_path / "c.json"
    code, first, _ = run("certify", "--instance", T, "--config", CFG, "--A", "1,-2", "--out", str(cert))
    assert (code, first) == (0, "STATUS: ok")
    assert run("check", "--cert", str(cert))[:2] == (0, "STATUS: ok")
    assert run("certify", "--check", str(cert))[0] == 0
    data = json.loads(cert.read_text())
    data["lower_bound"] = str(2 * int(data["lower_bound"].split("/")[0])) + "/" + data["lower_bound"].split("/")[1]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, first, out = run("check", "--cert", str(bad))
    assert (code, first) == (1, "STATUS: fail") and "final_chain" in out


def test_certify_zero_vector():
    assert run("certify", "--instance", T, "--config", CFG, "--A", "0,0")[:2] == (2, "STATUS: error")


def test_certify_budget_failure():
    code, first, out = run(
        "certify", "--instance", T, "--config", CFG, "--A", "-821/500,1", "--budget", "1", "--l-max", "1"
    )
    assert (code, first) == (1, "STATUS: fail") and "no admissible" in out


def test_invalid_instance(tmp_path):
    bad = tmp_path / "i.json"
    bad.write_text(json.dumps({"P": [["0"], ["1"]], "Q": ["1"], "q": "3/2", "place": "infinity"}))
    code, first, out = run("eval", "--instance", str(bad), "--point", "1")
    assert (code, first) == (2, "STATUS: error") and "q place condition violated" in out


def test_verify_funceq_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, first, _ = run("verify", "funceq", "--instance", T, "--n-max", "200", "--out", str(path))
        assert (code, first) == (0, "STATUS: ok")
    assert a.read_bytes() == b.read_bytes()
    assert set(a.read_text().splitlines()[1:]) == {f"{n},0" for n in range(201)}


def test_verify_needs_config():
    assert run("verify", "lemma2", "--instance", T)[:2] == (2, "STATUS: error")
