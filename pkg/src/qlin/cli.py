"""``qlin`` command line.

The first stdout line is always ``STATUS: ok|fail|error``.  Exit codes: 0 ok,
1 a check or assertion failed, 2 invalid input.
"""

from __future__ import annotations

import json
import sys

import click

from . import io as qio
from .certifier import CertificationError, CertifyOptions, certify, check_certificate
from .enclosure import Interval
from .places import format_rational, parse_rational
from .qseries import InstanceError, PrecisionError, f_deriv_enclosure
from .verify import KINDS, run_suite

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _emit(status: str, body: dict | None = None, code: int = EXIT_OK):
    click.echo(f"STATUS: {status}")
    if body is not None:
        click.echo(json.dumps(body, indent=2, sort_keys=True))
    sys.exit(code)


def _error(message: str):
    _emit("error", {"error": message}, EXIT_ERROR)


def _load(instance, config, pipeline=None):
    try:
        inst = qio.load_instance(instance, pipeline)
        cfg = qio.load_config(config, inst) if config else None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        _error(str(exc))
    return inst, cfg


@click.group()
def main():
    """Exact q-series auxiliary forms and certified linear-form bounds."""


@main.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.option("--instance", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--l-max", type=click.IntRange(min=1), default=None)
@click.option("--n-max", type=click.IntRange(min=1), default=None)
@click.option("--n0-max", type=click.IntRange(min=1), default=15, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--precision-bits", type=click.IntRange(min=8), default=64, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--pipeline", type=click.Choice(["A", "B"]), default=None, help="Override the case pipeline.")
@click.option("--out", type=click.Path(dir_okay=False), help="CSV report path.")
def verify(kind, instance, config, l_max, n_max, n0_max, seed, precision_bits, workers, pipeline, out):
    """Run a property suite over an (l, n) grid."""
    inst, cfg = _load(instance, config, pipeline)
    if cfg is None and kind != "funceq":
        _error(f"{kind} needs --config")
    kwargs = {"seed": seed, "workers": workers, "bits": precision_bits, "n0_max": n0_max}
    if l_max is not None:
        kwargs["l_max"] = l_max
    if n_max is not None:
        kwargs["N" if kind == "funceq" else "n_max"] = n_max
    try:
        report = run_suite(kind, inst, cfg, **kwargs)
    except (ValueError, InstanceError) as exc:
        _error(str(exc))
    if out:
        qio.write_text(out, report.csv_text())
    body = report.summary_json()
    if not out:
        body["csv"] = report.csv_text()
    _emit("ok" if report.ok else "fail", body, EXIT_OK if report.ok else EXIT_FAIL)


def _parse_vector(text: str):
    try:
        return [parse_rational(t.strip()) for t in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(str(exc))


def _check_file(path):
    try:
        data = qio.read_json(path)
    except (OSError, ValueError) as exc:
        _error(str(exc))
    result = check_certificate(data)
    if result:
        _emit("ok", {"check": "passed"})
    _emit("fail", {"check": "failed", "step": result.failed_step, "message": result.message}, EXIT_FAIL)


@main.command(name="certify")
@click.option("--instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--A", "A", help='Coefficient vector, e.g. "1,-2".')
@click.option("--budget", type=click.IntRange(min=1), default=None, help="Maximum number of (l, n) cells.")
@click.option("--l-max", type=click.IntRange(min=1), default=6, show_default=True)
@click.option("--n-window", type=click.IntRange(min=0), default=8, show_default=True)
@click.option("--precision-bits", type=click.IntRange(min=8), default=64, show_default=True)
@click.option("--chain", type=click.Choice(["sharp", "theorem"]), default="sharp", show_default=True)
@click.option("--pipeline", type=click.Choice(["A", "B"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), help="Certificate path (stdout otherwise).")
@click.option("--check", "check_path", type=click.Path(exists=True, dir_okay=False), help="Check a certificate instead.")
def certify_cmd(instance, config, A, budget, l_max, n_window, precision_bits, chain, pipeline, out, check_path):
    """Certify a lower bound for A0 + sum A_i f^(sigma)(alpha_j q^k)."""
    if check_path:
        _check_file(check_path)
    if not (instance and config and A):
        _error("--instance, --config and --A are required")
    inst, cfg = _load(instance, config, pipeline)
    try:
        vec = _parse_vector(A)
    except click.BadParameter as exc:
        _error(f"cannot parse --A: {exc.message}")
    if len(vec) != cfg.dim:
        _error(f"--A needs {cfg.dim} entries, got {len(vec)}")
    if not any(vec):
        _error("A must be a nonzero vector")
    opts = CertifyOptions(l_max=l_max, n_window=n_window, bits=precision_bits, chain=chain, budget=budget)
    try:
        cert = certify(inst, cfg, vec, opts)
    except CertificationError as exc:
        _emit("fail", {"error": str(exc), "cells": exc.diagnostics}, EXIT_FAIL)
    except PrecisionError as exc:
        _emit("fail", {"error": str(exc)}, EXIT_FAIL)
    result = check_certificate(cert)
    if out:
        qio.write_text(out, cert.dumps())
    body = {
        "l": cert.l,
        "n": cert.n,
        "lower_bound": format_rational(cert.lower_bound),
        "lower_bound_float": float(cert.lower_bound),
        "self_check": bool(result),
    }
    if not out:
        body["certificate"] = cert.to_json()
    if not result:
        body["failed_step"] = result.failed_step
        _emit("fail", body, EXIT_FAIL)
    _emit("ok", body)


@main.command()
@click.option("--cert", required=True, type=click.Path(exists=True, dir_okay=False))
def check(cert):
    """Re-verify a certificate from scratch."""
    _check_file(cert)


@main.command(name="eval")
@click.option("--instance", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--point", required=True)
@click.option("--sigma", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--precision-bits", type=click.IntRange(min=1), default=64, show_default=True)
@click.option("--modulus-exp", type=click.IntRange(min=1), default=None, help="p-adic: also print the residue mod p^k.")
def eval_cmd(instance, point, sigma, precision_bits, modulus_exp):
    """Enclose f^(sigma)(point)."""
    inst, _ = _load(instance, None)
    try:
        beta = parse_rational(point)
    except (ValueError, ZeroDivisionError) as exc:
        _error(f"invalid point: {exc}")
    try:
        enc = f_deriv_enclosure(inst, beta, sigma, precision_bits)
    except PrecisionError as exc:
        _emit("fail", {"error": str(exc)}, EXIT_FAIL)
    if isinstance(enc, Interval):
        body = {
            "lo": format_rational(enc.lo),
            "hi": format_rational(enc.hi),
            "lo_float": float(enc.lo),
            "hi_float": float(enc.hi),
            "width_log2_le": -precision_bits,
        }
    else:
        body = {"approximant": format_rational(enc.approx), "error_valuation": enc.prec, "display": str(enc)}
        if modulus_exp is not None:
            if modulus_exp > enc.prec:
                _error(f"precision {enc.prec} does not determine the residue mod {enc.p}^{modulus_exp}")
            body["residue"] = f"{format_rational(enc.compress(modulus_exp).approx)} mod {enc.p}^{modulus_exp}"
    _emit("ok", body)


if __name__ == "__main__":
    main()
