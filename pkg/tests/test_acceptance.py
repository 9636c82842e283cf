"""Exit criteria, one test per criterion; each prints a PASS/FAIL line."""

import hashlib
import json
import math
import time

import pytest

from zagreb_lab import asymptotics as asy
from zagreb_lab import montecarlo as mc
from zagreb_lab import suites
from zagreb_lab.cli import main
from zagreb_lab.trees import TreeModel

SQPI = math.sqrt(math.pi)


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def test_c01_oracle_chain(record_criterion):
    res, secs = timed(suites.oracle_suite, n_max=7, ks=(2, 3, 4), weight=8)
    compared = sum(c.details["compared"] for c in res.checks)
    ok = res.passed and secs < 300
    record_criterion("1 oracle chain exact, both models, k=2..4, n<=7, ki+l<=8", ok, f"{compared} moments, {secs:.1f}s")
    assert ok, res.failures


def test_c02_closed_forms(record_criterion):
    res, secs = timed(suites.closed_forms_suite, n_max=200)
    exact_checks = [c for c in res.checks if c.name != "plane_mean_remainder"]
    ok = all(c.passed for c in exact_checks) and secs < 60
    record_criterion("2 closed forms E R_n (both), E Z_n^(2) (plane) equal DP for n<=200", ok, f"{secs:.1f}s")
    assert ok, [c.to_json() for c in exact_checks if not c.passed]


def test_c03_mu2(record_criterion, capsys):
    t0 = time.perf_counter()
    code = main(["constants", "--k", "2", "--J", "10000"])
    data = json.loads(capsys.readouterr().out)
    secs = time.perf_counter() - t0
    gap = abs(data["mu"] - 6)
    ok = code == 0 and gap < 1e-2 and gap <= data["mu_err"] and secs < 60
    record_criterion("3 mu_2 = 6 within 1e-2, error estimate covers the gap", ok, f"mu={data['mu']:.5f} err={data['mu_err']:.4f}")
    assert ok


def test_c04_transfer(record_criterion):
    res, secs = timed(suites.transfer_suite, N=100_000)
    parts = [f"{c.name}: {c.details['normalized']:.4f} vs {c.details['target']:.4f} ({c.details['rel_gap']:.1%}, tol {c.details['tol']:.0%})" for c in res.checks]
    ok = res.passed and secs < 60
    record_criterion("4 transfer examples at N=1e5", ok, "; ".join(parts))
    assert ok, parts


def test_c05_plane_mean_remainder(record_criterion):
    rep, secs = timed(suites.plane_mean_remainder_check, 100, 2000)
    d = rep.details
    ok = rep.passed and secs < 60
    record_criterion(
        "5 plane k=2 mean remainder / sqrt(n) bounded on [100, 2000]",
        ok,
        f"max|d| lower {d['max_abs_lower_half']:.3f}, upper {d['max_abs_upper_half']:.3f}, slope {d['slope_vs_log_n']:.3f}",
    )
    assert ok


def test_c06_g_consistency(record_criterion):
    g3, g4 = asy.g_table(3, 3, 20), asy.g_table(4, 3, 20)
    gap3 = abs(g3.value(1, 0) / (12 * SQPI) - 1)
    gap4 = abs(g4.value(1, 0) / 48 - 1)
    ray = max(
        abs(math.expm1(t.log(0, s) - (s * math.log(2) + math.lgamma(1 + s / 2)))) for t in (g3, g4) for s in range(21)
    )
    ok = gap3 < 1e-10 and gap4 < 1e-10 and ray < 1e-12
    record_criterion("6 g_{1,0} closed form (1e-10), g_{0,s} Rayleigh (1e-12, s<=20)", ok, f"{gap3:.1e}, {gap4:.1e}, {ray:.1e}")
    assert ok


def test_c07_carleman(record_criterion):
    c4 = asy.carleman_diagnostic(asy.g_table(4, 60, 0), 60, window=(30, 60))
    c5 = asy.carleman_diagnostic(asy.g_table(5, 60, 0), 60, window=(30, 60))
    s4, s5 = c4.details["spread_r"], c5.details["spread_r_k4"]
    ok = s4 <= 0.2 and s5 <= 0.2
    record_criterion("7 Carleman: term*r (k=4), term*r^(5/4) (k=5) in 20% band on [30,60]", ok, f"spreads {s4:.3f}, {s5:.3f}")
    assert ok


def test_c08_appendix(record_criterion):
    res = suites.appendix_suite(ks=(3, 4, 5), r_max=30, s_max=10)
    A = [c.details.get("A") for c in res.checks if c.name.startswith("appendix_bound")]
    ok = res.passed
    record_criterion("8 appendix bound finite A (k=3,4,5); Gamma-ratio and binomial grids clean", ok, f"A = {A}")
    assert ok, res.failures


@pytest.mark.slow
def test_c09_clt(record_criterion):
    res, secs = timed(suites.clt_suite, seed=20261014, sizes=(1_000, 10_000), replicates=100_000)
    rep = res.checks[0]
    rows = rep.details["rows"]
    last = rows[-1]
    ok = rep.passed and secs < 600
    record_criterion(
        "9 non-plane CLT at n=1e4, 1e5 replicates",
        ok,
        f"m3*={last['skew']:.4f} m4*-3={last['kurt'] - 3:.4f}; deviation {rows[0]['deviation']:.3f} -> {last['deviation']:.3f}; {secs:.0f}s",
    )
    assert ok


@pytest.mark.slow
def test_c10_plane_limit(record_criterion):
    res, secs = timed(suites.plane_limit_suite, seed=20261014, sizes=(100, 1_000, 10_000), replicates=20_000)
    parts = []
    for rep in res.checks:
        devs = [r["z_rel_dev"][1] for r in rep.details["rows"]]
        rdev = rep.details["rows"][-1]["r_rel_dev"][1]
        parts.append(f"{rep.name}: Z dev {', '.join(f'{d:+.3f}' for d in devs)}; R dev {rdev:+.4f}")
    ok = res.passed and secs < 900
    record_criterion("10 plane limit moments k=3,4 (15% Z, 3% R, monotone)", ok, "; ".join(parts))
    assert ok


def _digests(tmp_path, tag, argv, capsys):
    out = tmp_path / tag
    main([*argv, "--out", str(out)])
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert all(hashlib.sha256((out / n).read_bytes()).hexdigest() == d for n, d in manifest["files"].items())
    return manifest["files"]


def test_c11_determinism(record_criterion, tmp_path, capsys):
    runs = [
        ["verify", "--suite", "oracle", "--seed", "7", "--n-max", "6"],
        ["verify", "--suite", "clt", "--seed", "7", "--replicates", "3000"],
        ["exact", "--model", "plane", "--k", "3", "--n-max", "40"],
        ["simulate", "--model", "plane", "--k", "4", "--sizes", "10,1000", "--replicates", "2000", "--seed", "7", "--csv"],
    ]
    same = []
    for i, argv in enumerate(runs):
        a = _digests(tmp_path, f"a{i}", argv, capsys)
        b = _digests(tmp_path, f"b{i}", argv, capsys)
        same.append(a == b)
    ok = all(same)
    record_criterion("11 repeated runs give byte-identical outputs", ok, f"{sum(same)}/{len(same)} commands")
    assert ok
