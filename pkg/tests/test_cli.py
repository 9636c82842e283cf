import csv
import hashlib
import io
import json

import pytest

from zagreb_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_constants(capsys):
    code, out, _ = run(capsys, "constants", "--k", "2", "--J", "10000")
    assert code == 0
    data = json.loads(out)
    assert {"k", "mu", "mu_err", "var", "var_err", "J"} <= set(data)
    assert abs(data["mu"] - 6) < 1e-2 and data["mu_err"] > 0


def test_enumerate_plane(capsys):
    code, out, _ = run(capsys, "enumerate", "--model", "plane", "--n", "4", "--k", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# histories 15"
    table = rows("\n".join(lines[1:]))
    assert table[0] == ["n", "i", "l", "numerator", "denominator"]
    assert ["4", "0", "1", "11", "5"] in table


def test_verify_oracle(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "oracle", "--n-max", "7", "--seed", "1")
    assert code == 0
    report = json.loads(out)
    assert report["passed"] and report["failures"] == []


def test_verify_requires_seed(capsys):
    code, _, err = run(capsys, "verify", "--suite", "oracle")
    assert code == 64 and "--seed" in err


def test_unknown_flag(capsys):
    code, _, err = run(capsys, "constants", "--k", "2", "--bogus")
    assert code == 64 and "usage" in err


def test_validation_failure(capsys):
    code, _, err = run(capsys, "split-law", "--model", "plane", "--n", "1")
    assert code == 1 and "n >= 2" in err


def test_resource_error(capsys):
    code, _, err = run(capsys, "enumerate", "--model", "nonplane", "--n", "10", "--k", "2")
    assert code == 2 and "limit" in err


def test_split_law_csv(capsys):
    code, out, _ = run(capsys, "split-law", "--model", "plane", "--n", "3")
    assert rows(out) == [["j", "numerator", "denominator"], ["1", "2", "3"], ["2", "1", "3"]]


def test_exact_tables(capsys):
    _, out, _ = run(capsys, "exact", "--model", "nonplane", "--k", "2", "--n-max", "4", "--weight-cap", "4")
    table = rows(out)
    assert table[0] == ["n", "i", "l", "numerator", "denominator"]
    assert ["4", "2", "0", "344", "3"] in table
    _, out, _ = run(capsys, "exact", "--model", "plane", "--k", "3", "--n-max", "30", "--kind", "float")
    table = rows(out)
    assert table[0] == ["n", "i", "l", "value"]
    assert len(table) == 1 + 30 * 12


def test_pmf_csv(capsys):
    _, out, _ = run(capsys, "pmf", "--model", "plane", "--k", "3", "--n", "3")
    assert rows(out) == [["z", "d", "numerator", "denominator"], ["10", "1", "1", "3"], ["10", "2", "2", "3"]]


def test_gtable(capsys):
    code, out, err = run(capsys, "gtable", "--k", "4", "--r-max", "5", "--s-max", "3")
    assert code == 0
    table = rows(out)
    assert table[0] == ["k", "r", "s", "log_g", "g"]
    assert float(table[1 + 4][4]) == pytest.approx(48.0)  # (r, s) = (1, 0)
    reports = json.loads(err)
    assert reports["consistency"]["passed"] and reports["appendix_bound"]["passed"]


def test_gtable_overflow_leaves_g_blank(capsys):
    _, out, _ = run(capsys, "gtable", "--k", "5", "--r-max", "80", "--s-max", "0")
    last = rows(out)[-1]
    assert last[:3] == ["5", "80", "0"] and last[4] == ""


def test_generate_and_index(capsys, tmp_path):
    code, out, _ = run(capsys, "generate", "--model", "plane", "--n", "25", "--seed", "3", "--dump")
    assert code == 0
    dump = tmp_path / "tree.tsv"
    dump.write_text(out)
    code, out, _ = run(capsys, "index", "--model", "plane", "--k", "2", "--k", "4", str(dump))
    assert code == 0
    table = rows(out)
    assert table[0] == ["k", "vertex_form", "edge_form"]
    assert all(r[1] == r[2] for r in table[1:])


def test_generate_summary(capsys):
    _, out, _ = run(capsys, "generate", "--model", "nonplane", "--n", "10", "--seed", "5", "--count", "3")
    table = rows(out)
    assert table[0] == ["tree", "seed", "n", "root_degree", "leftmost_subtree", "zagreb2"]
    assert len(table) == 4
    _, again, _ = run(capsys, "generate", "--model", "nonplane", "--n", "10", "--seed", "5", "--count", "3")
    assert again == out


def test_simulate_outputs(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("ZAGREB_LAB_THREADS", raising=False)
    args = ["simulate", "--model", "plane", "--k", "3", "--sizes", "10,100", "--replicates", "500",
            "--seed", "9", "--csv", "--hist", "r_scaled:0:5:20"]
    code, out, _ = run(capsys, *args, "--out", str(tmp_path / "a"))
    assert code == 0 and "wrote" in out
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "simulate" and manifest["seed"] == 9
    assert set(manifest["files"]) == {"summary.json", "summary.csv", "histogram_n10.csv", "histogram_n100.csv"}
    for name, digest in manifest["files"].items():
        assert hashlib.sha256((tmp_path / "a" / name).read_bytes()).hexdigest() == digest
    run(capsys, *args, "--workers", "3", "--out", str(tmp_path / "b"))
    other = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert other["files"] == manifest["files"]


def test_threads_env_overrides_workers(capsys, monkeypatch):
    monkeypatch.setenv("ZAGREB_LAB_THREADS", "2")
    code, out, _ = run(capsys, "simulate", "--model", "nonplane", "--k", "2", "--sizes", "50",
                       "--replicates", "100", "--seed", "1", "--workers", "1")
    assert code == 0 and json.loads(out)["sizes"][0]["replicates"] == 100


def test_bad_hist_is_usage_error(capsys):
    code, _, _ = run(capsys, "simulate", "--model", "plane", "--k", "3", "--sizes", "10",
                     "--replicates", "5", "--hist", "nope")
    assert code == 64


def test_verify_failure_exit(capsys):
    # the logarithmic plane transfer example misses its 5% band at N = 1e5
    code, out, _ = run(capsys, "verify", "--suite", "transfer", "--seed", "1")
    report = json.loads(out)
    assert code == 1 and report["failures"] == ["transfer:P-two-sided-i"]
