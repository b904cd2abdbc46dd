import csv
import io
import json
import subprocess
import sys

import pytest

from glsums.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sum_json_exact(capsys):
    code, out, _ = run(capsys, "sum", "--kind", "T", "--k", "2", "--x", "2", "--mode", "exact", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] == "3/1"


def test_sum_text_trivial(capsys):
    code, out, _ = run(capsys, "sum", "--kind", "S", "--k", "2", "--x", "1", "--mode", "exact")
    assert code == 0 and out.strip() == "1"


def test_sum_fast_equals_oracle_json(capsys):
    base = ["sum", "--kind", "S", "--k", "2", "--x", "600", "--mode", "exact", "--format", "json"]
    _, fast, _ = run(capsys, *base, "--algorithm", "fast")
    _, orc, _ = run(capsys, *base, "--algorithm", "oracle")
    f, o = json.loads(fast), json.loads(orc)
    for key in ("value", "value_num", "value_den"):
        assert f[key] == o[key]


def test_sum_csv(capsys):
    code, out, _ = run(capsys, "sum", "--kind", "pair_lcm", "--x", "4", "--mode", "exact", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["kind", "k", "x", "mode", "algorithm", "value", "elapsed_ms"]
    assert rows[1][:6] == ["pair_lcm", "2", "4", "exact", "fast", "72"]


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as e:
        main(["sum", "--kind", "Q", "--x", "3"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    code, _, err = run(capsys, "sum", "--kind", "S", "--x", "0")
    assert code == 1 and "UsageError" in err


def test_resource_error_exit_2(capsys):
    code, _, err = run(capsys, "sum", "--kind", "S", "--k", "3", "--x", "10000")
    assert code == 2 and "tuples" in err
    code, _, _ = run(capsys, "sum", "--kind", "S", "--k", "3", "--x", "50", "--budget", "100")
    assert code == 2


def test_constants(capsys):
    code, out, _ = run(capsys, "constants", "--name", "zeta2")
    assert code == 0 and "1.644934066848226" in out
    code, out, _ = run(capsys, "constants", "--name", "Cf", "--spec", "ak:2", "--prime-limit", "100000",
                       "--format", "json")
    doc = json.loads(out)
    assert code == 0 and 0 < float(doc["value"]) < 1
    _, again, _ = run(capsys, "constants", "--name", "Cf", "--spec", "ak:2", "--prime-limit", "100000",
                      "--format", "json")
    assert again == out
    code, _, _ = run(capsys, "constants", "--name", "Cf")
    assert code == 1


def test_constants_beta(capsys):
    code, out, err = run(capsys, "constants", "--name", "beta", "--k", "2", "--truncation", "2000",
                         "--format", "json")
    doc = json.loads(out)
    assert code == 0 and abs(float(doc["value"]) - 3) <= 0.01
    assert {"value", "truncation", "tail_estimate"} <= set(doc)
    # the tail estimate exceeds the default tolerance, so --strict escalates
    code, _, _ = run(capsys, "constants", "--name", "beta", "--truncation", "200", "--strict")
    assert code == 2


def test_verify_relations_and_trivial(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "relations", "--k", "2", "--x", "30", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "pass"
    code, _, _ = run(capsys, "verify", "--suite", "identities", "--x", "1")
    assert code == 0


def test_verify_sandwich_prints_bounds(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "sandwich", "--k", "3", "--x", "50")
    assert code == 0 and "upper" in out and "lower" in out


def test_verify_failure_exit_3(capsys, monkeypatch):
    from glsums import asym
    from glsums.errors import VerificationError

    def broken(rel, k, x):
        raise VerificationError("forced", 1, 2)

    monkeypatch.setattr(asym, "relation_check", broken)
    code, _, err = run(capsys, "verify", "--suite", "relations", "--k", "2", "--x", "3")
    assert code == 3 and "lhs = 1" in err and "rhs = 2" in err


def test_fit(capsys):
    code, out, _ = run(capsys, "fit", "--kind", "selftest", "--from", "100", "--to", "1e6", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert [round(float(c), 6) for c in doc["coefficients"]] == [1.5, -2.0, 0.75, 0.25]
    code, _, _ = run(capsys, "fit", "--kind", "S2", "--points", "3", "--degree", "3")
    assert code == 1


def test_fit_condition_failure_exit_2(capsys, monkeypatch):
    from glsums import asym

    monkeypatch.setattr(asym, "CONDITION_LIMIT", 1.0)
    code, _, _ = run(capsys, "fit", "--kind", "selftest", "--from", "100", "--to", "1e6")
    assert code == 2


def test_sieve_export_and_output_file(capsys, tmp_path):
    target = tmp_path / "a2.csv"
    code, out, _ = run(capsys, "sieve", "--limit", "6", "--spec", "ak:2", "--format", "csv", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_text() == "n,value\n1,1\n2,3\n3,3\n4,5\n5,3\n6,9\n"
    code, out, _ = run(capsys, "sieve", "--limit", "10", "--column", "mobius", "--format", "json")
    assert json.loads(out) == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "glsums", "sum", "--kind", "U", "--x", "2", "--mode", "exact"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "2"
