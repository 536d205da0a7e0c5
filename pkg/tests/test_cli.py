import csv
import hashlib
import json
import subprocess
import sys

import pytest

from harmratio import cli


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def digests(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.iterdir())}


def test_audit_example33(tmp_path):
    out = tmp_path / "report.json"
    assert run("audit", "--in", "fixture:example33", "--outcome-label", "o", "--out", out) == 0
    rec = json.loads(out.read_text())[0]
    assert rec["ihr"] == 0.5
    assert rec["pf"] == "inf" and rec["pf_infinite"] is True


def test_audit_csv_output(tmp_path):
    out = tmp_path / "report.csv"
    assert run("audit", "--in", "fixture:thm43:4", "--outcome-label", "o", "--criteria", "ihr,ghr,pf",
               "--min-group-frac", "0,0.5", "--out", out) == 0
    rows = read_csv(out)
    assert len(rows) == 1
    assert float(rows[0]["ghr@0"]) <= 1.0
    assert "ghr@0.5" in rows[0]


def test_generate_is_deterministic(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run("generate", "--n", 3, "--m", 5, "--samples", 3, "--seed", 7, "--out", a) == 0
    assert run("generate", "--n", 3, "--m", 5, "--samples", 3, "--seed", 7, "--out", b) == 0
    assert run("generate", "--n", 3, "--m", 5, "--samples", 3, "--seed", 8, "--out", c) == 0
    assert digests(a) == digests(b)
    assert sorted(digests(a)) == ["uniform_n3_m5_s000.csv", "uniform_n3_m5_s001.csv", "uniform_n3_m5_s002.csv"]
    assert digests(a) != digests(c)


def test_solve_then_audit(tmp_path):
    run("generate", "--n", 3, "--m", 4, "--samples", 1, "--out", tmp_path)
    inst = tmp_path / "uniform_n3_m4_s000.csv"
    sol = tmp_path / "sol.json"
    assert run("solve", "--domain", "goods", "--in", inst, "--out", sol) == 0
    doc = json.loads(sol.read_text())
    assert [r["rule"] for r in doc["results"]] == ["Egal", "Nash", "Util", "RR"]
    rep = tmp_path / "rep.json"
    assert run("audit", "--in", inst, "--outcome", sol, "--criteria", "ihr,per,ef", "--out", rep) == 0
    recs = json.loads(rep.read_text())
    assert len(recs) == 4
    for r in recs:
        assert r["ihr"] == "inf" or r["ihr"] >= r["per"] - 1e-9


def test_solve_pb_bundled(tmp_path):
    from harmratio.dataio import bundled_pabulib_names, load_bundled_pabulib, serialize_pabulib

    path = tmp_path / "e.pb"
    path.write_text(serialize_pabulib(load_bundled_pabulib(bundled_pabulib_names()[0])))
    sol = tmp_path / "sol.json"
    assert run("solve", "--domain", "pb", "--rule", "MES,Greedy-U", "--in", path, "--out", sol) == 0
    doc = json.loads(sol.read_text())
    assert {r["rule"] for r in doc["results"]} == {"MES", "Greedy-U"}


def test_usage_errors(tmp_path, capsys):
    assert run("solve", "--domain", "goods", "--rule", "Median", "--in", "fixture:example33", "--out", tmp_path / "x") == 2
    assert "unknown goods rule" in capsys.readouterr().err
    assert run("audit", "--in", "fixture:example33", "--outcome-label", "o", "--criteria", "bogus",
               "--out", tmp_path / "x") == 2
    bad = tmp_path / "bad.pb"
    bad.write_text("META\nkey;value\nbudget;x\n")
    assert run("solve", "--domain", "pb", "--in", bad, "--out", tmp_path / "y") == 2
    assert "line 3" in capsys.readouterr().err


def test_cap_violation_exit_code(tmp_path, capsys):
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"type": "goods", "valuations": [[1.0] * 3] * 13}))
    code = run("audit", "--in", big, "--outcome", big, "--criteria", "eghr", "--out", tmp_path / "r.json")
    assert code == 2


def test_goods_experiment_summary(tmp_path):
    out = tmp_path / "fig2"
    assert run("experiment", "--preset", "goods-fig2", "--n-list", "3,4", "--samples", 2, "--out", out) == 0
    summary = read_csv(out / "summary.csv")
    assert [r["rule"] for r in summary] == ["Egal", "Nash", "Util", "RR"]
    for row in summary:
        assert int(row["instances"]) == 4
        assert {"avg_ihr", "ihr_inf_frac", "avg_per", "per_inf_frac"} <= set(row)
    records = read_csv(out / "records.csv")
    assert len(records) == 16
    for r in records:
        if r["ihr"] != "inf" and r["per"] != "inf":
            assert float(r["ihr"]) >= float(r["per"]) - 1e-9


def test_pb_experiment_curves(tmp_path):
    out = tmp_path / "fig4"
    assert run("experiment", "--preset", "pb-fig4", "--subsamples", 1, "--voters", 60,
               "--rules", "Greedy-U,MES,Nash", "--out", out) == 0
    records = read_csv(out / "records.csv")
    assert records
    by_key = {}
    for row in records:
        by_key.setdefault((row["instance"], row["rule"]), []).append((float(row["min_frac"]), row["ghr"]))
    for pts in by_key.values():
        vals = [float(v) for _, v in sorted(pts) if v != "inf"]
        assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))
    curves = read_csv(out / "curves.csv")
    assert {r["rule"] for r in curves} == {"Greedy-U", "MES", "Nash"}


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "harmratio.cli", "audit", "--in", "fixture:example33",
                           "--outcome-label", "o", "--out", str(tmp_path / "r.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
