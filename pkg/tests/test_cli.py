import csv
import io
import json

import pytest

from cpsystole.cli import run


def _report(path):
    data = json.loads(path.read_text())
    data.pop("run")
    return data


def test_table_csv(capsys):
    assert run(["table", "systole", "--n", "1", "--t-min", "0.1", "--t-max", "10", "--steps", "5",
                "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 5 and list(rows[0]) == ["t", "sys2_nor", "sys4n_nor", "vol"]
    vals = [float(r["sys4n_nor"]) for r in rows]
    assert vals.index(min(vals)) == 2 and float(rows[2]["t"]) == pytest.approx(1.0)


def test_table_json(tmp_path):
    out = tmp_path / "t.json"
    assert run(["table", "systole", "--steps", "3", "--format", "json", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["schema_version"] == 1 and len(data["rows"]) == 3


def test_verify_balanced_kahler_case(tmp_path):
    out = tmp_path / "b.json"
    assert run(["verify", "balanced", "--n", "1", "--t", "1", "--points", "10", "--seed", "1",
                "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["passed"] and data["config"]["seed"] == 1
    for c in data["checks"]:
        assert {"name", "anchor", "residual", "tolerance", "passed"} <= set(c)
        assert c["anchor"]


def test_verify_variation_zero_direction(tmp_path):
    lib = tmp_path / "lib.json"
    lib.write_text(json.dumps([{"name": "zero", "kind": "zero", "form": {"m": 3, "structure": {"op": "zero"}}}]))
    out = tmp_path / "v.json"
    assert run(["verify", "variation", "--n", "3", "--samples", "1000", "--seed", "1",
                "--directions", str(lib), "--out", str(out)]) == 0
    checks = {c["name"]: c for c in json.loads(out.read_text())["checks"]}
    first = checks["zero_first_vs_fd"]
    assert first["residual"] == 0 and first["details"]["first"]["value"] == 0 and first["details"]["fd_first"] == 0


def test_env_seed_default(tmp_path, monkeypatch):
    monkeypatch.setenv("CPSYS_SEED", "42")
    out = tmp_path / "b.json"
    assert run(["verify", "balanced", "--t", "2", "--points", "3", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["seed"] == 42


@pytest.mark.parametrize("argv", [
    ["verify", "balanced", "--seed", "-1"],
    ["verify", "balanced", "--seed", str(2 ** 64)],
    ["verify", "balanced", "--points", "0"],
    ["verify", "balanced", "--t", "nan"],
    ["verify", "balanced", "--unknown"],
    ["table", "systole", "--t-min", "10", "--t-max", "1"],
    ["verify", "variation", "--n", "2", "--samples", "100"],
    ["frobnicate"],
])
def test_config_errors_exit_2(argv, capsys):
    assert run(argv) == 2


def test_bad_seed_env(monkeypatch):
    monkeypatch.setenv("CPSYS_SEED", "x")
    assert run(["verify", "balanced", "--points", "2"]) == 2


def test_bad_json_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["algebra", "decompose", "--input", str(bad)]) == 2
    assert run(["verify", "variation", "--samples", "100", "--directions", str(bad)]) == 2
    assert run(["algebra", "decompose", "--input", str(tmp_path / "missing.json")]) == 2
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps([{"form": {"m": 2, "structure": {"op": "zero"}}}]))
    assert run(["verify", "variation", "--samples", "100", "--directions", str(wrong)]) == 2


def test_failure_exits_1(tmp_path):
    # a tolerance far below finite-difference roundoff must fail
    assert run(["verify", "balanced", "--points", "3", "--tol", "1e-30", "--out", str(tmp_path / "f.json")]) == 1


def test_decompose(tmp_path):
    form = tmp_path / "f.json"
    form.write_text(json.dumps({"dim": 4, "terms": [{"idx": [1, 2], "re": 1.0}, {"idx": [3, 4], "re": 2.0}]}))
    out = tmp_path / "d.json"
    assert run(["algebra", "decompose", "--input", str(form), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    pieces = {p["lefschetz_power"]: p["primitive"] for p in data["pieces"]}
    assert pieces[1]["terms"][0]["re"] == pytest.approx(1.5)
    assert data["residual"] < 1e-12


def test_decompose_with_gram(tmp_path):
    form = tmp_path / "f.json"
    gram = [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    form.write_text(json.dumps({"dim": 4, "terms": [{"idx": [1, 3], "re": 1.0}], "gram": gram}))
    assert run(["algebra", "decompose", "--input", str(form), "--out", str(tmp_path / "d.json")]) == 0


@pytest.mark.parametrize("argv", [
    ["verify", "igf", "--family", "equatorial", "--t", "2", "--samples", "4000", "--theta-samples", "4000",
     "--no-holder"],
    ["verify", "areas", "--samples", "5000"],
    ["verify", "crosscheck", "--samples", "5000"],
])
def test_reports_identical_across_workers(argv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(argv + ["--seed", "7", "--workers", "1", "--out", str(a)])
    run(argv + ["--seed", "7", "--workers", "4", "--out", str(b)])
    assert _report(a) == _report(b)
    assert json.loads(a.read_text())["run"]["workers"] == 1
