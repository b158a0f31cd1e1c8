import json

import pytest

from bnec.cli import run, verify_code
from bnec.design import DesignConfig, design_code, dump_code


def report(tmp_path, argv):
    out = tmp_path / "r.json"
    code = run(argv + ["--report", str(out)])
    return code, json.loads(out.read_text())


def test_design_writes_code(tmp_path):
    path = tmp_path / "code.json"
    rc, doc = report(tmp_path, ["design", "--net", "butterfly", "--seed", "4", "--out", str(path)])
    assert rc == 0
    assert doc["validation"]["ok"] and doc["seed"] == 4 and doc["q"] == 37
    assert doc["receivers"]["t1"] == {"h": 2, "delta": 1}
    assert len(doc["code_hash"]) == 64
    assert json.loads(path.read_text())["k"] == 1


def test_design_text(capsys):
    assert run(["design", "--net", "three_path", "--format", "text"]) == 0
    assert "validation: ok" in capsys.readouterr().out


def test_verify_good_code(tmp_path):
    path = tmp_path / "code.json"
    assert run(["design", "--net", "three_path", "--out", str(path), "--report", str(tmp_path / "x")]) == 0
    rc, doc = report(tmp_path, ["verify", "--code", str(path), "--net", "three_path"])
    assert rc == 0 and doc["ok"]
    names = {c["name"] for c in doc["checks"]}
    assert {"validate", "propagate_matches_matrix", "syndrome_input_independent", "bd_corrects_budget[t]"} <= names


def test_verify_rejects_corrupt_code(tmp_path, designed):
    doc = json.loads(dump_code(designed["three_path"]))
    doc["edges"][3]["gev"][0] = (doc["edges"][3]["gev"][0] + 1) % 47
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    rc, rep = report(tmp_path, ["verify", "--code", str(path)])
    assert rc == 1 and not rep["ok"]


def test_verify_network_mismatch(tmp_path, designed, capsys):
    path = tmp_path / "c.json"
    path.write_text(dump_code(designed["three_path"]))
    assert run(["verify", "--code", str(path), "--net", "butterfly"]) == 1


def test_simulate(tmp_path):
    trace = tmp_path / "t.jsonl"
    rc, doc = report(tmp_path, ["simulate", "--net", "butterfly", "--trials", "30", "--packet-len", "2",
                                "--trace", str(trace), "--seed", "2"])
    assert rc == 0
    assert doc["receivers"]["t1"]["symbols"] == 60
    assert len(trace.read_text().splitlines()) == 60
    # same seed, same result
    rc2, doc2 = report(tmp_path, ["simulate", "--net", "butterfly", "--trials", "30", "--packet-len", "2",
                                  "--seed", "2"])
    assert doc2["receivers"] == doc["receivers"]


def test_analyze(tmp_path):
    rc, doc = report(tmp_path, ["analyze", "--net", "three_path", "--trials", "2000", "--seed", "1"])
    assert rc == 0
    formulas = [r["formula"] for r in doc["reports"]]
    assert formulas == ["detection", "bd_correction", "table_entries"]
    assert all(r["passed"] in (True, None) for r in doc["reports"])


def test_analyze_bounds_only(tmp_path):
    rc, doc = report(tmp_path, ["analyze", "--net", "delta3", "--trials", "0", "--decoder", "complete"])
    assert rc == 0
    assert doc["reports"][1]["formula"] == "complete_correction"


@pytest.mark.parametrize("argv", [
    [],
    ["design", "--bogus"],
    ["design", "--net", "butterfly", "--k", "x"],
    ["simulate", "--net", "butterfly", "--packet-len", "0"],
    ["analyze", "--net", "butterfly", "--decoder", "nope"],
    ["design", "--net", "no_such_file.json"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


@pytest.mark.parametrize("argv", [
    ["design", "--net", "butterfly", "--k", "5"],
    ["design", "--net", "butterfly", "--q", "6"],
])
def test_failures_exit_one(argv, capsys):
    assert run(argv) == 1


def test_invalid_json_network(tmp_path, capsys):
    p = tmp_path / "n.json"
    p.write_text("{not json")
    assert run(["design", "--net", str(p)]) == 1
    assert "ParseError" in capsys.readouterr().err


def test_verify_code_k2(nets):
    code = design_code(nets["three_path"], 2, DesignConfig(seed=3))
    assert all(ok for _, ok, _ in verify_code(code, 0))
