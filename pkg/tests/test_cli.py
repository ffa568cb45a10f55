import json
import subprocess
import sys

import pytest

import loopgas.spherecalc
from loopgas.cli import main
from loopgas.spherecalc import DotPoly


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_constants_report(capsys):
    code, out = run(capsys, "constants", "report", "--d", "5", "--eps", "0.03")
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "ok"
    assert doc["outputs"]["alpha"] == pytest.approx(0.0032, abs=5e-4)
    assert doc["outputs"]["r"] == pytest.approx(0.9424, abs=1e-3)
    assert doc["outputs"]["method"] == "float+interval"


def test_lattice_stats(capsys):
    code, out = run(capsys, "lattice", "stats", "--n", "3", "--d", "2")
    outputs = json.loads(out)["outputs"]
    assert code == 0
    assert outputs["vertices"] == 198 and outputs["boundary"] == 18


def test_expansion_z_single_hexagon(capsys):
    code, out = run(capsys, "expansion", "z", "--n", "1", "--k", "0", "--d", "0")
    outputs = json.loads(out)["outputs"]
    assert code == 0
    assert (outputs["num"], outputs["den"]) == ("244", "15552")
    assert outputs["value"] == "61/3888"


def test_expansion_compare(capsys):
    code, out = run(capsys, "expansion", "compare", "--n", "2", "--d", "0", "--direct")
    assert code == 0 and json.loads(out)["outputs"]["agree"]


def test_cluster_commands(capsys):
    code, out = run(capsys, "cluster", "bound", "--k", "1", "--d", "5", "--cutoff", "8")
    assert code == 0 and json.loads(out)["outputs"]["margin"] > 0
    code, out = run(capsys, "cluster", "verify-exp", "--polymers", "5")
    doc = json.loads(out)["outputs"]
    assert code == 0 and doc["residual"] <= doc["tail_bound"]


def test_symbols_demo(capsys):
    code, out = run(capsys, "symbols", "demo", "--powers", "3")
    doc = json.loads(out)["outputs"]
    assert code == 0
    assert doc["norm"] == "1" and doc["sup"] == "4/3"
    assert doc["tensor_powers"]["3"]["sup"] == "64/27"
    assert doc["edge_observable_norm_degree3"] == "3/5"


def test_audit_stability(capsys):
    code, out = run(capsys, "audit", "stability", "--d", "5")
    doc = json.loads(out)["outputs"]
    assert code == 0 and doc["all_hold"]


def test_csv_output(capsys):
    code, out = run(capsys, "--format", "csv", "lattice", "stats", "--n", "2")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "key,value"
    assert "outputs.vertices,24" in lines


def test_out_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out = run(capsys, "--out", str(target), "polymer", "enumerate", "--n", "2", "--k", "1", "--variant", "interior")
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["outputs"]["total"] > 0


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["lattice", "stats"])
    assert exc.value.code == 2
    assert main(["lattice", "stats", "--n", "0"]) == 2


def test_resource_limit_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("LOOPGAS_NODE_BUDGET", "")
    code, out = run(capsys, "--budget", "50", "polymer", "enumerate", "--n", "3")
    doc = json.loads(out)
    assert code == 3
    assert doc["status"] == "resource-limit" and "partial" in doc


def test_consistency_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(loopgas.spherecalc, "weight", lambda p, d=None: DotPoly.const(0))
    code, out = run(capsys, "weights", "check", "--n", "2", "--k", "1", "--variant", "interior",
                    "--max-length", "3")
    doc = json.loads(out)
    assert code == 4
    assert doc["status"] == "consistency-failure" and doc["outputs"]["mismatched"] > 0


@pytest.mark.parametrize("argv", [
    ["constants", "report", "--d", "5"],
    ["--seed", "7", "cluster", "verify-exp", "--polymers", "4"],
])
def test_byte_identical_reruns(argv):
    cmd = [sys.executable, "-m", "loopgas.cli", *argv]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and first


def test_timings_are_opt_in(capsys):
    _, out = run(capsys, "--timings", "lattice", "stats", "--n", "1")
    assert "seconds" in json.loads(out)
    _, out = run(capsys, "lattice", "stats", "--n", "1")
    assert "seconds" not in json.loads(out)
