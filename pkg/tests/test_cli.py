"""Command-line front end: manifests, subcommands, exit codes and the run summary."""
import csv
import io
import json
import math
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest
import yaml

from heatgrowth.cli import main, run

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "manifests" / "data"
SCHEMA = json.loads(resources.files("heatgrowth").joinpath("schemas/hg-run-v1.json").read_text())


def _run(tmp_path, manifest):
    """Run an in-memory manifest with tmp_path as base; return (code, rows, summary)."""
    manifest = dict(manifest, output="out.csv")
    code = run(manifest, tmp_path)
    if code:
        return code, None, None
    rows = list(csv.DictReader(io.StringIO((tmp_path / "out.csv").read_text())))
    summary = json.loads((tmp_path / "out.csv.json").read_text())
    return code, rows, summary


def test_evaluate_gaussian_growth(tmp_path):
    code, rows, summary = _run(tmp_path, {
        "command": "evaluate",
        "inputs": {"measure": {"dimension": 1, "body": {"kind": "exp_quad", "A": 0.25}}},
        "params": {"points": [[0.0]], "times": [0.5]},
    })
    assert code == 0
    assert float(rows[0]["value"]) == pytest.approx(math.sqrt(2), rel=1e-12)
    jsonschema.validate(summary, SCHEMA)
    assert summary["quadrature_nodes"] is not None


def test_blowup_map_follows_ball_rule(tmp_path):
    doc = {"dimension": 1, "body": {"kind": "exp_quad", "A": 0.25, "modifier": {"exp_rate": 1.0}}}
    code, rows, summary = _run(tmp_path, {
        "command": "blowup-map", "inputs": {"measure": doc},
        "params": {"probes": {"grid": {"lo": -3.0, "hi": 3.0, "n": 25}}},
    })
    assert code == 0
    jsonschema.validate(summary, SCHEMA)
    for r in rows:
        x = abs(float(r["x_1"]))
        if abs(x - 2) > 0.1:
            assert r["verdict"] == ("Regular" if x < 2 else "Blowup")
        if r["verdict"] == "Regular":
            assert float(r["limit_or_blank"]) > 0


def test_oscillate_passes_every_row(tmp_path):
    code, rows, summary = _run(tmp_path, {"command": "oscillate", "params": {"targets": [1, 2, 1, 2]}})
    assert code == 0
    assert [r["pass"] for r in rows] == ["true"] * 4
    assert [float(r["b_k"]) for r in rows] == [1, 2, 1, 2]
    jsonschema.validate(summary, SCHEMA)


@pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "manifests").glob("*.yaml")))
def test_shipped_manifests_validate(tmp_path, name):
    manifest = yaml.safe_load((ROOT / "manifests" / name).read_text())
    manifest["output"] = str(tmp_path / "o.csv")
    for k, v in (manifest.get("inputs") or {}).items():
        manifest["inputs"][k] = str(ROOT / "manifests" / v)
    assert run(manifest, tmp_path) == 0
    jsonschema.validate(json.loads((tmp_path / "o.csv.json").read_text()), SCHEMA)


def test_subcommand_form(tmp_path, capsys):
    code = main(["evaluate", "--measure", str(DATA / "gauss_growth.yaml"),
                 "--set", "points=[[0.0]]", "--set", "times=[0.5]"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "x_1,t,value,est_error,method"
    assert float(out[1].split(",")[2]) == pytest.approx(math.sqrt(2), rel=1e-12)


def test_repeat_runs_are_byte_identical(tmp_path):
    args = ["oscillate", "--set", "targets=[1, 0.5, 3]", "--seed", "5"]
    main(args + ["-o", str(tmp_path / "a.csv")])
    main(args + ["-o", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def _stderr_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    obj = json.loads(err)
    assert obj["schema"] == "hg-run-v1" and obj["status"] == "error"
    return obj


@pytest.mark.parametrize("argv", [
    ["evaluate", "--measure", "/nonexistent.yaml", "--set", "points=[[0]]", "--set", "times=[1]"],
    ["evaluate", "--set", "bad"],
    ["oscillate", "--set", "targets=[-1]"],
    ["trace-solve", "--set", "coeffs=[1, 5]", "--set", "C=1", "--set", "tau=1"],
])
def test_invalid_input_exit_code(capsys, argv):
    assert main(argv) == 2
    assert _stderr_error(capsys)["exit_code"] == 2


@pytest.mark.parametrize("cfg", [{"rel_tol": "tiny"}, {"colour": 1}, {"rel_tol": -1.0}])
def test_bad_config(tmp_path, capsys, cfg):
    assert run({"command": "oscillate", "params": {"targets": [1]}, "config": cfg}, tmp_path) == 2
    assert _stderr_error(capsys)["exit_code"] == 2


def test_unknown_command_in_manifest(tmp_path, capsys):
    assert run({"command": "nope"}, tmp_path) == 2
    assert _stderr_error(capsys)["error"] == "ManifestError"


@pytest.mark.parametrize("t", [1.0, 1.5])
def test_past_maximal_time_exit_code(capsys, t):
    code = main(["evaluate", "--measure", str(DATA / "gauss_growth.yaml"),
                 "--set", "points=[[0.0]]", "--set", f"times=[{t}]"])
    assert code == 4
    assert _stderr_error(capsys)["exit_code"] == 4


def test_quadrature_failure_exit_code(tmp_path, capsys):
    # the exponential modifier forces radial quadrature; 32 nodes cannot reach the target
    m = tmp_path / "m.yaml"
    m.write_text("dimension: 1\nbody: {kind: exp_quad, A: 0.25, modifier: {exp_rate: 1.0}}\n")
    code = main(["evaluate", "--measure", str(m),
                 "--set", "points=[[0.0]]", "--set", "times=[0.5]",
                 "--config", "rel_tol=1e-14", "--config", "max_nodes_per_axis=32"])
    assert code == 3
    assert _stderr_error(capsys)["error"] == "QuadratureFailure"


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "heatgrowth.cli", "oscillate", "--set", "targets=[1]"],
                       capture_output=True, text=True, cwd=tmp_path)
    assert p.returncode == 0
    assert p.stdout.startswith("k,b_k,r_k,lambda_k,t_k,u0tk,bound,pass")
