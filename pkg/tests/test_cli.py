"""
End-to-end tests of the kdv5 command line.
"""

import json

import pytest
from click.testing import CliRunner

from kdv5_control import __version__
from kdv5_control.cli import cli


def write_config(tmp_path, name="scenario.json", **sections):
    config = {
        "grid": {"n_modes": 4},
        "run": {"command": "simulate", "T": 0.1, "dt": 0.01},
        "initial_data": {"kind": "modes", "sin": {"1": 1e-3}},
    }
    config.update(sections)
    path = tmp_path / name
    path.write_text(json.dumps(config, indent=2))
    return path


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, [str(arg) for arg in args])


def test_version(runner):
    result = invoke(runner, "version")
    assert result.exit_code == 0
    assert __version__ in result.output


def test_schema(runner):
    result = invoke(runner, "schema")
    assert result.exit_code == 0
    assert "ScenarioConfig" in json.loads(result.stdout)["title"]


def test_simulate_writes_outputs_and_manifest(runner, tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "out"
    result = invoke(runner, "simulate", "--config", config, "--out", out)
    assert result.exit_code == 0, result.output
    names = {"trajectory.csv", "norms.csv", "ledger.json", "manifest.json"}
    assert names <= {path.name for path in out.iterdir()}
    ledger = json.loads((out / "ledger.json").read_text())
    assert set(ledger) == {"kinetic", "dissipation_eps", "dissipation_G", "forcing_work", "residual"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert {entry["name"] for entry in manifest["files"]} == names - {"manifest.json"}


def test_runs_are_byte_identical(runner, tmp_path):
    config = write_config(tmp_path)
    for name in ("a", "b"):
        assert invoke(runner, "simulate", "--config", config, "--out", tmp_path / name).exit_code == 0
    for path in (tmp_path / "a").iterdir():
        assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()


def test_stabilize_emits_decay_fit(runner, tmp_path):
    config = write_config(tmp_path, run={"command": "stabilize", "T": 1.0, "dt": 0.01})
    out = tmp_path / "out"
    result = invoke(runner, "run", "--config", config, "--out", out)
    assert result.exit_code == 0, result.output
    decay = json.loads((out / "decay.json").read_text())
    assert decay["predicted_rate"] > 0.0
    assert len(decay["x_space"]) == 1
    assert (out / "ledger.json").exists()


def test_control_with_zero_data_gives_zero_signal(runner, tmp_path):
    config = write_config(
        tmp_path,
        run={"command": "control", "T": 0.1, "dt": 0.01, "control_mode": "linear"},
        initial_data={"kind": "zero"},
        target_data={"kind": "zero"},
    )
    out = tmp_path / "out"
    result = invoke(runner, "control", "--config", config, "--out", out)
    assert result.exit_code == 0, result.output
    report = json.loads((out / "control.json").read_text())
    assert report["energy"] == 0.0
    assert report["endpoint_error"] == 0.0
    assert (out / "signal.csv").exists()


def test_nonlinear_control(runner, tmp_path):
    config = write_config(
        tmp_path,
        run={"command": "control", "T": 0.5, "dt": 0.001},
        target_data={"kind": "modes", "sin": {"2": 1e-3}},
    )
    out = tmp_path / "out"
    result = invoke(runner, "control", "--config", config, "--out", out)
    assert result.exit_code == 0, result.output
    report = json.loads((out / "control.json").read_text())
    assert report["mode"] == "nonlinear"
    assert report["diagnostics"]["endpoint_error_abs"] < 1e-6


def test_observability(runner, tmp_path):
    config = write_config(tmp_path, run={"command": "observability", "T": 0.1, "dt": 0.01})
    out = tmp_path / "out"
    result = invoke(runner, "observability", "--config", config, "--out", out, "--threads", 2)
    assert result.exit_code == 0, result.output
    report = json.loads((out / "gramian.json").read_text())
    assert report["lambda_min"] > 0.0
    assert len(report["eigenvalues"]) == 8
    assert json.loads((out / "manifest.json").read_text())["threads"] == 2


def test_verify_writes_report(runner, tmp_path):
    config = write_config(
        tmp_path,
        run={"command": "verify", "T": 0.1, "dt": 0.01},
        verify={"horizons": [0.1], "radii": [1.0]},
        output={"formats": ["csv"]},
    )
    out = tmp_path / "out"
    result = invoke(runner, "verify", "--config", config, "--out", out)
    assert result.exit_code in (0, 3)
    report = json.loads((out / "verify.json").read_text())
    assert report["passed"] == (result.exit_code == 0)
    assert all({"name", "value", "threshold", "passed"} <= set(check) for check in report["checks"])
    assert len(report["observability_sweep"]) == 1


def test_malformed_config_exits_2(runner, tmp_path):
    config = write_config(tmp_path, profile={"radius": 4})
    result = invoke(runner, "simulate", "--config", config, "--out", tmp_path / "out")
    assert result.exit_code == 2
    assert "profile.radius" in result.stderr
    assert json.loads(result.stderr.strip().splitlines()[-1])["error"] == "config_error"


def test_numerical_failure_exits_3(runner, tmp_path):
    config = write_config(
        tmp_path,
        run={"command": "control", "T": 0.1, "dt": 0.01, "control_mode": "linear"},
        initial_data={"kind": "modes", "mean": 1.0},
        target_data={"kind": "zero"},
    )
    out = tmp_path / "out"
    result = invoke(runner, "control", "--config", config, "--out", out)
    assert result.exit_code == 3
    error = json.loads(result.stderr.strip().splitlines()[-1])
    assert error["error"] == "domain_error"
    assert json.loads((out / "manifest.json").read_text())["exit_code"] == 3


def test_missing_config_option(runner):
    assert invoke(runner, "simulate").exit_code == 2
