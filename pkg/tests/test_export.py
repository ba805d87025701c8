"""
Tests for artifact writers and the run manifest.
"""

import csv
import json

import numpy as np
import pytest

from kdv5_control.errors import ArtifactError
from kdv5_control.evolution.linear import evolve_linear
from kdv5_control.hum.signal import ControlSignal
from kdv5_control.services.export import (
    fmt,
    jsonable,
    load_signal,
    sha256_file,
    write_json,
    write_manifest,
    write_norms_csv,
    write_signal_csv,
    write_trajectory_csv,
)
from kdv5_control.services.verification import random_field

from conftest import trig_field


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_fmt_keeps_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3


def test_jsonable_handles_numpy_and_non_finite():
    payload = jsonable({"a": np.float64(1.5), "b": np.array([1, 2]), "c": float("inf"), "d": 1 + 2j})
    assert payload == {"a": 1.5, "b": [1, 2], "c": "inf", "d": [1.0, 2.0]}


def test_trajectory_csv_columns(closed_loop8, tmp_path):
    traj = evolve_linear(closed_loop8, trig_field(closed_loop8.grid, cos={1: 1.0}), None, T=0.1, dt=0.01)
    rows = read_rows(write_trajectory_csv(tmp_path / "trajectory.csv", traj, [0.0, 2.5], stride=5))
    assert rows[0] == ["t"] + [f"abs_k{k}" for k in range(9)] + ["norm_s0", "norm_s2.5"]
    assert len(rows) == 1 + 3
    assert float(rows[1][2]) == pytest.approx(0.5)

    physical = read_rows(write_trajectory_csv(tmp_path / "physical.csv", traj, [], physical_samples=True))
    assert physical[0][1] == "u_x0"
    assert len(physical[0]) == 1 + closed_loop8.grid.n_points
    assert float(physical[1][1]) == pytest.approx(1.0)


def test_norms_csv_is_mean_free(closed_loop8, tmp_path):
    traj = evolve_linear(closed_loop8, trig_field(closed_loop8.grid, cos={1: 1.0}), None, T=0.1, dt=0.01)
    rows = read_rows(write_norms_csv(tmp_path / "norms.csv", traj, [0.0]))
    assert rows[0] == ["t", "mean", "norm_s0"]
    norms = [float(row[2]) for row in rows[1:]]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


def test_signal_round_trip_is_exact(grid8, rng, tmp_path):
    values = np.stack([random_field(grid8, rng).coeffs for _ in range(4)])
    signal = ControlSignal(grid8, 0.25, values)
    path = write_signal_csv(tmp_path / "signal.csv", signal)
    loaded = load_signal(path, grid8)
    assert loaded.dt == 0.25
    np.testing.assert_array_equal(loaded.values, signal.values)


def test_load_signal_errors(grid8, grid16, rng, tmp_path):
    with pytest.raises(ArtifactError):
        load_signal(tmp_path / "missing.csv", grid8)
    values = np.stack([random_field(grid8, rng).coeffs for _ in range(2)])
    path = write_signal_csv(tmp_path / "signal.csv", ControlSignal(grid8, 0.1, values))
    with pytest.raises(ArtifactError) as info:
        load_signal(path, grid16)
    assert info.value.details["path"] == str(path)


def test_unwritable_path_raises_artifact_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ArtifactError):
        write_json(blocker / "out.json", {})


def test_json_is_sorted_and_deterministic(tmp_path):
    first = write_json(tmp_path / "a.json", {"b": 1, "a": [0.1, 2]})
    second = write_json(tmp_path / "b.json", {"a": [0.1, 2], "b": 1})
    assert first.read_bytes() == second.read_bytes()
    assert list(json.loads(first.read_text())) == ["a", "b"]


def test_manifest(tmp_path):
    files = [write_json(tmp_path / "z.json", {}), write_json(tmp_path / "a.json", {"x": 1})]
    manifest = json.loads(write_manifest(tmp_path, "simulate", "abc", 3, 2, files).read_text())
    assert manifest["command"] == "simulate"
    assert manifest["config_sha256"] == "abc"
    assert manifest["seed"] == 3
    assert manifest["threads"] == 2
    assert manifest["exit_code"] == 0
    assert [entry["name"] for entry in manifest["files"]] == ["a.json", "z.json"]
    assert manifest["files"][0]["sha256"] == sha256_file(tmp_path / "a.json")
    assert "time" not in json.dumps(manifest)
