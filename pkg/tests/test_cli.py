import json
import os

import numpy as np
import pytest

from posesim.cli import EXIT_OK, EXIT_SCHEMA, main
from posesim.humanoid import default_model, save_model_file
from posesim.pose_core import save_pose_file
from posesim.synthetic import standing_sequence


@pytest.fixture()
def workspace(tmp_path):
    seq = standing_sequence(T=12)
    pose = tmp_path / "standing.json"
    save_pose_file(seq, str(pose))
    cfg = {
        "input": "standing.json",
        "out_dir": "out",
        "seed": 3,
        "optimizer": {"window_s": 0.48, "overlap": 0.0,
                      "iterations": 2, "population": 6},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    return tmp_path, cfg_path


def test_validate_ok(workspace, capsys):
    tmp_path, cfg_path = workspace
    assert main(["validate", "--config", str(cfg_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "OK" in out and "H36M17" in out


def test_validate_rejects_bad_pose(workspace, capsys):
    tmp_path, cfg_path = workspace
    (tmp_path / "standing.json").write_text('{"schema_version": 1}')
    assert main(["validate", "--config", str(cfg_path)]) == EXIT_SCHEMA


def test_missing_model_file_is_schema_error_without_partial_report(workspace):
    tmp_path, cfg_path = workspace
    cfg = json.loads(cfg_path.read_text())
    cfg["model"] = "nope.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["evaluate", "--config", str(cfg_path)]) == EXIT_SCHEMA
    assert not (tmp_path / "out" / "report.json").exists()


def test_metrics_only_without_ground_truth(workspace):
    tmp_path, cfg_path = workspace
    assert main(["metrics", "--config", str(cfg_path)]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["footskate_pct"] == 0.0
    assert report["ground_penetration_mm"] == 0.0
    assert report["mpjpe_mm"] is None
    assert report["cd_mm"] is None
    assert (tmp_path / "out" / "summary.csv").exists()


def test_metrics_with_ground_truth(workspace):
    tmp_path, cfg_path = workspace
    gt = standing_sequence(T=12)
    save_pose_file(gt, str(tmp_path / "gt.json"))
    cfg = json.loads(cfg_path.read_text())
    cfg["ground_truth"] = "gt.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["metrics", "--config", str(cfg_path)]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["mpjpe_mm"] == 0.0
    assert report["mpjpe_g_mm"] == 0.0
    assert report["mpjpe_2d_px"] is None
    assert "mpjpe_2d_unavailable_no_cameras" in report["low_confidence_flags"]


def test_simulate_writes_artifacts(workspace):
    tmp_path, cfg_path = workspace
    assert main(["simulate", "--config", str(cfg_path)]) == EXIT_OK
    out = tmp_path / "out"
    for name in ("report.json", "summary.csv", "optimized_targets.json",
                 "sim_trajectory.json", "contact_forces.csv",
                 "cost_traces.csv"):
        assert (out / name).exists(), name
    report = json.loads((out / "report.json").read_text())
    assert report["psd"] == 12
    assert report["cd_mm"] < 100.0


def test_evaluate_deterministic_byte_identical(workspace):
    tmp_path, cfg_path = workspace
    assert main(["evaluate", "--config", str(cfg_path),
                 "--out", str(tmp_path / "a"), "--threads", "1"]) == EXIT_OK
    assert main(["evaluate", "--config", str(cfg_path),
                 "--out", str(tmp_path / "b"), "--threads", "2"]) == EXIT_OK
    ra = (tmp_path / "a" / "report.json").read_bytes()
    rb = (tmp_path / "b" / "report.json").read_bytes()
    assert ra == rb
    assert ((tmp_path / "a" / "summary.csv").read_bytes()
            == (tmp_path / "b" / "summary.csv").read_bytes())


def test_evaluate_standing_report_values(workspace):
    tmp_path, cfg_path = workspace
    assert main(["evaluate", "--config", str(cfg_path)]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["psd"] == 12
    assert report["psd_t_f"] == 12
    assert report["footskate_pct"] == 0.0
    assert report["ground_penetration_mm"] == 0.0
    assert report["diverged"] is False
    assert len(report["window_traces"]) >= 1
    assert "threads" not in report["config_echo"]


def test_custom_model_file_round_trips_through_cli(workspace):
    tmp_path, cfg_path = workspace
    save_model_file(default_model(), str(tmp_path / "model.json"))
    cfg = json.loads(cfg_path.read_text())
    cfg["model"] = "model.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["validate", "--config", str(cfg_path)]) == EXIT_OK


def test_batch_mode_per_sequence_dirs(workspace):
    tmp_path, cfg_path = workspace
    save_pose_file(standing_sequence(T=12), str(tmp_path / "second.json"))
    cfg = json.loads(cfg_path.read_text())
    cfg["input"] = ["standing.json", "second.json"]
    cfg_path.write_text(json.dumps(cfg))
    assert main(["metrics", "--config", str(cfg_path)]) == EXIT_OK
    assert (tmp_path / "out" / "standing" / "report.json").exists()
    assert (tmp_path / "out" / "second" / "report.json").exists()
    summary = (tmp_path / "out" / "summary.csv").read_text().splitlines()
    assert len(summary) == 3


def test_metrics_with_camera_file_produces_mpjpe_2d(workspace):
    tmp_path, cfg_path = workspace
    save_pose_file(standing_sequence(T=12), str(tmp_path / "gt.json"))
    cam = [[900.0, 0.0, 320.0, 0.0], [0.0, 900.0, 240.0, 0.0],
           [0.0, 0.0, 1.0, 4.0]]
    (tmp_path / "cams.json").write_text(json.dumps({"cameras": [cam]}))
    cfg = json.loads(cfg_path.read_text())
    cfg["ground_truth"] = "gt.json"
    cfg["cameras"] = "cams.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["metrics", "--config", str(cfg_path)]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["mpjpe_2d_px"] == 0.0
    assert "mpjpe_2d_unavailable_no_cameras" not in report["low_confidence_flags"]
