"""Command-line interface: subcommand happy paths and exit codes,
exercised in-process through main()."""

from __future__ import annotations

import json

import numpy as np
import pytest

from dlostate.cli import main
from dlostate.pipeline import EvalReport, config_to_dict, save_config
from dlostate.pipeline.config import small_config


def test_missing_subcommand_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_bad_config_file_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_section": {}}))
    rc = main(["gen-data", "--config", str(bad), "--out", str(tmp_path / "d")])
    assert rc == 2


def test_missing_dataset_exit_code(tmp_path, tiny_checkpoints):
    rc = main([
        "estimate",
        "--dataset", str(tmp_path / "nowhere"),
        "--checkpoint", str(tiny_checkpoints["estimator"]),
        "--fusion-checkpoint", str(tiny_checkpoints["fusion"]),
    ])
    assert rc == 3


def test_missing_checkpoint_exit_code(tmp_path, tiny_dataset):
    rc = main([
        "estimate",
        "--dataset", str(tiny_dataset),
        "--checkpoint", str(tmp_path / "ghost.rec"),
        "--fusion-checkpoint", str(tmp_path / "ghost2.rec"),
    ])
    assert rc == 3


def test_gen_data_writes_dataset(tmp_path, tiny_config):
    cfg_path = tmp_path / "cfg.json"
    save_config(tiny_config, cfg_path)
    out = tmp_path / "dataset"
    rc = main([
        "gen-data", "--config", str(cfg_path),
        "--out", str(out), "--sequences", "2", "--frames", "3", "--seed", "21",
    ])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["train_sequences"]) + len(manifest["val_sequences"]) == 2


def test_train_est_cli(tmp_path, tiny_dataset, tiny_config):
    cfg_path = tmp_path / "cfg.json"
    save_config(tiny_config, cfg_path)
    out = tmp_path / "est.rec"
    rc = main([
        "train-est", "--config", str(cfg_path),
        "--dataset", str(tiny_dataset), "--out", str(out),
        "--epochs", "1", "--seed", "2",
    ])
    assert rc == 0
    assert out.exists()


def test_estimate_cli_writes_result(tmp_path, tiny_dataset, tiny_checkpoints, capsys):
    out = tmp_path / "estimate.json"
    rc = main([
        "estimate",
        "--dataset", str(tiny_dataset),
        "--checkpoint", str(tiny_checkpoints["estimator"]),
        "--fusion-checkpoint", str(tiny_checkpoints["fusion"]),
        "--sequence", "0", "--frame", "1", "--gt-endpoints",
        "--out", str(out),
    ])
    assert rc == 0
    result = json.loads(out.read_text())
    assert result["frame"] == 1
    assert np.isfinite(result["mpne_mm"])
    assert np.asarray(result["nodes"]).shape[1] == 3


def test_estimate_cli_frame_out_of_range(tiny_dataset, tiny_checkpoints):
    rc = main([
        "estimate",
        "--dataset", str(tiny_dataset),
        "--checkpoint", str(tiny_checkpoints["estimator"]),
        "--fusion-checkpoint", str(tiny_checkpoints["fusion"]),
        "--frame", "9999",
    ])
    assert rc == 3


def test_track_cli(tmp_path, tiny_dataset, tiny_checkpoints):
    out = tmp_path / "track.json"
    rc = main([
        "track",
        "--dataset", str(tiny_dataset),
        "--checkpoint", str(tiny_checkpoints["estimator"]),
        "--fusion-checkpoint", str(tiny_checkpoints["fusion"]),
        "--tracker-checkpoint", str(tiny_checkpoints["tracker"]),
        "--sequence", "0", "--gt-init", "--seed", "4",
        "--out", str(out),
    ])
    assert rc == 0
    result = json.loads(out.read_text())
    rows = result["frames"]
    assert rows[0]["mode"] == "init"
    assert all(np.isfinite(r["mpne_mm"]) for r in rows)


def test_eval_and_plot_cli(tmp_path, tiny_dataset, tiny_checkpoints):
    report_path = tmp_path / "report.json"
    rc = main([
        "eval",
        "--dataset", str(tiny_dataset),
        "--checkpoint", str(tiny_checkpoints["estimator"]),
        "--fusion-checkpoint", str(tiny_checkpoints["fusion"]),
        "--mode", "estimate", "--occlusion", "0.0,0.3",
        "--max-frames", "1", "--seed", "6",
        "--out", str(report_path),
    ])
    assert rc == 0
    report = EvalReport.load(report_path)
    assert set(report.aggregates) == {"regression", "voting", "fusion"}

    image = tmp_path / "plot.png"
    rc = main(["plot", "--report", str(report_path), "--out", str(image)])
    assert rc == 0
    assert image.exists() and image.stat().st_size > 0


def test_plot_missing_report_exit_code(tmp_path):
    rc = main(["plot", "--report", str(tmp_path / "none.json"),
               "--out", str(tmp_path / "x.png")])
    assert rc == 3
