import csv
import json
import shutil
import subprocess
import sys

import pytest

from hxe.cli import cli, main

SMALL_MODEL = {"width": 16, "layers": 1, "heads": 2, "mlp_hidden": 32, "head_hidden": 64}


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture(scope="module")
def arm_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "arm"
    assert main(["gen-data", "--world", "two_object_reach", "--embodiment", "arm_a", "--episodes", "10",
                 "--seed", "3", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def trained(tmp_path_factory, arm_dir):
    root = tmp_path_factory.mktemp("run")
    cfg = _write_json(root / "run.json", {
        "version": 1, "seed": 0, "datasets": [{"path": str(arm_dir)}], "model": SMALL_MODEL,
        "training": {"steps": 100, "batch_size": 16, "lr_max": 1e-3}, "output": str(root / "model"),
    })
    assert main(["train", "--config", cfg]) == 0
    return root / "model"


def test_gen_data_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["gen-data", "--world", "corridor_nav", "--embodiment", "nav_a", "--episodes", "5",
                     "--seed", "11", "--out", str(tmp_path / name / "ds")]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_gen_data_zero_episodes(tmp_path, capsys):
    rc = main(["gen-data", "--world", "two_object_reach", "--embodiment", "arm_a", "--episodes", "0", "--out",
               str(tmp_path / "x")])
    assert rc == 2
    assert "episodes" in capsys.readouterr().err


def test_gen_data_accepts_world_file(tmp_path):
    world = _write_json(tmp_path / "world.json", {"version": 1, "kind": "cluttered_reach"})
    assert main(["gen-data", "--world", world, "--embodiment", "arm_b", "--episodes", "2", "--out",
                 str(tmp_path / "c")]) == 0
    bad = _write_json(tmp_path / "bad.json", {"version": 1, "kind": "cluttered_reach", "size": 3})
    assert main(["gen-data", "--world", bad, "--embodiment", "arm_b", "--episodes", "2", "--out",
                 str(tmp_path / "d")]) == 2


def test_manifest_weight_is_episode_count(arm_dir):
    manifest = json.loads((arm_dir / "manifest.json").read_text())
    assert manifest["weight"] == 10


def test_train_writes_loss_curve(trained):
    with open(trained / "loss.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["step", "lr", "loss_total", "loss_diff", "loss_dist"]
    assert len(rows) == 100
    assert float(rows[-1]["loss_total"]) < float(rows[0]["loss_total"])
    assert (trained / "model.hxw").is_file() and (trained / "model.json").is_file()


def test_train_rerun_is_identical(tmp_path, arm_dir, trained):
    cfg = _write_json(tmp_path / "run.json", {
        "version": 1, "seed": 0, "datasets": [{"path": str(arm_dir)}], "model": SMALL_MODEL,
        "training": {"steps": 100, "batch_size": 16, "lr_max": 1e-3}, "output": str(tmp_path / "again"),
    })
    assert main(["train", "--config", cfg]) == 0
    assert (tmp_path / "again" / "model.hxw").read_bytes() == (trained / "model.hxw").read_bytes()
    assert (tmp_path / "again" / "loss.csv").read_bytes() == (trained / "loss.csv").read_bytes()


def test_train_config_errors_name_the_pointer(tmp_path, arm_dir, capsys):
    typo = _write_json(tmp_path / "typo.json", {"version": 1, "seed": 0, "datasets": [{"path": str(arm_dir)}],
                                                "output": "o", "trainig": {}})
    assert main(["train", "--config", typo]) == 2
    assert "trainig" in capsys.readouterr().err
    wrong = _write_json(tmp_path / "wrong.json", {"version": 1, "seed": 0, "datasets": [{"path": str(arm_dir)}],
                                                  "output": "o", "training": {"steps": "many"}})
    assert main(["train", "--config", wrong]) == 2
    assert "/training/steps" in capsys.readouterr().err
    old = _write_json(tmp_path / "old.json", {"version": 2, "seed": 0, "datasets": [], "output": "o"})
    assert main(["train", "--config", old]) == 2
    missing = _write_json(tmp_path / "missing.json", {"version": 1, "seed": 0, "output": "o",
                                                      "datasets": [{"path": str(tmp_path / "nowhere")}]})
    assert main(["train", "--config", missing]) == 2


def test_eval_missing_checkpoint(tmp_path, capsys):
    gone = tmp_path / "no_such_model"
    assert main(["eval", "--model", str(gone), "--tasks", "two_object_reach", "--out", str(tmp_path / "r")]) == 2
    assert str(gone) in capsys.readouterr().err


def test_eval_writes_report(tmp_path, trained):
    out = tmp_path / "r"
    assert main(["eval", "--model", str(trained), "--tasks", "two_object_reach", "--trials", "2",
                 "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["rows"][0]["task"] == "two_object_reach" and doc["rows"][0]["trials"] == 2
    assert main(["report", "--in", str(out)]) == 0


def test_eval_rejects_foreign_embodiment(tmp_path, trained):
    assert main(["eval", "--model", str(trained), "--tasks", "corridor_nav", "--trials", "1",
                 "--out", str(tmp_path / "r")]) == 2


def test_report_rejects_invalid_document(tmp_path):
    (tmp_path / "report.json").write_text(json.dumps({"schema_version": 1, "fingerprint": "0" * 64,
                                                      "rows": [{"mixture": "m"}]}))
    assert main(["report", "--in", str(tmp_path)]) == 2


def test_analyze_one_row_per_target(tmp_path, trained, arm_dir):
    out = tmp_path / "an"
    args = ["analyze", "--model", str(trained), "--data", str(arm_dir), "--out", str(out)]
    assert main(args) == 1  # 10 episodes x 8 pairs is below the 100-pair minimum
    assert main(args + ["--per-episode", "16"]) == 0
    with open(out / "r2.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["target"] for r in rows] == ["temporal_distance", "metric_distance"]


def test_topomap_from_dataset(tmp_path, arm_dir):
    out = tmp_path / "map"
    assert main(["topomap", "--traversal", str(arm_dir), "--episode", "1", "--stride", "2", "--out", str(out)]) == 0
    meta = json.loads((out / "topomap.json").read_text())
    assert meta["stride"] == 2 and meta["node_count"] >= 2


def test_ablate_runs_every_cell(tmp_path, arm_dir):
    cfg = _write_json(tmp_path / "ablate.json", {
        "version": 1, "seeds": [0], "datasets": {"arm": str(arm_dir)},
        "mixtures": [{"name": "manip_only", "datasets": ["arm"]}, {"name": "again", "datasets": ["arm"]}],
        "model": SMALL_MODEL, "training": {"steps": 3, "batch_size": 4}, "tasks": ["two_object_reach"],
        "trials": 1, "output": str(tmp_path / "ab"),
    })
    assert main(["ablate", "--config", cfg]) == 0
    doc = json.loads((tmp_path / "ab" / "report.json").read_text())
    assert sorted(r["mixture"] for r in doc["rows"]) == ["again", "manip_only"]


@pytest.mark.parametrize("command", list(cli.commands))
def test_help_lists_every_flag(command, capsys):
    assert main([command, "--help"]) == 0
    text = capsys.readouterr().out
    for param in cli.commands[command].params:
        for flag in param.opts:
            assert flag in text


def test_unknown_flag_is_usage_error():
    assert main(["gen-data", "--colour", "red"]) == 2
    assert main(["launch"]) == 2


@pytest.mark.skipif(shutil.which("hxe") is None, reason="console script not installed")
def test_console_script_exit_code(tmp_path):
    proc = subprocess.run(["hxe", "eval", "--model", str(tmp_path / "none"), "--tasks", "two_object_reach",
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "hxe.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gen-data" in proc.stdout
