import json
import os

import pytest

from mavrecon.cli import main
from mavrecon.configio import deep_update, parse_config_text
from mavrecon.detmetrics import BBox, BBoxSet, boxes_to_json
from mavrecon.mission import MissionReport


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def small_world(tmp_path):
    pgm = tmp_path / "w.pgm"
    meta = tmp_path / "w.meta"
    assert run_cli("gen-world", "--preset", "empty", "--width", "4",
                   "--height", "4", "--out-pgm", str(pgm),
                   "--out-meta", str(meta)) == 0
    return pgm, meta


def test_unknown_subcommand_is_usage_error(capsys):
    assert run_cli("frobnicate") == 1


def test_missing_required_flag_is_usage_error():
    assert run_cli("explore", "--world", "x.pgm") == 1


def test_runtime_error_exit_code(tmp_path):
    missing = tmp_path / "nope.pgm"
    assert run_cli("explore", "--world", str(missing), "--meta", str(missing),
                   "--out", str(tmp_path / "o")) == 2


def test_explore_writes_artifacts(tmp_path, small_world, capsys):
    pgm, meta = small_world
    out = tmp_path / "run7"
    code = run_cli("explore", "--world", str(pgm), "--meta", str(meta),
                   "--seed", "7", "--out", str(out), "--canonical")
    assert code == 0
    report = MissionReport.from_json(out / "report.json")
    assert report.seed == 7
    assert report.config["seed"] == 7
    assert (out / "trajectory.csv").exists()
    assert (out / "map.pgm").exists()
    summary = capsys.readouterr().out
    assert "seed=7" in summary


def test_explore_deterministic_bytes(tmp_path, small_world):
    pgm, meta = small_world
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run_cli("explore", "--world", str(pgm), "--meta", str(meta),
                       "--seed", "5", "--out", str(out), "--canonical") == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_explore_assert_flags(tmp_path, small_world):
    pgm, meta = small_world
    out = tmp_path / "r"
    code = run_cli("explore", "--world", str(pgm), "--meta", str(meta),
                   "--seed", "5", "--out", str(out),
                   "--assert-coverage", "1.01")
    assert code == 3


def test_recon_seed_env_is_lowest_precedence(tmp_path, small_world, monkeypatch):
    pgm, meta = small_world
    monkeypatch.setenv("RECON_SEED", "9")
    out = tmp_path / "env"
    assert run_cli("explore", "--world", str(pgm), "--meta", str(meta),
                   "--out", str(out), "--canonical") == 0
    report = MissionReport.from_json(out / "report.json")
    assert report.seed == 9
    out2 = tmp_path / "flag"
    assert run_cli("explore", "--world", str(pgm), "--meta", str(meta),
                   "--seed", "4", "--out", str(out2), "--canonical") == 0
    assert MissionReport.from_json(out2 / "report.json").seed == 4


def test_config_file_overlay(tmp_path, small_world):
    pgm, meta = small_world
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("seed = 21\n[policy]\ntime_budget = 60.0\n")
    out = tmp_path / "cfgrun"
    assert run_cli("explore", "--world", str(pgm), "--meta", str(meta),
                   "--config", str(cfg), "--out", str(out), "--canonical") == 0
    report = MissionReport.from_json(out / "report.json")
    assert report.seed == 21
    assert report.config["policy"]["time_budget"] == 60.0


def test_gen_column_and_spall_assert_pipeline(tmp_path):
    ply = tmp_path / "col.ply"
    gt = tmp_path / "col_gt.json"
    code = run_cli("gen-column", "--out-ply", str(ply), "--out-gt", str(gt),
                   "--density", "1000000", "--seed", "3",
                   "--carve", "box;0.10,0.10,0.6;0.05,0.05,0.05",
                   "--oracle-voxel", "0.002")
    assert code == 0
    payload = json.loads(gt.read_text())
    assert payload["gt_volume_cm3"] == pytest.approx(1000.0, rel=0.01)
    out_json = tmp_path / "spall.json"
    code = run_cli("spall", "--cloud", str(ply), "--no-preprocess",
                   "--slice", "0.005", "--bins", "720",
                   "--out-json", str(out_json),
                   "--assert-volume", "1000cm3", "--tol", "0.15")
    assert code == 0
    assert json.loads(out_json.read_text())["volume_cm3"] > 0
    # an absurd expectation trips exit code 3
    code = run_cli("spall", "--cloud", str(ply), "--no-preprocess",
                   "--assert-volume", "99999cm3", "--tol", "0.01")
    assert code == 3


def test_bad_carve_spec_is_runtime_error(tmp_path):
    code = run_cli("gen-column", "--out-ply", str(tmp_path / "x.ply"),
                   "--out-gt", str(tmp_path / "x.json"),
                   "--carve", "box;1,2;3")
    assert code == 2


def test_eval_det_perfect_match(tmp_path, capsys):
    gt_sets = [BBoxSet("img0", [BBox(0, 0, 30, 40)]),
               BBoxSet("img1", [BBox(5, 5, 25, 25)])]
    pred_sets = [BBoxSet("img0", [BBox(0, 0, 30, 40, "human", 1.0)]),
                 BBoxSet("img1", [BBox(5, 5, 25, 25, "human", 1.0)])]
    gt_file = tmp_path / "gt.json"
    pred_file = tmp_path / "pred.json"
    boxes_to_json(gt_sets, gt_file)
    boxes_to_json(pred_sets, pred_file)
    out = tmp_path / "eval.json"
    assert run_cli("eval-det", "--pred", str(pred_file), "--gt", str(gt_file),
                   "--out", str(out)) == 0
    result = json.loads(out.read_text())
    assert result["map50"] == 1.0
    assert result["map5095"] == 1.0
    assert "map50=1.0000" in capsys.readouterr().out


def test_plan_subcommand(tmp_path, small_world):
    pgm, meta = small_world
    csv = tmp_path / "path.csv"
    info = tmp_path / "plan.json"
    code = run_cli("plan", "--world", str(pgm), "--meta", str(meta),
                   "--start", "1.0,1.0", "--goal", "3.0,3.0",
                   "--iters", "1500", "--seed", "2",
                   "--out-csv", str(csv), "--out-json", str(info))
    assert code == 0
    assert csv.read_text().startswith("x,y")
    assert json.loads(info.read_text())["success"] is True


def test_config_parser_features():
    tree = parse_config_text(
        "a = 1\nb = 2.5\nc = true\nd = \"text\"\n"
        "[sec]\nx = [1, 2, 3]\n[sec.sub]\ny = -4\n# comment\n")
    assert tree["a"] == 1 and tree["b"] == 2.5 and tree["c"] is True
    assert tree["d"] == "text"
    assert tree["sec"]["x"] == [1, 2, 3]
    assert tree["sec"]["sub"]["y"] == -4
    merged = deep_update({"sec": {"x": 0, "keep": 9}}, tree)
    assert merged["sec"]["keep"] == 9
    assert merged["sec"]["x"] == [1, 2, 3]
    with pytest.raises(ValueError):
        parse_config_text("no equals sign here")
