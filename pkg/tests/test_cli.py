import json

import pytest
from click.testing import CliRunner

from rvos.cli import main

from suite_support import SUITE_DOC
from test_orchestrator import full_fixture

NO_ENV = {
    "RVOS_PLANNER_URL": None,
    "RVOS_REFINER_URL": None,
    "RVOS_SEGMENTER_URL": None,
    "RVOS_TRACKER_URL": None,
    "RVOS_RETRY_BASE": "0.001",
}


@pytest.fixture
def runner():
    return CliRunner(env=NO_ENV)


def mock_flags(ds_root, fixture):
    return [
        "--planner", f"mock:{fixture}",
        "--refiner", f"mock:{fixture}",
        "--segmenter", f"mock:{ds_root}",
        "--tracker", f"mock:{ds_root}",
    ]


@pytest.fixture(scope="module")
def run_out(ds_root, tmp_path_factory):
    """One cooperative CLI run shared by the evaluate and viz tests."""
    base = tmp_path_factory.mktemp("cli_run")
    out = base / "out"
    fixture = full_fixture(base / "fixture.json")
    result = CliRunner(env=NO_ENV).invoke(main, [
        "run", "--dataset", str(ds_root), "--out", str(out),
        *mock_flags(ds_root, fixture),
    ])
    assert result.exit_code == 0, result.output + result.stderr
    return out


class TestGenSynthetic:
    def test_bundled_suite(self, runner, tmp_path):
        out = tmp_path / "suite"
        result = runner.invoke(main, ["gen-synthetic", str(out)])
        assert result.exit_code == 0
        assert "11 tasks" in result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["tasks"]) == 11
        # the bundled suite ships with a matching chat script
        assert (out / "chat_fixture.json").is_file()

    def test_custom_scenes(self, runner, tmp_path):
        scenes = tmp_path / "scenes.json"
        scenes.write_text(json.dumps(SUITE_DOC))
        out = tmp_path / "ds"
        result = runner.invoke(main, ["gen-synthetic", str(out), "--scenes", str(scenes)])
        assert result.exit_code == 0
        assert "wrote 2 clips, 4 tasks" in result.output
        assert not (out / "chat_fixture.json").exists()

    def test_bad_scene_doc_is_usage_error(self, runner, tmp_path):
        scenes = tmp_path / "scenes.json"
        scenes.write_text(json.dumps({"scenes": [], "tasks": []}))
        result = runner.invoke(main, ["gen-synthetic", str(tmp_path / "ds"),
                                      "--scenes", str(scenes)])
        assert result.exit_code == 2
        assert "error:" in result.stderr


class TestRun:
    def test_cooperative_run(self, runner, ds_root, tmp_path):
        fixture = full_fixture(tmp_path / "f.json")
        result = runner.invoke(main, [
            "run", "--dataset", str(ds_root), "--out", str(tmp_path / "out"),
            *mock_flags(ds_root, fixture),
        ])
        assert result.exit_code == 0, result.output + result.stderr
        assert "4 tasks: 4 ok, 0 degraded, 0 failed" in result.output
        written = sorted(p.name for p in (tmp_path / "out" / "predictions").iterdir())
        assert written == ["t-both.json", "t-green.json", "t-none.json", "t-square.json"]

    def test_unreachable_tracker_degrades(self, runner, ds_root, tmp_path):
        fixture = full_fixture(tmp_path / "f.json")
        flags = mock_flags(ds_root, fixture)
        flags[flags.index("--tracker") + 1] = "http://127.0.0.1:9"
        result = runner.invoke(main, [
            "run", "--dataset", str(ds_root), "--out", str(tmp_path / "out"), *flags,
        ])
        assert result.exit_code == 1
        assert "4 tasks: 1 ok, 3 degraded, 0 failed" in result.output

    def test_missing_endpoint_is_usage_error(self, runner, ds_root, tmp_path):
        fixture = full_fixture(tmp_path / "f.json")
        flags = mock_flags(ds_root, fixture)
        del flags[:2]  # drop --planner
        result = runner.invoke(main, [
            "run", "--dataset", str(ds_root), "--out", str(tmp_path / "out"), *flags,
        ])
        assert result.exit_code == 2
        assert "--planner" in result.stderr

    def test_missing_dataset_dir_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, [
            "run", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 2

    def test_endpoints_from_config_file(self, runner, ds_root, tmp_path):
        fixture = full_fixture(tmp_path / "f.json")
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# cooperative endpoints\n"
            f"planner = mock:{fixture}\n"
            f"refiner = mock:{fixture}\n"
            f"segmenter = mock:{ds_root}\n"
            f"tracker = mock:{ds_root}\n"
        )
        result = runner.invoke(main, [
            "run", "--dataset", str(ds_root), "--out", str(tmp_path / "out"),
            "--config", str(cfg),
        ])
        assert result.exit_code == 0, result.output + result.stderr

    def test_flag_beats_config_file(self, runner, ds_root, tmp_path):
        # config points the tracker at a dead port; the flag must win
        fixture = full_fixture(tmp_path / "f.json")
        cfg = tmp_path / "run.cfg"
        cfg.write_text("tracker = http://127.0.0.1:9\n")
        result = runner.invoke(main, [
            "run", "--dataset", str(ds_root), "--out", str(tmp_path / "out"),
            "--config", str(cfg), *mock_flags(ds_root, fixture),
        ])
        assert result.exit_code == 0, result.output + result.stderr

    def test_unknown_config_key_is_usage_error(self, runner, ds_root, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("plannerz = mock:x\n")
        result = runner.invoke(main, [
            "run", "--dataset", str(ds_root), "--out", str(tmp_path / "out"),
            "--config", str(cfg),
        ])
        assert result.exit_code == 2
        assert "plannerz" in result.stderr


class TestEvaluate:
    def test_perfect_run_scores_one(self, runner, ds_root, run_out):
        result = runner.invoke(main, [
            "evaluate", "--dataset", str(ds_root),
            "--predictions", str(run_out / "predictions"), "--components",
        ])
        assert result.exit_code == 0, result.output + result.stderr
        assert "final = 1.000000" in result.output
        assert result.stderr == ""

    def test_report_file(self, runner, ds_root, run_out, tmp_path):
        report = tmp_path / "report.json"
        result = runner.invoke(main, [
            "evaluate", "--dataset", str(ds_root),
            "--predictions", str(run_out / "predictions"), "--report", str(report),
        ])
        assert result.exit_code == 0
        doc = json.loads(report.read_text())
        assert doc["final"] == 1.0
        assert {row["task_id"] for row in doc["tasks"]} == {
            "t-square", "t-both", "t-none", "t-green"}

    def test_min_final_gate(self, runner, ds_root, run_out):
        result = runner.invoke(main, [
            "evaluate", "--dataset", str(ds_root),
            "--predictions", str(run_out / "predictions"), "--min-final", "1.1",
        ])
        assert result.exit_code == 1
        assert "below required 1.1" in result.stderr

    def test_missing_prediction_warns(self, runner, ds_root, run_out, tmp_path):
        partial = tmp_path / "preds"
        partial.mkdir()
        for name in ("t-square.json", "t-both.json", "t-none.json"):
            (partial / name).write_bytes((run_out / "predictions" / name).read_bytes())
        result = runner.invoke(main, [
            "evaluate", "--dataset", str(ds_root), "--predictions", str(partial),
        ])
        assert result.exit_code == 0
        assert "t-green" in result.stderr and "warning:" in result.stderr

    def test_malformed_prediction_is_fatal(self, runner, ds_root, run_out, tmp_path):
        broken = tmp_path / "preds"
        broken.mkdir()
        for p in (run_out / "predictions").iterdir():
            (broken / p.name).write_bytes(p.read_bytes())
        (broken / "t-green.json").write_text("{")
        result = runner.invoke(main, [
            "evaluate", "--dataset", str(ds_root), "--predictions", str(broken),
        ])
        assert result.exit_code == 3
        assert "t-green" in result.stderr


class TestViz:
    def test_writes_overlays(self, runner, ds_root, run_out, tmp_path):
        out = tmp_path / "frames"
        result = runner.invoke(main, [
            "viz", "--dataset", str(ds_root), "--predictions", str(run_out / "predictions"),
            "--task", "t-green", "--out", str(out),
        ])
        assert result.exit_code == 0
        assert "wrote 4 overlays" in result.output
        assert sorted(p.name for p in out.iterdir()) == [
            "00000.png", "00001.png", "00002.png", "00003.png"]

    def test_masks_flag_adds_mask_dumps(self, runner, ds_root, run_out, tmp_path):
        out = tmp_path / "frames"
        result = runner.invoke(main, [
            "viz", "--dataset", str(ds_root), "--predictions", str(run_out / "predictions"),
            "--task", "t-square", "--out", str(out), "--masks",
        ])
        assert result.exit_code == 0
        names = sorted(p.name for p in out.iterdir())
        assert len(names) == 12
        assert "00003_mask.png" in names

    def test_unknown_task_is_usage_error(self, runner, ds_root, run_out, tmp_path):
        result = runner.invoke(main, [
            "viz", "--dataset", str(ds_root), "--predictions", str(run_out / "predictions"),
            "--task", "t-missing", "--out", str(tmp_path / "frames"),
        ])
        assert result.exit_code == 2
        assert "t-missing" in result.stderr


def test_version_flag(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
