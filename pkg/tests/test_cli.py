import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from civbalance import rulespace as rs
from civbalance.cli import cli
from civbalance.optimizer import load_history


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    rs.save_config(rs.project([10, 1, 6, 4, 3, 9, 10, 4, 4, 0.4, 3, 3]), path)
    return path


def test_optimize_bo_writes_log(runner, tmp_path):
    out = tmp_path / "run.jsonl"
    result = runner.invoke(cli, [
        "optimize", "--method", "bo-adaptive", "-T", "10", "--init-count", "5",
        "--n-min", "4", "--n-max", "8", "--seed", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    history = load_history(out)
    assert len(history) == 10
    assert "best" in result.output


def test_optimize_resume(runner, tmp_path):
    out = tmp_path / "run.jsonl"
    args = ["optimize", "--method", "bo-adaptive", "-T", "8", "--init-count", "4",
            "--n-min", "2", "--n-max", "4", "--seed", "2", "--out", str(out)]
    runner.invoke(cli, args[:2] + ["-T", "5"] + args[4:])  # interrupted short run
    result = runner.invoke(cli, args + ["--resume"])
    assert result.exit_code == 0, result.output
    history = load_history(out)
    assert [r.iteration for r in history] == list(range(1, 9))


def test_optimize_refuses_overwrite(runner, tmp_path):
    out = tmp_path / "run.jsonl"
    out.write_text("")
    result = runner.invoke(cli, ["optimize", "-T", "3", "--init-count", "2",
                                 "--out", str(out)], standalone_mode=False)
    assert isinstance(result.exception, rs.ContractViolation)


def test_optimize_es_tagged(runner, tmp_path):
    out = tmp_path / "es.jsonl"
    result = runner.invoke(cli, [
        "optimize", "--method", "es", "-T", "5", "--games", "4",
        "--step-sigma", "0.1", "--seed", "0", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert all(r.method == "es" for r in load_history(out))


def test_evaluate_command(runner, config_path, tmp_path):
    report = tmp_path / "report.json"
    result = runner.invoke(cli, [
        "evaluate", str(config_path), "--games", "6", "--seed", "3",
        "--out", str(report)])
    assert result.exit_code == 0, result.output
    assert "Empire wins | Nomads wins" in result.output
    data = json.loads(report.read_text())
    assert data["n_games"] == 6

    again = tmp_path / "report2.json"
    runner.invoke(cli, ["evaluate", str(config_path), "--games", "6",
                        "--seed", "3", "--out", str(again)])
    assert again.read_bytes() == report.read_bytes()


def test_evaluate_malformed_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 1}')
    proc = subprocess.run(
        [sys.executable, "-m", "civbalance.cli", "evaluate", str(bad), "--games", "1"],
        capture_output=True, text=True)
    assert proc.returncode == 2


def test_play_text_frames(runner, config_path, tmp_path):
    outdir = tmp_path / "rollout"
    result = runner.invoke(cli, [
        "play", str(config_path), "--seed", "1", "--render", "text",
        "--out", str(outdir)])
    assert result.exit_code == 0, result.output
    frames = sorted(outdir.glob("frame_*.txt"))
    cfg = rs.load_config(config_path)
    assert 1 <= len(frames) <= 2 * cfg.max_turns + 1
    assert (outdir / "transcript.jsonl").exists()
    final = frames[-1].read_text()
    assert "wins" in final or "Draw" in final


def test_play_svg_frames(runner, config_path, tmp_path):
    outdir = tmp_path / "rollout_svg"
    result = runner.invoke(cli, [
        "play", str(config_path), "--seed", "1", "--render", "svg",
        "--out", str(outdir)])
    assert result.exit_code == 0, result.output
    frames = sorted(outdir.glob("frame_*.svg"))
    assert frames and all(f.read_text().startswith("<svg") for f in frames)


def test_report_command(runner, tmp_path):
    out = tmp_path / "run.jsonl"
    runner.invoke(cli, ["optimize", "--method", "random", "-T", "5",
                        "--games", "4", "--seed", "5", "--out", str(out)])
    result = runner.invoke(cli, ["report", str(out)])
    assert result.exit_code == 0, result.output
    assert "total_games=20" in result.output
    assert "TTK" in result.output


def test_report_no_checkpoint_note(runner, tmp_path):
    out = tmp_path / "run.jsonl"
    runner.invoke(cli, ["optimize", "--method", "random", "-T", "2",
                        "--games", "1", "--seed", "6", "--out", str(out)])
    history = load_history(out)
    if all(r.eval_result.loss > 0.1 for r in history):
        result = runner.invoke(cli, ["report", str(out)])
        assert "no balanced checkpoint" in result.output


def test_usage_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "civbalance.cli", "optimize", "--method", "nope",
         "--out", "/tmp/x.jsonl"],
        capture_output=True, text=True)
    assert proc.returncode == 1
