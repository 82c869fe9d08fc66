"""Command line surface: run, replay, report, scenarios."""
import json

import pytest

from flipperbot.cli import main


def test_scenarios_lists_builtins(capsys):
    assert main(["scenarios"]) == 0
    out = capsys.readouterr().out.split()
    assert "pool_obstacles" in out and "track_sine" in out


def test_run_replay_report_chain(tmp_path, capsys):
    d = str(tmp_path / "run")
    rc = main(["run", "--scenario", "empty", "--mode", "depth_hold",
               "--seed", "1", "--duration", "5", "--log-dir", d])
    assert rc == 0
    assert "run complete" in capsys.readouterr().out

    assert main(["replay", "--log-dir", d]) == 0
    assert "replay exact" in capsys.readouterr().out

    assert main(["report", "--log-dir", d, "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["mode"] == "depth_hold"
    assert summary["depth"]["rmse_m"] < 0.25


def test_replay_exit_code_on_divergence(tmp_path, capsys):
    d = str(tmp_path / "run")
    main(["run", "--scenario", "empty", "--mode", "depth_hold",
          "--seed", "1", "--duration", "2", "--log-dir", d])
    capsys.readouterr()
    path = f"{d}/telemetry.jsonl"
    with open(path) as fh:
        text = fh.read()
    with open(path, "w") as fh:
        fh.write(text.replace('"seed":1', '"seed":1', 1))  # no-op, file intact
    assert main(["replay", "--log-dir", d]) == 0
    capsys.readouterr()
    # now break one record
    lines = text.splitlines()
    lines[3] = lines[3].replace('"t":', '"t@":', 1)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    assert main(["replay", "--log-dir", d]) == 1


def test_env_defaults(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("FLIPPERBOT_SCENARIO", "empty")
    monkeypatch.setenv("FLIPPERBOT_MODE", "depth_hold")
    monkeypatch.setenv("FLIPPERBOT_DURATION", "2")
    assert main(["run"]) == 0
    assert "run complete" in capsys.readouterr().out


def test_unknown_mode_rejected():
    with pytest.raises(SystemExit):
        main(["run", "--mode", "sideways"])
