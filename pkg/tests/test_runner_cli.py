import json
import shutil

import pytest
import yaml

from iecache.cli import main
from iecache.errors import AuthMissing
from iecache.runner import RunConfig, evaluate_dir, run_experiment, trace_name
from iecache.trace import RunTrace, validate_trace


@pytest.fixture
def loop_config(tmp_path, fixtures_dir):
    return RunConfig(dataset=str(fixtures_dir / "loop_tasks.jsonl"), fixture=str(fixtures_dir / "loop.fixture.jsonl"),
                     out=str(tmp_path / "run"), max_steps=4)


def test_layout_and_repeats(loop_config, tmp_path):
    loop_config.repeats = 3
    report = run_experiment(loop_config)
    out = tmp_path / "run"
    traces = sorted(p.name for p in (out / "traces").iterdir())
    assert traces == sorted(trace_name(t, r) for t in ("budget-review", "tuesday-presenter") for r in range(3))
    assert {p.name for p in out.iterdir()} == {"traces", "report.json", "report.txt", "config.snapshot"}
    assert report["n"] == 2 and report["repeats"] == 3
    assert report["aggregates"]["em"] == 1.0
    assert report["aggregates_x100"]["em"] == "100.00"
    assert json.loads((out / "config.snapshot").read_text())["repeats"] == 3
    for p in (out / "traces").iterdir():
        assert validate_trace(RunTrace.read(p)) == []


def test_report_recomputable(loop_config):
    report = run_experiment(loop_config)
    assert evaluate_dir(loop_config.out) == report
    per_item = [it["em"] for it in report["per_item"]]
    assert report["aggregates"]["em"] == sum(per_item) / len(per_item)


def test_abort_gives_null_metrics(tmp_path, fixtures_dir):
    fx = tmp_path / "one.jsonl"
    fx.write_text('{"mode": "queue"}\n{"content": "Thursday 3pm"}\n')
    cfg = RunConfig(dataset=str(fixtures_dir / "loop_tasks.jsonl"), method="generic", fixture=str(fx),
                    out=str(tmp_path / "run"))
    report = run_experiment(cfg)
    first, second = report["per_repeat"][0]["per_item"]
    assert first["em"] == 1 and second["em"] is None and "FixtureExhausted" in second["error"]
    assert report["aggregates"]["em"] == 1.0


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        RunConfig(dataset="d", fixture="f", api_base="http://x")
    with pytest.raises(ValueError):
        RunConfig.from_mapping({"dataset": "d", "bogus": 1})
    with pytest.raises(ValueError):
        RunConfig(method="ie-as-tool")


def test_live_without_key_fails_fast(tmp_path, fixtures_dir, monkeypatch):
    monkeypatch.delenv("IECACHE_API_KEY", raising=False)
    cfg = RunConfig(dataset=str(fixtures_dir / "loop_tasks.jsonl"), api_base="http://127.0.0.1:9",
                    out=str(tmp_path / "run"), method="generic")
    with pytest.raises(AuthMissing):
        run_experiment(cfg)


def write_config(tmp_path, fixtures_dir, **extra):
    data = {"dataset": str(fixtures_dir / "loop_tasks.jsonl"), "fixture": str(fixtures_dir / "loop.fixture.jsonl"),
            "max_steps": 4, "out": str(tmp_path / "run"), **extra}
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def test_cli_run_eval_replay(tmp_path, fixtures_dir, capsys):
    cfg = write_config(tmp_path, fixtures_dir)
    assert main(["run", "--config", str(cfg)]) == 0
    assert "MEAN" in capsys.readouterr().out
    assert main(["eval", "--pred", str(tmp_path / "run"), "--metric", "em"]) == 0
    assert capsys.readouterr().out.strip().endswith("MEAN\t100.00")
    trace = tmp_path / "run" / "traces" / "budget-review.0.jsonl"
    assert main(["replay", "--trace", str(trace)]) == 0
    assert capsys.readouterr().out.strip().endswith("OK")


def test_cli_flags_override(tmp_path, fixtures_dir):
    cfg = write_config(tmp_path, fixtures_dir, max_steps=2)
    assert main(["run", "--config", str(cfg), "--max-steps", "4", "--no-update", "--out", str(tmp_path / "abl")]) == 0
    snap = json.loads((tmp_path / "abl" / "config.snapshot").read_text())
    assert snap["max_steps"] == 4 and snap["update_enabled"] is False


def test_cli_replay_corrupted(tmp_path, fixtures_dir, capsys):
    lines = (fixtures_dir / "loop.golden.jsonl").read_text().splitlines()
    step = json.loads(lines[4])
    step["cache_digest"] = "f" * 64
    lines[4] = json.dumps(step)
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["replay", "--trace", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "INVALID" in out and "digest mismatch" in out


def test_cli_adapt(tmp_path, capsys):
    src = tmp_path / "cal.json"
    src.write_text(json.dumps({"c1": {"prompt_0shot": "Find a time.", "golden_plan": "Tuesday, 9:00 - 9:30"}}))
    assert main(["adapt", "--from", "calendar", "--in", str(src), "--out", str(tmp_path / "o.jsonl")]) == 0
    assert json.loads(capsys.readouterr().out)["written"] == 1


def test_cli_errors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("dataset: missing.jsonl\nmethod: generic\n")
    assert main(["run", "--config", str(cfg), "--fixture", str(tmp_path / "nope.jsonl")]) == 2
    assert "error:" in capsys.readouterr().err


def test_record_fixture_then_replay(tmp_path, fixtures_dir):
    # record through a replayed fixture, then replay the recording: same report
    cfg = write_config(tmp_path, fixtures_dir, record_fixture=str(tmp_path / "rec.jsonl"))
    assert main(["run", "--config", str(cfg)]) == 0
    first = (tmp_path / "run" / "report.json").read_text()
    shutil.rmtree(tmp_path / "run")
    assert main(["run", "--config", str(cfg), "--fixture", str(tmp_path / "rec.jsonl")]) == 0
    assert json.loads((tmp_path / "run" / "report.json").read_text()) == json.loads(first)
