import json

import pytest

from vosagent.cli import main


@pytest.fixture(scope="module")
def suite_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_suite")
    assert main(["gen-suite", "--seed", "3", "--out", str(out), "--count", "5"]) == 0
    return out


class TestCli:
    def test_usage_error_exits_one(self, capsys):
        assert main(["gen-suite"]) == 1  # missing required args
        assert main(["no-such-verb"]) == 1
        capsys.readouterr()

    def test_gen_suite_writes_files(self, suite_dir):
        assert (suite_dir / "suite.json").exists()
        assert (suite_dir / "scenarios" / "scenario_000.json").exists()

    def test_run_and_compare(self, suite_dir, tmp_path, capsys):
        run_a = tmp_path / "a"
        run_b = tmp_path / "b"
        assert main(["run", "--suite", str(suite_dir / "suite.json"), "--out", str(run_a),
                     "--parallelism", "1"]) == 0
        assert main(["baseline", "--suite", str(suite_dir / "suite.json"), "--out", str(run_b),
                     "--parallelism", "1"]) == 0
        assert main(["compare", str(run_a / "report.json"), str(run_b / "report.json"),
                     "--out", str(tmp_path / "cmp.json")]) == 0
        out = capsys.readouterr().out
        assert "per-tag deltas" in out
        assert json.loads((tmp_path / "cmp.json").read_text())["suite_id"]

    def test_run_with_config_file(self, suite_dir, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"engine": {"max_steps": 6}, "parallelism": 1}))
        out = tmp_path / "cfg_run"
        assert main(["run", "--suite", str(suite_dir / "suite.json"),
                     "--config", str(config), "--out", str(out)]) == 0
        capsys.readouterr()

    def test_replay_verifies_trace(self, suite_dir, tmp_path, capsys):
        run_dir = tmp_path / "run"
        main(["run", "--suite", str(suite_dir / "suite.json"), "--out", str(run_dir),
              "--parallelism", "1"])
        trace = sorted((run_dir / "traces").glob("*.jsonl"))[0]
        assert main(["replay", "--trace", str(trace)]) == 0
        out = capsys.readouterr().out
        assert "re-parse identically" in out

    def test_missing_file_is_runtime_error(self, tmp_path, capsys):
        assert main(["run", "--suite", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
        capsys.readouterr()

    def test_conformance_in_process(self, suite_dir, capsys):
        scenario = str(suite_dir / "scenarios" / "scenario_000.json")
        assert main(["conformance", "--scenario", scenario]) == 0
        out = capsys.readouterr().out
        assert "all cases passed" in out
