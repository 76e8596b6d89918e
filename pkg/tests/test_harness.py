import pytest

from vosagent.engine import read_trace
from vosagent.errors import ComparisonError, ParameterError
from vosagent.harness import (
    RunConfig,
    compare_reports,
    gen_suite,
    load_report,
    load_suite,
    render_comparison,
    report_to_json_bytes,
    run_baseline_fixed,
    run_benchmark,
    run_config_from_dict,
)
from vosagent.protocol import ToolCall


@pytest.fixture(scope="module")
def small_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    suite = gen_suite(seed=5, out_dir=out, count=10)
    return suite


class TestSuiteGeneration:
    def test_counts_and_files(self, small_suite):
        assert len(small_suite.entries) == 10
        kinds = [e.kind for e in small_suite.entries]
        assert kinds.count("category") == 4
        assert kinds.count("whole_video") == 2
        assert kinds.count("whole_video_audio") == 1
        for entry in small_suite.entries:
            assert small_suite.resolve(entry).exists()

    def test_short_event_tag_computed(self, small_suite):
        short_rows = [e for e in small_suite.entries if "short_event" in e.tags]
        assert all(e.kind == "segment_short" for e in short_rows)
        assert len(short_rows) == sum(1 for e in small_suite.entries if e.kind == "segment_short")

    def test_deterministic_files(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        gen_suite(seed=6, out_dir=a, count=4)
        gen_suite(seed=6, out_dir=b, count=4)
        for name in ["suite.json"] + [f"scenarios/scenario_{i:03d}.json" for i in range(4)]:
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_load_round_trip(self, small_suite, tmp_path):
        loaded = load_suite(f"{small_suite.base_dir}/suite.json")
        assert loaded.suite_id == small_suite.suite_id
        assert loaded.entries == small_suite.entries
        assert loaded.fingerprint() == small_suite.fingerprint()

    def test_bad_count(self, tmp_path):
        with pytest.raises(ParameterError):
            gen_suite(seed=1, out_dir=tmp_path, count=0)


class TestAgentRun:
    def test_policy_noise_off_is_near_perfect(self, small_suite, tmp_path):
        report = run_benchmark(small_suite, RunConfig(parallelism=2), out_dir=tmp_path / "run")
        aggregates = report.aggregates()["overall"]
        assert aggregates["rows"] == 10
        assert aggregates["errors"] == 0
        assert aggregates["fallbacks"] == 0
        assert aggregates["mean_jf"] >= 0.99
        assert (tmp_path / "run" / "report.json").exists()
        assert (tmp_path / "run" / "report.csv").exists()

    def test_aggregates_recomputable_from_rows(self, small_suite):
        report = run_benchmark(small_suite, RunConfig(parallelism=1))
        aggregates = report.aggregates()
        rows = report.rows
        mean_jf = sum(r.jf for r in rows) / len(rows)
        miou = sum(r.j for r in rows) / len(rows)
        assert abs(aggregates["overall"]["mean_jf"] - mean_jf) < 1e-12
        assert abs(aggregates["overall"]["miou"] - miou) < 1e-12
        for tag, block in aggregates["by_tag"].items():
            tagged = [r for r in rows if tag in r.tags]
            assert block["rows"] == len(tagged)
            assert abs(block["mean_jf"] - sum(r.jf for r in tagged) / len(tagged)) < 1e-12

    def test_corrupt_scenario_isolated(self, tmp_path):
        suite = gen_suite(seed=9, out_dir=tmp_path, count=3)
        path = suite.resolve(suite.entries[1])
        path.write_text(path.read_text()[:100])
        report = run_benchmark(suite, RunConfig(parallelism=1))
        errors = [r for r in report.rows if r.error]
        assert len(errors) == 1 and errors[0].row == 1
        assert errors[0].jf == 0.0
        scored = [r for r in report.rows if not r.error]
        assert len(scored) == 2 and all(r.jf == 1.0 for r in scored)

    def test_row_order_matches_suite(self, small_suite):
        report = run_benchmark(small_suite, RunConfig(parallelism=4))
        assert [r.query_id for r in report.rows] == [e.query_id for e in small_suite.entries]


class TestBaselineRun:
    def test_exactly_two_tool_calls_per_row(self, small_suite, tmp_path):
        out = tmp_path / "base"
        report = run_baseline_fixed(small_suite, RunConfig(parallelism=1), out_dir=out)
        assert all(r.tool_calls == 2 for r in report.rows if not r.error)
        trace_files = sorted((out / "traces").glob("*.jsonl"))
        assert len(trace_files) == len(small_suite.entries)
        for path in trace_files:
            trace = read_trace(path)
            calls = [s for s in trace.steps if isinstance(s.action, ToolCall)]
            assert len(calls) == 2

    def test_baseline_matches_agent_on_whole_video(self, small_suite):
        agent = run_benchmark(small_suite, RunConfig(parallelism=1))
        baseline = run_baseline_fixed(small_suite, RunConfig(parallelism=1))
        agent_by_id = {r.query_id: r for r in agent.rows}
        for row in baseline.rows:
            if "whole_video" in row.tags or "category_level" in row.tags or "audio" in row.tags:
                assert row.jf == pytest.approx(agent_by_id[row.query_id].jf, abs=0.05)

    def test_baseline_fails_short_events(self, small_suite):
        baseline = run_baseline_fixed(small_suite, RunConfig(parallelism=1))
        short = [r for r in baseline.rows if "short_event" in r.tags]
        assert short, "suite should include short events"
        assert all(r.jf < 0.5 for r in short)

    def test_empty_suite_report_defined(self, tmp_path):
        suite = gen_suite(seed=3, out_dir=tmp_path, count=1)
        empty = type(suite)(suite.suite_id, suite.seed, (), suite.base_dir)
        report = run_baseline_fixed(empty, RunConfig(parallelism=1))
        aggregates = report.aggregates()["overall"]
        assert aggregates["rows"] == 0
        assert "miou" not in aggregates and "mean_jf" not in aggregates


class TestReports:
    def test_json_bytes_deterministic(self, small_suite):
        a = run_benchmark(small_suite, RunConfig(parallelism=1))
        b = run_benchmark(small_suite, RunConfig(parallelism=3))
        assert report_to_json_bytes(a) == report_to_json_bytes(b)

    def test_load_report_round_trip(self, small_suite, tmp_path):
        run_benchmark(small_suite, RunConfig(parallelism=1), out_dir=tmp_path / "r")
        report = load_report(tmp_path / "r" / "report.json")
        assert report_to_json_bytes(report) == (tmp_path / "r" / "report.json").read_bytes()

    def test_compare_self_is_all_zero(self, small_suite):
        report = run_benchmark(small_suite, RunConfig(parallelism=1))
        comparison = compare_reports(report, report)
        assert comparison["overall"]["mean_jf_delta"] == 0.0
        assert comparison["winners"] == {"a": 0, "b": 0, "tie": len(report.rows)}
        assert "per-tag deltas" in render_comparison(comparison)

    def test_compare_agent_vs_baseline_short_event_positive(self, small_suite):
        agent = run_benchmark(small_suite, RunConfig(parallelism=1))
        baseline = run_baseline_fixed(small_suite, RunConfig(parallelism=1))
        comparison = compare_reports(agent, baseline)
        assert comparison["by_tag"]["short_event"]["mean_jf_delta"] > 0.2

    def test_compare_different_suites_rejected(self, small_suite, tmp_path):
        other_suite = gen_suite(seed=99, out_dir=tmp_path, count=10)
        a = run_benchmark(small_suite, RunConfig(parallelism=1))
        b = run_benchmark(other_suite, RunConfig(parallelism=1))
        with pytest.raises(ComparisonError):
            compare_reports(a, b)


class TestRunConfig:
    def test_from_dict_defaults(self):
        config = run_config_from_dict({})
        assert config.backend_kind == "policy"
        assert config.noise.p_tool_fault == 0.0

    def test_from_dict_full(self):
        config = run_config_from_dict(
            {
                "backend": "scripted",
                "scripted_responses": ["Thought: x\nAction: audio_classify()"],
                "scripted_loop": True,
                "noise": {"rng_seed": 3, "p_tool_fault": 1.0, "fault_scope": "first_call"},
                "engine": {"max_steps": 5},
                "parallelism": 2,
            }
        )
        assert config.backend_kind == "scripted"
        assert config.scripted_loop
        assert config.noise.fault_scope == "first_call"
        assert config.engine.max_steps == 5

    def test_unknown_backend_rejected(self):
        with pytest.raises(ParameterError):
            run_config_from_dict({"backend": "martian"}).make_backend()
