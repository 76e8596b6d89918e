"""Dataset-level runner: suite generation, agent and fixed-baseline runs,
scoring, and report files.

report.json is fully deterministic for a given suite and config (rows in
suite order, canonical JSON, no wall-clock fields); per-row timings go to
report.csv and run_meta.json instead, so repeated runs at any parallelism
produce byte-identical report.json files.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path

from . import scenario as sc
from .backends import PolicyBackend, RemoteBackend, ScriptedBackend
from .engine import (
    EngineConfig,
    FinalAnswer,
    Step,
    Trace,
    render_observation,
    run_episode,
    write_trace,
)
from .errors import ComparisonError, ParameterError, ScenarioParseError, VosAgentError
from .grammar import format_final_answer, format_step, format_tool_call
from .masks import EvalScores, MaskSequence, aggregate_miou, sequence_scores
from .planner import RulePlanner
from .protocol import ToolCall, invoke
from .sampling import coarse_sample_indices
from .simtools import (
    DEFAULT_CHUNK_LEN,
    DEFAULT_COARSE_K,
    DEFAULT_STRIDE,
    NoiseConfig,
    build_sim_registry,
)
from .scenario import CATEGORY_FOR_AUDIO_CLASS

SUITE_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

# Suite mix: category-level 40%, whole-video 30% (a third of those audio),
# segment-specific 30% (at least half short events).
STRATIFICATION = (
    ("category", 0.40),
    ("whole_video", 0.20),
    ("whole_video_audio", 0.10),
    ("segment_long", 0.14),
    ("segment_short", 0.16),
)

_KIND_TAGS = {
    "category": "category_level",
    "whole_video": "whole_video",
    "whole_video_audio": "audio",
    "segment_long": "segment_long",
    "segment_short": "segment_short",
}

CSV_COLUMNS = (
    "row",
    "query_id",
    "scenario_path",
    "kind",
    "tags",
    "j",
    "f",
    "jf",
    "steps",
    "tool_calls",
    "parse_errors",
    "fallback_used",
    "error",
    "wall_time_s",
)


@dataclass(frozen=True)
class SuiteEntry:
    scenario_path: str
    query_id: str
    kind: str
    tags: tuple[str, ...]


@dataclass(frozen=True)
class BenchmarkSuite:
    suite_id: str
    seed: int
    entries: tuple[SuiteEntry, ...]
    base_dir: str = "."

    def resolve(self, entry: SuiteEntry) -> Path:
        return Path(self.base_dir) / entry.scenario_path

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.suite_id.encode())
        for entry in self.entries:
            digest.update(f"{entry.scenario_path}|{entry.query_id}|{entry.kind}".encode())
            try:
                digest.update(self.resolve(entry).read_bytes())
            except OSError:
                digest.update(b"<missing>")
        return digest.hexdigest()[:16]


def _kind_counts(count: int) -> list[str]:
    kinds: list[str] = []
    for kind, fraction in STRATIFICATION[:-1]:
        kinds.extend([kind] * round(fraction * count))
    last_kind = STRATIFICATION[-1][0]
    kinds.extend([last_kind] * (count - len(kinds)))
    return kinds


def _derive_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) % 2**32


def _entry_tags(scenario: sc.Scenario, query: sc.Query, kind: str) -> tuple[str, ...]:
    """Computed difficulty tags; short_event is derived, never asserted."""
    tags = [_KIND_TAGS[kind]]
    if query.uses_audio and "audio" not in tags:
        tags.append("audio")
    if kind.startswith("segment"):
        num_frames = scenario.video.num_frames
        samples = set(coarse_sample_indices(num_frames, min(DEFAULT_COARSE_K, num_frames)))
        for ev in scenario.events:
            if ev.subject_id != query.gt_object_id:
                continue
            if sc.extract_motion_phrase(query.expression) != ev.description:
                continue
            span_len = ev.span[1] - ev.span[0] + 1
            disjoint = not any(ev.span[0] <= s <= ev.span[1] for s in samples)
            if span_len <= num_frames // 10 and disjoint and "short_event" not in tags:
                tags.append("short_event")
    return tuple(tags)


def gen_suite(seed: int, out_dir, count: int = 50) -> BenchmarkSuite:
    """Write ``count`` scenarios plus a suite.json into ``out_dir``."""
    if count < 1:
        raise ParameterError("suite needs at least one scenario")
    out = Path(out_dir)
    (out / "scenarios").mkdir(parents=True, exist_ok=True)
    entries: list[SuiteEntry] = []
    for index, kind in enumerate(_kind_counts(count)):
        scen_seed = _derive_seed(seed, index)
        scenario = sc.generate_scenario(
            scen_seed, sc.GenerationParams(query_kinds=(kind,))
        )
        rel_path = f"scenarios/scenario_{index:03d}.json"
        sc.save_scenario(scenario, out / rel_path)
        query = scenario.queries[0]
        entries.append(
            SuiteEntry(
                scenario_path=rel_path,
                query_id=query.query_id,
                kind=kind,
                tags=_entry_tags(scenario, query, kind),
            )
        )
    suite = BenchmarkSuite(
        suite_id=f"suite-{seed}-{count}", seed=seed, entries=tuple(entries), base_dir=str(out)
    )
    payload = {
        "schema_version": SUITE_SCHEMA_VERSION,
        "suite_id": suite.suite_id,
        "seed": seed,
        "entries": [
            {
                "scenario_path": e.scenario_path,
                "query_id": e.query_id,
                "kind": e.kind,
                "tags": list(e.tags),
            }
            for e in entries
        ],
    }
    (out / "suite.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return suite


def load_suite(path) -> BenchmarkSuite:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if data.get("schema_version") != SUITE_SCHEMA_VERSION:
        raise ScenarioParseError(
            f"{path}: unsupported suite schema_version {data.get('schema_version')!r}"
        )
    entries = tuple(
        SuiteEntry(
            scenario_path=e["scenario_path"],
            query_id=e["query_id"],
            kind=e["kind"],
            tags=tuple(e["tags"]),
        )
        for e in data["entries"]
    )
    return BenchmarkSuite(
        suite_id=data["suite_id"], seed=data["seed"], entries=entries, base_dir=str(path.parent)
    )


# --- run configuration -------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    backend_kind: str = "policy"  # policy | scripted | remote
    planner_kind: str = "rule"  # rule | remote
    noise: NoiseConfig = NoiseConfig()
    engine: EngineConfig = EngineConfig()
    parallelism: int | None = None
    tool_k: int = DEFAULT_COARSE_K
    tool_chunk_len: int = DEFAULT_CHUNK_LEN
    tool_stride: int = DEFAULT_STRIDE
    scripted_responses: tuple[str, ...] = ()
    scripted_loop: bool = False
    remote_endpoint: str = ""
    remote_model: str = ""
    write_traces: bool = True

    def make_backend(self):
        if self.backend_kind == "policy":
            return PolicyBackend(
                coarse_k=self.tool_k,
                chunk_len=self.tool_chunk_len,
                stride=self.tool_stride,
            )
        if self.backend_kind == "scripted":
            return ScriptedBackend(list(self.scripted_responses), loop=self.scripted_loop)
        if self.backend_kind == "remote":
            if not self.remote_endpoint or not self.remote_model:
                raise ParameterError("remote backend needs remote_endpoint and remote_model")
            return RemoteBackend(self.remote_endpoint, self.remote_model)
        raise ParameterError(f"unknown backend kind '{self.backend_kind}'")

    def fingerprint(self) -> dict:
        return {
            "backend_kind": self.backend_kind,
            "planner_kind": self.planner_kind,
            "noise": self.noise.to_dict(),
            "engine": {
                "max_steps": self.engine.max_steps,
                "observation_tag": self.engine.observation_tag,
                "tool_timeout": self.engine.tool_timeout,
                "examples": len(self.engine.in_context_examples),
            },
            "tools": {
                "k": self.tool_k,
                "chunk_len": self.tool_chunk_len,
                "stride": self.tool_stride,
            },
            "scripted_loop": self.scripted_loop,
        }


def run_config_from_dict(data: dict) -> RunConfig:
    engine_d = data.get("engine", {})
    engine = EngineConfig(
        max_steps=engine_d.get("max_steps", 10),
        observation_tag=engine_d.get("observation_tag", "Observation:"),
        stop_sequences=tuple(engine_d.get("stop_sequences", ("Observation:",))),
        tool_timeout=engine_d.get("tool_timeout", 30.0),
        max_new_tokens=engine_d.get("max_new_tokens", 1024),
    )
    tools_d = data.get("tools", {})
    return RunConfig(
        backend_kind=data.get("backend", "policy"),
        planner_kind=data.get("planner", "rule"),
        noise=NoiseConfig.from_dict(data.get("noise", {})),
        engine=engine,
        parallelism=data.get("parallelism"),
        tool_k=tools_d.get("k", DEFAULT_COARSE_K),
        tool_chunk_len=tools_d.get("chunk_len", DEFAULT_CHUNK_LEN),
        tool_stride=tools_d.get("stride", DEFAULT_STRIDE),
        scripted_responses=tuple(data.get("scripted_responses", ())),
        scripted_loop=data.get("scripted_loop", False),
        remote_endpoint=data.get("remote_endpoint", ""),
        remote_model=data.get("remote_model", ""),
    )


def load_run_config(path) -> RunConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return run_config_from_dict(data)


# --- rows and reports ----------------------------------------------------------------


@dataclass(frozen=True)
class RowResult:
    row: int
    query_id: str
    scenario_path: str
    kind: str
    tags: tuple[str, ...]
    j: float = 0.0
    f: float = 0.0
    jf: float = 0.0
    steps: int = 0
    tool_calls: int = 0
    parse_errors: int = 0
    fallback_used: bool = False
    error: str | None = None
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class EvalReport:
    suite_id: str
    suite_fingerprint: str
    mode: str  # agent | baseline
    config: dict
    rows: tuple[RowResult, ...]

    def aggregates(self) -> dict:
        return _aggregate(self.rows)


def _aggregate(rows: tuple[RowResult, ...]) -> dict:
    def block(selected: list[RowResult]) -> dict:
        scored = [r for r in selected if r.error is None]
        out: dict = {
            "rows": len(selected),
            "errors": len(selected) - len(scored),
            "fallbacks": sum(1 for r in selected if r.fallback_used),
        }
        values = [r.j for r in selected] if selected else []
        if selected:
            out["miou"] = aggregate_miou(values)
            out["mean_jf"] = sum(r.jf for r in selected) / len(selected)
        return out

    tags = sorted({t for r in rows for t in r.tags})
    return {
        "overall": block(list(rows)),
        "by_tag": {t: block([r for r in rows if t in r.tags]) for t in tags},
    }


def report_to_dict(report: EvalReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "suite_id": report.suite_id,
        "suite_fingerprint": report.suite_fingerprint,
        "mode": report.mode,
        "config": report.config,
        "rows": [
            {
                "row": r.row,
                "query_id": r.query_id,
                "scenario_path": r.scenario_path,
                "kind": r.kind,
                "tags": list(r.tags),
                "j": r.j,
                "f": r.f,
                "jf": r.jf,
                "steps": r.steps,
                "tool_calls": r.tool_calls,
                "parse_errors": r.parse_errors,
                "fallback_used": r.fallback_used,
                "error": r.error,
            }
            for r in report.rows
        ],
        "aggregates": report.aggregates(),
    }


def report_to_json_bytes(report: EvalReport) -> bytes:
    return (json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n").encode("utf-8")


def report_from_dict(data: dict) -> EvalReport:
    rows = tuple(
        RowResult(
            row=r["row"],
            query_id=r["query_id"],
            scenario_path=r["scenario_path"],
            kind=r["kind"],
            tags=tuple(r["tags"]),
            j=r["j"],
            f=r["f"],
            jf=r["jf"],
            steps=r["steps"],
            tool_calls=r["tool_calls"],
            parse_errors=r["parse_errors"],
            fallback_used=r["fallback_used"],
            error=r["error"],
        )
        for r in data["rows"]
    )
    return EvalReport(
        suite_id=data["suite_id"],
        suite_fingerprint=data["suite_fingerprint"],
        mode=data["mode"],
        config=data["config"],
        rows=rows,
    )


def load_report(path) -> EvalReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_report_files(report: EvalReport, out_dir, wall_times: dict[int, float], meta: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_bytes(report_to_json_bytes(report))
    with open(out / "report.csv", "w", newline="", encoding="utf-8") as sink:
        writer = csv.writer(sink)
        writer.writerow(CSV_COLUMNS)
        for r in report.rows:
            writer.writerow(
                [
                    r.row,
                    r.query_id,
                    r.scenario_path,
                    r.kind,
                    ";".join(r.tags),
                    repr(r.j),
                    repr(r.f),
                    repr(r.jf),
                    r.steps,
                    r.tool_calls,
                    r.parse_errors,
                    r.fallback_used,
                    r.error or "",
                    repr(wall_times.get(r.row, 0.0)),
                ]
            )
    (out / "run_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# --- the runs -------------------------------------------------------------------------


def _score_row(masks: MaskSequence, gt: MaskSequence) -> EvalScores:
    return sequence_scores(masks, gt)


def _agent_row(
    suite: BenchmarkSuite, entry: SuiteEntry, row: int, config: RunConfig, trace_dir: Path | None
) -> RowResult:
    started = time.perf_counter()
    base = RowResult(
        row=row,
        query_id=entry.query_id,
        scenario_path=entry.scenario_path,
        kind=entry.kind,
        tags=entry.tags,
    )
    try:
        scenario = sc.load_scenario(suite.resolve(entry))
        query = scenario.query_by_id(entry.query_id)
        if query is None:
            raise ParameterError(f"query '{entry.query_id}' not in scenario")
        narrative = sc.synthesize_narrative(scenario)
        planner = RulePlanner()
        plan = planner.plan_query(query.expression, narrative, query.uses_audio)
        registry = build_sim_registry(scenario, config.noise)
        backend = config.make_backend()
        trace, masks = run_episode(scenario, query, plan, backend, registry, config.engine)
        gt = sc.ground_truth_sequence(scenario, query.gt_object_id)
        scores = _score_row(masks, gt)
        if trace_dir is not None:
            write_trace(trace, trace_dir / f"{row:03d}_{entry.query_id}.jsonl")
        return RowResult(
            row=row,
            query_id=entry.query_id,
            scenario_path=entry.scenario_path,
            kind=entry.kind,
            tags=entry.tags,
            j=scores.j_mean,
            f=scores.f_mean,
            jf=scores.jf,
            steps=len(trace.steps),
            tool_calls=trace.tool_call_count,
            parse_errors=trace.parse_error_count,
            fallback_used=trace.fallback_used,
            wall_time_s=time.perf_counter() - started,
        )
    except VosAgentError as exc:
        return replace(
            base,
            error=f"{type(exc).__name__}: {exc}",
            wall_time_s=time.perf_counter() - started,
        )


def _baseline_row(
    suite: BenchmarkSuite, entry: SuiteEntry, row: int, config: RunConfig, trace_dir: Path | None
) -> RowResult:
    """Fixed two-step pipeline: frame selection, then box selection at that
    single frame. No fine search, no retries, no feedback. Audio queries swap
    the search stage for one audio classification (still exactly two calls)."""
    started = time.perf_counter()
    base = RowResult(
        row=row,
        query_id=entry.query_id,
        scenario_path=entry.scenario_path,
        kind=entry.kind,
        tags=entry.tags,
    )
    try:
        scenario = sc.load_scenario(suite.resolve(entry))
        query = scenario.query_by_id(entry.query_id)
        if query is None:
            raise ParameterError(f"query '{entry.query_id}' not in scenario")
        video = scenario.video
        registry = build_sim_registry(scenario, config.noise)
        timeout = config.engine.tool_timeout
        k = max(2, min(DEFAULT_COARSE_K, video.num_frames))
        steps: list[Step] = []

        pivot = 0
        category = None
        if query.uses_audio:
            call = ToolCall(f"{entry.query_id}.b1", "audio_classify", {})
            result = invoke(registry, call, timeout=timeout)
            obs = _observation(result)
            steps.append(_synthetic_step(1, "Classify the soundtrack to pick the target category.", call, obs))
            if result.ok and result.result.get("classes"):
                category = CATEGORY_FOR_AUDIO_CLASS.get(result.result["classes"][0]["label"])
        else:
            call = ToolCall(
                f"{entry.query_id}.b1",
                "temporal_search_coarse",
                {"query": query.expression, "k": k},
            )
            result = invoke(registry, call, timeout=timeout)
            obs = _observation(result)
            steps.append(_synthetic_step(1, "Select a pivot frame from the fixed sample set.", call, obs))
            if result.ok and result.result.get("matched") and result.result.get("window"):
                pivot = result.result["window"]["start"]
            cats = sc.category_words(query.expression)
            category = cats[0] if cats else None

        object_id = "unknown"
        if category is not None:
            call = ToolCall(
                f"{entry.query_id}.b2",
                "identify_instance",
                {"frames": [pivot], "category": category, "description": query.expression},
            )
            result = invoke(registry, call, timeout=timeout)
            obs = _observation(result)
            steps.append(_synthetic_step(2, "Select the box matching the description at the pivot.", call, obs))
            if result.ok and result.result.get("object_id"):
                object_id = result.result["object_id"]

        final = FinalAnswer(pivot_frame=pivot, object_id=object_id)
        steps.append(
            Step(
                index=len(steps) + 1,
                thought="Fixed pipeline complete.",
                action=final,
                raw_text=format_step("Fixed pipeline complete.", format_final_answer(final), final=True),
                observation=None,
            )
        )
        seg = invoke(
            registry,
            ToolCall(
                f"{entry.query_id}.b3",
                "segment_and_track",
                {"pivot_frame": pivot, "object_id": object_id},
            ),
            timeout=timeout,
        )
        if seg.ok:
            masks = MaskSequence.from_dicts(seg.result["masks"])
        else:
            masks = MaskSequence.all_empty(video.width, video.height, video.num_frames)
        gt = sc.ground_truth_sequence(scenario, query.gt_object_id)
        scores = _score_row(masks, gt)

        narrative = sc.synthesize_narrative(scenario)
        plan = RulePlanner().plan_query(query.expression, narrative, query.uses_audio)
        trace = Trace(
            query_id=entry.query_id,
            plan=plan,
            steps=tuple(steps),
            final=final,
            fallback_used=False,
            wall_time_s=time.perf_counter() - started,
        )
        if trace_dir is not None:
            write_trace(trace, trace_dir / f"{row:03d}_{entry.query_id}.jsonl")
        return RowResult(
            row=row,
            query_id=entry.query_id,
            scenario_path=entry.scenario_path,
            kind=entry.kind,
            tags=entry.tags,
            j=scores.j_mean,
            f=scores.f_mean,
            jf=scores.jf,
            steps=len(trace.steps),
            tool_calls=trace.tool_call_count,
            parse_errors=0,
            fallback_used=False,
            wall_time_s=time.perf_counter() - started,
        )
    except VosAgentError as exc:
        return replace(
            base,
            error=f"{type(exc).__name__}: {exc}",
            wall_time_s=time.perf_counter() - started,
        )


def _observation(result) -> str:
    return render_observation(result)


def _synthetic_step(index: int, thought: str, call: ToolCall, observation: str) -> Step:
    raw = format_step(thought, format_tool_call(call.tool, call.args))
    return Step(index=index, thought=thought, action=call, raw_text=raw, observation=observation)


def _run(suite: BenchmarkSuite, config: RunConfig, out_dir, mode: str) -> EvalReport:
    worker = _agent_row if mode == "agent" else _baseline_row
    trace_dir = None
    if out_dir is not None and config.write_traces:
        trace_dir = Path(out_dir) / "traces"
        trace_dir.mkdir(parents=True, exist_ok=True)
    jobs = list(enumerate(suite.entries))
    workers = config.parallelism or os.cpu_count() or 1
    results: dict[int, RowResult] = {}
    started = time.time()
    if workers <= 1:
        for row, entry in jobs:
            results[row] = worker(suite, entry, row, config, trace_dir)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(worker, suite, entry, row, config, trace_dir): row
                for row, entry in jobs
            }
            for future in concurrent.futures.as_completed(futures):
                results[futures[future]] = future.result()
    rows = tuple(results[row] for row, _ in jobs)
    report = EvalReport(
        suite_id=suite.suite_id,
        suite_fingerprint=suite.fingerprint(),
        mode=mode,
        config=config.fingerprint(),
        rows=rows,
    )
    if out_dir is not None:
        write_report_files(
            report,
            out_dir,
            wall_times={r.row: r.wall_time_s for r in rows},
            meta={
                "started_unix": started,
                "elapsed_s": time.time() - started,
                "parallelism": workers,
                "mode": mode,
            },
        )
    return report


def run_benchmark(suite: BenchmarkSuite, config: RunConfig = RunConfig(), out_dir=None) -> EvalReport:
    """Plan, run, and score every suite query with the reasoning agent."""
    return _run(suite, config, out_dir, "agent")


def run_baseline_fixed(suite: BenchmarkSuite, config: RunConfig = RunConfig(), out_dir=None) -> EvalReport:
    """Score the fixed two-step pipeline on the same suite."""
    return _run(suite, config, out_dir, "baseline")


# --- comparison ------------------------------------------------------------------------


def compare_reports(a: EvalReport, b: EvalReport) -> dict:
    """Per-tag deltas (a minus b) and per-row winner counts."""
    if a.suite_fingerprint != b.suite_fingerprint:
        raise ComparisonError(
            f"suite fingerprints differ: {a.suite_fingerprint} vs {b.suite_fingerprint}"
        )
    agg_a = a.aggregates()
    agg_b = b.aggregates()

    def delta(block_a: dict, block_b: dict) -> dict:
        out = {"rows": block_a.get("rows", 0)}
        for key in ("mean_jf", "miou"):
            if key in block_a and key in block_b:
                out[f"{key}_delta"] = block_a[key] - block_b[key]
        return out

    tags = sorted(set(agg_a["by_tag"]) | set(agg_b["by_tag"]))
    by_tag = {
        t: delta(agg_a["by_tag"].get(t, {}), agg_b["by_tag"].get(t, {}))
        for t in tags
    }
    jf_b = {r.query_id: r.jf for r in b.rows}
    wins = sum(1 for r in a.rows if r.jf > jf_b.get(r.query_id, 0.0))
    losses = sum(1 for r in a.rows if r.jf < jf_b.get(r.query_id, 0.0))
    ties = len(a.rows) - wins - losses
    return {
        "suite_id": a.suite_id,
        "modes": [a.mode, b.mode],
        "overall": delta(agg_a["overall"], agg_b["overall"]),
        "by_tag": by_tag,
        "winners": {"a": wins, "b": losses, "tie": ties},
    }


def render_comparison(comparison: dict) -> str:
    lines = [
        f"suite: {comparison['suite_id']}  ({comparison['modes'][0]} vs {comparison['modes'][1]})",
        f"overall: mean_jf delta {comparison['overall'].get('mean_jf_delta', 0.0):+.4f},"
        f" miou delta {comparison['overall'].get('miou_delta', 0.0):+.4f}",
        f"winners: a={comparison['winners']['a']} b={comparison['winners']['b']}"
        f" tie={comparison['winners']['tie']}",
        "per-tag deltas:",
    ]
    for tag, block in comparison["by_tag"].items():
        lines.append(
            f"  {tag:>14}: rows={block.get('rows', 0):3d}"
            f" mean_jf {block.get('mean_jf_delta', 0.0):+.4f}"
            f" miou {block.get('miou_delta', 0.0):+.4f}"
        )
    return "\n".join(lines)
