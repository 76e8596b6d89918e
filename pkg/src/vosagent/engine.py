"""The multi-step reasoning loop: prompt assembly, parsing, tool dispatch,
observation feedback, the step limit, and the frame-then-box fallback.

One episode is strictly sequential (generate, parse, invoke, append). The
prompt grows append-only: the prompt at step k+1 is the prompt at step k plus
that step's text and observation. Parse errors and tool failures are fed back
as observations rather than aborting; only backend playback/connectivity
problems end an episode early.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

from . import scenario as sc
from .backends import EpisodeContext, ExchangeRecord
from .errors import AgentTextError, ConnectivityError, EpisodeError, ParameterError, PlaybackError, TraceParseError
from .generation import GenerationRequest
from .grammar import FinalAnswer, parse_agent_text
from .masks import MaskSequence
from .planner import Plan, consolidate_query, plan_from_dict, plan_to_dict
from .protocol import Registry, ToolCall, ToolResult, canonical_json, invoke, render_descriptors
from .sampling import coarse_sample_indices
from .simtools import DEFAULT_COARSE_K

TRACE_SCHEMA_VERSION = 1

SYSTEM_INSTRUCTIONS = """You are a video analysis agent. Resolve which object the query refers to and \
at which frame it is best identified, then segment it. Work in steps; in each \
step write a Thought line followed by exactly one Action line:

Thought: <your reasoning>
Action: <one tool call, e.g. tool_name(text="value", count=3, frames=[0, 14])>

After every Action you receive an Observation with the tool's output. When the \
target is resolved, finish with:

Thought: <your reasoning>
Final Answer: {"pivot_frame": <int>, "object_id": "<id>"}
"""

GRAMMAR_NOTE = """Action arguments are written as name=value pairs. Values may be double-quoted \
strings (backslash escapes allowed), integers, floats, true/false, or [bracketed, lists]. \
One call per Action; the Final Answer is a JSON object with integer pivot_frame and \
string object_id.
"""

EXAMPLE_INSTANCE = """Query: the black dog
Thought: The query names a single attributed instance; identify it across evenly sampled frames.
Action: identify_instance(frames=[0, 14, 28, 42, 57, 71, 85, 99], category="dog", description="the black dog")
Observation: {"annotated":[],"confidence":1.0,"detections":[{"box":[4,10,12,18],"category":"dog","frame_index":0,"object_id":"dog_0"}],"object_id":"dog_0"}
Thought: The identification is confident at the first sampled frame.
Final Answer: {"pivot_frame": 0, "object_id": "dog_0"}"""

EXAMPLE_EVENT = """Query: the black car moves and turns left
Thought: The query describes an event; search the whole video sparsely first.
Action: temporal_search_coarse(query="the black car moves and turns left", k=8)
Observation: {"matched":true,"sampled":[0,14,28,42,57,71,85,99],"window":{"end":71,"start":57}}
Thought: The event happens around frames 57-71; identify the instance inside that window.
Action: identify_instance(frames=[57, 71], category="car", description="the black car moves and turns left")
Observation: {"annotated":[],"confidence":1.0,"detections":[{"box":[20,30,30,38],"category":"car","frame_index":57,"object_id":"car_2"}],"object_id":"car_2"}
Thought: The matching instance is car_2, identified at frame 57.
Final Answer: {"pivot_frame": 57, "object_id": "car_2"}"""

DEFAULT_IN_CONTEXT_EXAMPLES = (EXAMPLE_INSTANCE, EXAMPLE_EVENT)


@dataclass(frozen=True)
class EngineConfig:
    max_steps: int = 10
    observation_tag: str = "Observation:"
    stop_sequences: tuple[str, ...] = ("Observation:",)
    tool_timeout: float = 30.0
    in_context_examples: tuple[str, ...] = DEFAULT_IN_CONTEXT_EXAMPLES
    max_new_tokens: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))
        object.__setattr__(self, "in_context_examples", tuple(self.in_context_examples))
        if self.max_steps < 1:
            raise ParameterError("max_steps must be at least 1")
        if self.observation_tag not in self.stop_sequences:
            raise ParameterError("observation_tag must be one of the stop sequences")


@dataclass(frozen=True)
class Step:
    """One reasoning step. ``action`` is None when the text failed to parse;
    the raw text is always preserved."""

    index: int
    thought: str
    action: Union[ToolCall, FinalAnswer, None]
    raw_text: str
    observation: str | None

    def __post_init__(self):
        if self.index < 1:
            raise ParameterError("step indices start at 1")
        if not isinstance(self.action, FinalAnswer) and self.observation is None:
            raise ParameterError("every non-final step needs an observation")


@dataclass(frozen=True)
class Trace:
    query_id: str
    plan: Plan
    steps: tuple[Step, ...]
    final: FinalAnswer
    fallback_used: bool
    wall_time_s: float

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def tool_call_count(self) -> int:
        return sum(1 for s in self.steps if isinstance(s.action, ToolCall))

    @property
    def parse_error_count(self) -> int:
        return sum(1 for s in self.steps if s.action is None)


def build_system_prompt(registry: Registry, config: EngineConfig) -> str:
    """Instructions + rendered tool descriptors + grammar + in-context examples."""
    parts = [SYSTEM_INSTRUCTIONS, "Tools:\n" + render_descriptors(registry), GRAMMAR_NOTE]
    if config.in_context_examples:
        parts.append("Examples:\n\n" + "\n\n".join(config.in_context_examples))
    return "\n".join(parts)


def _task_block(video: sc.VideoSpec, query: sc.Query, plan: Plan) -> str:
    return (
        f"Video: {video.num_frames} frames, {video.width}x{video.height} pixels,"
        f" {video.fps} fps\n"
        f"Query: {query.expression}\n"
        f"Plan: {canonical_json(plan_to_dict(plan))}\n"
    )


def render_observation(result: ToolResult) -> str:
    """Canonical textual form fed back to the agent; ok results re-parse equal."""
    if result.ok:
        return canonical_json(result.result)
    text = f"ERROR {result.error.code}: {result.error.message}"
    if result.error.log:
        text += "\n" + result.error.log
    return text


def run_episode(
    scenario: sc.Scenario,
    query: sc.Query,
    plan: Plan,
    backend,
    registry: Registry,
    config: EngineConfig = EngineConfig(),
) -> tuple[Trace, MaskSequence]:
    """Drive one episode to a FinalAnswer (or the fallback) and segment it.

    Raises EpisodeError when the generation backend itself fails; every other
    problem is fed back to the agent and consumes a step.
    """
    started = time.perf_counter()
    video = scenario.video
    context = EpisodeContext(
        query_id=query.query_id,
        query_text=query.expression,
        uses_audio=query.uses_audio,
        num_frames=video.num_frames,
        plan=plan,
    )
    session = backend.start_episode(context)
    prompt = build_system_prompt(registry, config) + "\n" + _task_block(video, query, plan)
    steps: list[Step] = []
    final: FinalAnswer | None = None

    for index in range(1, config.max_steps + 1):
        request = GenerationRequest(
            prompt=prompt,
            stop_sequences=config.stop_sequences,
            max_new_tokens=config.max_new_tokens,
        )
        try:
            generated = session.generate(request)
        except (PlaybackError, ConnectivityError) as exc:
            raise EpisodeError(f"backend failed at step {index}: {exc}") from exc
        raw = generated.text

        observation: str | None
        try:
            parsed = parse_agent_text(raw)
        except AgentTextError as exc:
            observation = f"ERROR PARSE: {exc}"
            steps.append(Step(index, "", None, raw, observation))
        else:
            if isinstance(parsed.action, FinalAnswer):
                answer = parsed.action
                if 0 <= answer.pivot_frame <= video.num_frames - 1:
                    steps.append(Step(index, parsed.thought, answer, raw, None))
                    final = answer
                    break
                observation = (
                    f"ERROR PARSE: pivot_frame {answer.pivot_frame} outside"
                    f" [0, {video.num_frames - 1}]"
                )
                steps.append(Step(index, parsed.thought, None, raw, observation))
            else:
                call = replace(parsed.action, call_id=f"{query.query_id}.{index}")
                result = invoke(registry, call, timeout=config.tool_timeout)
                observation = render_observation(result)
                steps.append(Step(index, parsed.thought, call, raw, observation))
        prompt = prompt + raw.rstrip() + f"\n{config.observation_tag} {observation}\n"
        context.history.append(ExchangeRecord(raw, observation))

    fallback_used = final is None
    if fallback_used:
        final = apply_fallback(scenario, query, registry, config)

    masks = _segment_final(scenario, query, registry, final, config)
    trace = Trace(
        query_id=query.query_id,
        plan=plan,
        steps=tuple(steps),
        final=final,
        fallback_used=fallback_used,
        wall_time_s=time.perf_counter() - started,
    )
    return trace, masks


def _segment_final(
    scenario: sc.Scenario,
    query: sc.Query,
    registry: Registry,
    final: FinalAnswer,
    config: EngineConfig,
) -> MaskSequence:
    video = scenario.video
    call = ToolCall(
        call_id=f"{query.query_id}.segment",
        tool="segment_and_track",
        args={"pivot_frame": final.pivot_frame, "object_id": final.object_id},
    )
    result = invoke(registry, call, timeout=config.tool_timeout)
    if not result.ok:
        return MaskSequence.all_empty(video.width, video.height, video.num_frames)
    try:
        masks = MaskSequence.from_dicts(result.result["masks"])
    except Exception:
        return MaskSequence.all_empty(video.width, video.height, video.num_frames)
    if len(masks) != video.num_frames:
        return MaskSequence.all_empty(video.width, video.height, video.num_frames)
    return masks


def apply_fallback(
    scenario: sc.Scenario,
    query: sc.Query,
    registry: Registry,
    config: EngineConfig = EngineConfig(),
) -> FinalAnswer:
    """Frame selection then box selection, using the same tools with fixed
    arguments. Total: always returns some answer."""
    video = scenario.video
    narrative = sc.synthesize_narrative(scenario)
    consolidated = consolidate_query(query.expression, narrative)
    k = max(2, min(DEFAULT_COARSE_K, video.num_frames))

    pivot = 0
    sampled = coarse_sample_indices(video.num_frames, k)
    search = invoke(
        registry,
        ToolCall(f"{query.query_id}.fb1", "temporal_search_coarse", {"query": consolidated, "k": k}),
        timeout=config.tool_timeout,
    )
    if search.ok:
        sampled = list(search.result.get("sampled", sampled))
        if search.result.get("matched") and search.result.get("window"):
            pivot = search.result["window"]["start"]

    frames = [pivot] + [s for s in sampled if s != pivot]
    category_hits = sc.category_words(consolidated)
    winner: str | None = None
    if category_hits:
        identified = invoke(
            registry,
            ToolCall(
                f"{query.query_id}.fb2",
                "identify_instance",
                {"frames": frames, "category": category_hits[0], "description": consolidated},
            ),
            timeout=config.tool_timeout,
        )
        if identified.ok and identified.result.get("object_id"):
            winner = identified.result["object_id"]

    if winner is None:
        # Last resort: smallest object id visible at the probed frames, any category.
        seen: list[str] = []
        for n, cat in enumerate(sc.CATEGORIES):
            probe = invoke(
                registry,
                ToolCall(
                    f"{query.query_id}.fb3.{n}",
                    "identify_instance",
                    {"frames": frames, "category": cat, "description": ""},
                ),
                timeout=config.tool_timeout,
            )
            if probe.ok:
                seen.extend(d["object_id"] for d in probe.result.get("detections", []))
        winner = min(seen) if seen else "unknown"
    return FinalAnswer(pivot_frame=pivot, object_id=winner)


# --- trace persistence -----------------------------------------------------------


def _action_to_dict(action: Union[ToolCall, FinalAnswer, None]) -> dict | None:
    if action is None:
        return None
    if isinstance(action, FinalAnswer):
        return {
            "kind": "final_answer",
            "pivot_frame": action.pivot_frame,
            "object_id": action.object_id,
        }
    return {
        "kind": "tool_call",
        "call_id": action.call_id,
        "tool": action.tool,
        "args": action.args,
    }


def _action_from_dict(data: dict | None) -> Union[ToolCall, FinalAnswer, None]:
    if data is None:
        return None
    if data.get("kind") == "final_answer":
        return FinalAnswer(pivot_frame=data["pivot_frame"], object_id=data["object_id"])
    return ToolCall(call_id=data["call_id"], tool=data["tool"], args=data["args"])


def write_trace(trace: Trace, path) -> None:
    """JSON-lines: a header record, one record per step, and a footer."""
    records: list[dict] = [
        {
            "kind": "header",
            "schema_version": TRACE_SCHEMA_VERSION,
            "query_id": trace.query_id,
            "plan": plan_to_dict(trace.plan),
        }
    ]
    for step in trace.steps:
        records.append(
            {
                "kind": "step",
                "index": step.index,
                "thought": step.thought,
                "action": _action_to_dict(step.action),
                "raw_text": step.raw_text,
                "observation": step.observation,
            }
        )
    records.append(
        {
            "kind": "footer",
            "final": {"pivot_frame": trace.final.pivot_frame, "object_id": trace.final.object_id},
            "fallback_used": trace.fallback_used,
            "wall_time_s": trace.wall_time_s,
        }
    )
    with open(path, "w", encoding="utf-8") as sink:
        for record in records:
            sink.write(json.dumps(record, sort_keys=True) + "\n")


def read_trace(path) -> Trace:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    records = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append((number, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"line {number}: {exc.msg}") from exc
    if not records:
        raise TraceParseError("empty trace file")
    number, header = records[0]
    if header.get("kind") != "header":
        raise TraceParseError(f"line {number}: expected a header record")
    if header.get("schema_version") != TRACE_SCHEMA_VERSION:
        raise TraceParseError(
            f"line {number}: unsupported trace schema_version {header.get('schema_version')!r}"
        )
    number, footer = records[-1]
    if footer.get("kind") != "footer":
        raise TraceParseError(f"missing footer record (last line {number})")
    steps = []
    try:
        plan = plan_from_dict(header["plan"])
        for number, record in records[1:-1]:
            if record.get("kind") != "step":
                raise TraceParseError(f"line {number}: expected a step record")
            steps.append(
                Step(
                    index=record["index"],
                    thought=record["thought"],
                    action=_action_from_dict(record["action"]),
                    raw_text=record["raw_text"],
                    observation=record["observation"],
                )
            )
        final = FinalAnswer(
            pivot_frame=footer["final"]["pivot_frame"],
            object_id=footer["final"]["object_id"],
        )
        return Trace(
            query_id=header["query_id"],
            plan=plan,
            steps=tuple(steps),
            final=final,
            fallback_used=footer["fallback_used"],
            wall_time_s=footer["wall_time_s"],
        )
    except TraceParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceParseError(f"malformed trace record: {exc}") from exc
