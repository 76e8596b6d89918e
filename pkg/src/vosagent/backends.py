"""Generation backends: scripted playback, a deterministic policy agent, and a
remote chat endpoint.

The policy backend is the offline stand-in for an LLM: it executes the plan
left to right, reacting to observations with the same contingencies a careful
operator would use (fall back to fine search on a coarse miss, retry a failed
tool once, re-identify with the consolidated query on low confidence). It
communicates only through grammar-conforming text and the observation strings
fed back to it, never by peeking at scenario ground truth.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any

import httpx

from .errors import AgentTextError, ConnectivityError, PlaybackError
from .generation import GenerationRequest, GenerationResult, StopReason, truncate_at_stop
from .grammar import FinalAnswer, format_final_answer, format_step, format_tool_call, parse_agent_text
from .planner import Plan, StepIntent
from .sampling import coarse_sample_indices
from .simtools import DEFAULT_CHUNK_LEN, DEFAULT_COARSE_K, DEFAULT_STRIDE
from .scenario import CATEGORY_FOR_AUDIO_CLASS


@dataclass(frozen=True)
class ExchangeRecord:
    """One completed step as the backend saw it: its text, the observation."""

    agent_text: str
    observation: str


@dataclass
class EpisodeContext:
    """Structured episode state the engine shares with its backend."""

    query_id: str
    query_text: str
    uses_audio: bool
    num_frames: int
    plan: Plan
    history: list[ExchangeRecord] = field(default_factory=list)


class ScriptedBackend:
    """Plays back canned responses; optionally loops over them forever."""

    def __init__(self, responses: list[str], loop: bool = False):
        self._responses = list(responses)
        self._loop = loop

    def start_episode(self, context: EpisodeContext) -> "_ScriptedSession":
        return _ScriptedSession(self._responses, self._loop)


class _ScriptedSession:
    def __init__(self, responses: list[str], loop: bool):
        self._responses = responses
        self._loop = loop
        self._cursor = 0

    def generate(self, request: GenerationRequest) -> GenerationResult:
        if self._cursor >= len(self._responses):
            if not self._loop or not self._responses:
                raise PlaybackError(
                    f"scripted backend exhausted after {len(self._responses)} responses"
                )
            self._cursor = 0
        text = self._responses[self._cursor]
        self._cursor += 1
        return truncate_at_stop(text, request.stop_sequences)


class PolicyBackend:
    """Deterministic plan executor speaking the agent grammar."""

    def __init__(
        self,
        coarse_k: int = DEFAULT_COARSE_K,
        chunk_len: int = DEFAULT_CHUNK_LEN,
        stride: int = DEFAULT_STRIDE,
    ):
        self.coarse_k = coarse_k
        self.chunk_len = chunk_len
        self.stride = stride

    def start_episode(self, context: EpisodeContext) -> "_PolicySession":
        return _PolicySession(self, context)


class _PolicySession:
    def __init__(self, backend: PolicyBackend, context: EpisodeContext):
        self._backend = backend
        self._context = context

    def generate(self, request: GenerationRequest) -> GenerationResult:
        text = policy_decide(
            self._context,
            coarse_k=self._backend.coarse_k,
            chunk_len=self._backend.chunk_len,
            stride=self._backend.stride,
        )
        return truncate_at_stop(text, request.stop_sequences)


@dataclass
class _Stage:
    value: Any = None
    errors: int = 0

    @property
    def ok(self) -> bool:
        return self.value is not None

    @property
    def failed(self) -> bool:
        return self.value is None and self.errors >= 2

    @property
    def terminal(self) -> bool:
        return self.ok or self.failed


def _replay(history: list[ExchangeRecord]):
    """Reconstruct stage outcomes from the observation transcript."""
    audio = _Stage()
    coarse = _Stage()
    fine = _Stage()
    identify_outcomes: list[dict | None] = []
    identify_open_errors = 0
    last_action_text = None
    last_was_error = False
    last_error_retryable = False

    for record in history:
        try:
            parsed = parse_agent_text(record.agent_text)
        except AgentTextError:
            continue
        action = parsed.action
        if isinstance(action, FinalAnswer):
            continue
        is_error = record.observation.startswith("ERROR")
        value = None if is_error else json.loads(record.observation)
        last_action_text = record.agent_text
        last_was_error = is_error
        if action.tool == "audio_classify":
            stage = audio
        elif action.tool == "temporal_search_coarse":
            stage = coarse
        elif action.tool == "temporal_search_fine":
            stage = fine
        elif action.tool == "identify_instance":
            if is_error:
                identify_open_errors += 1
                last_error_retryable = identify_open_errors < 2
                if identify_open_errors >= 2:
                    identify_outcomes.append(None)
                    identify_open_errors = 0
            else:
                identify_outcomes.append(value)
                identify_open_errors = 0
            continue
        else:
            continue
        if is_error:
            stage.errors += 1
            last_error_retryable = not stage.terminal
        else:
            stage.value = value

    return (
        audio,
        coarse,
        fine,
        identify_outcomes,
        last_action_text,
        last_was_error and last_error_retryable,
    )


def _satisfying(outcome: dict | None) -> bool:
    return (
        outcome is not None
        and outcome.get("object_id") is not None
        and outcome.get("confidence", 0.0) >= 0.5
    )


def policy_decide(
    context: EpisodeContext,
    coarse_k: int = DEFAULT_COARSE_K,
    chunk_len: int = DEFAULT_CHUNK_LEN,
    stride: int = DEFAULT_STRIDE,
) -> str:
    """Next agent text for the episode state: a Thought+Action or Final Answer."""
    plan = context.plan
    num_frames = context.num_frames
    k = max(2, min(coarse_k, num_frames))
    audio, coarse, fine, identify_outcomes, last_text, retry_last = _replay(
        context.history
    )

    # A failed tool call is re-emitted verbatim once before moving on.
    if retry_last and last_text is not None:
        parsed = parse_agent_text(last_text)
        action_text = format_tool_call(parsed.action.tool, parsed.action.args)
        return format_step(
            "The last tool call failed; retrying the same call once.", action_text
        )

    intents = [s.intent for s in plan.steps]
    window: dict | None = None
    window_frames: list[int] | None = None
    if coarse.ok and coarse.value.get("matched"):
        window = coarse.value["window"]
        window_frames = [
            i
            for i in coarse.value.get("sampled", [])
            if window["start"] <= i <= window["end"]
        ]
    elif fine.ok and fine.value.get("matched"):
        window = fine.value["window"]
        window_frames = sorted({window["start"], window["end"]})

    audio_category = None
    if audio.ok:
        classes = audio.value.get("classes", [])
        if classes:
            audio_category = CATEGORY_FOR_AUDIO_CLASS.get(classes[0]["label"])

    def final_answer_text() -> str:
        winner_id = None
        winner_outcome = None
        for outcome in identify_outcomes:
            if _satisfying(outcome):
                winner_id = outcome["object_id"]
                winner_outcome = outcome
        if winner_id is None:
            for outcome in identify_outcomes:
                if outcome is not None and outcome.get("object_id") is not None:
                    winner_id = outcome["object_id"]
                    winner_outcome = outcome
        if window is not None:
            pivot = window["start"]
        elif winner_outcome is not None and winner_id is not None:
            own = [
                d["frame_index"]
                for d in winner_outcome.get("detections", [])
                if d["object_id"] == winner_id
            ]
            pivot = min(own) if own else 0
        else:
            pivot = 0
        pivot = max(0, min(pivot, num_frames - 1))
        answer = FinalAnswer(pivot_frame=pivot, object_id=winner_id or "unknown")
        return format_step(
            "The target is resolved; reporting the pivot frame and object id.",
            format_final_answer(answer),
            final=True,
        )

    # Hard bound: the final answer lands within plan length + 3 steps.
    if len(context.history) + 1 >= len(plan.steps) + 3:
        return final_answer_text()

    if plan.use_audio_first and not audio.terminal:
        return format_step(
            "The query is audio-referred; classify the soundtrack to find the source class.",
            format_tool_call("audio_classify", {}),
        )

    if StepIntent.COARSE_SEARCH in intents and not coarse.terminal:
        return format_step(
            "Search the whole video sparsely for the described event.",
            format_tool_call(
                "temporal_search_coarse",
                {"query": plan.consolidated_query, "k": k},
            ),
        )

    coarse_missed = coarse.failed or (coarse.ok and not coarse.value.get("matched"))
    if StepIntent.FINE_SEARCH in intents and coarse_missed and not fine.terminal:
        return format_step(
            "Coarse sampling missed the event; scan the video chunk by chunk.",
            format_tool_call(
                "temporal_search_fine",
                {
                    "query": plan.consolidated_query,
                    "chunk_len": chunk_len,
                    "stride": stride,
                },
            ),
        )

    have_satisfying = any(_satisfying(o) for o in identify_outcomes)
    if not have_satisfying and len(identify_outcomes) < 2:
        if window_frames:
            frames = window_frames
        elif coarse.ok:
            frames = list(coarse.value.get("sampled", []))
        else:
            frames = coarse_sample_indices(num_frames, k)
        category = audio_category or plan.category_hint or ""
        description = (
            context.query_text if not identify_outcomes else plan.consolidated_query
        )
        thought = (
            "Identify the referred instance among the detected candidates."
            if not identify_outcomes
            else "The first identification was inconclusive; retry with the consolidated query."
        )
        return format_step(
            thought,
            format_tool_call(
                "identify_instance",
                {"frames": frames, "category": category, "description": description},
            ),
        )

    return final_answer_text()


class RemoteBackend:
    """Chat-completions-style HTTP backend (not part of the offline test surface).

    Sends the full prompt as a single user message and relies on the service's
    stop-sequence support, with client-side truncation as a guard.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "VOSAGENT_API_KEY",
        timeout: float = 120.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def start_episode(self, context: EpisodeContext) -> "_RemoteSession":
        return _RemoteSession(self)

    def complete(self, request: GenerationRequest) -> GenerationResult:
        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "stop": list(request.stop_sequences),
            "max_tokens": request.max_new_tokens,
        }
        try:
            response = self._client.post(self.endpoint, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise ConnectivityError(f"cannot reach {self.endpoint}: {exc}") from exc
        if response.status_code != 200:
            raise ConnectivityError(
                f"{self.endpoint} returned status {response.status_code}"
            )
        try:
            choice = response.json()["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ConnectivityError(f"unexpected chat response shape: {exc}") from exc
        if choice.get("finish_reason") == "length":
            return GenerationResult(text=text, stop_reason=StopReason.LENGTH)
        return truncate_at_stop(text, request.stop_sequences)


class _RemoteSession:
    def __init__(self, backend: RemoteBackend):
        self._backend = backend

    def generate(self, request: GenerationRequest) -> GenerationResult:
        return self._backend.complete(request)
