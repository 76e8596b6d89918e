"""Query classification, consolidation, and plan templates.

The rule-based planner is the reference backend: it reads only the query text
and the narrative digest, classifies what the reference points at, enriches
underspecified queries with attributes of the unique consistent object, and
emits an ordered step template. A remote LLM planner with the same interface
is provided for live deployments but is not part of the offline test surface.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import Callable

from . import scenario as sc
from .errors import ParameterError, VosAgentError


class ReferenceType(str, enum.Enum):
    CATEGORY_LEVEL = "CATEGORY_LEVEL"
    WHOLE_VIDEO_INSTANCE = "WHOLE_VIDEO_INSTANCE"
    SEGMENT_SPECIFIC_INSTANCE = "SEGMENT_SPECIFIC_INSTANCE"


class StepIntent(str, enum.Enum):
    AUDIO = "AUDIO"
    COARSE_SEARCH = "COARSE_SEARCH"
    FINE_SEARCH = "FINE_SEARCH"
    IDENTIFY = "IDENTIFY"
    SEGMENT = "SEGMENT"


@dataclass(frozen=True)
class PlanStep:
    intent: StepIntent
    rationale: str


@dataclass(frozen=True)
class Plan:
    reference_type: ReferenceType
    consolidated_query: str
    category_hint: str | None
    use_audio_first: bool
    steps: tuple[PlanStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps or self.steps[-1].intent is not StepIntent.SEGMENT:
            raise ParameterError("a plan must end with a SEGMENT step")
        intents = [s.intent for s in self.steps]
        if StepIntent.FINE_SEARCH in intents:
            fine_at = intents.index(StepIntent.FINE_SEARCH)
            if StepIntent.COARSE_SEARCH not in intents[:fine_at]:
                raise ParameterError("FINE_SEARCH may not precede COARSE_SEARCH")
        has_audio = StepIntent.AUDIO in intents
        if has_audio != self.use_audio_first:
            raise ParameterError("AUDIO step present iff use_audio_first")
        if has_audio and intents[0] is not StepIntent.AUDIO:
            raise ParameterError("the AUDIO step must come first")


class PlannerError(VosAgentError, RuntimeError):
    """A planner backend produced an unusable plan."""


# --- narrative reading ----------------------------------------------------------

_OBJECT_LINE_RE = re.compile(
    r"^(?P<id>\S+): (?P<label>.+), visible frames (?P<first>\d+)-(?P<last>\d+)$"
)


def _narrative_sections(narrative: str) -> tuple[list[str], list[str]]:
    object_lines: list[str] = []
    event_lines: list[str] = []
    section = None
    for line in narrative.splitlines():
        stripped = line.strip()
        if stripped == "objects:":
            section = "objects"
        elif stripped == "events:":
            section = "events"
        elif stripped and section == "objects":
            object_lines.append(stripped)
        elif stripped and section == "events":
            event_lines.append(stripped)
    return object_lines, event_lines


def _narrative_objects(narrative: str) -> list[tuple[str, str, tuple[str, ...]]]:
    """(object_id, category, attributes) for each narrative object line."""
    out = []
    object_lines, _ = _narrative_sections(narrative)
    for line in object_lines:
        match = _OBJECT_LINE_RE.match(line)
        if not match:
            continue
        words = match.group("label").split()
        if not words:
            continue
        category = words[-1]
        attributes = tuple(w for w in words[:-1] if w in sc.ATTRIBUTES)
        out.append((match.group("id"), category, attributes))
    return out


def classify_reference(query_text: str, narrative: str) -> ReferenceType:
    """Rule-based reference classification.

    A query whose motion phrase appears among the narrated events is
    segment-specific; a bare category word with no attribute or motion words
    is category-level; everything else refers to a whole-video instance.
    """
    if not query_text.strip():
        raise ParameterError("query text may not be empty")
    phrase = sc.extract_motion_phrase(query_text)
    if phrase is not None:
        _, event_lines = _narrative_sections(narrative)
        if any(phrase in line for line in event_lines):
            return ReferenceType.SEGMENT_SPECIFIC_INSTANCE
    has_category = bool(sc.category_words(query_text))
    has_attrs = bool(sc.attribute_words(query_text))
    if has_category and not has_attrs and phrase is None:
        return ReferenceType.CATEGORY_LEVEL
    return ReferenceType.WHOLE_VIDEO_INSTANCE


def consolidate_query(query_text: str, narrative: str) -> str:
    """Enrich the query with the remaining attributes of the unique narrative
    object consistent with its category/attribute words; otherwise unchanged."""
    cats = sc.category_words(query_text)
    attrs = set(sc.attribute_words(query_text))
    if not cats and not attrs:
        return query_text
    consistent = [
        (oid, category, obj_attrs)
        for oid, category, obj_attrs in _narrative_objects(narrative)
        if all(c == category for c in cats) and attrs <= set(obj_attrs)
    ]
    if len(consistent) != 1:
        return query_text
    _, _, obj_attrs = consistent[0]
    missing = [a for a in obj_attrs if a not in attrs]
    if not missing:
        return query_text
    insertion = " ".join(missing)
    if cats:
        # Insert just before the (first) category word.
        pattern = re.compile(
            r"\b(" + "|".join(re.escape(c) + "s?" for c in dict.fromkeys(cats)) + r")\b"
        )
        match = pattern.search(query_text.lower())
        if match:
            pos = match.start()
            return query_text[:pos] + insertion + " " + query_text[pos:]
    if query_text.lower().startswith("the "):
        return query_text[:4] + insertion + " " + query_text[4:]
    return insertion + " " + query_text


_RATIONALES = {
    StepIntent.AUDIO: "classify the soundtrack to find what kind of object is sounding",
    StepIntent.COARSE_SEARCH: "sparsely scan the whole video for the described event",
    StepIntent.FINE_SEARCH: "only if the coarse pass reports no match: scan chunks densely",
    StepIntent.IDENTIFY: "pick the candidate instance matching the description",
    StepIntent.SEGMENT: "segment the chosen instance at the pivot and propagate",
}


def make_plan(
    reference_type: ReferenceType, consolidated_query: str, has_audio: bool
) -> Plan:
    """Step template per reference type; audio queries get an AUDIO step first."""
    if reference_type is ReferenceType.SEGMENT_SPECIFIC_INSTANCE:
        intents = [
            StepIntent.COARSE_SEARCH,
            StepIntent.FINE_SEARCH,
            StepIntent.IDENTIFY,
            StepIntent.SEGMENT,
        ]
    else:
        intents = [StepIntent.IDENTIFY, StepIntent.SEGMENT]
    if has_audio:
        intents.insert(0, StepIntent.AUDIO)
    cats = sc.category_words(consolidated_query)
    return Plan(
        reference_type=reference_type,
        consolidated_query=consolidated_query,
        category_hint=cats[0] if cats else None,
        use_audio_first=has_audio,
        steps=tuple(PlanStep(i, _RATIONALES[i]) for i in intents),
    )


def plan_to_dict(plan: Plan) -> dict:
    return {
        "reference_type": plan.reference_type.value,
        "consolidated_query": plan.consolidated_query,
        "category_hint": plan.category_hint,
        "use_audio_first": plan.use_audio_first,
        "steps": [{"intent": s.intent.value, "rationale": s.rationale} for s in plan.steps],
    }


def plan_from_dict(data: dict) -> Plan:
    try:
        return Plan(
            reference_type=ReferenceType(data["reference_type"]),
            consolidated_query=data["consolidated_query"],
            category_hint=data["category_hint"],
            use_audio_first=data["use_audio_first"],
            steps=tuple(
                PlanStep(StepIntent(s["intent"]), s["rationale"]) for s in data["steps"]
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PlannerError(f"malformed plan record: {exc}") from exc


# --- backends --------------------------------------------------------------------


class RulePlanner:
    """Reference planner: classify, consolidate, template."""

    def plan_query(self, query_text: str, narrative: str, has_audio: bool) -> Plan:
        reference_type = classify_reference(query_text, narrative)
        consolidated = consolidate_query(query_text, narrative)
        return make_plan(reference_type, consolidated, has_audio)


class ScriptedPlanner:
    """Test backend returning canned plans keyed by query text."""

    def __init__(self, plans: dict[str, Plan]):
        self._plans = dict(plans)

    def plan_query(self, query_text: str, narrative: str, has_audio: bool) -> Plan:
        try:
            return self._plans[query_text]
        except KeyError as exc:
            raise PlannerError(f"no scripted plan for query {query_text!r}") from exc


REMOTE_PLANNER_PROMPT = """You will be given a video narrative and a query.
Classify the query reference as one of CATEGORY_LEVEL, WHOLE_VIDEO_INSTANCE,
or SEGMENT_SPECIFIC_INSTANCE, and rewrite the query with any attributes of the
single matching narrative object. Answer with a JSON object:
{{"reference_type": "...", "consolidated_query": "..."}}

Narrative:
{narrative}

Query: {query}
"""


class RemotePlanner:
    """Planner backed by a text-completion callable (e.g. a chat endpoint).

    The callable receives the rendered prompt and returns the model's text;
    the reply must contain the JSON object described in the prompt.
    """

    def __init__(self, complete: Callable[[str], str]):
        self._complete = complete

    def plan_query(self, query_text: str, narrative: str, has_audio: bool) -> Plan:
        reply = self._complete(
            REMOTE_PLANNER_PROMPT.format(narrative=narrative, query=query_text)
        )
        match = re.search(r"\{.*\}", reply, re.DOTALL)
        if not match:
            raise PlannerError("remote planner reply contained no JSON object")
        try:
            data = json.loads(match.group())
            reference_type = ReferenceType(data["reference_type"])
            consolidated = data["consolidated_query"]
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise PlannerError(f"unusable remote planner reply: {exc}") from exc
        if not isinstance(consolidated, str) or not consolidated.strip():
            raise PlannerError("remote planner returned an empty consolidated query")
        return make_plan(reference_type, consolidated, has_audio)
