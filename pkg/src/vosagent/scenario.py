"""Synthetic video scenarios: the ground-truth world behind the simulated tools.

A scenario holds a video spec, objects with piecewise-linear trajectories,
labeled events, an audio track, and queries with known targets. Everything is
generated from a seed, serializes to a versioned JSON file, and can be
narrated into the object/event digest the planner consumes.
"""

from __future__ import annotations

import bisect
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    FrameRangeError,
    ParameterError,
    ScenarioParseError,
    SchemaVersionError,
)
from .masks import BinaryMask, MaskSequence
from .sampling import coarse_sample_indices

SCHEMA_VERSION = 1

CATEGORIES = ("bird", "car", "cat", "dog", "guitar", "horse", "person", "truck")
COLORS = ("black", "blue", "brown", "gray", "red", "white")
SIZES = ("adult", "large", "small")
ATTRIBUTES = COLORS + SIZES

AUDIO_CLASSES = (
    "bird", "cat", "dog", "engine", "horse",
    "music", "rain", "speech", "traffic", "wind",
)
# Sound class emitted by an object of a given category.
AUDIO_CLASS_FOR_CATEGORY = {
    "bird": "bird",
    "car": "engine",
    "cat": "cat",
    "dog": "dog",
    "guitar": "music",
    "horse": "horse",
    "person": "speech",
    "truck": "engine",
}
# Inverse mapping, restricted to classes that pin down a single category.
CATEGORY_FOR_AUDIO_CLASS = {
    "bird": "bird",
    "cat": "cat",
    "dog": "dog",
    "horse": "horse",
    "music": "guitar",
    "speech": "person",
}
AMBIENT_AUDIO_CLASSES = ("rain", "traffic", "wind")

MOTION_VERBS = ("drifts", "jumps", "moves", "moves and turns", "runs", "turns")
MOTION_DIRECTIONS = ("around", "downward", "left", "right", "upward")
MOTION_QUALIFIERS = ("", " briefly", " then stops")

SHAPES = ("rectangle", "ellipse")

_WORD_RE = re.compile(r"[a-z0-9_']+")


def word_tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def category_words(text: str) -> list[str]:
    """Category vocabulary words found in the text, singularized, in order."""
    found = []
    for tok in word_tokens(text):
        if tok in CATEGORIES:
            found.append(tok)
        elif tok.endswith("s") and tok[:-1] in CATEGORIES:
            found.append(tok[:-1])
    return found


def attribute_words(text: str) -> list[str]:
    return [tok for tok in word_tokens(text) if tok in ATTRIBUTES]


# Queries may inflect the verbs ("moving around", "move and turn left"); all
# surface forms map back to the canonical event description.
_VERB_VARIANTS = {
    "drifts": ("drifts", "drifting", "drift"),
    "jumps": ("jumps", "jumping", "jump"),
    "moves": ("moves", "moving", "move"),
    "moves and turns": ("moves and turns", "moving and turning", "move and turn"),
    "runs": ("runs", "running", "run"),
    "turns": ("turns", "turning", "turn"),
}


def motion_phrases() -> list[str]:
    """Every description the event grammar can produce, longest first."""
    phrases = [
        f"{verb} {direction}{qualifier}"
        for verb in MOTION_VERBS
        for direction in MOTION_DIRECTIONS
        for qualifier in MOTION_QUALIFIERS
    ]
    return sorted(phrases, key=lambda p: (-len(p), p))


def _surface_forms() -> list[tuple[str, str]]:
    forms = []
    for verb in MOTION_VERBS:
        for direction in MOTION_DIRECTIONS:
            for qualifier in MOTION_QUALIFIERS:
                canonical = f"{verb} {direction}{qualifier}"
                for variant in _VERB_VARIANTS[verb]:
                    forms.append((f"{variant} {direction}{qualifier}", canonical))
    return sorted(forms, key=lambda pair: (-len(pair[0]), pair[0]))


_MOTION_SURFACE_RES = [
    (canonical, re.compile(r"\b" + re.escape(surface) + r"\b"))
    for surface, canonical in _surface_forms()
]


def extract_motion_phrase(text: str) -> str | None:
    """Canonical form of the longest motion phrase contained in the text, if any."""
    lowered = text.lower()
    for canonical, pattern in _MOTION_SURFACE_RES:
        if pattern.search(lowered):
            return canonical
    return None


REFERENCE_TYPE_NAMES = (
    "CATEGORY_LEVEL",
    "WHOLE_VIDEO_INSTANCE",
    "SEGMENT_SPECIFIC_INSTANCE",
)


@dataclass(frozen=True)
class VideoSpec:
    width: int
    height: int
    num_frames: int
    fps: int

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ParameterError(f"frame must be at least 8x8, got {self.width}x{self.height}")
        if self.num_frames < 2:
            raise ParameterError(f"need at least 2 frames, got {self.num_frames}")
        if self.fps < 1:
            raise ParameterError(f"fps must be positive, got {self.fps}")


@dataclass(frozen=True)
class ObjectSpec:
    object_id: str
    category: str
    attributes: tuple[str, ...]
    shape: str
    trajectory: tuple[tuple[int, float, float, float, float], ...]
    visible_span: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(sorted(self.attributes)))
        object.__setattr__(
            self,
            "trajectory",
            tuple(
                (int(f), float(cx), float(cy), float(hw), float(hh))
                for f, cx, cy, hw, hh in self.trajectory
            ),
        )
        object.__setattr__(self, "visible_span", tuple(int(v) for v in self.visible_span))

    def validate(self, video: VideoSpec) -> None:
        if self.category not in CATEGORIES:
            raise ScenarioParseError(f"object {self.object_id}: unknown category '{self.category}'")
        for attr in self.attributes:
            if attr not in ATTRIBUTES:
                raise ScenarioParseError(f"object {self.object_id}: unknown attribute '{attr}'")
        if self.shape not in SHAPES:
            raise ScenarioParseError(f"object {self.object_id}: unknown shape '{self.shape}'")
        first, last = self.visible_span
        if not (0 <= first <= last <= video.num_frames - 1):
            raise ScenarioParseError(
                f"object {self.object_id}: visible_span {self.visible_span} outside video"
            )
        if not self.trajectory:
            raise ScenarioParseError(f"object {self.object_id}: trajectory may not be empty")
        frames = [k[0] for k in self.trajectory]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ScenarioParseError(
                f"object {self.object_id}: keyframes must be strictly increasing"
            )
        if frames[0] < first or frames[-1] > last:
            raise ScenarioParseError(
                f"object {self.object_id}: keyframes must lie within visible_span"
            )
        for f, cx, cy, hw, hh in self.trajectory:
            if hw < 0 or hh < 0:
                raise ScenarioParseError(f"object {self.object_id}: negative half sizes")
            # Cheap necessary check that the shape can intersect the frame.
            if cx + hw < 0 or cx - hw > video.width - 1 or cy + hh < 0 or cy - hh > video.height - 1:
                raise ScenarioParseError(
                    f"object {self.object_id}: keyframe at {f} lies fully outside the frame"
                )


@dataclass(frozen=True)
class EventSpec:
    event_id: str
    subject_id: str
    description: str
    span: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "span", tuple(int(v) for v in self.span))


@dataclass(frozen=True)
class AudioSegment:
    span: tuple[int, int]
    class_label: str
    source_object_id: str | None
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "span", tuple(int(v) for v in self.span))
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class AudioTrack:
    segments: tuple[AudioSegment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))


@dataclass(frozen=True)
class Query:
    query_id: str
    expression: str
    uses_audio: bool
    gt_object_id: str
    gt_reference_type: str

    def __post_init__(self):
        if self.gt_reference_type not in REFERENCE_TYPE_NAMES:
            raise ScenarioParseError(
                f"query {self.query_id}: unknown reference type '{self.gt_reference_type}'"
            )


@dataclass(frozen=True)
class Scenario:
    schema_version: int
    seed: int
    video: VideoSpec
    objects: tuple[ObjectSpec, ...]
    events: tuple[EventSpec, ...]
    audio: AudioTrack
    queries: tuple[Query, ...]

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "queries", tuple(self.queries))

    def object_by_id(self, object_id: str) -> ObjectSpec | None:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        return None

    def query_by_id(self, query_id: str) -> Query | None:
        for q in self.queries:
            if q.query_id == query_id:
                return q
        return None

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"unsupported schema_version {self.schema_version}, expected {SCHEMA_VERSION}"
            )
        ids = [o.object_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ScenarioParseError("object_ids must be unique")
        for obj in self.objects:
            obj.validate(self.video)
        event_ids = [e.event_id for e in self.events]
        if len(set(event_ids)) != len(event_ids):
            raise ScenarioParseError("event_ids must be unique")
        for ev in self.events:
            subject = self.object_by_id(ev.subject_id)
            if subject is None:
                raise ScenarioParseError(f"event {ev.event_id}: unknown subject '{ev.subject_id}'")
            s, e = ev.span
            if s > e:
                raise ScenarioParseError(f"event {ev.event_id}: span start after end")
            if s < subject.visible_span[0] or e > subject.visible_span[1]:
                raise ScenarioParseError(
                    f"event {ev.event_id}: span {ev.span} outside subject visibility"
                )
        for seg in self.audio.segments:
            if seg.class_label not in AUDIO_CLASSES:
                raise ScenarioParseError(f"unknown audio class '{seg.class_label}'")
            if seg.weight <= 0:
                raise ScenarioParseError("audio segment weights must be positive")
            s, e = seg.span
            if not (0 <= s <= e <= self.video.num_frames - 1):
                raise ScenarioParseError(f"audio segment span {seg.span} outside video")
            if seg.source_object_id is not None and self.object_by_id(seg.source_object_id) is None:
                raise ScenarioParseError(
                    f"audio segment references unknown object '{seg.source_object_id}'"
                )
        for q in self.queries:
            if self.object_by_id(q.gt_object_id) is None:
                raise ScenarioParseError(f"query {q.query_id}: unknown target '{q.gt_object_id}'")


def interpolate_geometry(obj: ObjectSpec, frame_index: int) -> tuple[float, float, float, float]:
    """Object center and half sizes at a frame, clamped to the keyframe range."""
    frames = [k[0] for k in obj.trajectory]
    if frame_index <= frames[0]:
        _, cx, cy, hw, hh = obj.trajectory[0]
        return cx, cy, hw, hh
    if frame_index >= frames[-1]:
        _, cx, cy, hw, hh = obj.trajectory[-1]
        return cx, cy, hw, hh
    hi = bisect.bisect_right(frames, frame_index)
    f0, cx0, cy0, hw0, hh0 = obj.trajectory[hi - 1]
    f1, cx1, cy1, hw1, hh1 = obj.trajectory[hi]
    t = (frame_index - f0) / (f1 - f0)
    return (
        cx0 + t * (cx1 - cx0),
        cy0 + t * (cy1 - cy0),
        hw0 + t * (hw1 - hw0),
        hh0 + t * (hh1 - hh0),
    )


def rasterize_object(obj: ObjectSpec, frame_index: int, video: VideoSpec) -> BinaryMask:
    """Exact mask of an object at one frame; empty outside its visible span."""
    if not (0 <= frame_index <= video.num_frames - 1):
        raise FrameRangeError(
            f"frame {frame_index} outside [0, {video.num_frames - 1}]"
        )
    first, last = obj.visible_span
    if frame_index < first or frame_index > last:
        return BinaryMask.empty(video.width, video.height)
    cx, cy, hw, hh = interpolate_geometry(obj, frame_index)
    ys = np.arange(video.height, dtype=float)[:, None]
    xs = np.arange(video.width, dtype=float)[None, :]
    if obj.shape == "rectangle":
        inside = (np.abs(xs - cx) <= hw) & (np.abs(ys - cy) <= hh)
    else:
        if hw == 0:
            tx = np.where(xs == cx, 0.0, np.inf)
        else:
            tx = ((xs - cx) / hw) ** 2
        if hh == 0:
            ty = np.where(ys == cy, 0.0, np.inf)
        else:
            ty = ((ys - cy) / hh) ** 2
        inside = (tx + ty) <= 1.0
    return BinaryMask.from_array(inside)


def ground_truth_sequence(scenario: Scenario, object_id: str) -> MaskSequence:
    """Per-frame ground-truth masks for one object over the whole video."""
    obj = scenario.object_by_id(object_id)
    if obj is None:
        raise ParameterError(f"unknown object '{object_id}'")
    return MaskSequence(
        tuple(
            rasterize_object(obj, f, scenario.video)
            for f in range(scenario.video.num_frames)
        )
    )


def object_label(obj: ObjectSpec) -> str:
    attrs = " ".join(obj.attributes)
    return f"{attrs} {obj.category}".strip()


def synthesize_narrative(scenario: Scenario) -> str:
    """Text digest: one line per object, then one line per event by span start."""
    lines = ["objects:"]
    for obj in scenario.objects:
        first, last = obj.visible_span
        lines.append(f"{obj.object_id}: {object_label(obj)}, visible frames {first}-{last}")
    lines.append("events:")
    by_id = {o.object_id: o for o in scenario.objects}
    for ev in sorted(scenario.events, key=lambda e: (e.span[0], e.event_id)):
        subject = by_id[ev.subject_id]
        lines.append(
            f"frames {ev.span[0]}-{ev.span[1]}: {object_label(subject)}"
            f" {ev.description} [{ev.event_id}]"
        )
    return "\n".join(lines)


# --- persistence -------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "schema_version": scenario.schema_version,
        "seed": scenario.seed,
        "video": {
            "width": scenario.video.width,
            "height": scenario.video.height,
            "num_frames": scenario.video.num_frames,
            "fps": scenario.video.fps,
        },
        "objects": [
            {
                "object_id": o.object_id,
                "category": o.category,
                "attributes": list(o.attributes),
                "shape": o.shape,
                "trajectory": [list(k) for k in o.trajectory],
                "visible_span": list(o.visible_span),
            }
            for o in scenario.objects
        ],
        "events": [
            {
                "event_id": e.event_id,
                "subject_id": e.subject_id,
                "description": e.description,
                "span": list(e.span),
            }
            for e in scenario.events
        ],
        "audio": {
            "segments": [
                {
                    "span": list(s.span),
                    "class_label": s.class_label,
                    "source_object_id": s.source_object_id,
                    "weight": s.weight,
                }
                for s in scenario.audio.segments
            ]
        },
        "queries": [
            {
                "query_id": q.query_id,
                "expression": q.expression,
                "uses_audio": q.uses_audio,
                "gt_object_id": q.gt_object_id,
                "gt_reference_type": q.gt_reference_type,
            }
            for q in scenario.queries
        ],
    }


def _field(data: dict, key: str, where: str):
    if not isinstance(data, dict) or key not in data:
        raise ScenarioParseError(f"missing field '{key}' in {where}")
    return data[key]


def scenario_from_dict(data: dict) -> Scenario:
    version = _field(data, "schema_version", "scenario")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    try:
        video_d = _field(data, "video", "scenario")
        video = VideoSpec(
            width=_field(video_d, "width", "video"),
            height=_field(video_d, "height", "video"),
            num_frames=_field(video_d, "num_frames", "video"),
            fps=_field(video_d, "fps", "video"),
        )
        objects = tuple(
            ObjectSpec(
                object_id=_field(o, "object_id", f"objects[{i}]"),
                category=_field(o, "category", f"objects[{i}]"),
                attributes=tuple(_field(o, "attributes", f"objects[{i}]")),
                shape=_field(o, "shape", f"objects[{i}]"),
                trajectory=tuple(tuple(k) for k in _field(o, "trajectory", f"objects[{i}]")),
                visible_span=tuple(_field(o, "visible_span", f"objects[{i}]")),
            )
            for i, o in enumerate(_field(data, "objects", "scenario"))
        )
        events = tuple(
            EventSpec(
                event_id=_field(e, "event_id", f"events[{i}]"),
                subject_id=_field(e, "subject_id", f"events[{i}]"),
                description=_field(e, "description", f"events[{i}]"),
                span=tuple(_field(e, "span", f"events[{i}]")),
            )
            for i, e in enumerate(_field(data, "events", "scenario"))
        )
        audio = AudioTrack(
            segments=tuple(
                AudioSegment(
                    span=tuple(_field(s, "span", f"audio.segments[{i}]")),
                    class_label=_field(s, "class_label", f"audio.segments[{i}]"),
                    source_object_id=s.get("source_object_id"),
                    weight=_field(s, "weight", f"audio.segments[{i}]"),
                )
                for i, s in enumerate(_field(_field(data, "audio", "scenario"), "segments", "audio"))
            )
        )
        queries = tuple(
            Query(
                query_id=_field(q, "query_id", f"queries[{i}]"),
                expression=_field(q, "expression", f"queries[{i}]"),
                uses_audio=_field(q, "uses_audio", f"queries[{i}]"),
                gt_object_id=_field(q, "gt_object_id", f"queries[{i}]"),
                gt_reference_type=_field(q, "gt_reference_type", f"queries[{i}]"),
            )
            for i, q in enumerate(_field(data, "queries", "scenario"))
        )
    except ScenarioParseError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"malformed scenario value: {exc}") from exc
    scenario = Scenario(
        schema_version=version,
        seed=_field(data, "seed", "scenario"),
        video=video,
        objects=objects,
        events=events,
        audio=audio,
        queries=queries,
    )
    scenario.validate()
    return scenario


def scenario_to_json(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n"


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(scenario_to_json(scenario), encoding="utf-8")


def load_scenario(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{path}: top-level value must be an object")
    return scenario_from_dict(data)


# --- generation --------------------------------------------------------------

QUERY_KINDS = (
    "category",
    "whole_video",
    "whole_video_audio",
    "segment_long",
    "segment_short",
)


@dataclass(frozen=True)
class GenerationParams:
    width: int = 64
    height: int = 64
    min_frames: int = 60
    max_frames: int = 120
    fps: int = 10
    min_objects: int = 2
    max_objects: int = 6
    min_decoy_events: int = 1
    max_decoy_events: int = 3
    query_kinds: tuple[str, ...] = ("whole_video",)
    coarse_k: int = 8
    min_event_len: int = 4

    def validate(self) -> None:
        if self.width < 8 or self.height < 8:
            raise ParameterError("frame must be at least 8x8")
        if not (2 <= self.min_frames <= self.max_frames):
            raise ParameterError(
                f"bad frame range [{self.min_frames}, {self.max_frames}]"
            )
        if not (2 <= self.min_objects <= self.max_objects <= 6):
            raise ParameterError(
                f"object count range [{self.min_objects}, {self.max_objects}] outside [2, 6]"
            )
        if not (0 <= self.min_decoy_events <= self.max_decoy_events):
            raise ParameterError("bad decoy event range")
        if not self.query_kinds:
            raise ParameterError("query_kinds may not be empty")
        for kind in self.query_kinds:
            if kind not in QUERY_KINDS:
                raise ParameterError(f"unknown query kind '{kind}'")
        if self.coarse_k < 2:
            raise ParameterError("coarse_k must be at least 2")
        if self.min_event_len < 1:
            raise ParameterError("min_event_len must be positive")


@dataclass
class _Slot:
    """Planned object before geometry assignment."""

    category: str
    attributes: tuple[str, ...]
    full_span: bool


def _random_attrs(rng: random.Random) -> tuple[str, ...]:
    return tuple(sorted((rng.choice(COLORS), rng.choice(SIZES))))


def _differing_attrs(rng: random.Random, taken: tuple[str, ...]) -> tuple[str, ...]:
    while True:
        attrs = _random_attrs(rng)
        if attrs != taken:
            return attrs


def _random_description(rng: random.Random, used: set[str]) -> str:
    while True:
        desc = (
            f"{rng.choice(MOTION_VERBS)} {rng.choice(MOTION_DIRECTIONS)}"
            f"{rng.choice(MOTION_QUALIFIERS)}"
        )
        if desc not in used:
            used.add(desc)
            return desc


def generate_scenario(seed: int, params: GenerationParams = GenerationParams()) -> Scenario:
    """Deterministically build a scenario (and its queries) from a seed."""
    if not (0 <= seed < 2**32):
        raise ParameterError(f"seed must be an unsigned 32-bit int, got {seed}")
    params.validate()
    rng = random.Random(seed)
    num_frames = rng.randint(params.min_frames, params.max_frames)
    video = VideoSpec(
        width=params.width, height=params.height, num_frames=num_frames, fps=params.fps
    )
    last_frame = num_frames - 1

    slots: list[_Slot] = []
    queries: list[Query] = []
    events_plan: list[tuple[int, str, tuple[int, int]]] = []  # (slot idx, description, span)
    audio_segments: list[AudioSegment] = []
    used_descriptions: set[str] = set()
    reserved_categories: set[str] = set()

    def claim_category(pool: tuple[str, ...]) -> str:
        choices = [c for c in pool if c not in reserved_categories]
        if not choices:
            raise ParameterError("not enough categories for the requested query kinds")
        cat = rng.choice(choices)
        reserved_categories.add(cat)
        return cat

    for q_index, kind in enumerate(params.query_kinds):
        query_id = f"q{seed}_{q_index}"
        if kind == "category":
            cat = claim_category(CATEGORIES)
            slots.append(_Slot(cat, _random_attrs(rng), full_span=True))
            gt_slot = len(slots) - 1
            noun = cat if rng.random() < 0.7 else cat + "s"
            queries.append(
                Query(query_id, f"the {noun}", False, f"slot{gt_slot}", "CATEGORY_LEVEL")
            )
        elif kind == "whole_video":
            cat = claim_category(CATEGORIES)
            distractor_attrs = _random_attrs(rng)
            gt_attrs = _differing_attrs(rng, distractor_attrs)
            slots.append(_Slot(cat, distractor_attrs, full_span=rng.random() < 0.5))
            slots.append(_Slot(cat, gt_attrs, full_span=True))
            gt_slot = len(slots) - 1
            suffix = " standing still" if rng.random() < 0.5 else ""
            expression = f"the {' '.join(gt_attrs)} {cat}{suffix}"
            queries.append(
                Query(query_id, expression, False, f"slot{gt_slot}", "WHOLE_VIDEO_INSTANCE")
            )
        elif kind == "whole_video_audio":
            cat = claim_category(tuple(CATEGORY_FOR_AUDIO_CLASS.values()))
            slots.append(_Slot(cat, _random_attrs(rng), full_span=True))
            gt_slot = len(slots) - 1
            audio_segments.append(
                AudioSegment(
                    span=(0, last_frame),
                    class_label=AUDIO_CLASS_FOR_CATEGORY[cat],
                    source_object_id=f"slot{gt_slot}",
                    weight=1.0,
                )
            )
            queries.append(
                Query(query_id, "the object making sound", True, f"slot{gt_slot}", "WHOLE_VIDEO_INSTANCE")
            )
        elif kind in ("segment_long", "segment_short"):
            cat = claim_category(CATEGORIES)
            if kind == "segment_short":
                shared = _random_attrs(rng)
                slots.append(_Slot(cat, shared, full_span=True))  # distractor, smaller id
                slots.append(_Slot(cat, shared, full_span=True))
                gt_slot = len(slots) - 1
                samples = coarse_sample_indices(num_frames, min(params.coarse_k, num_frames))
                gaps = [
                    (a + 1, b - 1)
                    for a, b in zip(samples, samples[1:])
                    if b - a - 1 >= params.min_event_len
                ]
                if not gaps:
                    raise ParameterError(
                        f"video of {num_frames} frames too short for a short event"
                    )
                lo, hi = rng.choice(gaps)
                max_len = min(hi - lo + 1, max(params.min_event_len, num_frames // 10))
                length = rng.randint(params.min_event_len, max_len)
                start = rng.randint(lo, hi - length + 1)
                span = (start, start + length - 1)
                attr_word = rng.choice(shared)
            else:
                distractor_attrs = _random_attrs(rng)
                gt_attrs = _differing_attrs(rng, distractor_attrs)
                slots.append(_Slot(cat, distractor_attrs, full_span=True))
                slots.append(_Slot(cat, gt_attrs, full_span=True))
                gt_slot = len(slots) - 1
                # Long enough that at least one coarse sample always lands inside.
                min_len = (num_frames - 1 + 6) // 7 + 1
                length = rng.randint(min_len, max(min_len, num_frames // 2))
                start = rng.randint(0, num_frames - length)
                span = (start, start + length - 1)
                attr_word = rng.choice(gt_attrs)
            description = _random_description(rng, used_descriptions)
            events_plan.append((gt_slot, description, span))
            expression = f"the {attr_word} {cat} {description}"
            queries.append(
                Query(query_id, expression, False, f"slot{gt_slot}", "SEGMENT_SPECIFIC_INSTANCE")
            )

    n_objects = rng.randint(params.min_objects, params.max_objects)
    while len(slots) < n_objects:
        extra_cat_pool = [c for c in CATEGORIES if c not in {s.category for s in slots}]
        if not extra_cat_pool:
            break
        slots.append(_Slot(rng.choice(extra_cat_pool), _random_attrs(rng), full_span=rng.random() < 0.5))

    # Geometry: one horizontal lane per object so masks never overlap.
    lane_h = video.height // len(slots)
    objects: list[ObjectSpec] = []
    slot_ids: list[str] = []
    for i, slot in enumerate(slots):
        object_id = f"{slot.category}_{i}"
        slot_ids.append(object_id)
        if slot.full_span:
            span = (0, last_frame)
        else:
            length = rng.randint(max(2, num_frames // 3), num_frames)
            start = rng.randint(0, num_frames - length)
            span = (start, start + length - 1)
        hh = rng.randint(2, max(2, min(6, (lane_h - 4) // 2)))
        hw = rng.randint(2, 6)
        lane_top = i * lane_h
        cy_lo = lane_top + hh + 1
        cy_hi = lane_top + lane_h - hh - 2
        if cy_hi < cy_lo:
            cy_hi = cy_lo
        n_keys = rng.randint(2, 4) if span[1] > span[0] else 1
        inner = list(range(span[0] + 1, span[1]))
        rng.shuffle(inner)
        key_frames = sorted({span[0], span[1], *inner[: max(0, n_keys - 2)]})
        if span[1] == span[0]:
            key_frames = [span[0]]
        trajectory = tuple(
            (
                kf,
                round(rng.uniform(hw + 1, video.width - 2 - hw), 3),
                round(rng.uniform(cy_lo, cy_hi), 3),
                float(hw),
                float(hh),
            )
            for kf in key_frames
        )
        objects.append(
            ObjectSpec(
                object_id=object_id,
                category=slot.category,
                attributes=slot.attributes,
                shape=rng.choice(SHAPES),
                trajectory=trajectory,
                visible_span=span,
            )
        )

    def resolve(ref: str) -> str:
        return slot_ids[int(ref.removeprefix("slot"))] if ref.startswith("slot") else ref

    events: list[EventSpec] = []
    for slot_index, description, span in events_plan:
        events.append(
            EventSpec(
                event_id=f"ev_{len(events)}",
                subject_id=slot_ids[slot_index],
                description=description,
                span=span,
            )
        )
    n_decoys = rng.randint(params.min_decoy_events, params.max_decoy_events)
    for _ in range(n_decoys):
        obj = rng.choice(objects)
        first, last = obj.visible_span
        if last <= first:
            continue
        length = rng.randint(1, max(1, (last - first) // 2))
        start = rng.randint(first, last - length)
        events.append(
            EventSpec(
                event_id=f"ev_{len(events)}",
                subject_id=obj.object_id,
                description=_random_description(rng, used_descriptions),
                span=(start, start + length),
            )
        )

    ambient_pool = list(AMBIENT_AUDIO_CLASSES)
    rng.shuffle(ambient_pool)
    for label in ambient_pool[: rng.randint(1, 2)]:
        length = rng.randint(num_frames // 4, num_frames - 1)
        start = rng.randint(0, num_frames - 1 - length)
        audio_segments.append(
            AudioSegment(
                span=(start, start + length),
                class_label=label,
                source_object_id=None,
                weight=round(rng.uniform(0.1, 0.4), 3),
            )
        )
    audio_segments = [
        AudioSegment(s.span, s.class_label, resolve(s.source_object_id) if s.source_object_id else None, s.weight)
        for s in audio_segments
    ]

    queries = [
        Query(q.query_id, q.expression, q.uses_audio, resolve(q.gt_object_id), q.gt_reference_type)
        for q in queries
    ]

    scenario = Scenario(
        schema_version=SCHEMA_VERSION,
        seed=seed,
        video=video,
        objects=tuple(objects),
        events=tuple(events),
        audio=AudioTrack(tuple(audio_segments)),
        queries=tuple(queries),
    )
    scenario.validate()
    return scenario
