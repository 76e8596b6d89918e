"""Deterministic oracle implementations of the specialized tools.

Every tool is a pure function of (scenario, args) while noise is off. Noise is
seeded per call from (rng_seed, call_id) so concurrent episodes cannot reorder
outcomes. Registered names are load-bearing for the action grammar:
audio_classify, temporal_search_coarse, temporal_search_fine,
identify_instance, segment_and_track.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import scenario as sc
from .errors import ParameterError
from .masks import BinaryMask, MaskSequence
from .protocol import (
    ParamSpec,
    Registry,
    ToolArgumentError,
    ToolDescriptor,
    ToolFault,
)
from .sampling import coarse_sample_indices

DEFAULT_COARSE_K = 8
DEFAULT_CHUNK_LEN = 25
DEFAULT_STRIDE = 3
AUDIO_TOP_N = 5

FAULT_SCOPES = ("all", "first_call")


@dataclass(frozen=True)
class FrameWindow:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise ParameterError(f"bad frame window [{self.start}, {self.end}]")

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end}


@dataclass(frozen=True)
class Detection:
    object_id: str
    category: str
    box: tuple[int, int, int, int]  # x_min, y_min, x_max, y_max
    frame_index: int

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        if x0 > x1 or y0 > y1:
            raise ParameterError(f"degenerate box {self.box}")

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "category": self.category,
            "box": list(self.box),
            "frame_index": self.frame_index,
        }


@dataclass(frozen=True)
class OverlayItem:
    kind: str  # "frame_number" | "box_label"
    text: str
    anchor: tuple[int, int]
    box: tuple[int, int, int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "text": self.text,
            "anchor": list(self.anchor),
            "box": list(self.box) if self.box is not None else None,
        }


@dataclass(frozen=True)
class AnnotatedFrameSpec:
    frame_index: int
    overlay_items: tuple[OverlayItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "overlay_items", tuple(self.overlay_items))
        frame_numbers = [i for i in self.overlay_items if i.kind == "frame_number"]
        if len(frame_numbers) != 1:
            raise ParameterError("exactly one frame_number overlay item is required")

    def to_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "overlay_items": [i.to_dict() for i in self.overlay_items],
        }


@dataclass(frozen=True)
class NoiseConfig:
    rng_seed: int = 0
    p_wrong_identity: float = 0.0
    p_search_miss: float = 0.0
    mask_erosion_px: int = 0
    p_tool_fault: float = 0.0
    fault_scope: str = "all"

    def __post_init__(self):
        for name in ("p_wrong_identity", "p_search_miss", "p_tool_fault"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ParameterError(f"{name} must be in [0, 1], got {p}")
        if self.mask_erosion_px < 0:
            raise ParameterError("mask_erosion_px must be non-negative")
        if self.fault_scope not in FAULT_SCOPES:
            raise ParameterError(f"fault_scope must be one of {FAULT_SCOPES}")

    @property
    def enabled(self) -> bool:
        return (
            self.p_wrong_identity > 0
            or self.p_search_miss > 0
            or self.mask_erosion_px > 0
            or self.p_tool_fault > 0
        )

    def to_dict(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "p_wrong_identity": self.p_wrong_identity,
            "p_search_miss": self.p_search_miss,
            "mask_erosion_px": self.mask_erosion_px,
            "p_tool_fault": self.p_tool_fault,
            "fault_scope": self.fault_scope,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseConfig":
        return cls(**data)


def _query_matches_subject(query_text: str, subject: sc.ObjectSpec) -> bool:
    """Every category/attribute vocabulary word in the query must fit the subject."""
    for cat in sc.category_words(query_text):
        if cat != subject.category:
            return False
    for attr in sc.attribute_words(query_text):
        if attr not in subject.attributes:
            return False
    return True


def match_events(scenario: sc.Scenario, query_text: str) -> list[sc.EventSpec]:
    """Events whose description equals the query's motion phrase and whose
    subject satisfies the query's category/attribute words."""
    phrase = sc.extract_motion_phrase(query_text)
    if phrase is None:
        return []
    matched = []
    for ev in scenario.events:
        if ev.description != phrase:
            continue
        subject = scenario.object_by_id(ev.subject_id)
        if subject is not None and _query_matches_subject(query_text, subject):
            matched.append(ev)
    return sorted(matched, key=lambda e: (e.span[0], e.event_id))


def audio_class_scores(
    scenario: sc.Scenario, window: FrameWindow | None
) -> list[tuple[str, float]]:
    """Top audio classes by normalized aggregated segment weight.

    Segments overlapping the window contribute their full weight; scores are
    normalized to sum 1 before the top-5 cut. Ties break lexicographically.
    """
    last = scenario.video.num_frames - 1
    if window is None:
        window = FrameWindow(0, last)
    if window.end > last:
        raise ToolArgumentError(f"window [{window.start}, {window.end}] outside [0, {last}]")
    totals: dict[str, float] = {}
    for seg in scenario.audio.segments:
        if seg.span[0] <= window.end and seg.span[1] >= window.start:
            totals[seg.class_label] = totals.get(seg.class_label, 0.0) + seg.weight
    grand = sum(totals.values())
    if grand == 0.0:
        return []
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(label, weight / grand) for label, weight in ranked[:AUDIO_TOP_N]]


def temporal_search_coarse(
    scenario: sc.Scenario, query_text: str, k: int = DEFAULT_COARSE_K
) -> dict:
    """Sparse whole-video search; a match needs a sampled frame inside an
    event span that matches the query."""
    sampled = coarse_sample_indices(scenario.video.num_frames, k)
    for ev in match_events(scenario, query_text):
        inside = [i for i in sampled if ev.span[0] <= i <= ev.span[1]]
        if inside:
            window = FrameWindow(min(inside), max(inside))
            return {"matched": True, "window": window.to_dict(), "sampled": sampled}
    return {"matched": False, "window": None, "sampled": sampled}


def temporal_search_fine(
    scenario: sc.Scenario,
    query_text: str,
    chunk_len: int = DEFAULT_CHUNK_LEN,
    stride: int = DEFAULT_STRIDE,
) -> dict:
    """Chunked dense search; the first chunk containing a match wins."""
    if chunk_len < 2:
        raise ParameterError(f"chunk_len must be at least 2, got {chunk_len}")
    if not (1 <= stride <= chunk_len):
        raise ParameterError(f"stride must be in [1, {chunk_len}], got {stride}")
    num_frames = scenario.video.num_frames
    events = match_events(scenario, query_text)
    num_chunks = (num_frames + chunk_len - 1) // chunk_len
    for chunk_index in range(num_chunks):
        start = chunk_index * chunk_len
        end = min(start + chunk_len - 1, num_frames - 1)
        sampled = list(range(start, end + 1, stride))
        for ev in events:
            inside = [i for i in sampled if ev.span[0] <= i <= ev.span[1]]
            if inside:
                window = FrameWindow(min(inside), max(inside))
                return {
                    "matched": True,
                    "window": window.to_dict(),
                    "chunks_tried": chunk_index + 1,
                }
    return {"matched": False, "window": None, "chunks_tried": num_chunks}


def _tight_box(mask: BinaryMask) -> tuple[int, int, int, int] | None:
    arr = mask.to_array()
    ys, xs = np.nonzero(arr)
    if ys.size == 0:
        return None
    return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())


def identify_instance(
    scenario: sc.Scenario,
    frame_indices: list[int],
    category: str,
    description: str = "",
) -> dict:
    """Score candidate objects of the category over the given frames.

    +1 per description attribute word the object carries, +2 if one of the
    object's events matches the description's motion phrase and overlaps the
    given frames. Ties break to the lexicographically smallest object_id.
    """
    if category not in sc.CATEGORIES:
        raise ToolArgumentError(f"unknown category '{category}'")
    if not frame_indices:
        raise ToolArgumentError("frame_indices may not be empty")
    last = scenario.video.num_frames - 1
    for f in frame_indices:
        if not (0 <= f <= last):
            raise ToolArgumentError(f"frame {f} outside [0, {last}]")

    frames = sorted(set(frame_indices))
    detections: list[Detection] = []
    candidates: list[sc.ObjectSpec] = []
    for obj in sorted(scenario.objects, key=lambda o: o.object_id):
        if obj.category != category:
            continue
        seen = False
        for f in frames:
            if obj.visible_span[0] <= f <= obj.visible_span[1]:
                box = _tight_box(sc.rasterize_object(obj, f, scenario.video))
                if box is not None:
                    detections.append(Detection(obj.object_id, category, box, f))
                    seen = True
        if seen:
            candidates.append(obj)

    attr_words = sc.attribute_words(description)
    phrase = sc.extract_motion_phrase(description)
    max_score = len(attr_words) + (2 if phrase is not None else 0)

    annotated = []
    for f in frames:
        items = [OverlayItem("frame_number", str(f), (2, 2))]
        for det in detections:
            if det.frame_index == f:
                x0, y0, _, _ = det.box
                items.append(
                    OverlayItem(
                        "box_label", det.object_id, (x0, max(0, y0 - 8)), det.box
                    )
                )
        annotated.append(AnnotatedFrameSpec(f, tuple(items)))

    if not candidates:
        return {
            "object_id": None,
            "confidence": 0.0,
            "detections": [],
            "annotated": [a.to_dict() for a in annotated],
        }

    def score(obj: sc.ObjectSpec) -> int:
        points = sum(1 for a in attr_words if a in obj.attributes)
        if phrase is not None:
            for ev in scenario.events:
                if (
                    ev.subject_id == obj.object_id
                    and ev.description == phrase
                    and any(ev.span[0] <= f <= ev.span[1] for f in frames)
                ):
                    points += 2
                    break
        return points

    scored = [(score(o), o.object_id) for o in candidates]
    best_score = max(s for s, _ in scored)
    winner = min(oid for s, oid in scored if s == best_score)
    if max_score == 0:
        confidence = 1.0 if len(candidates) == 1 else 0.0
    else:
        confidence = best_score / max_score
    return {
        "object_id": winner,
        "confidence": confidence,
        "detections": [d.to_dict() for d in detections],
        "annotated": [a.to_dict() for a in annotated],
    }


def _erode(mask: BinaryMask, px: int) -> BinaryMask:
    if px <= 0 or mask.area == 0:
        return mask
    arr = ndimage.binary_erosion(
        mask.to_array(), structure=np.ones((3, 3), dtype=bool), iterations=px
    )
    return BinaryMask.from_array(arr)


def segment_and_track(
    scenario: sc.Scenario, pivot_frame: int, object_id: str, erosion_px: int = 0
) -> MaskSequence:
    """Ground-truth propagation: exact per-frame masks of the object, or an
    all-empty sequence when the object is not visible at the pivot."""
    obj = scenario.object_by_id(object_id)
    if obj is None:
        raise ToolArgumentError(f"unknown object '{object_id}'")
    last = scenario.video.num_frames - 1
    if not (0 <= pivot_frame <= last):
        raise ToolArgumentError(f"pivot_frame {pivot_frame} outside [0, {last}]")
    video = scenario.video
    if not (obj.visible_span[0] <= pivot_frame <= obj.visible_span[1]):
        return MaskSequence.all_empty(video.width, video.height, video.num_frames)
    frames = [
        _erode(sc.rasterize_object(obj, f, video), erosion_px)
        for f in range(video.num_frames)
    ]
    return MaskSequence(tuple(frames))


# --- registry wiring -----------------------------------------------------------


class SimulatedToolset:
    """Scenario-bound tool backends with per-call seeded noise.

    One instance serves one episode (or one server); the call counter that
    backs first-call fault injection is guarded for concurrent use.
    """

    def __init__(self, scenario: sc.Scenario, noise: NoiseConfig = NoiseConfig()):
        self.scenario = scenario
        self.noise = noise
        self._calls = 0
        self._lock = threading.Lock()

    def _rng(self, call_id: str) -> random.Random:
        return random.Random(f"{self.noise.rng_seed}:{call_id}")

    def _next_call(self) -> int:
        with self._lock:
            self._calls += 1
            return self._calls

    def _maybe_fault(self, call_id: str) -> None:
        count = self._next_call()
        if self.noise.p_tool_fault <= 0.0:
            return
        if self.noise.fault_scope == "first_call" and count != 1:
            return
        if self._rng(f"fault:{call_id}").random() < self.noise.p_tool_fault:
            raise ToolFault(f"injected tool fault (call {count})")

    def audio_classify(self, args: dict, call_id: str):
        self._maybe_fault(call_id)
        window = None
        has_start = "window_start" in args
        has_end = "window_end" in args
        if has_start != has_end:
            raise ToolArgumentError("window_start and window_end must be given together")
        if has_start:
            window = FrameWindow(args["window_start"], args["window_end"])
        ranked = audio_class_scores(self.scenario, window)
        return {"classes": [{"label": label, "score": score} for label, score in ranked]}

    def temporal_search_coarse(self, args: dict, call_id: str):
        self._maybe_fault(call_id)
        result = temporal_search_coarse(
            self.scenario, args["query"], args.get("k", DEFAULT_COARSE_K)
        )
        if result["matched"] and self.noise.p_search_miss > 0.0:
            if self._rng(f"miss:{call_id}").random() < self.noise.p_search_miss:
                result = {"matched": False, "window": None, "sampled": result["sampled"]}
        return result

    def temporal_search_fine(self, args: dict, call_id: str):
        self._maybe_fault(call_id)
        result = temporal_search_fine(
            self.scenario,
            args["query"],
            args.get("chunk_len", DEFAULT_CHUNK_LEN),
            args.get("stride", DEFAULT_STRIDE),
        )
        if result["matched"] and self.noise.p_search_miss > 0.0:
            if self._rng(f"miss:{call_id}").random() < self.noise.p_search_miss:
                result = {
                    "matched": False,
                    "window": None,
                    "chunks_tried": result["chunks_tried"],
                }
        return result

    def identify_instance(self, args: dict, call_id: str):
        self._maybe_fault(call_id)
        result = identify_instance(
            self.scenario, args["frames"], args["category"], args.get("description", "")
        )
        if (
            result["object_id"] is not None
            and self.noise.p_wrong_identity > 0.0
            and self._rng(f"identity:{call_id}").random() < self.noise.p_wrong_identity
        ):
            others = sorted(
                {d["object_id"] for d in result["detections"]} - {result["object_id"]}
            )
            if others:
                result["object_id"] = self._rng(f"swap:{call_id}").choice(others)
        return result

    def segment_and_track(self, args: dict, call_id: str):
        self._maybe_fault(call_id)
        masks = segment_and_track(
            self.scenario,
            args["pivot_frame"],
            args["object_id"],
            erosion_px=self.noise.mask_erosion_px,
        )
        return {"masks": masks.to_dicts()}


SIM_DESCRIPTORS = (
    ToolDescriptor(
        name="audio_classify",
        description="Ranks the sound-source classes heard in the clip, strongest first.",
        params=(
            ParamSpec("window_start", "int", False, "first frame of the window to analyze"),
            ParamSpec("window_end", "int", False, "last frame of the window to analyze"),
        ),
        returns="object with 'classes': up to 5 {label, score} entries",
    ),
    ToolDescriptor(
        name="temporal_search_coarse",
        description="Sparsely samples the whole video and finds the segment matching the query.",
        params=(
            ParamSpec("query", "string", True, "event description to look for"),
            ParamSpec("k", "int", False, "number of evenly spread samples (default 8)"),
        ),
        returns="object with 'matched', 'window' {start, end} or null, 'sampled' frame list",
    ),
    ToolDescriptor(
        name="temporal_search_fine",
        description="Scans the video chunk by chunk with dense sampling to catch short events.",
        params=(
            ParamSpec("query", "string", True, "event description to look for"),
            ParamSpec("chunk_len", "int", False, "frames per chunk (default 25)"),
            ParamSpec("stride", "int", False, "sampling stride inside a chunk (default 3)"),
        ),
        returns="object with 'matched', 'window' {start, end} or null, 'chunks_tried'",
    ),
    ToolDescriptor(
        name="identify_instance",
        description="Detects all instances of a category on the given frames and picks the one matching the description.",
        params=(
            ParamSpec("frames", "list-of-int", True, "frame indices to inspect"),
            ParamSpec("category", "string", True, "object category to detect"),
            ParamSpec("description", "string", False, "attributes/motion words describing the target"),
        ),
        returns="object with 'object_id' or null, 'confidence', 'detections', 'annotated'",
    ),
    ToolDescriptor(
        name="segment_and_track",
        description="Segments the chosen object at the pivot frame and propagates its mask through the whole video.",
        params=(
            ParamSpec("pivot_frame", "int", True, "frame where the object was identified"),
            ParamSpec("object_id", "string", True, "identity to segment"),
        ),
        returns="object with 'masks': one {width, height, runs} record per frame",
    ),
)


def build_sim_registry(
    scenario: sc.Scenario, noise: NoiseConfig = NoiseConfig()
) -> Registry:
    """Registry serving the five standard tools against one scenario."""
    toolset = SimulatedToolset(scenario, noise)
    backends = {
        "audio_classify": toolset.audio_classify,
        "temporal_search_coarse": toolset.temporal_search_coarse,
        "temporal_search_fine": toolset.temporal_search_fine,
        "identify_instance": toolset.identify_instance,
        "segment_and_track": toolset.segment_and_track,
    }
    registry = Registry()
    for descriptor in SIM_DESCRIPTORS:
        registry.register(descriptor, backends[descriptor.name])
    return registry
