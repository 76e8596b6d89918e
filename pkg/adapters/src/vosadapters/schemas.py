"""Wire-level contract of the five standard tools.

These descriptors restate the documented protocol (GET /tools, POST /invoke
with {"v":1,"id","tool","args"} bodies); the adapter deliberately does not
import the engine package, so the schemas live here as data.
"""

from __future__ import annotations

from typing import Any

PROTOCOL_VERSION = 1

STANDARD_TOOL_NAMES = (
    "audio_classify",
    "temporal_search_coarse",
    "temporal_search_fine",
    "identify_instance",
    "segment_and_track",
)

# name -> (type, required, description)
_PARAMS = {
    "audio_classify": (
        ("window_start", "int", False, "first frame of the window to analyze"),
        ("window_end", "int", False, "last frame of the window to analyze"),
    ),
    "temporal_search_coarse": (
        ("query", "string", True, "event description to look for"),
        ("k", "int", False, "number of evenly spread samples (default 8)"),
    ),
    "temporal_search_fine": (
        ("query", "string", True, "event description to look for"),
        ("chunk_len", "int", False, "frames per chunk (default 25)"),
        ("stride", "int", False, "sampling stride inside a chunk (default 3)"),
    ),
    "identify_instance": (
        ("frames", "list-of-int", True, "frame indices to inspect"),
        ("category", "string", True, "object category to detect"),
        ("description", "string", False, "attributes/motion words describing the target"),
    ),
    "segment_and_track": (
        ("pivot_frame", "int", True, "frame where the object was identified"),
        ("object_id", "string", True, "identity to segment"),
    ),
}

_DESCRIPTIONS = {
    "audio_classify": "Ranks the sound-source classes heard in the clip, strongest first.",
    "temporal_search_coarse": "Sparsely samples the whole video and finds the segment matching the query.",
    "temporal_search_fine": "Scans the video chunk by chunk with dense sampling to catch short events.",
    "identify_instance": "Detects all instances of a category on the given frames and picks the one matching the description.",
    "segment_and_track": "Segments the chosen object at the pivot frame and propagates its mask through the whole video.",
}

_RETURNS = {
    "audio_classify": "object with 'classes': up to 5 {label, score} entries",
    "temporal_search_coarse": "object with 'matched', 'window' {start, end} or null, 'sampled' frame list",
    "temporal_search_fine": "object with 'matched', 'window' {start, end} or null, 'chunks_tried'",
    "identify_instance": "object with 'object_id' or null, 'confidence', 'detections', 'annotated'",
    "segment_and_track": "object with 'masks': one {width, height, runs} record per frame",
}


def descriptor(name: str) -> dict:
    return {
        "name": name,
        "description": _DESCRIPTIONS[name],
        "params": [
            {"name": p, "type": t, "required": r, "description": d}
            for p, t, r, d in _PARAMS[name]
        ],
        "returns": _RETURNS[name],
    }


def _type_ok(type_: str, value: Any) -> bool:
    if type_ == "string":
        return isinstance(value, str)
    if type_ == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if type_ == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if type_ == "bool":
        return isinstance(value, bool)
    if type_ == "list-of-int":
        return isinstance(value, list) and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        )
    if type_ == "list-of-string":
        return isinstance(value, list) and all(isinstance(v, str) for v in value)
    return False


def validate_args(name: str, args: Any) -> str | None:
    """Diagnostic string when args do not satisfy the tool's parameter table."""
    if not isinstance(args, dict):
        return f"args must be an object, got {type(args).__name__}"
    params = _PARAMS[name]
    known = {p for p, _, _, _ in params}
    for key in args:
        if key not in known:
            return f"unknown parameter '{key}' for tool '{name}'"
    for p, t, required, _ in params:
        if p not in args:
            if required:
                return f"missing required parameter '{p}'"
            continue
        if not _type_ok(t, args[p]):
            return f"parameter '{p}' expects {t}, got {type(args[p]).__name__}"
    return None


def error_body(call_id: str, code: str, message: str, log: str = "") -> dict:
    return {
        "v": PROTOCOL_VERSION,
        "id": call_id,
        "ok": False,
        "error": {"code": code, "message": message, "log": log[:2000]},
    }


def ok_body(call_id: str, result: Any) -> dict:
    return {"v": PROTOCOL_VERSION, "id": call_id, "ok": True, "result": result}
