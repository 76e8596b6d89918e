"""Text generation interface the reasoning engine drives."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ParameterError


class StopReason(enum.Enum):
    STOP_SEQUENCE = "stop_sequence"
    LENGTH = "length"
    END = "end"


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    stop_sequences: tuple[str, ...]
    max_new_tokens: int = 512

    def __post_init__(self):
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))
        if self.max_new_tokens < 1:
            raise ParameterError("max_new_tokens must be positive")


@dataclass(frozen=True)
class GenerationResult:
    """Generated text; on STOP_SEQUENCE the text excludes the stop itself."""

    text: str
    stop_reason: StopReason


def truncate_at_stop(text: str, stop_sequences: tuple[str, ...]) -> GenerationResult:
    """Cut the text at the earliest stop sequence; the stop itself is excluded."""
    best = None
    for stop in stop_sequences:
        if not stop:
            continue
        idx = text.find(stop)
        if idx != -1 and (best is None or idx < best):
            best = idx
    if best is None:
        return GenerationResult(text=text, stop_reason=StopReason.END)
    return GenerationResult(text=text[:best], stop_reason=StopReason.STOP_SEQUENCE)
