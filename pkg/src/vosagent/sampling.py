"""Frame sampling used by the coarse temporal search and by agents planning it."""

from __future__ import annotations

import math

from .errors import ParameterError


def round_half_away_from_zero(x: float) -> int:
    """Round to the nearest integer, with .5 going away from zero."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def coarse_sample_indices(num_frames: int, k: int) -> list[int]:
    """Evenly spread ``k`` frame indices over ``[0, num_frames - 1]``.

    Index ``i`` is ``round(i * (num_frames - 1) / (k - 1))`` with half-away
    rounding. Endpoints are always included; duplicates (impossible while
    ``k <= num_frames``) are collapsed preserving order.
    """
    if num_frames < 2:
        raise ParameterError(f"need at least 2 frames, got {num_frames}")
    if k < 2 or k > num_frames:
        raise ParameterError(f"k must be in [2, {num_frames}], got {k}")
    step = (num_frames - 1) / (k - 1)
    indices: list[int] = []
    for i in range(k):
        value = round_half_away_from_zero(i * step)
        if not indices or value != indices[-1]:
            indices.append(value)
    return indices
