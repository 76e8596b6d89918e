"""Run-length encoded binary masks and segmentation quality metrics.

Masks are stored in canonical row-major RLE: alternating run lengths starting
with a background run, where only the first run may be zero (used when the
grid starts with foreground). Metrics follow the common video-segmentation
convention: region similarity J (intersection over union) and boundary
accuracy F (matched boundary pixels within a diagonal-scaled tolerance),
averaged per frame for sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import CodecError, ParameterError, ShapeMismatchError

BOUNDARY_TOLERANCE_SCALE = 0.008


@dataclass(frozen=True)
class BinaryMask:
    """A single-frame binary mask in canonical RLE form."""

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise CodecError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        runs = tuple(int(r) for r in self.runs)
        object.__setattr__(self, "runs", runs)
        if not runs:
            raise CodecError("runs may not be empty")
        if any(r < 0 for r in runs):
            raise CodecError("run lengths must be non-negative")
        total = sum(runs)
        if total != self.width * self.height:
            raise CodecError(f"runs sum to {total}, expected {self.width * self.height}")
        for i, r in enumerate(runs):
            if r == 0 and not (i == 0 and len(runs) > 1):
                raise CodecError(f"zero-length run at index {i} is not canonical")

    @classmethod
    def from_array(cls, pixels) -> "BinaryMask":
        arr = np.asarray(pixels)
        if arr.ndim != 2:
            raise CodecError(f"expected a 2-d pixel grid, got shape {arr.shape}")
        height, width = arr.shape
        flat = arr.astype(bool).ravel()
        if flat.size == 0:
            raise CodecError("pixel grid may not be empty")
        changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
        bounds = np.concatenate(([0], changes, [flat.size]))
        runs = np.diff(bounds).tolist()
        if flat[0]:
            runs.insert(0, 0)
        return cls(width=width, height=height, runs=tuple(runs))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(width=width, height=height, runs=(width * height,))

    def to_array(self) -> np.ndarray:
        flags = np.arange(len(self.runs)) % 2 == 1
        flat = np.repeat(flags, self.runs)
        return flat.reshape(self.height, self.width)

    @property
    def area(self) -> int:
        """Number of foreground pixels."""
        return sum(self.runs[1::2])

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "runs": list(self.runs)}

    @classmethod
    def from_dict(cls, data: dict) -> "BinaryMask":
        try:
            return cls(width=data["width"], height=data["height"], runs=tuple(data["runs"]))
        except (KeyError, TypeError) as exc:
            raise CodecError(f"malformed mask record: {exc}") from exc


@dataclass(frozen=True)
class MaskSequence:
    """Per-frame masks of one video, uniform dimensions."""

    frames: tuple[BinaryMask, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            raise ShapeMismatchError("a mask sequence needs at least one frame")
        w, h = frames[0].width, frames[0].height
        for i, m in enumerate(frames):
            if (m.width, m.height) != (w, h):
                raise ShapeMismatchError(
                    f"frame {i} is {m.width}x{m.height}, expected {w}x{h}"
                )

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    @classmethod
    def all_empty(cls, width: int, height: int, num_frames: int) -> "MaskSequence":
        return cls(tuple(BinaryMask.empty(width, height) for _ in range(num_frames)))

    def to_dicts(self) -> list[dict]:
        return [m.to_dict() for m in self.frames]

    @classmethod
    def from_dicts(cls, records: list[dict]) -> "MaskSequence":
        return cls(tuple(BinaryMask.from_dict(r) for r in records))


@dataclass(frozen=True)
class EvalScores:
    """Mean region similarity, mean boundary accuracy, and their average."""

    j_mean: float
    f_mean: float
    jf: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "jf", (self.j_mean + self.f_mean) / 2.0)


def rle_encode(pixels) -> BinaryMask:
    """Encode a 2-d pixel grid into a canonical mask."""
    return BinaryMask.from_array(pixels)


def rle_decode(mask: BinaryMask) -> np.ndarray:
    """Decode a mask back to a boolean pixel grid."""
    return mask.to_array()


def _check_dims(a: BinaryMask, b: BinaryMask) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ShapeMismatchError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union. Both masks empty counts as a perfect 1.0."""
    _check_dims(a, b)
    pa = a.to_array()
    pb = b.to_array()
    union = int(np.logical_or(pa, pb).sum())
    if union == 0:
        return 1.0
    inter = int(np.logical_and(pa, pb).sum())
    return inter / union


def boundary_pixels(pixels: np.ndarray) -> np.ndarray:
    """Foreground pixels with at least one 4-neighbor that is background or outside."""
    fg = pixels.astype(bool)
    padded = np.pad(fg, 1, mode="constant", constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return fg & ~interior


def boundary_tolerance(width: int, height: int) -> int:
    """Pixel tolerance for boundary matching: ceil(0.008 * frame diagonal)."""
    return math.ceil(BOUNDARY_TOLERANCE_SCALE * math.hypot(width, height))


def _disk(radius: int) -> np.ndarray:
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return (yy * yy + xx * xx) <= radius * radius


def boundary_f(a: BinaryMask, b: BinaryMask) -> float:
    """Boundary F-measure with Euclidean matching tolerance.

    Precision is the fraction of a's boundary pixels within the tolerance of
    b's boundary (and symmetrically for recall). Both boundaries empty yields
    1.0; exactly one empty yields 0.0.
    """
    _check_dims(a, b)
    ba = boundary_pixels(a.to_array())
    bb = boundary_pixels(b.to_array())
    na = int(ba.sum())
    nb = int(bb.sum())
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    disk = _disk(boundary_tolerance(a.width, a.height))
    b_reach = ndimage.binary_dilation(bb, structure=disk)
    a_reach = ndimage.binary_dilation(ba, structure=disk)
    precision = int((ba & b_reach).sum()) / na
    recall = int((bb & a_reach).sum()) / nb
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def sequence_scores(pred: MaskSequence, gt: MaskSequence) -> EvalScores:
    """Per-frame means of J and boundary F over two aligned sequences."""
    if len(pred) != len(gt):
        raise ShapeMismatchError(f"sequence lengths differ: {len(pred)} vs {len(gt)}")
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise ShapeMismatchError(
            f"sequence dimensions differ: {pred.width}x{pred.height}"
            f" vs {gt.width}x{gt.height}"
        )
    js = [iou(p, g) for p, g in zip(pred.frames, gt.frames)]
    fs = [boundary_f(p, g) for p, g in zip(pred.frames, gt.frames)]
    return EvalScores(j_mean=sum(js) / len(js), f_mean=sum(fs) / len(fs))


def aggregate_miou(per_sample_j: list[float]) -> float:
    """Arithmetic mean of per-sample J values."""
    if not per_sample_j:
        raise ParameterError("aggregate_miou requires at least one value")
    return sum(per_sample_j) / len(per_sample_j)
