"""Deterministic rasterization of frame overlays.

Frame numbers are drawn at their anchor in the top-left region; candidate
boxes get an outline plus the object id label above the box. Fixed bitmap
font, fixed palette: identical inputs yield identical PNG bytes.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, ImageDraw, ImageFont


class OverlayError(ValueError):
    """The overlay spec does not fit the frame (maps to BAD_ARGS on the wire)."""


BOX_PALETTE = (
    (255, 64, 64),
    (64, 160, 255),
    (64, 224, 96),
    (255, 192, 32),
    (224, 64, 224),
    (32, 224, 224),
)
TEXT_COLOR = (255, 255, 255)
TEXT_BACKDROP = (0, 0, 0)

_FONT = ImageFont.load_default()


def render_overlay(frame: np.ndarray, spec: dict) -> bytes:
    """Draw one AnnotatedFrameSpec onto an RGB frame; returns PNG bytes."""
    arr = np.asarray(frame)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise OverlayError(f"frame must be HxWx3 RGB, got shape {arr.shape}")
    height, width = arr.shape[:2]
    items = spec.get("overlay_items")
    if not isinstance(items, list):
        raise OverlayError("spec needs an 'overlay_items' list")
    frame_numbers = [i for i in items if i.get("kind") == "frame_number"]
    if len(frame_numbers) != 1:
        raise OverlayError("spec needs exactly one frame_number item")

    image = Image.fromarray(arr.astype(np.uint8), "RGB")
    draw = ImageDraw.Draw(image)
    box_index = 0
    for item in items:
        kind = item.get("kind")
        text = str(item.get("text", ""))
        anchor = item.get("anchor") or (0, 0)
        ax, ay = int(anchor[0]), int(anchor[1])
        if not (0 <= ax < width and 0 <= ay < height):
            raise OverlayError(f"anchor ({ax}, {ay}) outside {width}x{height} frame")
        if kind == "frame_number":
            _draw_label(draw, ax, ay, text)
        elif kind == "box_label":
            box = item.get("box")
            if not box or len(box) != 4:
                raise OverlayError("box_label items need a 4-element box")
            x0, y0, x1, y1 = (int(v) for v in box)
            if not (0 <= x0 <= x1 < width and 0 <= y0 <= y1 < height):
                raise OverlayError(f"box {box} outside {width}x{height} frame")
            color = BOX_PALETTE[box_index % len(BOX_PALETTE)]
            box_index += 1
            draw.rectangle((x0, y0, x1, y1), outline=color, width=1)
            _draw_label(draw, x0, max(0, y0 - 10), text, color)
        else:
            raise OverlayError(f"unknown overlay kind '{kind}'")

    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def _draw_label(draw: ImageDraw.ImageDraw, x: int, y: int, text: str, color=TEXT_COLOR):
    if not text:
        return
    left, top, right, bottom = draw.textbbox((x, y), text, font=_FONT)
    draw.rectangle((left, top, right, bottom), fill=TEXT_BACKDROP)
    draw.text((x, y), text, fill=color, font=_FONT)
