from pathlib import Path

import pytest

from vosadapters.overlay import OverlayError, render_overlay

from conftest import GOLDEN_SPEC, gradient_frame

FIXTURE = Path(__file__).parent / "fixtures" / "overlay_golden.png"


class TestRenderOverlay:
    def test_matches_golden_fixture(self):
        png = render_overlay(gradient_frame(), GOLDEN_SPEC)
        assert png == FIXTURE.read_bytes()

    def test_two_runs_identical(self):
        first = render_overlay(gradient_frame(), GOLDEN_SPEC)
        second = render_overlay(gradient_frame(), GOLDEN_SPEC)
        assert first == second

    def test_frame_number_only_changes_pixels(self):
        frame = gradient_frame()
        spec = {
            "frame_index": 3,
            "overlay_items": [
                {"kind": "frame_number", "text": "3", "anchor": [2, 2], "box": None}
            ],
        }
        import io

        import numpy as np
        from PIL import Image

        png = render_overlay(frame, spec)
        rendered = np.asarray(Image.open(io.BytesIO(png)))
        assert rendered.shape == frame.shape
        assert (rendered != frame).any()

    def test_two_boxes_rendered_at_coordinates(self):
        import io

        import numpy as np
        from PIL import Image

        frame = gradient_frame()
        png = render_overlay(frame, GOLDEN_SPEC)
        rendered = np.asarray(Image.open(io.BytesIO(png)))
        # Bottom edges carry the fixed palette (top edges sit under the labels).
        assert tuple(rendered[52, 20]) == (255, 64, 64)
        assert tuple(rendered[44, 60]) == (64, 160, 255)

    def test_out_of_bounds_box_rejected(self):
        spec = {
            "frame_index": 0,
            "overlay_items": [
                {"kind": "frame_number", "text": "0", "anchor": [2, 2], "box": None},
                {"kind": "box_label", "text": "x", "anchor": [0, 0], "box": [0, 0, 400, 10]},
            ],
        }
        with pytest.raises(OverlayError):
            render_overlay(gradient_frame(), spec)

    def test_missing_frame_number_rejected(self):
        with pytest.raises(OverlayError):
            render_overlay(gradient_frame(), {"frame_index": 0, "overlay_items": []})

    def test_bad_frame_shape_rejected(self):
        import numpy as np

        with pytest.raises(OverlayError):
            render_overlay(np.zeros((4, 4)), GOLDEN_SPEC)
