"""Canned, schema-correct responses for mock mode (no model weights needed)."""

MOCK_RESPONSES = {
    "audio_classify": {
        "classes": [
            {"label": "dog", "score": 0.62},
            {"label": "speech", "score": 0.21},
            {"label": "wind", "score": 0.17},
        ]
    },
    "temporal_search_coarse": {
        "matched": True,
        "window": {"start": 57, "end": 71},
        "sampled": [0, 14, 28, 42, 57, 71, 85, 99],
    },
    "temporal_search_fine": {
        "matched": False,
        "window": None,
        "chunks_tried": 4,
    },
    "identify_instance": {
        "object_id": "dog_0",
        "confidence": 1.0,
        "detections": [
            {
                "object_id": "dog_0",
                "category": "dog",
                "box": [6, 4, 10, 8],
                "frame_index": 57,
            }
        ],
        "annotated": [
            {
                "frame_index": 57,
                "overlay_items": [
                    {"kind": "frame_number", "text": "57", "anchor": [2, 2], "box": None},
                    {
                        "kind": "box_label",
                        "text": "dog_0",
                        "anchor": [6, 0],
                        "box": [6, 4, 10, 8],
                    },
                ],
            }
        ],
    },
    "segment_and_track": {
        "masks": [
            {"width": 16, "height": 16, "runs": [70, 5, 11, 5, 11, 5, 149]},
            {"width": 16, "height": 16, "runs": [86, 5, 11, 5, 11, 5, 133]},
        ]
    },
}
