import threading
import time

import numpy as np
import pytest
import uvicorn


def gradient_frame(height=64, width=96):
    y = np.arange(height)[:, None] * np.ones((1, width))
    x = np.arange(width)[None, :] * np.ones((height, 1))
    return np.stack(
        [x * 255 / (width - 1), y * 255 / (height - 1), (x + y) * 255 / (width + height - 2)],
        axis=2,
    ).astype(np.uint8)


GOLDEN_SPEC = {
    "frame_index": 57,
    "overlay_items": [
        {"kind": "frame_number", "text": "57", "anchor": [2, 2], "box": None},
        {"kind": "box_label", "text": "dog_0", "anchor": [10, 18], "box": [10, 28, 40, 52]},
        {"kind": "box_label", "text": "cat_1", "anchor": [55, 8], "box": [55, 18, 88, 44]},
    ],
}


class BackgroundServer:
    def __init__(self, app):
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self) -> str:
        self.thread.start()
        deadline = time.time() + 10
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.01)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture
def background_server():
    return BackgroundServer
