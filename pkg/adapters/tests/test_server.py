import json

import pytest
from fastapi.testclient import TestClient

from vosadapters.mockdata import MOCK_RESPONSES
from vosadapters.schemas import STANDARD_TOOL_NAMES
from vosadapters.server import AdapterConfig, AdapterConfigError, create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(AdapterConfig()))


class TestConfig:
    def test_mock_mode_needs_no_upstreams(self):
        AdapterConfig(tools=("audio_classify",), mock_mode=True)

    def test_real_mode_requires_upstreams(self):
        with pytest.raises(AdapterConfigError):
            AdapterConfig(tools=("audio_classify",), mock_mode=False)

    def test_unknown_tool_rejected(self):
        with pytest.raises(AdapterConfigError):
            AdapterConfig(tools=("telepathy",))

    def test_from_file(self, tmp_path):
        path = tmp_path / "adapter.json"
        path.write_text(json.dumps({"tools": ["audio_classify"], "mock_mode": True, "port": 9001}))
        config = AdapterConfig.from_file(path)
        assert config.tools == ("audio_classify",)
        assert config.port == 9001


class TestRoutes:
    def test_tools_lists_served_subset(self):
        client = TestClient(create_app(AdapterConfig(tools=("audio_classify", "identify_instance"))))
        names = [t["name"] for t in client.get("/tools").json()]
        assert names == ["audio_classify", "identify_instance"]

    def test_all_standard_tools_by_default(self, client):
        names = [t["name"] for t in client.get("/tools").json()]
        assert names == list(STANDARD_TOOL_NAMES)

    def test_mock_invoke_returns_fixture(self, client):
        body = client.post(
            "/invoke",
            json={"v": 1, "id": "m1", "tool": "temporal_search_coarse", "args": {"query": "x"}},
        ).json()
        assert body == {
            "v": 1,
            "id": "m1",
            "ok": True,
            "result": MOCK_RESPONSES["temporal_search_coarse"],
        }

    def test_bad_args_protocol_body(self, client):
        body = client.post(
            "/invoke",
            json={"v": 1, "id": "m2", "tool": "identify_instance", "args": {"frames": "no"}},
        ).json()
        assert body["ok"] is False
        assert body["error"]["code"] == "BAD_ARGS"
        assert "result" not in body

    def test_unknown_tool(self, client):
        body = client.post(
            "/invoke", json={"v": 1, "id": "m3", "tool": "telepathy", "args": {}}
        ).json()
        assert body["error"]["code"] == "UNKNOWN_TOOL"

    def test_wrong_version_is_http_error(self, client):
        response = client.post(
            "/invoke", json={"v": 9, "id": "m4", "tool": "audio_classify", "args": {}}
        )
        assert response.status_code == 400

    def test_mock_results_have_expected_shapes(self, client):
        calls = {
            "audio_classify": {},
            "temporal_search_coarse": {"query": "q"},
            "temporal_search_fine": {"query": "q"},
            "identify_instance": {"frames": [0], "category": "dog", "description": ""},
            "segment_and_track": {"pivot_frame": 0, "object_id": "dog_0"},
        }
        expected_keys = {
            "audio_classify": {"classes"},
            "temporal_search_coarse": {"matched", "window", "sampled"},
            "temporal_search_fine": {"matched", "window", "chunks_tried"},
            "identify_instance": {"object_id", "confidence", "detections", "annotated"},
            "segment_and_track": {"masks"},
        }
        for tool, args in calls.items():
            body = client.post(
                "/invoke", json={"v": 1, "id": tool, "tool": tool, "args": args}
            ).json()
            assert body["ok"], body
            assert set(body["result"]) == expected_keys[tool]


class TestRelayMode:
    def test_relay_forwards_and_returns_upstream_body(self, background_server):
        from fastapi import FastAPI

        upstream = FastAPI()

        @upstream.post("/invoke")
        def fake_model(payload: dict):
            return {"v": 1, "id": payload["id"], "ok": True, "result": {"classes": []}}

        with background_server(upstream) as upstream_url:
            config = AdapterConfig(
                tools=("audio_classify",),
                mock_mode=False,
                upstream_urls={"audio_classify": f"{upstream_url}/invoke"},
            )
            client = TestClient(create_app(config))
            body = client.post(
                "/invoke", json={"v": 1, "id": "r1", "tool": "audio_classify", "args": {}}
            ).json()
        assert body == {"v": 1, "id": "r1", "ok": True, "result": {"classes": []}}

    def test_unreachable_upstream_is_backend_failure(self):
        config = AdapterConfig(
            tools=("audio_classify",),
            mock_mode=False,
            upstream_urls={"audio_classify": "http://127.0.0.1:9/invoke"},
        )
        client = TestClient(create_app(config))
        body = client.post(
            "/invoke", json={"v": 1, "id": "r2", "tool": "audio_classify", "args": {}}
        ).json()
        assert body["error"]["code"] == "BACKEND_FAILURE"
