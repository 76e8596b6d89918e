"""Adapter tool server: the standard wire protocol in front of real models.

Mock mode answers every served tool from canned fixtures with correct
schemas. Real mode relays each call to a per-tool upstream endpoint speaking
the same wire protocol; this package ships the transport shim only, never
model logic. Models are not assumed reentrant: one request at a time per
tool, concurrent requests queue on a per-tool lock.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import httpx
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .mockdata import MOCK_RESPONSES
from .schemas import (
    PROTOCOL_VERSION,
    STANDARD_TOOL_NAMES,
    descriptor,
    error_body,
    ok_body,
    validate_args,
)


class AdapterConfigError(ValueError):
    """The adapter configuration is unusable."""


@dataclass(frozen=True)
class AdapterConfig:
    tools: tuple[str, ...] = STANDARD_TOOL_NAMES
    mock_mode: bool = True
    upstream_urls: dict[str, str] = field(default_factory=dict)
    host: str = "127.0.0.1"
    port: int = 8800
    upstream_timeout: float = 120.0

    def __post_init__(self):
        object.__setattr__(self, "tools", tuple(self.tools))
        for name in self.tools:
            if name not in STANDARD_TOOL_NAMES:
                raise AdapterConfigError(f"unknown tool '{name}'")
        if not self.tools:
            raise AdapterConfigError("serve at least one tool")
        if not self.mock_mode:
            missing = [t for t in self.tools if t not in self.upstream_urls]
            if missing:
                raise AdapterConfigError(
                    f"real mode needs upstream_urls for: {', '.join(missing)}"
                )

    @classmethod
    def from_file(cls, path) -> "AdapterConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            tools=tuple(data.get("tools", STANDARD_TOOL_NAMES)),
            mock_mode=data.get("mock_mode", True),
            upstream_urls=dict(data.get("upstream_urls", {})),
            host=data.get("host", "127.0.0.1"),
            port=data.get("port", 8800),
            upstream_timeout=data.get("upstream_timeout", 120.0),
        )


class InvokeRequest(BaseModel):
    v: int
    id: str
    tool: str
    args: dict[str, Any]


def create_app(config: AdapterConfig = AdapterConfig()) -> FastAPI:
    app = FastAPI(title="vosagent model adapters", version="1")
    locks = {name: threading.Lock() for name in config.tools}
    client = httpx.Client(timeout=config.upstream_timeout) if not config.mock_mode else None

    def handle(name: str, args: dict, call_id: str) -> dict:
        if config.mock_mode:
            return ok_body(call_id, MOCK_RESPONSES[name])
        url = config.upstream_urls[name]
        try:
            response = client.post(
                url, json={"v": PROTOCOL_VERSION, "id": call_id, "tool": name, "args": args}
            )
        except httpx.TimeoutException:
            return error_body(call_id, "TIMEOUT", f"upstream {url} timed out")
        except httpx.HTTPError as exc:
            return error_body(call_id, "BACKEND_FAILURE", f"upstream {url} failed: {exc}")
        if response.status_code != 200:
            return error_body(
                call_id, "BACKEND_FAILURE", f"upstream {url} returned {response.status_code}"
            )
        return response.json()

    @app.get("/tools")
    def list_tools():
        return [descriptor(name) for name in config.tools]

    @app.post("/invoke")
    def invoke_tool(request: InvokeRequest):
        if request.v != PROTOCOL_VERSION:
            return JSONResponse(
                status_code=400,
                content={"detail": f"unsupported protocol version {request.v}"},
            )
        if request.tool not in locks:
            return error_body(request.id, "UNKNOWN_TOOL", f"no tool named '{request.tool}'")
        problem = validate_args(request.tool, request.args)
        if problem is not None:
            return error_body(request.id, "BAD_ARGS", problem)
        with locks[request.tool]:
            try:
                return handle(request.tool, request.args, request.id)
            except Exception as exc:  # noqa: BLE001 - isolation boundary
                return error_body(request.id, "BACKEND_FAILURE", str(exc))

    return app
