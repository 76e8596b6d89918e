"""FastAPI service exposing a tool registry over the HTTP wire protocol.

GET /tools returns the descriptor list; POST /invoke takes one request body
and returns one response body, with tool-level failures encoded in the body
(HTTP 200). Protocol-level problems (bad JSON shape, wrong version) surface
as HTTP 4xx. An engine can run episodes as a thin client of this server by
building its registry with ``protocol.RemoteRegistry(url)``.
"""

from __future__ import annotations

from typing import Any, Literal

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .protocol import (
    PROTOCOL_VERSION,
    Registry,
    ToolCall,
    invoke,
    result_to_wire,
)


class InvokeRequest(BaseModel):
    v: int = Field(description="protocol version, must be 1")
    id: str
    tool: str
    args: dict[str, Any]


class WireError(BaseModel):
    code: Literal["UNKNOWN_TOOL", "BAD_ARGS", "BACKEND_FAILURE", "TIMEOUT"]
    message: str
    log: str = ""


class InvokeResponse(BaseModel):
    v: int = PROTOCOL_VERSION
    id: str
    ok: bool
    result: Any | None = None
    error: WireError | None = None


class ParamModel(BaseModel):
    name: str
    type: str
    required: bool
    description: str


class DescriptorModel(BaseModel):
    name: str
    description: str
    params: list[ParamModel]
    returns: str


def create_app(registry: Registry, default_timeout: float = 30.0) -> FastAPI:
    app = FastAPI(title="vosagent tool service", version="1")

    @app.get("/tools", response_model=list[DescriptorModel])
    def list_tools():
        return [d.to_wire() for d in registry.descriptors()]

    @app.post("/invoke", response_model=InvokeResponse, response_model_exclude_none=True)
    def invoke_tool(request: InvokeRequest):
        if request.v != PROTOCOL_VERSION:
            return JSONResponse(
                status_code=400,
                content={"detail": f"unsupported protocol version {request.v}"},
            )
        call = ToolCall(call_id=request.id, tool=request.tool, args=request.args)
        result = invoke(registry, call, timeout=default_timeout)
        return InvokeResponse.model_validate(result_to_wire(result))

    return app
