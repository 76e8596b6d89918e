"""Typed tool-invocation contract: descriptors, calls, results, and transports.

Both the in-process simulator and remote adapters speak this protocol. The
wire format is UTF-8 JSON, one message per line (stdio) or per HTTP body:

    request:  {"v": 1, "id": "...", "tool": "...", "args": {...}}
    response: {"v": 1, "id": "...", "ok": true, "result": ...}
              {"v": 1, "id": "...", "ok": false, "error": {"code", "message", "log"}}

Tool-level failures are encoded in the response, never raised: ``invoke``
returns a ToolResult for unknown tools, bad arguments, backend crashes, and
timeouts alike.
"""

from __future__ import annotations

import json
import re
import threading
import traceback
from dataclasses import dataclass
from typing import Any, Callable

import httpx

from .errors import ConnectivityError, ProtocolError, RegistrationError

PROTOCOL_VERSION = 1
ERROR_CODES = ("UNKNOWN_TOOL", "BAD_ARGS", "BACKEND_FAILURE", "TIMEOUT")
PARAM_TYPES = ("string", "int", "float", "bool", "list-of-int", "list-of-string")
LOG_CHAR_LIMIT = 2000
DEFAULT_TIMEOUT_S = 30.0

_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class ToolArgumentError(Exception):
    """Raised by a backend when argument values are semantically invalid."""


class ToolFault(Exception):
    """Raised by a backend to simulate an internal failure."""


def canonical_json(value: Any) -> str:
    """Deterministic JSON rendering: sorted keys, compact separators."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    required: bool
    description: str

    def __post_init__(self):
        if self.type not in PARAM_TYPES:
            raise ProtocolError(f"unknown parameter type '{self.type}'")
        if not _NAME_RE.match(self.name):
            raise ProtocolError(f"bad parameter name '{self.name}'")


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    params: tuple[ParamSpec, ...]
    returns: str

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if not _NAME_RE.match(self.name):
            raise ProtocolError(f"tool name '{self.name}' must be lowercase snake case")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ProtocolError(f"duplicate parameter names in tool '{self.name}'")

    def to_wire(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "params": [
                {
                    "name": p.name,
                    "type": p.type,
                    "required": p.required,
                    "description": p.description,
                }
                for p in self.params
            ],
            "returns": self.returns,
        }

    @classmethod
    def from_wire(cls, data: dict) -> "ToolDescriptor":
        try:
            return cls(
                name=data["name"],
                description=data["description"],
                params=tuple(
                    ParamSpec(p["name"], p["type"], p["required"], p["description"])
                    for p in data["params"]
                ),
                returns=data["returns"],
            )
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed descriptor: {exc}") from exc


@dataclass(frozen=True)
class ToolCall:
    call_id: str
    tool: str
    args: dict[str, Any]


@dataclass(frozen=True)
class ToolError:
    code: str
    message: str
    log: str = ""

    def __post_init__(self):
        if self.code not in ERROR_CODES:
            raise ProtocolError(f"unknown error code '{self.code}'")


@dataclass(frozen=True)
class ToolResult:
    call_id: str
    ok: bool
    result: Any = None
    error: ToolError | None = None

    def __post_init__(self):
        if self.ok and self.error is not None:
            raise ProtocolError("an ok result may not carry an error")
        if not self.ok and self.error is None:
            raise ProtocolError("a failed result must carry an error")


BackendFn = Callable[[dict, str], Any]


class Registry:
    """Ordered tool table; descriptor order determines prompt rendering order.

    Treat as immutable once episodes start: register everything up front.
    """

    def __init__(self):
        self._entries: list[tuple[ToolDescriptor, BackendFn]] = []
        self._by_name: dict[str, tuple[ToolDescriptor, BackendFn]] = {}

    def register(self, descriptor: ToolDescriptor, backend: BackendFn) -> None:
        if descriptor.name in self._by_name:
            raise RegistrationError(f"tool '{descriptor.name}' is already registered")
        entry = (descriptor, backend)
        self._entries.append(entry)
        self._by_name[descriptor.name] = entry

    def descriptors(self) -> tuple[ToolDescriptor, ...]:
        return tuple(d for d, _ in self._entries)

    def lookup(self, name: str) -> tuple[ToolDescriptor, BackendFn] | None:
        return self._by_name.get(name)

    def __len__(self) -> int:
        return len(self._entries)


def render_descriptors(registry: Registry) -> str:
    """One line per tool: ``- name(param: type, ...) -> returns: description``.

    Optional parameters carry a ``?`` suffix on their type.
    """
    lines = []
    for d in registry.descriptors():
        sig = ", ".join(
            f"{p.name}: {p.type}" + ("" if p.required else "?") for p in d.params
        )
        lines.append(f"- {d.name}({sig}) -> {d.returns}: {d.description}")
    return "\n".join(lines)


def _value_matches(type_: str, value: Any) -> bool:
    if type_ == "string":
        return isinstance(value, str)
    if type_ == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if type_ == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if type_ == "bool":
        return isinstance(value, bool)
    if type_ == "list-of-int":
        return isinstance(value, list) and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        )
    if type_ == "list-of-string":
        return isinstance(value, list) and all(isinstance(v, str) for v in value)
    return False


def validate_args(descriptor: ToolDescriptor, args: Any) -> str | None:
    """Return a diagnostic string if args do not satisfy the descriptor."""
    if not isinstance(args, dict):
        return f"args must be an object, got {type(args).__name__}"
    known = {p.name: p for p in descriptor.params}
    for key in args:
        if key not in known:
            return f"unknown parameter '{key}' for tool '{descriptor.name}'"
    for p in descriptor.params:
        if p.name not in args:
            if p.required:
                return f"missing required parameter '{p.name}'"
            continue
        if not _value_matches(p.type, args[p.name]):
            return (
                f"parameter '{p.name}' expects {p.type},"
                f" got {type(args[p.name]).__name__}"
            )
    return None


def _error_result(call: ToolCall, code: str, message: str, log: str = "") -> ToolResult:
    return ToolResult(
        call_id=call.call_id,
        ok=False,
        error=ToolError(code=code, message=message, log=log[:LOG_CHAR_LIMIT]),
    )


def invoke(registry, call: ToolCall, timeout: float = DEFAULT_TIMEOUT_S) -> ToolResult:
    """Type-checked dispatch of one call; all failures come back as ToolResults.

    A non-positive timeout counts as an already-expired deadline and yields
    TIMEOUT without dispatching; a backend still running at the deadline is
    abandoned (its thread is a daemon) and reported as TIMEOUT. Remote
    registries dispatch over their own transport instead.
    """
    remote = getattr(registry, "invoke_remote", None)
    if remote is not None:
        return remote(call, timeout)
    entry = registry.lookup(call.tool)
    if entry is None:
        return _error_result(call, "UNKNOWN_TOOL", f"no tool named '{call.tool}'")
    descriptor, backend = entry
    problem = validate_args(descriptor, call.args)
    if problem is not None:
        return _error_result(call, "BAD_ARGS", problem)
    if timeout is not None and timeout <= 0:
        return _error_result(
            call, "TIMEOUT", f"deadline expired before dispatching '{call.tool}'"
        )

    box: dict[str, Any] = {}

    def _run():
        try:
            box["value"] = backend(dict(call.args), call.call_id)
        except BaseException as exc:  # noqa: BLE001 - isolation boundary
            box["exc"] = exc
            box["tb"] = traceback.format_exc()

    worker = threading.Thread(target=_run, daemon=True)
    worker.start()
    worker.join(timeout)
    if worker.is_alive():
        return _error_result(
            call, "TIMEOUT", f"tool '{call.tool}' exceeded {timeout:g}s"
        )
    if "exc" in box:
        exc = box["exc"]
        if isinstance(exc, ToolArgumentError):
            return _error_result(call, "BAD_ARGS", str(exc))
        return _error_result(call, "BACKEND_FAILURE", str(exc), log=box["tb"])
    value = box.get("value")
    try:
        canonical_json(value)
    except (TypeError, ValueError) as exc:
        return _error_result(
            call, "BACKEND_FAILURE", f"tool returned a non-serializable value: {exc}"
        )
    return ToolResult(call_id=call.call_id, ok=True, result=value)


# --- wire codec ---------------------------------------------------------------


def call_to_wire(call: ToolCall) -> dict:
    return {"v": PROTOCOL_VERSION, "id": call.call_id, "tool": call.tool, "args": call.args}


def result_to_wire(result: ToolResult) -> dict:
    wire: dict[str, Any] = {"v": PROTOCOL_VERSION, "id": result.call_id, "ok": result.ok}
    if result.ok:
        wire["result"] = result.result
    else:
        wire["error"] = {
            "code": result.error.code,
            "message": result.error.message,
            "log": result.error.log,
        }
    return wire


def _check_version(data: dict) -> None:
    if data.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {data.get('v')!r}")


def call_from_wire(data: dict) -> ToolCall:
    _check_version(data)
    try:
        call_id, tool, args = data["id"], data["tool"], data["args"]
    except KeyError as exc:
        raise ProtocolError(f"request missing field {exc}") from exc
    if not isinstance(call_id, str) or not isinstance(tool, str) or not isinstance(args, dict):
        raise ProtocolError("request fields have wrong types")
    return ToolCall(call_id=call_id, tool=tool, args=args)


def result_from_wire(data: dict) -> ToolResult:
    _check_version(data)
    try:
        call_id, ok = data["id"], data["ok"]
    except KeyError as exc:
        raise ProtocolError(f"response missing field {exc}") from exc
    if not isinstance(call_id, str) or not isinstance(ok, bool):
        raise ProtocolError("response fields have wrong types")
    has_result = "result" in data
    has_error = "error" in data
    if has_result and has_error:
        raise ProtocolError("response carries both result and error")
    if ok:
        if not has_result:
            raise ProtocolError("ok response missing result")
        return ToolResult(call_id=call_id, ok=True, result=data["result"])
    if not has_error:
        raise ProtocolError("failed response missing error")
    err = data["error"]
    try:
        error = ToolError(code=err["code"], message=err["message"], log=err.get("log", ""))
    except (KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed error body: {exc}") from exc
    return ToolResult(call_id=call_id, ok=False, error=error)


def encode_message(message: ToolCall | ToolResult) -> bytes:
    """Single-line UTF-8 JSON, no trailing newline."""
    wire = call_to_wire(message) if isinstance(message, ToolCall) else result_to_wire(message)
    return json.dumps(wire, separators=(",", ":")).encode("utf-8")


def decode_message(data: bytes) -> ToolCall | ToolResult:
    try:
        wire = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed message: {exc}") from exc
    if not isinstance(wire, dict):
        raise ProtocolError("message must be a JSON object")
    _check_version(wire)
    if "tool" in wire:
        return call_from_wire(wire)
    if "ok" in wire:
        return result_from_wire(wire)
    raise ProtocolError("message is neither a request nor a response")


# --- stdio transport ----------------------------------------------------------


def serve_stdio(registry: Registry, stdin, stdout, timeout: float = DEFAULT_TIMEOUT_S) -> None:
    """Serve line-delimited requests from a byte stream until EOF.

    Malformed lines get a BAD_ARGS-coded error response so clients are never
    left hanging; the loop itself never raises for request-level problems.
    """
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            call = decode_message(line)
            if not isinstance(call, ToolCall):
                raise ProtocolError("expected a request message")
        except ProtocolError as exc:
            wire = result_to_wire(
                ToolResult(
                    call_id="",
                    ok=False,
                    error=ToolError("BAD_ARGS", f"protocol error: {exc}"),
                )
            )
            stdout.write(json.dumps(wire, separators=(",", ":")).encode("utf-8") + b"\n")
            stdout.flush()
            continue
        result = invoke(registry, call, timeout=timeout)
        stdout.write(encode_message(result) + b"\n")
        stdout.flush()


# --- conformance targets -------------------------------------------------------


class InProcessTarget:
    """Conformance adapter over an in-process registry."""

    def __init__(self, registry: Registry):
        self._registry = registry

    def list_tools(self) -> list[dict]:
        return [d.to_wire() for d in self._registry.descriptors()]

    def invoke_raw(self, request: dict, timeout: float) -> dict:
        call = call_from_wire(request)
        return result_to_wire(invoke(self._registry, call, timeout=timeout))

    def close(self) -> None:
        pass


class HttpTarget:
    """Conformance adapter over the HTTP transport (GET /tools, POST /invoke)."""

    def __init__(self, base_url: str, connect_timeout: float = 5.0):
        self._base_url = base_url.rstrip("/")
        self._connect_timeout = connect_timeout
        self._client = httpx.Client()

    def list_tools(self) -> list[dict]:
        try:
            response = self._client.get(
                f"{self._base_url}/tools", timeout=self._connect_timeout
            )
        except httpx.HTTPError as exc:
            raise ConnectivityError(f"cannot reach {self._base_url}: {exc}") from exc
        if response.status_code != 200:
            raise ConnectivityError(
                f"GET /tools returned status {response.status_code}"
            )
        return response.json()

    def invoke_raw(self, request: dict, timeout: float) -> dict:
        if timeout is not None and timeout <= 0:
            return {
                "v": PROTOCOL_VERSION,
                "id": request.get("id", ""),
                "ok": False,
                "error": {
                    "code": "TIMEOUT",
                    "message": "deadline expired before dispatch",
                    "log": "",
                },
            }
        try:
            response = self._client.post(
                f"{self._base_url}/invoke", json=request, timeout=timeout
            )
        except httpx.TimeoutException:
            return {
                "v": PROTOCOL_VERSION,
                "id": request.get("id", ""),
                "ok": False,
                "error": {"code": "TIMEOUT", "message": f"no response within {timeout:g}s", "log": ""},
            }
        except httpx.HTTPError as exc:
            raise ConnectivityError(f"cannot reach {self._base_url}: {exc}") from exc
        if response.status_code != 200:
            raise ProtocolError(
                f"POST /invoke returned status {response.status_code}: {response.text[:200]}"
            )
        return response.json()

    def close(self) -> None:
        self._client.close()


class RemoteRegistry:
    """Registry-compatible view of a served tool endpoint.

    Descriptors are fetched once at construction; ``invoke`` routes calls over
    HTTP, so an engine episode can run as a thin client of a live server.
    """

    def __init__(self, base_url: str):
        self._target = HttpTarget(base_url)
        self._descriptors = tuple(
            ToolDescriptor.from_wire(d) for d in self._target.list_tools()
        )

    def descriptors(self) -> tuple[ToolDescriptor, ...]:
        return self._descriptors

    def lookup(self, name: str):
        for d in self._descriptors:
            if d.name == name:
                return d, None
        return None

    def __len__(self) -> int:
        return len(self._descriptors)

    def invoke_remote(self, call: ToolCall, timeout: float) -> ToolResult:
        try:
            wire = self._target.invoke_raw(call_to_wire(call), timeout)
            result = result_from_wire(wire)
        except (ConnectivityError, ProtocolError) as exc:
            return _error_result(call, "BACKEND_FAILURE", f"remote invoke failed: {exc}")
        if result.call_id != call.call_id:
            return _error_result(
                call, "BACKEND_FAILURE",
                f"remote response correlation mismatch: {result.call_id!r}",
            )
        return result

    def close(self) -> None:
        self._target.close()


# --- conformance suite ----------------------------------------------------------

# Argument templates for standard tools the suite knows how to call, in
# preference order.
_VALID_CALL_TEMPLATES = (
    ("audio_classify", {}),
    ("temporal_search_coarse", {"query": "conformance probe"}),
    ("temporal_search_fine", {"query": "conformance probe"}),
    ("identify_instance", {"frames": [0], "category": "horse", "description": ""}),
)


@dataclass(frozen=True)
class ConformanceCase:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ConformanceReport:
    cases: tuple[ConformanceCase, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.cases)

    def render(self) -> str:
        lines = [
            f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.cases
        ]
        verdict = "all cases passed" if self.ok else "some cases FAILED"
        return "\n".join(lines + [verdict])


def _expect_response(response: dict, request_id: str, *, ok: bool, code: str | None = None) -> str | None:
    if response.get("v") != PROTOCOL_VERSION:
        return f"wrong protocol version {response.get('v')!r}"
    if response.get("id") != request_id:
        return f"call_id not echoed: sent {request_id!r}, got {response.get('id')!r}"
    if response.get("ok") is not ok:
        return f"expected ok={ok}, got {response.get('ok')!r} ({response.get('error')})"
    if ("result" in response) and ("error" in response):
        return "response carries both result and error"
    if ok and "result" not in response:
        return "ok response missing result"
    if not ok:
        err = response.get("error")
        if not isinstance(err, dict):
            return "failed response missing error object"
        if code is not None and err.get("code") != code:
            return f"expected error code {code}, got {err.get('code')!r}"
    return None


def conformance_check(target, timeout: float = 10.0) -> ConformanceReport:
    """Exercise a backend endpoint: listing, a valid call, BAD_ARGS, UNKNOWN_TOOL,
    and timeout behavior. Raises ConnectivityError if nothing is listening."""
    cases: list[ConformanceCase] = []

    tools = target.list_tools()  # ConnectivityError propagates
    names = [t.get("name") for t in tools if isinstance(t, dict)]
    listing_ok = (
        bool(tools)
        and len(names) == len(set(names))
        and all(
            isinstance(t, dict) and {"name", "description", "params", "returns"} <= set(t)
            for t in tools
        )
    )
    cases.append(
        ConformanceCase(
            "descriptor_listing",
            listing_ok,
            f"{len(tools)} descriptors" if listing_ok else f"malformed listing: {tools!r:.200}",
        )
    )

    template = next(((n, a) for n, a in _VALID_CALL_TEMPLATES if n in names), None)
    if template is None:
        cases.append(
            ConformanceCase("valid_call", False, "no standard tool available to call")
        )
        first_tool = names[0] if names else "audio_classify"
    else:
        name, args = template
        first_tool = name
        response = target.invoke_raw(
            {"v": PROTOCOL_VERSION, "id": "conf-valid", "tool": name, "args": args},
            timeout,
        )
        problem = _expect_response(response, "conf-valid", ok=True)
        cases.append(
            ConformanceCase(
                "valid_call", problem is None, problem or f"{name} answered ok"
            )
        )

    response = target.invoke_raw(
        {
            "v": PROTOCOL_VERSION,
            "id": "conf-badargs",
            "tool": first_tool,
            "args": {"__no_such_param__": 1},
        },
        timeout,
    )
    problem = _expect_response(response, "conf-badargs", ok=False, code="BAD_ARGS")
    cases.append(
        ConformanceCase("bad_args", problem is None, problem or "BAD_ARGS returned")
    )

    response = target.invoke_raw(
        {"v": PROTOCOL_VERSION, "id": "conf-unknown", "tool": "__conformance_missing__", "args": {}},
        timeout,
    )
    problem = _expect_response(response, "conf-unknown", ok=False, code="UNKNOWN_TOOL")
    cases.append(
        ConformanceCase("unknown_tool", problem is None, problem or "UNKNOWN_TOOL returned")
    )

    call_name = template[0] if template else first_tool
    call_args = template[1] if template else {}
    response = target.invoke_raw(
        {"v": PROTOCOL_VERSION, "id": "conf-timeout", "tool": call_name, "args": call_args},
        0.0,
    )
    problem = _expect_response(response, "conf-timeout", ok=False, code="TIMEOUT")
    cases.append(
        ConformanceCase("timeout", problem is None, problem or "expired deadline yields TIMEOUT")
    )

    return ConformanceReport(tuple(cases))
