"""Grammar for agent step texts: Thought plus one Action or Final Answer.

A conforming step looks like either of:

    Thought: <free text, may span lines>
    Action: tool_name(key="string", count=3, frames=[0, 14], flag=true)

    Thought: <free text>
    Final Answer: {"pivot_frame": 57, "object_id": "car_2"}

Argument literals are double-quoted strings with backslash escapes, integers,
floats, true/false, or bracketed lists of literals. Exactly one call per
Action; anything else raises a positioned AgentTextError.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Union

from .errors import AgentTextError
from .protocol import ToolCall

THOUGHT_MARKER = "Thought:"
ACTION_MARKER = "Action:"
FINAL_MARKER = "Final Answer:"

_IDENT_RE = re.compile(r"[a-z_][a-z0-9_]*")
_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_MAX_LIST_DEPTH = 32

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r", "/": "/"}


@dataclass(frozen=True)
class FinalAnswer:
    """Terminal decision: the pivot frame and the resolved object identity."""

    pivot_frame: int
    object_id: str


@dataclass(frozen=True)
class ParsedStep:
    thought: str
    action: Union[ToolCall, FinalAnswer]


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    last_nl = text.rfind("\n", 0, offset)
    column = offset - last_nl
    return line, column


def _error(text: str, offset: int, message: str) -> AgentTextError:
    offset = max(0, min(offset, len(text)))
    line, column = _position(text, offset)
    return AgentTextError(message, position=offset, line=line, column=column)


class _CallScanner:
    """Recursive-descent scanner for one ``name(key=literal, ...)`` call."""

    def __init__(self, text: str, start: int):
        self.text = text
        self.pos = start

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def fail(self, message: str):
        raise _error(self.text, self.pos, message)

    def expect(self, char: str) -> None:
        if self.pos >= len(self.text) or self.text[self.pos] != char:
            self.fail(f"expected '{char}'")
        self.pos += 1

    def ident(self, what: str) -> str:
        match = _IDENT_RE.match(self.text, self.pos)
        if not match:
            self.fail(f"expected {what}")
        self.pos = match.end()
        return match.group()

    def string(self) -> str:
        self.expect('"')
        out: list[str] = []
        while True:
            if self.pos >= len(self.text):
                self.fail("unterminated string")
            ch = self.text[self.pos]
            if ch == '"':
                self.pos += 1
                return "".join(out)
            if ch == "\\":
                self.pos += 1
                if self.pos >= len(self.text):
                    self.fail("unterminated escape")
                esc = self.text[self.pos]
                if esc in _ESCAPES:
                    out.append(_ESCAPES[esc])
                    self.pos += 1
                elif esc == "u":
                    hex_digits = self.text[self.pos + 1 : self.pos + 5]
                    if len(hex_digits) != 4 or any(c not in "0123456789abcdefABCDEF" for c in hex_digits):
                        self.fail("invalid \\u escape")
                    out.append(chr(int(hex_digits, 16)))
                    self.pos += 5
                else:
                    self.fail(f"invalid escape '\\{esc}'")
            elif ch == "\n":
                self.fail("unterminated string")
            else:
                out.append(ch)
                self.pos += 1

    def literal(self, depth: int = 0) -> Any:
        if depth > _MAX_LIST_DEPTH:
            self.fail("lists nested too deeply")
        self.skip_ws()
        if self.pos >= len(self.text):
            self.fail("expected a literal")
        ch = self.text[self.pos]
        if ch == '"':
            return self.string()
        if ch == "[":
            self.pos += 1
            items: list[Any] = []
            self.skip_ws()
            if self.pos < len(self.text) and self.text[self.pos] == "]":
                self.pos += 1
                return items
            while True:
                items.append(self.literal(depth + 1))
                self.skip_ws()
                if self.pos >= len(self.text):
                    self.fail("unterminated list")
                if self.text[self.pos] == ",":
                    self.pos += 1
                    continue
                if self.text[self.pos] == "]":
                    self.pos += 1
                    return items
                self.fail("expected ',' or ']' in list")
        if self.text.startswith("true", self.pos):
            self.pos += 4
            return True
        if self.text.startswith("false", self.pos):
            self.pos += 5
            return False
        match = _NUMBER_RE.match(self.text, self.pos)
        if match:
            token = match.group()
            self.pos = match.end()
            if "." in token or "e" in token or "E" in token:
                return float(token)
            return int(token)
        self.fail("expected a literal (string, number, bool, or list)")

    def call(self) -> ToolCall:
        self.skip_ws()
        name = self.ident("tool name")
        self.skip_ws()
        self.expect("(")
        args: dict[str, Any] = {}
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == ")":
            self.pos += 1
            return ToolCall(call_id="", tool=name, args=args)
        while True:
            self.skip_ws()
            key = self.ident("parameter name")
            if key in args:
                self.fail(f"duplicate parameter '{key}'")
            self.skip_ws()
            self.expect("=")
            args[key] = self.literal()
            self.skip_ws()
            if self.pos >= len(self.text):
                self.fail("unterminated call, expected ')'")
            if self.text[self.pos] == ",":
                self.pos += 1
                continue
            if self.text[self.pos] == ")":
                self.pos += 1
                return ToolCall(call_id="", tool=name, args=args)
            self.fail("expected ',' or ')'")


def _marker_offsets(text: str, start: int) -> list[tuple[int, int, str]]:
    """(line_start, marker_end, kind) for Action/Final Answer lines after start."""
    found = []
    for match in re.finditer(r"^[ \t]*(Action:|Final Answer:)", text[start:], re.MULTILINE):
        found.append((start + match.start(), start + match.end(), match.group(1)))
    return found


def parse_agent_text(text: str) -> ParsedStep:
    """Parse one agent step. Never raises anything but AgentTextError."""
    if not isinstance(text, str):
        raise AgentTextError("agent output must be text", position=0, line=1, column=1)
    try:
        return _parse(text)
    except AgentTextError:
        raise
    except RecursionError:
        raise _error(text, 0, "input nested too deeply") from None


def _parse(text: str) -> ParsedStep:
    stripped_start = len(text) - len(text.lstrip())
    if not text[stripped_start:].startswith(THOUGHT_MARKER):
        raise _error(text, stripped_start, f"expected '{THOUGHT_MARKER}'")
    thought_start = stripped_start + len(THOUGHT_MARKER)

    markers = _marker_offsets(text, thought_start)
    if not markers:
        raise _error(text, len(text), f"expected '{ACTION_MARKER}' or '{FINAL_MARKER}' after the thought")
    if len(markers) > 1:
        raise _error(text, markers[1][0], "multiple Action/Final Answer sections")
    marker_start, marker_end, kind = markers[0]
    thought = text[thought_start:marker_start].strip()

    if kind == ACTION_MARKER:
        scanner = _CallScanner(text, marker_end)
        call = scanner.call()
        rest = text[scanner.pos :]
        if rest.strip():
            raise _error(text, scanner.pos + (len(rest) - len(rest.lstrip())), "unexpected trailing content after the call")
        return ParsedStep(thought=thought, action=call)

    remainder = text[marker_end:]
    pad = len(remainder) - len(remainder.lstrip())
    body = remainder.lstrip()
    try:
        obj, end = json.JSONDecoder().raw_decode(body)
    except json.JSONDecodeError as exc:
        raise _error(text, marker_end + pad + exc.pos, f"bad final answer JSON: {exc.msg}") from None
    if body[end:].strip():
        raise _error(text, marker_end + pad + end, "unexpected trailing content after the final answer")
    if not isinstance(obj, dict):
        raise _error(text, marker_end + pad, "final answer must be a JSON object")
    pivot = obj.get("pivot_frame")
    object_id = obj.get("object_id")
    if not isinstance(pivot, int) or isinstance(pivot, bool):
        raise _error(text, marker_end + pad, "final answer needs an integer 'pivot_frame'")
    if not isinstance(object_id, str):
        raise _error(text, marker_end + pad, "final answer needs a string 'object_id'")
    return ParsedStep(thought=thought, action=FinalAnswer(pivot_frame=pivot, object_id=object_id))


# --- formatting (inverse direction, used by deterministic backends) ------------


def format_literal(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_literal(v) for v in value) + "]"
    raise ValueError(f"cannot format {type(value).__name__} as an action literal")


def format_tool_call(tool: str, args: dict[str, Any]) -> str:
    inner = ", ".join(f"{k}={format_literal(v)}" for k, v in args.items())
    return f"{tool}({inner})"


def format_final_answer(answer: FinalAnswer) -> str:
    return json.dumps({"pivot_frame": answer.pivot_frame, "object_id": answer.object_id})


def format_step(thought: str, action_text: str, final: bool = False) -> str:
    marker = FINAL_MARKER if final else ACTION_MARKER
    return f"{THOUGHT_MARKER} {thought}\n{marker} {action_text}"
