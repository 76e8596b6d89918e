import io
import random
import string
import time

import pytest

from vosagent.errors import ConnectivityError, ProtocolError, RegistrationError
from vosagent.protocol import (
    InProcessTarget,
    ParamSpec,
    Registry,
    ToolArgumentError,
    ToolCall,
    ToolDescriptor,
    ToolError,
    ToolResult,
    call_to_wire,
    conformance_check,
    decode_message,
    encode_message,
    invoke,
    render_descriptors,
    result_to_wire,
    serve_stdio,
    validate_args,
)
from vosagent.scenario import generate_scenario
from vosagent.simtools import build_sim_registry


def echo_descriptor(name="echo"):
    return ToolDescriptor(
        name=name,
        description="Echoes its arguments back.",
        params=(
            ParamSpec("text", "string", True, "payload"),
            ParamSpec("count", "int", False, "repetitions"),
        ),
        returns="object with 'text'",
    )


def make_registry():
    registry = Registry()
    registry.register(echo_descriptor(), lambda args, call_id: {"text": args["text"]})
    return registry


class TestRegistry:
    def test_register_keeps_order(self):
        registry = Registry()
        registry.register(echo_descriptor("beta"), lambda a, c: {})
        registry.register(echo_descriptor("alpha"), lambda a, c: {})
        assert [d.name for d in registry.descriptors()] == ["beta", "alpha"]

    def test_duplicate_name_rejected(self):
        registry = make_registry()
        with pytest.raises(RegistrationError):
            registry.register(echo_descriptor(), lambda a, c: {})

    def test_empty_registry_renders_empty(self):
        assert render_descriptors(Registry()) == ""

    def test_render_format(self):
        text = render_descriptors(make_registry())
        assert text == "- echo(text: string, count: int?) -> object with 'text': Echoes its arguments back."

    def test_render_deterministic(self):
        registry = build_sim_registry(generate_scenario(1))
        assert render_descriptors(registry) == render_descriptors(registry)

    def test_standard_registry_renders_one_block_per_tool(self):
        registry = build_sim_registry(generate_scenario(1))
        lines = render_descriptors(registry).splitlines()
        assert len(lines) == len(registry) == 5
        assert [l.split("(")[0] for l in lines] == [
            "- audio_classify",
            "- temporal_search_coarse",
            "- temporal_search_fine",
            "- identify_instance",
            "- segment_and_track",
        ]


class TestInvoke:
    def test_unknown_tool(self):
        result = invoke(make_registry(), ToolCall("c1", "missing", {}))
        assert not result.ok and result.error.code == "UNKNOWN_TOOL"
        assert result.call_id == "c1"

    def test_missing_required_arg_names_parameter(self):
        result = invoke(make_registry(), ToolCall("c2", "echo", {}))
        assert not result.ok and result.error.code == "BAD_ARGS"
        assert "'text'" in result.error.message

    def test_unknown_arg_rejected(self):
        result = invoke(make_registry(), ToolCall("c3", "echo", {"text": "x", "bogus": 1}))
        assert not result.ok and result.error.code == "BAD_ARGS"
        assert "bogus" in result.error.message

    def test_type_mismatch(self):
        result = invoke(make_registry(), ToolCall("c4", "echo", {"text": 5}))
        assert not result.ok and result.error.code == "BAD_ARGS"

    def test_bool_is_not_int(self):
        descriptor = echo_descriptor()
        assert validate_args(descriptor, {"text": "x", "count": True}) is not None
        assert validate_args(descriptor, {"text": "x", "count": 3}) is None

    def test_ok_call(self):
        result = invoke(make_registry(), ToolCall("c5", "echo", {"text": "hi"}))
        assert result.ok and result.result == {"text": "hi"}

    def test_backend_exception_becomes_backend_failure(self):
        registry = Registry()
        def explode(args, call_id):
            raise RuntimeError("boom")
        registry.register(echo_descriptor(), explode)
        result = invoke(registry, ToolCall("c6", "echo", {"text": "x"}))
        assert not result.ok and result.error.code == "BACKEND_FAILURE"
        assert "boom" in result.error.message
        assert "RuntimeError" in result.error.log

    def test_tool_argument_error_becomes_bad_args(self):
        registry = Registry()
        def picky(args, call_id):
            raise ToolArgumentError("no such thing")
        registry.register(echo_descriptor(), picky)
        result = invoke(registry, ToolCall("c7", "echo", {"text": "x"}))
        assert not result.ok and result.error.code == "BAD_ARGS"

    def test_stalling_backend_times_out(self):
        registry = Registry()
        def sleepy(args, call_id):
            time.sleep(0.5)
            return {}
        registry.register(echo_descriptor(), sleepy)
        result = invoke(registry, ToolCall("c8", "echo", {"text": "x"}), timeout=0.05)
        assert not result.ok and result.error.code == "TIMEOUT"

    def test_non_positive_timeout_is_expired_deadline(self):
        result = invoke(make_registry(), ToolCall("c9", "echo", {"text": "x"}), timeout=0)
        assert not result.ok and result.error.code == "TIMEOUT"

    def test_non_serializable_result(self):
        registry = Registry()
        registry.register(echo_descriptor(), lambda a, c: object())
        result = invoke(registry, ToolCall("c10", "echo", {"text": "x"}))
        assert not result.ok and result.error.code == "BACKEND_FAILURE"

    def test_log_truncated(self):
        registry = Registry()
        def chatty(args, call_id):
            raise RuntimeError("x" * 10000)
        registry.register(echo_descriptor(), chatty)
        result = invoke(registry, ToolCall("c11", "echo", {"text": "x"}))
        assert len(result.error.log) <= 2000

    def test_fuzzed_arg_maps_never_raise(self):
        rng = random.Random(55)
        registry = make_registry()
        pool = [None, True, False, 0, 1, -3, 2.5, "s", [1, 2], ["a"], {"k": 1}, [True]]
        for i in range(300):
            args = {
                rng.choice(["text", "count", "junk", ""]): rng.choice(pool)
                for _ in range(rng.randrange(3))
            }
            result = invoke(registry, ToolCall(f"f{i}", "echo", args))
            assert result.call_id == f"f{i}"


class TestWireCodec:
    def test_call_round_trip(self):
        call = ToolCall("id-1", "echo", {"text": "a", "count": 3, "frames": [1, 2]})
        assert decode_message(encode_message(call)) == call

    def test_result_round_trip(self):
        ok = ToolResult("id-2", True, result={"x": [1, "two", 3.5, True]})
        assert decode_message(encode_message(ok)) == ok
        err = ToolResult("id-3", False, error=ToolError("TIMEOUT", "slow", "log"))
        assert decode_message(encode_message(err)) == err

    def test_wrong_version_rejected(self):
        wire = call_to_wire(ToolCall("id", "echo", {}))
        wire["v"] = 2
        import json
        with pytest.raises(ProtocolError):
            decode_message(json.dumps(wire).encode())

    def test_result_and_error_exclusive(self):
        wire = result_to_wire(ToolResult("id", True, result=1))
        wire["error"] = {"code": "TIMEOUT", "message": "x", "log": ""}
        import json
        with pytest.raises(ProtocolError):
            decode_message(json.dumps(wire).encode())

    def test_malformed_bytes_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message(b"{nope")

    def test_randomized_round_trips(self):
        rng = random.Random(77)

        def literal(depth=0):
            kinds = ["int", "float", "str", "bool"]
            if depth < 2:
                kinds.append("list")
            kind = rng.choice(kinds)
            if kind == "int":
                return rng.randint(-1000, 1000)
            if kind == "float":
                return round(rng.uniform(-10, 10), 6)
            if kind == "str":
                return "".join(rng.choice(string.printable) for _ in range(rng.randrange(8)))
            if kind == "bool":
                return rng.random() < 0.5
            return [literal(depth + 1) for _ in range(rng.randrange(4))]

        for i in range(1000):
            if rng.random() < 0.5:
                message = ToolCall(
                    f"call-{i}",
                    "tool_" + rng.choice("abc"),
                    {f"k{j}": literal() for j in range(rng.randrange(4))},
                )
            elif rng.random() < 0.5:
                message = ToolResult(f"res-{i}", True, result={"value": literal()})
            else:
                message = ToolResult(
                    f"res-{i}",
                    False,
                    error=ToolError(rng.choice(("BAD_ARGS", "TIMEOUT")), "m", "l"),
                )
            assert decode_message(encode_message(message)) == message


class TestStdio:
    def test_round_trip_over_streams(self):
        registry = make_registry()
        requests = b"\n".join(
            encode_message(ToolCall(f"s{i}", "echo", {"text": f"t{i}"})) for i in range(3)
        ) + b"\n"
        out = io.BytesIO()
        serve_stdio(registry, io.BytesIO(requests).readlines(), out)
        lines = out.getvalue().strip().split(b"\n")
        assert len(lines) == 3
        for i, line in enumerate(lines):
            result = decode_message(line)
            assert result.ok and result.call_id == f"s{i}"

    def test_garbage_line_gets_error_response(self):
        out = io.BytesIO()
        serve_stdio(make_registry(), [b"this is not json\n"], out)
        result = decode_message(out.getvalue().strip())
        assert not result.ok and result.error.code == "BAD_ARGS"


class FaultyTarget:
    """Wire target that never echoes the call id."""

    def __init__(self, inner):
        self._inner = inner

    def list_tools(self):
        return self._inner.list_tools()

    def invoke_raw(self, request, timeout):
        response = self._inner.invoke_raw(request, timeout)
        response["id"] = "wrong-id"
        return response

    def close(self):
        pass


class TestConformance:
    def test_in_process_simulator_passes(self):
        registry = build_sim_registry(generate_scenario(2))
        report = conformance_check(InProcessTarget(registry))
        assert report.ok, report.render()
        assert {c.name for c in report.cases} == {
            "descriptor_listing", "valid_call", "bad_args", "unknown_tool", "timeout",
        }

    def test_id_echo_fault_detected(self):
        registry = build_sim_registry(generate_scenario(2))
        report = conformance_check(FaultyTarget(InProcessTarget(registry)))
        failed = {c.name for c in report.cases if not c.passed}
        assert "valid_call" in failed
        assert not report.ok

    def test_nothing_listening_is_connectivity_error(self):
        from vosagent.protocol import HttpTarget

        target = HttpTarget("http://127.0.0.1:9")  # discard port, nothing listens
        with pytest.raises(ConnectivityError):
            conformance_check(target)
        target.close()
