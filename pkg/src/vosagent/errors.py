"""Exception hierarchy shared across the package."""


class VosAgentError(Exception):
    """Base class for all package errors."""


class ParameterError(VosAgentError, ValueError):
    """An operation was called with out-of-range or inconsistent parameters."""


class ShapeMismatchError(VosAgentError, ValueError):
    """Mask or sequence operands do not share the same dimensions."""


class CodecError(VosAgentError, ValueError):
    """Run-length data does not describe a valid canonical mask."""


class FrameRangeError(VosAgentError, IndexError):
    """A frame index lies outside the video's frame range."""


class ScenarioParseError(VosAgentError, ValueError):
    """A scenario file is malformed; message carries line/field diagnostics."""


class SchemaVersionError(ScenarioParseError):
    """A persisted file declares an unsupported schema version."""


class ProtocolError(VosAgentError, ValueError):
    """A wire message is malformed or has the wrong protocol version."""


class RegistrationError(VosAgentError, ValueError):
    """A tool name is already registered."""


class ConnectivityError(VosAgentError, RuntimeError):
    """A remote endpoint is unreachable."""


class PlaybackError(VosAgentError, RuntimeError):
    """A scripted generation backend ran out of canned responses."""


class EpisodeError(VosAgentError, RuntimeError):
    """An episode aborted because its generation backend failed."""


class AgentTextError(VosAgentError, ValueError):
    """Agent output does not conform to the action grammar.

    Carries the character offset of the first offending position.
    """

    def __init__(self, message: str, position: int, line: int = 0, column: int = 0):
        super().__init__(f"parse error at line {line}, column {column}: {message}")
        self.position = position
        self.line = line
        self.column = column


class TraceParseError(VosAgentError, ValueError):
    """A trace file is malformed; message names the offending line."""


class ComparisonError(VosAgentError, ValueError):
    """Two reports cannot be compared (different suite fingerprints)."""
