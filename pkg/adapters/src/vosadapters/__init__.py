"""Tool servers exposing model capabilities behind the standard wire protocol."""

__version__ = "0.1.0"

from .overlay import OverlayError, render_overlay
from .schemas import STANDARD_TOOL_NAMES, descriptor, validate_args
from .server import AdapterConfig, AdapterConfigError, create_app

__all__ = [
    "AdapterConfig",
    "AdapterConfigError",
    "create_app",
    "render_overlay",
    "OverlayError",
    "STANDARD_TOOL_NAMES",
    "descriptor",
    "validate_args",
]
