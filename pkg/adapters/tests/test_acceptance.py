"""Adapter acceptance: the mock server must pass the engine package's own
conformance suite, consumed strictly through external interfaces (the
installed CLI over HTTP), and overlay rendering must be byte-stable."""

import contextlib
import subprocess
import sys
from pathlib import Path

from vosadapters.overlay import render_overlay
from vosadapters.server import AdapterConfig, create_app

from conftest import GOLDEN_SPEC, BackgroundServer, gradient_frame

FIXTURE = Path(__file__).parent / "fixtures" / "overlay_golden.png"


@contextlib.contextmanager
def criterion(label):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {label}: FAIL")
        raise
    print(f"\nACCEPTANCE {label}: PASS")


def test_criterion_9_conformance():
    with criterion("9 adapter-conformance"):
        app = create_app(AdapterConfig())
        with BackgroundServer(app) as url:
            proc = subprocess.run(
                [sys.executable, "-m", "vosagent.cli", "conformance", "--url", url],
                capture_output=True,
                text=True,
                timeout=120,
            )
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert "all cases passed" in proc.stdout
        for case in ("descriptor_listing", "valid_call", "bad_args", "unknown_tool", "timeout"):
            assert f"[PASS] {case}" in proc.stdout, proc.stdout


def test_criterion_10_overlay_determinism():
    with criterion("10 overlay-determinism"):
        first = render_overlay(gradient_frame(), GOLDEN_SPEC)
        second = render_overlay(gradient_frame(), GOLDEN_SPEC)
        assert first == second
        assert first == FIXTURE.read_bytes()
