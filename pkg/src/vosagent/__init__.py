"""Agentic referring video object segmentation workbench.

A deterministic, fully offline stack for studying adaptive tool-using agents
on referring video object segmentation: synthetic scenario oracles, a typed
tool protocol, a multi-step reasoning engine, and an evaluation harness with
a fixed-pipeline baseline.
"""

__version__ = "0.1.0"

from .masks import BinaryMask, EvalScores, MaskSequence, aggregate_miou, boundary_f, iou, sequence_scores
from .scenario import GenerationParams, Scenario, generate_scenario, load_scenario, save_scenario, synthesize_narrative
from .planner import Plan, ReferenceType, RulePlanner, StepIntent, classify_reference, consolidate_query, make_plan
from .protocol import Registry, ToolCall, ToolDescriptor, ToolResult, conformance_check, invoke, render_descriptors
from .simtools import NoiseConfig, build_sim_registry
from .engine import EngineConfig, Trace, apply_fallback, build_system_prompt, run_episode
from .grammar import FinalAnswer, parse_agent_text
from .backends import PolicyBackend, RemoteBackend, ScriptedBackend
from .harness import BenchmarkSuite, RunConfig, compare_reports, gen_suite, load_suite, run_baseline_fixed, run_benchmark

__all__ = [
    "BinaryMask",
    "MaskSequence",
    "EvalScores",
    "iou",
    "boundary_f",
    "sequence_scores",
    "aggregate_miou",
    "Scenario",
    "GenerationParams",
    "generate_scenario",
    "load_scenario",
    "save_scenario",
    "synthesize_narrative",
    "Plan",
    "ReferenceType",
    "StepIntent",
    "RulePlanner",
    "classify_reference",
    "consolidate_query",
    "make_plan",
    "Registry",
    "ToolCall",
    "ToolDescriptor",
    "ToolResult",
    "render_descriptors",
    "invoke",
    "conformance_check",
    "NoiseConfig",
    "build_sim_registry",
    "EngineConfig",
    "Trace",
    "FinalAnswer",
    "parse_agent_text",
    "build_system_prompt",
    "run_episode",
    "apply_fallback",
    "PolicyBackend",
    "ScriptedBackend",
    "RemoteBackend",
    "BenchmarkSuite",
    "RunConfig",
    "gen_suite",
    "load_suite",
    "run_benchmark",
    "run_baseline_fixed",
    "compare_reports",
]
