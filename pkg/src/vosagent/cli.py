"""Command-line interface.

Verbs: gen-suite, run, baseline, compare, replay, serve, conformance.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .engine import read_trace
from .errors import VosAgentError
from .grammar import FinalAnswer, parse_agent_text
from .protocol import HttpTarget, InProcessTarget, ToolCall, conformance_check
from .scenario import load_scenario
from .simtools import NoiseConfig, build_sim_registry


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="vosagent", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen-suite", help="generate a benchmark suite")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=50)

    p = sub.add_parser("run", help="run the agent over a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int, default=None)

    p = sub.add_parser("baseline", help="run the fixed two-step baseline over a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int, default=None)

    p = sub.add_parser("compare", help="compare two report.json files")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--out", default=None)

    p = sub.add_parser("replay", help="print a stored trace and re-check its actions")
    p.add_argument("--trace", required=True)

    p = sub.add_parser("serve", help="serve a scenario's tools over HTTP")
    p.add_argument("--scenario", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--noise-config", default=None)

    p = sub.add_parser("conformance", help="run the protocol conformance suite")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--url", help="HTTP endpoint to probe")
    group.add_argument("--scenario", help="probe an in-process simulated registry")

    return parser


def _load_config(path: str | None, parallelism: int | None) -> harness.RunConfig:
    config = harness.load_run_config(path) if path else harness.RunConfig()
    if parallelism is not None:
        from dataclasses import replace

        config = replace(config, parallelism=parallelism)
    return config


def _cmd_gen_suite(args) -> int:
    suite = harness.gen_suite(args.seed, args.out, count=args.count)
    print(f"wrote {len(suite.entries)} scenarios and suite.json to {args.out}")
    return 0


def _cmd_run(args, baseline: bool) -> int:
    suite = harness.load_suite(Path(args.suite))
    config = _load_config(args.config, args.parallelism)
    runner = harness.run_baseline_fixed if baseline else harness.run_benchmark
    report = runner(suite, config, out_dir=args.out)
    aggregates = report.aggregates()["overall"]
    mean_jf = aggregates.get("mean_jf")
    jf_text = f"{mean_jf:.4f}" if mean_jf is not None else "n/a"
    print(
        f"{report.mode}: {aggregates['rows']} rows, {aggregates['errors']} errors,"
        f" {aggregates['fallbacks']} fallbacks, mean_jf {jf_text}"
    )
    print(f"report written to {args.out}/report.json")
    return 0


def _cmd_compare(args) -> int:
    report_a = harness.load_report(args.report_a)
    report_b = harness.load_report(args.report_b)
    comparison = harness.compare_reports(report_a, report_b)
    print(harness.render_comparison(comparison))
    if args.out:
        Path(args.out).write_text(
            json.dumps(comparison, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def _cmd_replay(args) -> int:
    trace = read_trace(args.trace)
    print(f"query {trace.query_id}: {len(trace.steps)} steps,"
          f" fallback_used={trace.fallback_used}")
    mismatches = 0
    for step in trace.steps:
        kind = "final" if isinstance(step.action, FinalAnswer) else (
            step.action.tool if isinstance(step.action, ToolCall) else "parse-error"
        )
        print(f"  step {step.index}: {kind}")
        if step.thought:
            print(f"    thought: {step.thought}")
        if step.observation is not None:
            first_line = step.observation.splitlines()[0]
            print(f"    observation: {first_line[:120]}")
        if isinstance(step.action, ToolCall):
            reparsed = parse_agent_text(step.raw_text).action
            if not isinstance(reparsed, ToolCall) or reparsed.tool != step.action.tool \
                    or reparsed.args != step.action.args:
                mismatches += 1
                print("    REPLAY MISMATCH: stored action differs from re-parsed text")
    print(f"final: pivot_frame={trace.final.pivot_frame} object_id={trace.final.object_id}")
    if mismatches:
        raise VosAgentError(f"{mismatches} step(s) failed replay verification")
    print("replay check: all stored tool calls re-parse identically")
    return 0


def _make_registry(scenario_path: str, noise_path: str | None):
    scenario = load_scenario(scenario_path)
    noise = NoiseConfig()
    if noise_path:
        noise = NoiseConfig.from_dict(json.loads(Path(noise_path).read_text(encoding="utf-8")))
    return build_sim_registry(scenario, noise)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    registry = _make_registry(args.scenario, args.noise_config)
    app = create_app(registry)
    print(f"serving {len(registry)} tools on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_conformance(args) -> int:
    if args.url:
        target = HttpTarget(args.url)
    else:
        target = InProcessTarget(_make_registry(args.scenario, None))
    try:
        report = conformance_check(target)
    finally:
        target.close()
    print(report.render())
    return 0 if report.ok else 2


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        if args.verb == "gen-suite":
            return _cmd_gen_suite(args)
        if args.verb == "run":
            return _cmd_run(args, baseline=False)
        if args.verb == "baseline":
            return _cmd_run(args, baseline=True)
        if args.verb == "compare":
            return _cmd_compare(args)
        if args.verb == "replay":
            return _cmd_replay(args)
        if args.verb == "serve":
            return _cmd_serve(args)
        if args.verb == "conformance":
            return _cmd_conformance(args)
        raise VosAgentError(f"unknown verb {args.verb}")
    except VosAgentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
