"""Command-line front end.

Subcommands: run, leak, depgraph, feedback, diff-trace, check-label.

Exit codes: 0 success (a FlowDenied observed inside an experiment is a
result, not a failure), 1 domain outcome/error (e.g. traces differ), 2 bad
configuration or unparseable input. Output is deterministic given inputs:
reports are JSON with sorted keys, traces are JSON Lines, and no wall-clock
value is ever emitted.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter

from .depgraph import DepGraph, analyze
from .engine import Trace, endpoint_id
from .errors import CloudriskError, ConfigError, ParseError
from .feedback import ControllerConfig, capacity_loss, detect_oscillation, simulate_coupled
from .labels import Label, can_flow
from .scenarios import (
    EncoderSpec,
    Scenario,
    ScenarioConfig,
    Workload,
    build_scenario,
    estimate_leak_rate,
    run,
)


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def run_report(trace: Trace, principals) -> dict:
    """Summary of a run: monitor decisions, per-principal completion ticks,
    and every distinct label that appeared (the label audit)."""
    accepted = 0
    rejections: Counter = Counter()
    for ev in trace.events:
        if ev.kind != "Send":
            continue
        if ev.detail.startswith("rejected"):
            rejections[ev.detail] += 1
        else:
            accepted += 1
    completions = {
        p: [ev.tick for ev in trace.deliveries_to(endpoint_id(p))]
        for p in principals
    }
    return {
        "scenario": trace.scenario_id,
        "seed": trace.seed,
        "monitor": {
            "accepted": accepted,
            "rejected": sum(rejections.values()),
            "rejections": {reason: n for reason, n in sorted(rejections.items())},
        },
        "completions": completions,
        "labels_observed": sorted({ev.label for ev in trace.events}),
    }


def diff_trace(path_a: str, path_b: str, projection: str | None = None):
    """Compare two trace files, optionally after projecting to one
    principal's observations. Returns (identical, message)."""
    def load(path):
        with open(path, "r", encoding="utf-8") as fh:
            return Trace.parse(fh.read())

    a, b = load(path_a), load(path_b)
    if projection is not None:
        a, b = a.project(projection), b.project(projection)
    lines_a = a.serialize().splitlines()
    lines_b = b.serialize().splitlines()
    for i, (la, lb) in enumerate(zip(lines_a, lines_b), start=1):
        if la != lb:
            return False, f"first divergence at line {i}:\n< {la}\n> {lb}"
    if len(lines_a) != len(lines_b):
        longer = path_a if len(lines_a) > len(lines_b) else path_b
        return False, (f"first divergence at line {min(len(lines_a), len(lines_b)) + 1}: "
                       f"{longer} has extra events")
    return True, "identical"


def _cmd_run(args) -> int:
    cfg = ScenarioConfig.from_file(args.scenario)
    workload = Workload.from_file(args.workload) if args.workload else Workload({})
    trace = run(build_scenario(cfg), workload, seed=args.seed)
    _emit(trace.serialize(), args.out)
    sys.stdout.write(_json(run_report(trace, cfg.principals)))
    return 0


def _cmd_leak(args) -> int:
    cfg = ScenarioConfig.from_file(args.scenario)
    encoder = EncoderSpec.demand() if args.encoder == "demand" else EncoderSpec.burst()
    report = estimate_leak_rate(Scenario(cfg), encoder, trials=args.trials,
                                seed=args.seed, observer=args.observer)
    _emit(_json(report.to_dict()), args.out)
    return 0


def _cmd_depgraph(args) -> int:
    graph = DepGraph.from_file(args.graph)
    report = analyze(graph, method=args.method, samples=args.samples, seed=args.seed)
    sys.stdout.write(_json(report.to_dict()))
    return 0


def _cmd_feedback(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = ControllerConfig.from_dict(json.load(fh))
    series = simulate_coupled(cfg, args.intervals)
    _emit(series.to_csv(), args.out)
    osc = detect_oscillation(series)
    sys.stdout.write(_json({
        "verdict": osc.verdict,
        "window_peak_to_peak": osc.window_peak_to_peak,
        "final_peak_to_peak": osc.final_peak_to_peak,
        "dominant_period": osc.dominant_period,
        "capacity_loss": capacity_loss(series),
    }))
    return 0


def _cmd_diff_trace(args) -> int:
    identical, message = diff_trace(args.trace_a, args.trace_b, args.project)
    sys.stdout.write(message + "\n")
    return 0 if identical else 1


def _cmd_check_label(args) -> int:
    src = Label.parse(args.src)
    dst = Label.parse(args.dst)
    if can_flow(src, dst):
        sys.stdout.write("flow: allowed\n")
    else:
        sys.stdout.write("flow: denied\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudrisk",
        description="Timing information flow control simulator and cloud risk analyzers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario against a workload")
    p.add_argument("scenario")
    p.add_argument("--workload", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="trace file (JSON Lines), - for stdout")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("leak", help="estimate the covert timing-channel leak rate")
    p.add_argument("scenario")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--encoder", choices=("demand", "burst"), default="demand")
    p.add_argument("--observer", default="A")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_leak)

    p = sub.add_parser("depgraph", help="AND/OR dependency reliability analysis")
    p.add_argument("graph")
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_depgraph)

    p = sub.add_parser("feedback", help="simulate coupled control loops")
    p.add_argument("config")
    p.add_argument("--intervals", type=int, default=60)
    p.add_argument("--out", default="-", help="series CSV, - for stdout")
    p.set_defaults(fn=_cmd_feedback)

    p = sub.add_parser("diff-trace", help="compare two trace files")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    p.add_argument("--project", default=None, help="project both traces to one principal first")
    p.set_defaults(fn=_cmd_diff_trace)

    p = sub.add_parser("check-label", help="check the flow rule between two labels")
    p.add_argument("src")
    p.add_argument("dst")
    p.set_defaults(fn=_cmd_check_label)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParseError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 2
    except FileNotFoundError as err:
        sys.stderr.write(f"error: {err}\n")
        return 2
    except CloudriskError as err:
        sys.stderr.write(f"error: {err}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
