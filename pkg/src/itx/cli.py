"""Command line interface.

stdout carries only machine-readable payloads (JSON, DOT, formatted text);
diagnostics and logs go to stderr. Exit codes: 0 success, 1 diagnostics with
errors or replay divergence, 2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .lang import export_graph_dot, format_canonical, lint, parse
from .replay import parse_trace, replay, run_session, state_hash_hex, TraceFormatError
from .wire import score_report_to_wire

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _read_file(path: str) -> str | None:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        return None


def _load_scenario(path: str):
    """Parse and lint-check a scenario file; returns (scenario, exit_code)."""
    text = _read_file(path)
    if text is None:
        return None, EXIT_USAGE
    result = parse(text)
    for d in result.diagnostics:
        print(d.format(path), file=sys.stderr)
    if not result.ok:
        return None, EXIT_FAIL
    return result.scenario, EXIT_OK


def cmd_validate(args) -> int:
    text = _read_file(args.file)
    if text is None:
        return EXIT_USAGE
    result = parse(text)
    diags = list(result.diagnostics)
    if result.ok:
        diags.extend(lint(result.scenario, result.decl_spans))
    for d in diags:
        print(d.format(args.file), file=sys.stderr)
    return EXIT_FAIL if any(d.is_error for d in diags) else EXIT_OK


def cmd_fmt(args) -> int:
    scenario, code = _load_scenario(args.file)
    if scenario is None:
        return code
    text = format_canonical(scenario)
    if args.write:
        with open(args.file, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_graph(args) -> int:
    scenario, code = _load_scenario(args.file)
    if scenario is None:
        return code
    sys.stdout.write(export_graph_dot(scenario))
    return EXIT_OK


def cmd_run(args) -> int:
    scenario, code = _load_scenario(args.file)
    if scenario is None:
        return code
    trace_text = _read_file(args.trace)
    if trace_text is None:
        return EXIT_USAGE
    try:
        log = parse_trace(trace_text)
    except TraceFormatError as e:
        print(f"error: {args.trace}: {e}", file=sys.stderr)
        return EXIT_USAGE
    difficulty = args.difficulty or log.difficulty
    if not difficulty:
        difficulty = next(iter(scenario.difficulties))
    if difficulty not in scenario.difficulties:
        print(
            f"error: unknown difficulty '{difficulty}'; valid: {', '.join(scenario.difficulties)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    result = run_session(scenario, difficulty, log.records, max_ticks=args.max_ticks)
    payload = score_report_to_wire(result.report)
    if args.hash:
        payload["final_hash"] = state_hash_hex(result.session)
    if args.record:
        with open(args.record, "w", encoding="utf-8") as fh:
            fh.write(result.log.to_jsonl())
    print(json.dumps(payload, separators=(",", ":")))
    return EXIT_OK


def cmd_replay(args) -> int:
    scenario, code = _load_scenario(args.scenario)
    if scenario is None:
        return code
    text = _read_file(args.log)
    if text is None:
        return EXIT_USAGE
    try:
        log = parse_trace(text)
    except TraceFormatError as e:
        print(f"error: {args.log}: {e}", file=sys.stderr)
        return EXIT_USAGE
    outcome = replay(log, scenario)
    payload = {"ok": outcome.ok}
    if not outcome.ok:
        payload["first_divergent_tick"] = outcome.divergent_tick
        payload["reason"] = outcome.reason
    print(json.dumps(payload, separators=(",", ":")))
    return EXIT_OK if outcome.ok else EXIT_FAIL


def cmd_serve(args) -> int:
    from . import gateway

    scenario_dir = args.scenario_dir or os.environ.get("INTERACT_SCENARIO_DIR", ".")
    return gateway.serve(
        port=args.port,
        scenario_dir=scenario_dir,
        stream_divisor=args.stream_divisor,
        realtime=not args.fast,
        ui_dir=args.ui_dir,
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="itx", description="Assembly-training scenario engine.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="parse and lint a scenario file")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("fmt", help="print or rewrite the canonical form")
    sp.add_argument("file")
    sp.add_argument("--write", action="store_true", help="rewrite the file in place")
    sp.set_defaults(func=cmd_fmt)

    sp = sub.add_parser("graph", help="export the step graph")
    sp.add_argument("file")
    sp.add_argument("--dot", action="store_true", help="DOT output (default)")
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("run", help="execute a scripted trace")
    sp.add_argument("file")
    sp.add_argument("--trace", required=True, help="JSONL input trace")
    sp.add_argument("--difficulty", default=None)
    sp.add_argument("--record", default=None, help="write the replay log here")
    sp.add_argument("--hash", action="store_true", help="include the final state hash")
    sp.add_argument("--max-ticks", type=int, default=None)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("replay", help="verify a replay log against a scenario")
    sp.add_argument("log")
    sp.add_argument("--scenario", required=True)
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("serve", help="start the HTTP/streaming gateway")
    sp.add_argument("--port", type=int, default=8080)
    sp.add_argument("--scenario-dir", default=None)
    sp.add_argument("--stream-divisor", type=int, default=6)
    sp.add_argument("--fast", action="store_true", help="tick as fast as possible (testing)")
    sp.add_argument("--ui-dir", default=None, help="serve a built studio UI from this directory")
    sp.set_defaults(func=cmd_serve)

    return p


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    return args.func(args)


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
