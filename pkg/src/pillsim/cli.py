"""Command line interface: run, replay, serve, export."""

from __future__ import annotations

import argparse
import asyncio
import sys
import tempfile
from datetime import datetime
from pathlib import Path

from .adherence import export_csv, read_log
from .bridge import serve_bridge
from .device import Device
from .domain import parse_config
from .scenario import parse_scenario_file, replay_check, run


def _load_scenario(path: str):
    scenario, errors = parse_scenario_file(path)
    if errors:
        for e in errors:
            print(f"{path}:{e.line}:{e.column}: {e.message}", file=sys.stderr)
        sys.exit(2)
    return scenario


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    report = run(scenario, args.out)
    for line, message in report.failed_expectations:
        print(f"{args.scenario}:{line}: FAIL {message}")
    print(f"log: {report.log_path}")
    print(f"transcript: {report.transcript_path}")
    print("PASS" if report.passed else "FAIL")
    return 0 if report.passed else 1


def _cmd_replay(args) -> int:
    scenario = _load_scenario(args.scenario)
    with tempfile.TemporaryDirectory(prefix="pillsim-replay-") as work:
        divergence = replay_check(scenario, args.reference, work)
    if divergence is None:
        print("identical")
        return 0
    print(f"divergence in {divergence.filename} line {divergence.line}:")
    print(f"  reference: {divergence.expected}")
    print(f"  replay:    {divergence.actual}")
    return 1


def _cmd_serve(args) -> int:
    result = parse_config(Path(args.config).read_text(encoding="utf-8"))
    if not result.ok:
        for e in result.errors:
            print(f"{args.config}:{e.line}: {e.message}", file=sys.stderr)
        return 2
    start = datetime.now().replace(microsecond=0)
    device = Device(start, result.schedule, result.policy)
    try:
        asyncio.run(serve_bridge(device, args.host, args.port, args.speed))
    except OSError as e:
        print(f"cannot bind {args.host}:{args.port}: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_export(args) -> int:
    records = read_log(args.log)
    Path(args.csv).write_text(export_csv(records), encoding="utf-8", newline="")
    print(f"wrote {args.csv} ({len(records)} records)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pillsim", description="Pill reminder device simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file deterministically")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.set_defaults(func=_cmd_run)

    p_replay = sub.add_parser("replay", help="re-run a scenario and compare against a reference run")
    p_replay.add_argument("scenario")
    p_replay.add_argument("reference")
    p_replay.set_defaults(func=_cmd_replay)

    p_serve = sub.add_parser("serve", help="serve the device panel bridge")
    p_serve.add_argument("config")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--speed", type=float, default=1.0)
    p_serve.set_defaults(func=_cmd_serve)

    p_export = sub.add_parser("export", help="export an adherence log to CSV")
    p_export.add_argument("log")
    p_export.add_argument("--csv", required=True)
    p_export.set_defaults(func=_cmd_export)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
