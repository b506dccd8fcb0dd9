"""netctl: scenario runner and controller host.

Exit codes: 0 success, 1 scenario validation error, 2 runtime error,
3 consistency-check failure (with --check).
"""

import argparse
import dataclasses
import signal
import sys
from pathlib import Path

from .errors import OpticnetError, ScenarioError
from .pipeline import run_checks, run_study, serve_study, write_artifacts
from .scenario import bundled_scenario_path, load_scenario


def _load(args):
    path = Path(args.scenario)
    if not path.exists():
        bundled = bundled_scenario_path(path.stem)
        if bundled.is_file():
            path = bundled
        else:
            raise ScenarioError(f"no such scenario file {args.scenario!r}")
    scenario = load_scenario(path)
    if args.seed is not None:
        scenario.seed = args.seed
    if args.emulated_time_scale != 1.0:
        scenario.latencies = dataclasses.replace(
            scenario.latencies, time_scale=args.emulated_time_scale)
    return scenario


def cmd_run(args) -> int:
    scenario = _load(args)
    study = run_study(scenario, transport=args.transport)
    try:
        write_artifacts(study, args.data_dir)
        print(f"scenario {scenario.name!r}: "
              f"{len(study.records)} spans characterized, "
              f"{len(study.solutions)} lines optimized, "
              f"{len(study.requests)} requests, "
              f"{len(study.recovery_reports)} recoveries")
        print(f"artifacts written to {args.data_dir}")
        if args.check:
            problems = run_checks(study)
            if problems:
                for problem in problems:
                    print(f"CHECK FAILED: {problem}", file=sys.stderr)
                return 3
            print("all consistency checks passed")
    finally:
        study.close()
    return 0


def cmd_serve(args) -> int:
    scenario = _load(args)
    study, server = serve_study(scenario, port=args.port,
                                transport=args.transport)
    server.start()
    host, port = server.address
    print(f"northbound listening on http://{host}:{port}")
    stop = {"flag": False}

    def shutdown(signum, frame):
        stop["flag"] = True

    signal.signal(signal.SIGINT, shutdown)
    signal.signal(signal.SIGTERM, shutdown)
    try:
        while not stop["flag"]:
            signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    finally:
        server.stop()
        data_dir = Path(args.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        study.network.dump_event_log(data_dir / "events.log")
        study.close()
        print(f"event log flushed to {data_dir / 'events.log'}")
    return 0


def cmd_report(args) -> int:
    data_dir = Path(args.data_dir)
    shown = False
    for name in ("characterization.txt", "working_points.txt",
                 "performance.txt", "recovery.txt"):
        path = data_dir / name
        if path.is_file():
            print(path.read_text(), end="")
            shown = True
    if not shown:
        print(f"no report artifacts under {data_dir}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netctl",
        description="Run emulated optical-network control studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario file path or bundled name "
                                        "(e.g. 'triangle')")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario RNG seed")
        p.add_argument("--data-dir", default="./netctl-data",
                       help="artifact output directory")
        p.add_argument("--emulated-time-scale", type=float, default=1.0,
                       help="multiplier on emulated device latencies")
        p.add_argument("--transport", choices=("inproc", "loopback"),
                       default="inproc", help="agent message transport")

    run_p = sub.add_parser("run", help="execute a scenario end to end")
    common(run_p)
    run_p.add_argument("--check", action="store_true",
                       help="fail (exit 3) on any consistency violation")
    run_p.set_defaults(func=cmd_run)

    serve_p = sub.add_parser("serve", help="boot and host the northbound API")
    common(serve_p)
    serve_p.add_argument("--port", type=int, default=8080)
    serve_p.set_defaults(func=cmd_serve)

    report_p = sub.add_parser("report", help="print stored report tables")
    report_p.add_argument("--data-dir", default="./netctl-data")
    report_p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except OpticnetError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
