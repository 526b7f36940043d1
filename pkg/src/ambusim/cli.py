"""Command line gateway: simulate, recognize, route, serve.

Exit codes: 0 on success, 2 on invalid input or unreadable files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .network import NetworkError, NoRoute, shortest_path
from .pgm import PgmError, load_pgm
from .recognition import NotRecognizable, Pattern, RecognitionError, recognize
from .scenario import ScenarioInvalid, build_simulation, load_scenario
from .service import GatewayService
from .sim import canonical_json


def _print_json(doc: dict, out) -> None:
    out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return 2


def _load(path: str):
    try:
        return load_scenario(path)
    except ScenarioInvalid as exc:
        print(f"invalid scenario {path}:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return None


def cmd_simulate(args) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return 2
    if args.priority is not None:
        scenario = replace(
            scenario, config=replace(scenario.config, priority_enabled=args.priority == "on")
        )
    sim = build_simulation(scenario)
    report = sim.run()
    if args.events:
        Path(args.events).write_text("\n".join(sim.event_log_lines()) + "\n")
    doc = report.to_dict()
    if args.out:
        Path(args.out).write_text(canonical_json(doc) + "\n")
    else:
        _print_json(doc, sys.stdout)
    return 0


def _load_pattern_file(path: str) -> Pattern:
    doc = json.loads(Path(path).read_text())
    points = doc["points"] if isinstance(doc, dict) else None
    if not isinstance(points, list):
        raise ValueError("pattern file must be {\"points\": [[x, y], ...]}")
    return Pattern.from_points((int(x), int(y)) for x, y in points)


def cmd_recognize(args) -> int:
    try:
        image = load_pgm(args.image)
    except (OSError, PgmError) as exc:
        return _fail(f"unreadable image {args.image}: {exc}")
    try:
        pattern = _load_pattern_file(args.pattern)
    except (OSError, ValueError, TypeError, KeyError, RecognitionError) as exc:
        return _fail(f"unreadable pattern {args.pattern}: {exc}")
    try:
        result = recognize(
            image, pattern,
            sobel_threshold=args.sobel_threshold, tau_per_point=args.tau,
        )
    except NotRecognizable as exc:
        _print_json({"is_ambulance": False, "reason": str(exc)}, sys.stdout)
        return 0
    except RecognitionError as exc:
        return _fail(f"cannot match: {exc}")
    _print_json({
        "is_ambulance": result.is_ambulance,
        "dissimilarity": result.dissimilarity,
        "per_point": float(result.per_point),
        "translation": list(result.best_translation),
    }, sys.stdout)
    return 0


def cmd_route(args) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return 2
    try:
        route = shortest_path(scenario.net, args.origin, args.dest)
    except NoRoute as exc:
        return _fail(f"no route: {exc}")
    except NetworkError as exc:
        return _fail(f"invalid query: {exc}")
    _print_json({
        "from": args.origin,
        "to": args.dest,
        "edges": list(route.edge_ids),
        "total_time_s": route.total_time_s,
        "total_length_m": route.total_length_m,
    }, sys.stdout)
    return 0


def cmd_serve(args) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return 2
    ui_dir = Path(args.ui_dir) if args.ui_dir else _default_ui_dir()
    service = GatewayService(scenario, rate=args.rate, ui_dir=ui_dir)
    port = service.start(host=args.host, port=args.port)
    print(f"gateway listening on http://{args.host}:{port}", file=sys.stderr)
    service.serve_forever()
    return 0


def _default_ui_dir() -> Path | None:
    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return dist if dist.is_dir() else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambusim",
        description="In-town ambulance dispatch simulator with signal priority",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario to completion")
    sim.add_argument("scenario")
    sim.add_argument("--priority", choices=["on", "off"], default=None,
                     help="override the scenario's priority flag")
    sim.add_argument("--out", help="write the metrics report here instead of stdout")
    sim.add_argument("--events", help="also write the event log (JSON lines)")
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("recognize", help="classify one camera frame")
    rec.add_argument("image", help="PGM (P5) frame")
    rec.add_argument("--pattern", required=True, help="pattern JSON file")
    rec.add_argument("--sobel-threshold", type=int, default=128)
    rec.add_argument("--tau", type=float, default=2.0)
    rec.set_defaults(func=cmd_recognize)

    route = sub.add_parser("route", help="fastest route between two nodes")
    route.add_argument("scenario")
    route.add_argument("origin")
    route.add_argument("dest")
    route.set_defaults(func=cmd_route)

    serve = sub.add_parser("serve", help="run the HTTP gateway")
    serve.add_argument("scenario")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8008)
    serve.add_argument("--rate", type=float, default=1.0,
                       help="wall-clock pacing factor (1.0 = one step per dt)")
    serve.add_argument("--ui-dir", default=None,
                       help="directory with the built dispatcher console")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
