"""Signal-priority study: paired runs of one scenario with priority on and off.

Prints per-incident response times, stopped time at intersections, and
grant counts for both runs.
"""

from __future__ import annotations

import argparse
import dataclasses
from pathlib import Path

from ambusim.scenario import build_simulation, load_scenario


def run(path: Path, priority: bool):
    scenario = load_scenario(path)
    scenario = dataclasses.replace(
        scenario, config=dataclasses.replace(scenario.config, priority_enabled=priority))
    sim = build_simulation(scenario)
    sim.run()
    return sim.report()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("scenario", type=Path,
                        help="scenario JSON, e.g. scenarios/demo_town.json")
    args = parser.parse_args(argv)

    on = run(args.scenario, True)
    off = run(args.scenario, False)

    print(f"{'metric':<34} {'priority on':>14} {'priority off':>14}")
    print("-" * 64)
    print(f"{'incidents served':<34} {on.incidents_served:>14} {off.incidents_served:>14}")
    incidents = sorted(set(on.response_times_s) | set(off.response_times_s))
    for inc in incidents:
        a = on.response_times_s.get(inc, float("nan"))
        b = off.response_times_s.get(inc, float("nan"))
        print(f"{'response s  ' + inc:<34} {a:>14.1f} {b:>14.1f}")
    total_on = sum(on.stopped_s.values())
    total_off = sum(off.stopped_s.values())
    print(f"{'stopped at signals s (fleet total)':<34} {total_on:>14.1f} {total_off:>14.1f}")
    print(f"{'green extensions granted':<34} {on.extensions_granted:>14} {off.extensions_granted:>14}")
    print(f"{'preemptions granted':<34} {on.preemptions:>14} {off.preemptions:>14}")
    print(f"{'sim duration s':<34} {on.duration_s:>14.1f} {off.duration_s:>14.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
