"""Command-line entry point: ``trafficrv validate|enumerate|safe-speed|check``.

Exit codes: 0 when nothing failed, 1 when some property failed, 2 on bad
input or an infrastructure error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import fixtures
from .campaign import CONFIGS, PROFILES, CampaignConfig, CampaignError, emit_reports, format_matrix, run_campaign
from .logic import FormulaError, load_property
from .map_model import MapError, MapModel
from .metric_graph import GraphError
from .monitor import FAIL, AutomatonOverflow, timed_check
from .scenario_gen import ScenarioError, burnside_count, enumerate_maximal, quotient_by_rotation
from .semantic_state import TraceError, read_trace
from .simulator import estimate_safe_speed

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

FIXTURES = {
    "four_way_stop": fixtures.four_way_stop,
    "four_way_light": fixtures.four_way_light,
    "three_way_stop": fixtures.three_way_stop,
    "two_stop_junctions": fixtures.two_stop_junctions,
}

SAFE_SPEED_DISTANCES = (0.01, 0.1, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)


class UsageError(ValueError):
    pass


def load_model(source: str) -> MapModel:
    """A map JSON path, or ``fixture:NAME`` for a built-in map."""
    if source.startswith("fixture:"):
        name = source.split(":", 1)[1]
        if name not in FIXTURES:
            raise UsageError(f"unknown fixture {name!r}; choose from {', '.join(sorted(FIXTURES))}")
        return FIXTURES[name]()
    try:
        return MapModel.load(source)
    except OSError as exc:
        raise UsageError(f"cannot read map {source}: {exc}") from exc


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def parse_grid(distances: str | None, speeds: str | None, configs: str | None) -> tuple[dict, list[str]]:
    """Build the labelled distance/speed grid from CLI options.

    Vectors are separated by ``;`` and entries by ``,``. Without explicit
    vectors the named configs (A-J) are used.
    """
    if distances is None and speeds is None:
        labels = [c.strip() for c in (configs or "A,B,C,D,E").split(",") if c.strip()]
        unknown = [c for c in labels if c not in CONFIGS]
        if unknown:
            raise UsageError(f"unknown config label(s): {', '.join(unknown)}")
        return {c: CONFIGS[c] for c in labels}, labels
    if distances is None or speeds is None:
        raise UsageError("--distances and --speeds must be given together")
    ds = [_floats(v) for v in distances.split(";") if v.strip()]
    vs = [_floats(v) for v in speeds.split(";") if v.strip()]
    if len(ds) != len(vs):
        raise UsageError(f"{len(ds)} distance vectors but {len(vs)} speed vectors")
    grid = {f"g{i}": (d, v) for i, (d, v) in enumerate(zip(ds, vs))}
    return grid, list(grid)


def _names(text: str | None) -> list[str]:
    return [x.strip() for x in (text or "").split(",") if x.strip()]


# ---------------------------------------------------------------- commands --
def cmd_validate(args) -> int:
    model = load_model(args.map)
    if args.profile not in PROFILES:
        raise UsageError(f"unknown profile {args.profile!r}; choose from {', '.join(PROFILES)}")
    profile = PROFILES[args.profile]
    grid, labels = parse_grid(args.distances, args.speeds, args.configs)
    overrides = {}
    if args.aggression is not None:
        overrides["aggression"] = args.aggression
    fault_kw = {"rng_seed": args.seed}
    if args.zone_scale is not None:
        fault_kw["zone_scale"] = args.zone_scale
    cfg = CampaignConfig(
        model,
        junction=args.junction_type,
        classes="all" if args.classes == "all" else _names(args.classes),
        configs=labels,
        properties=_names(args.properties),
        faults=profile.faults(_names(args.faults), **fault_kw),
        params=profile.params(model.speed_limit, **overrides),
        scheduler=profile.scheduler,
        grid=grid,
        max_ticks=args.max_ticks,
        seed=args.seed,
        workers=args.workers,
        trace_dir=f"{args.out}/traces" if args.traces else None,
    )
    table = run_campaign(cfg)
    for path in emit_reports(table, args.out):
        print(f"wrote {path}", file=sys.stderr)
    print(format_matrix(table))
    return EXIT_FAIL if table.any_fail else EXIT_OK


def cmd_enumerate(args) -> int:
    if args.arms < 2:
        raise UsageError("--arms must be at least 2")
    scenarios = enumerate_maximal(args.arms)
    classes = quotient_by_rotation(scenarios)
    print(f"# {len(scenarios)} scenarios, {len(classes)} rotation classes (Burnside: {burnside_count(args.arms)})")
    for n, cls in enumerate(classes, start=1):
        print(f"{n}\t{cls.key}\t{len(cls.members)}\t{' '.join(m.key for m in cls.members)}")
    return EXIT_OK


def cmd_safe_speed(args) -> int:
    model = load_model(args.map)
    profile = PROFILES["default"]
    params = profile.params(model.speed_limit, aggression=args.aggression)
    faults = profile.faults(_names(args.faults))
    distances = _floats(args.distances) if args.distances else SAFE_SPEED_DISTANCES
    if any(d <= 0 for d in distances):
        raise UsageError("distances must be positive")
    print("distance_m,v_max_mps")
    for d in distances:
        v = estimate_safe_speed(params, d, faults)
        print(f"{d:g},{'unsafe' if v is None else f'{v:.2f}'}")
    return EXIT_OK


def cmd_check(args) -> int:
    model = load_model(args.map)
    name, formula = load_property(args.property)
    try:
        with open(args.trace, encoding="utf-8") as fh:
            run = read_trace(fh, model.graph)
    except OSError as exc:
        raise UsageError(f"cannot read trace {args.trace}: {exc}") from exc
    verdict, report = timed_check(name, formula, model, run, junction=args.junction)
    print(json.dumps(report, sort_keys=True))
    return EXIT_FAIL if verdict.value == FAIL else EXIT_OK


# ------------------------------------------------------------------ parser --
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trafficrv", description="Runtime verification of junction traffic rules.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="simulate a scenario campaign and monitor properties")
    v.add_argument("--map", required=True, help="map JSON path or fixture:NAME")
    v.add_argument("--junction-type", default="all_way_stop", help="junction id, all_way_stop or traffic_light")
    v.add_argument("--classes", default="all", help="'all' or comma-separated class keys such as 0d2-1d1-2d1-3d1")
    v.add_argument("--configs", help="comma-separated config labels A-J (default A-E)")
    v.add_argument("--distances", help="per-entrance distances: '0.3,0.3,0.3,0.3;20,20,20,20'")
    v.add_argument("--speeds", help="per-entrance speeds matching --distances")
    v.add_argument("--properties", default="builtin:p1,builtin:p2,builtin:p3")
    v.add_argument("--faults", default="", help="comma-separated subset of i1..i5")
    v.add_argument("--profile", default="default", help=f"knob setting: {', '.join(PROFILES)}")
    v.add_argument("--aggression", type=int, choices=(1, 2, 3))
    v.add_argument("--zone-scale", type=float)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--max-ticks", type=int, default=1200)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--traces", action="store_true", help="also write each run's trace under OUT/traces")
    v.add_argument("--out", required=True, help="output directory for verdicts.csv and report.json")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("enumerate", help="list rotation classes of maximal scenarios")
    e.add_argument("--arms", type=int, required=True)
    e.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("safe-speed", help="print the maximum safe initial speed per distance as CSV")
    s.add_argument("--map", required=True)
    s.add_argument("--aggression", type=int, choices=(1, 2, 3), default=1)
    s.add_argument("--distances", help="comma-separated distances in metres")
    s.add_argument("--faults", default="")
    s.set_defaults(func=cmd_safe_speed)

    c = sub.add_parser("check", help="monitor one property over a stored trace")
    c.add_argument("--map", required=True)
    c.add_argument("--trace", required=True)
    c.add_argument("--property", required=True, help="builtin:pN or a property file")
    c.add_argument("--junction", help="junction id, when the trace does not name one")
    c.set_defaults(func=cmd_check)
    return parser


ERRORS = (
    UsageError,
    CampaignError,
    MapError,
    GraphError,
    FormulaError,
    ScenarioError,
    TraceError,
    AutomatonOverflow,
    OSError,
    ValueError,
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
