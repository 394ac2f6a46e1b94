"""Scenario campaigns: simulate a grid of scenarios and tabulate verdicts."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

from .logic import Formula, load_property
from .map_model import MapModel
from .monitor import FAIL, Verdict, check
from .scenario_gen import AbstractScenario, ScenarioError, concretize, enumerate_maximal, quotient_by_rotation
from .semantic_state import state_record, write_trace
from .simulator import (
    ControllerParams,
    FaultConfig,
    SchedulerConfig,
    estimate_safe_speed,
    run_scenario,
    unrealistic_stops,
)


class CampaignError(RuntimeError):
    pass


# Distance and speed vectors per configuration label, one entry per entrance.
CONFIGS: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {
    "A": ((0.01,) * 4, (0.0,) * 4),
    "B": ((0.3,) * 4, (0.0,) * 4),
    "C": ((20.0,) * 4, (0.0,) * 4),
    "D": ((20.0,) * 4, (10.0,) * 4),
    "E": ((0.3, 0.3, 20.0, 20.0), (0.0,) * 4),
    "F": ((0.01,) * 4, (0.0,) * 4),
    "G": ((0.3,) * 4, (0.0,) * 4),
    "H": ((20.0,) * 4, (0.0,) * 4),
    "I": ((20.0,) * 4, (10.0,) * 4),
    "J": ((20.0, 0.3, 20.0, 0.3), (0.0,) * 4),
}

STOP_CLASSES = ("0d2-1d1-2d1-3d1", "0d3-1d1-2d1-3d1")
LIGHT_CLASSES = ("0d1-1d2-2d3-3d3", "0d2-1d1-2d2-3d1")


@dataclass(frozen=True)
class Profile:
    """A named knob setting for the simulator under faults.

    The zone bounds place the scheduler's boundary zone off centre and
    differently per junction lane, which is what makes some rotations of a
    scenario class behave differently from others.
    """

    name: str
    zone_bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    i1_ticks: int = 2
    controller: dict[str, Any] = field(default_factory=dict)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)

    def faults(self, names: Sequence[str], **kw) -> FaultConfig:
        return FaultConfig.from_names(names, i1_ticks=self.i1_ticks, zone_bounds=dict(self.zone_bounds), **kw)

    def params(self, speed_limit: float, **kw) -> ControllerParams:
        return ControllerParams(speed_limit=speed_limit, **{**self.controller, **kw})


def _stop_zones() -> dict[str, tuple[float, float]]:
    zones = {}
    for i in range(4):
        # Zones on straight and left lanes start late, so an agent that rolls
        # over the line uninvited is not seen as occupying the junction.
        zones[f"j{i}d2"] = (0.2, 1.0)
        zones[f"j{i}d3"] = (0.2, 1.0)
    # An agent on these lanes that entered without a grant stays unseen for
    # longer, so a waiting agent can be granted behind it.
    zones["j2d2"] = (0.6, 1.0)
    zones["j2d3"] = (0.6, 1.0)
    # Short zones on these lanes free the junction while the agent is still inside.
    zones["j2d1"] = (0.0, 0.6)
    zones["j3d2"] = (0.2, 0.6)
    zones["j3d3"] = (0.2, 0.6)
    return zones


PROFILES: dict[str, Profile] = {
    "default": Profile("default"),
    "stop-asymmetric": Profile(
        "stop-asymmetric",
        zone_bounds=_stop_zones(),
        i1_ticks=5,
        controller={"aggression": 2, "turn_factor": 0.7, "right_turn_factor": 0.3},
        scheduler=SchedulerConfig(min_stop=2.0, startup_delay=0.5),
    ),
    "light": Profile("light", controller={"aggression": 1}),
}


def find_junction(model: MapModel, selector: str) -> str:
    """Resolve a junction id or a kind (``all_way_stop`` / ``traffic_light``)."""
    ids = [j.id for j in model.dec.junctions]
    if selector in ids:
        return selector
    if selector not in ("all_way_stop", "traffic_light"):
        raise CampaignError(f"unknown junction selector {selector!r}")
    found = [jid for jid in ids if model.junction_kind(jid) == selector]
    if not found:
        raise CampaignError(f"no {selector} junction found")
    if len(found) > 1:
        raise CampaignError(f"ambiguous: {len(found)} {selector} junctions ({', '.join(found)}); pass an id")
    return found[0]


def class_members(seed_key: str, arms: int) -> list[tuple[int, AbstractScenario]]:
    """The seed scenario and its rotations, as (rotation, scenario) pairs."""
    seed = AbstractScenario.from_key(seed_key, arms)
    return [(r, seed.rotate(r)) for r in range(arms)]


@dataclass
class CampaignConfig:
    model: MapModel
    junction: str = "all_way_stop"
    classes: Sequence[str] | str = STOP_CLASSES
    configs: Sequence[str] = ("A", "B", "C", "D", "E")
    properties: Sequence[str] = ("builtin:p1", "builtin:p2", "builtin:p3")
    faults: FaultConfig = field(default_factory=FaultConfig)
    params: ControllerParams | None = None
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    grid: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = field(default_factory=lambda: dict(CONFIGS))
    max_ticks: int = 1200
    seed: int = 0
    workers: int = 1
    trace_dir: str | None = None

    def resolved_params(self) -> ControllerParams:
        return self.params or ControllerParams(speed_limit=self.model.speed_limit)


@dataclass
class Row:
    class_key: str
    scenario: str
    rotation: int
    config: str
    verdicts: dict[str, Verdict]
    infeasible: str | None = None
    notes: list[str] = field(default_factory=list)
    hard_stops: list = field(default_factory=list)

    def cell(self, prop: str) -> str:
        if self.infeasible:
            return "infeasible"
        return self.verdicts[prop].value


@dataclass
class VerdictTable:
    properties: list[str]
    rows: list[Row]
    diagnostics: list[dict[str, Any]]

    def lookup(self, class_key: str, rotation: int, config: str) -> Row:
        for r in self.rows:
            if r.class_key == class_key and r.rotation == rotation and r.config == config:
                return r
        raise KeyError((class_key, rotation, config))

    @property
    def any_fail(self) -> bool:
        return any(v.value == FAIL for r in self.rows for v in r.verdicts.values())


def _resolve_classes(classes, arms: int) -> list[str]:
    if classes == "all":
        return [c.key for c in quotient_by_rotation(enumerate_maximal(arms))]
    return list(classes)


def _jobs(cfg: CampaignConfig, jid: str) -> list[tuple[str, int, AbstractScenario, str]]:
    arms = cfg.model.dec.junction(jid).arms
    jobs = []
    for ckey in _resolve_classes(cfg.classes, arms):
        for r, sc in class_members(ckey, arms):
            for label in cfg.configs:
                jobs.append((ckey, r, sc, label))
    return jobs


def _run_one(cfg: CampaignConfig, jid: str, props: list[tuple[str, Formula]], job, safe_cache) -> tuple[Row, list]:
    ckey, r, sc, label = job
    arms = sc.arms
    params = cfg.resolved_params()
    distances, speeds = cfg.grid[label]
    if len(distances) != arms or len(speeds) != arms:
        raise CampaignError(f"config {label} does not match a {arms}-arm junction")

    def safe(d: float):
        if d not in safe_cache:
            safe_cache[d] = estimate_safe_speed(params, d)
        return safe_cache[d]

    order = [(i + r) % arms for i in range(arms)]
    try:
        scenario = concretize(
            cfg.model, jid, sc, distances, speeds, safe, creation_order=order, signal_rotation=r
        )
    except ScenarioError as exc:
        return Row(ckey, sc.key, r, label, {}, infeasible=str(exc)), []
    faults = cfg.faults
    if faults.i4_random_right_on_red:
        faults = FaultConfig.from_json({**faults.to_json(), "rng_seed": cfg.seed})
    run = run_scenario(cfg.model, scenario, params, faults, cfg.max_ticks, cfg.scheduler)
    if cfg.trace_dir:
        path = os.path.join(cfg.trace_dir, f"{sc.key}_{label}.jsonl")
        try:
            with open(path, "w", encoding="utf-8") as fh:
                write_trace(run, fh)
        except OSError as exc:
            raise CampaignError(f"cannot write {path}: {exc}") from exc
    verdicts, diags = {}, []
    for name, formula in props:
        v = check(formula, cfg.model, run, jid)
        verdicts[name] = v
        if v.value == FAIL:
            t = v.witness_tick
            diags.append(
                {
                    "class": ckey,
                    "scenario": sc.key,
                    "config": label,
                    "property": name,
                    "witness_tick": t,
                    "witness_binding": dict(v.witness_binding or ()),
                    "violated": v.witness_formula,
                    "before": state_record(run.states[max(t - 1, 0)]),
                    "after": state_record(run.states[t]),
                }
            )
    row = Row(ckey, sc.key, r, label, verdicts, notes=list(run.meta.get("notes", [])),
              hard_stops=unrealistic_stops(run))
    return row, diags


def _worker(args):
    cfg, jid, props, chunk = args
    cache: dict = {}
    return [_run_one(cfg, jid, props, job, cache) for job in chunk]


def run_campaign(cfg: CampaignConfig) -> VerdictTable:
    jid = find_junction(cfg.model, cfg.junction)
    props = []
    for source in cfg.properties:
        name, formula = load_property(source)
        props.append((name, formula))
    jobs = _jobs(cfg, jid)
    if cfg.trace_dir:
        try:
            os.makedirs(cfg.trace_dir, exist_ok=True)
        except OSError as exc:
            raise CampaignError(f"cannot create {cfg.trace_dir}: {exc}") from exc
    results: dict[int, tuple[Row, list]] = {}
    if cfg.workers > 1 and len(jobs) > 1:
        chunks = [list(range(i, len(jobs), cfg.workers)) for i in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            outs = pool.map(_worker, [(cfg, jid, props, [jobs[i] for i in idx]) for idx in chunks])
            for idx, out in zip(chunks, outs):
                results.update(zip(idx, out))
    else:
        cache: dict = {}
        for i, job in enumerate(jobs):
            results[i] = _run_one(cfg, jid, props, job, cache)
    rows = [results[i][0] for i in range(len(jobs))]
    diags = [d for i in range(len(jobs)) for d in results[i][1]]
    return VerdictTable([n for n, _ in props], rows, diags)


# ---------------------------------------------------------------- reports --
def table_csv(table: VerdictTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "scenario", "config"] + table.properties)
    for r in table.rows:
        w.writerow([r.class_key, r.scenario, r.config] + [r.cell(p) for p in table.properties])
    return buf.getvalue()


def table_json(table: VerdictTable) -> str:
    rows = []
    for r in table.rows:
        rec: dict[str, Any] = {"class": r.class_key, "scenario": r.scenario, "rotation": r.rotation, "config": r.config}
        if r.infeasible:
            rec["infeasible"] = r.infeasible
        else:
            rec["verdicts"] = {
                p: {k: v for k, v in r.verdicts[p].report(p, r.scenario, 0).items() if k != "elapsed_ms"}
                for p in table.properties
            }
        rec["notes"] = r.notes
        rows.append(rec)
    return json.dumps({"properties": table.properties, "rows": rows, "diagnostics": table.diagnostics},
                      indent=1, sort_keys=True) + "\n"


def emit_reports(table: VerdictTable, out_dir: str) -> list[str]:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise CampaignError(f"cannot create {out_dir}: {exc}") from exc
    paths = []
    for name, text in (("verdicts.csv", table_csv(table)), ("report.json", table_json(table))):
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise CampaignError(f"cannot write {path}: {exc}") from exc
        paths.append(path)
    return paths


def format_matrix(table: VerdictTable) -> str:
    """Plain-text matrix: one line per scenario, configs side by side."""
    configs = list(dict.fromkeys(r.config for r in table.rows))
    lines = ["scenario".ljust(18) + " | ".join(c.center(len(table.properties) * 5) for c in configs)]
    keys = list(dict.fromkeys((r.class_key, r.rotation, r.scenario) for r in table.rows))
    index = {(r.class_key, r.rotation, r.config): r for r in table.rows}
    for ck, rot, sk in keys:
        cells = []
        for c in configs:
            row = index[(ck, rot, c)]
            cells.append(" ".join(row.cell(p)[:4].ljust(4) for p in table.properties))
        lines.append(sk.ljust(18) + " | ".join(cells))
    return "\n".join(lines)
