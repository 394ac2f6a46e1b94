"""Agent and object states, runs, and their JSONL trace format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import IO, Any, Iterable

from .metric_graph import INF, TOL, Distance, MetricGraph, Position, SubSegment


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class AgentState:
    agent_id: str
    itinerary: tuple[SubSegment, ...]
    pos: Position
    speed: float = 0.0
    waiting_time: float = 0.0
    # Stopped-tick counter behind waiting_time, so equality tests are exact.
    wait_ticks: int = 0

    @property
    def finished(self) -> bool:
        return not self.itinerary

    @classmethod
    def start(cls, agent_id: str, itinerary: Iterable[SubSegment], speed: float = 0.0) -> "AgentState":
        items = tuple(itinerary)
        if not items:
            raise ValueError("itinerary must not be empty")
        return cls(agent_id, items, Position(items[0].segment, items[0].start), speed)


@dataclass(frozen=True)
class ObjectState:
    object_id: str
    kind: str
    pos: Position
    color: str | None = None


@dataclass(frozen=True)
class GlobalState:
    tick: int
    time: float
    agents: tuple[AgentState, ...]
    objects: tuple[ObjectState, ...] = ()

    def agent(self, agent_id: str) -> AgentState:
        for a in self.agents:
            if a.agent_id == agent_id:
                return a
        raise KeyError(agent_id)

    def obj(self, object_id: str) -> ObjectState:
        for o in self.objects:
            if o.object_id == object_id:
                return o
        raise KeyError(object_id)


@dataclass
class Run:
    graph: MetricGraph
    delta_t: float
    states: list[GlobalState]
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def agent_ids(self) -> list[str]:
        return [a.agent_id for a in self.states[0].agents] if self.states else []

    @property
    def object_ids(self) -> list[str]:
        return [o.object_id for o in self.states[0].objects] if self.states else []


def itinerary_length(state: AgentState) -> float:
    return sum(s.length for s in state.itinerary)


def advance_agent(graph: MetricGraph, state: AgentState, displacement: float) -> tuple[AgentState, float]:
    """Consume ``displacement`` metres from the head of the itinerary.

    Returns the new state and the excess distance that did not fit. An agent
    whose itinerary is used up keeps its final position and an empty itinerary.
    """
    if displacement < 0:
        raise ValueError("displacement must be non-negative")
    items = list(state.itinerary)
    left = displacement
    pos = state.pos
    while items:
        head = items[0]
        room = head.end - head.start
        if left < room - TOL:
            new_head = SubSegment(head.segment, head.start + left, head.end)
            items[0] = new_head
            pos = Position(head.segment, new_head.start)
            left = 0.0
            break
        left = max(left - room, 0.0)
        items.pop(0)
        pos = Position(head.segment, head.end)
        if items and left <= TOL:
            pos = Position(items[0].segment, items[0].start)
            left = 0.0
            break
    return replace(state, itinerary=tuple(items), pos=pos), left


def remaining_distance_to(graph: MetricGraph, state: AgentState, target: Position) -> Distance:
    """Arc length along the itinerary up to ``target``, or INF when off it."""
    travelled = 0.0
    target_vertex = graph.vertex_at(target)
    for item in state.itinerary:
        if item.segment == target.segment and item.start - TOL <= target.offset <= item.end + TOL:
            return travelled + max(target.offset - item.start, 0.0)
        if (
            target_vertex is not None
            and item.end >= graph.length(item.segment) - TOL
            and graph.target(item.segment) == target_vertex
        ):
            return travelled + item.length
        if target_vertex is not None and travelled == 0.0 and item.start <= TOL:
            if graph.source(item.segment) == target_vertex:
                return 0.0
        travelled += item.length
    if state.finished and state.pos == target:
        return 0.0
    return INF


# ---------------------------------------------------------------- traces --
def _agent_record(a: AgentState) -> dict[str, Any]:
    return {
        "id": a.agent_id,
        "segment": a.pos.segment,
        "offset": a.pos.offset,
        "speed": a.speed,
        "wt": a.waiting_time,
        "wt_ticks": a.wait_ticks,
        "itinerary": [[s.segment, s.start, s.end] for s in a.itinerary],
    }


def _object_record(o: ObjectState) -> dict[str, Any]:
    rec = {"id": o.object_id, "kind": o.kind, "segment": o.pos.segment, "offset": o.pos.offset}
    if o.color is not None:
        rec["color"] = o.color
    return rec


def state_record(s: GlobalState) -> dict[str, Any]:
    return {
        "tick": s.tick,
        "time": s.time,
        "agents": [_agent_record(a) for a in s.agents],
        "objects": [_object_record(o) for o in s.objects],
    }


def write_trace(run: Run, fp: IO[str]) -> None:
    header = {
        "map_checksum": run.graph.checksum(),
        "delta_t": run.delta_t,
        "agent_ids": run.agent_ids,
        "object_ids": run.object_ids,
        "meta": run.meta,
    }
    fp.write(json.dumps(header, sort_keys=True) + "\n")
    for s in run.states:
        fp.write(json.dumps(state_record(s), sort_keys=True) + "\n")


def _parse_state(rec: dict[str, Any]) -> GlobalState:
    agents = tuple(
        AgentState(
            a["id"],
            tuple(SubSegment(seg, float(lo), float(hi)) for seg, lo, hi in a["itinerary"]),
            Position(a["segment"], float(a["offset"])),
            float(a["speed"]),
            float(a["wt"]),
            int(a.get("wt_ticks", 0)),
        )
        for a in rec["agents"]
    )
    objects = tuple(
        ObjectState(o["id"], o["kind"], Position(o["segment"], float(o["offset"])), o.get("color"))
        for o in rec["objects"]
    )
    return GlobalState(int(rec["tick"]), float(rec["time"]), agents, objects)


def read_trace(fp: IO[str], graph: MetricGraph) -> Run:
    """Load a trace, refusing one recorded against a different map."""
    lines = [ln for ln in fp.read().splitlines() if ln.strip()]
    if not lines:
        raise TraceError("empty trace")
    try:
        header = json.loads(lines[0])
        checksum = header["map_checksum"]
        delta_t = float(header["delta_t"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"malformed header: {exc}") from exc
    if checksum != graph.checksum():
        raise TraceError(f"map checksum mismatch: trace {checksum}, map {graph.checksum()}")
    states = []
    for n, line in enumerate(lines[1:], start=2):
        try:
            states.append(_parse_state(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TraceError(f"malformed record on line {n}: {exc}") from exc
    return Run(graph, delta_t, states, header.get("meta", {}))
