"""JSON map documents, their metric graphs, and road/junction structure."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .metric_graph import Label, MetricGraph, Position, Segment, Turn

COLORS = ("red", "yellow", "green")
OBJECT_KINDS = ("traffic_light", "stop_sign")


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class Lane:
    id: str
    source: str
    target: str
    turn: Turn
    label: Label
    length: float


@dataclass(frozen=True)
class MapObject:
    id: str
    kind: str
    lane: str
    offset: float
    phases: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class MapDocument:
    lanes: tuple[Lane, ...]
    objects: tuple[MapObject, ...]
    speed_limit: float
    entex: tuple[tuple[str, str], ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "lanes": [
                {
                    "id": ln.id,
                    "from": ln.source,
                    "to": ln.target,
                    "turn": ln.turn.value,
                    "label": ln.label.value,
                    "length_m": ln.length,
                }
                for ln in self.lanes
            ],
            "objects": [
                {
                    "id": ob.id,
                    "kind": ob.kind,
                    "lane": ob.lane,
                    "offset_m": ob.offset,
                    **({"phases": [list(p) for p in ob.phases]} if ob.phases else {}),
                }
                for ob in self.objects
            ],
            "speed_limit_mps": self.speed_limit,
            "entex": [list(p) for p in self.entex],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _field(obj: dict, key: str, where: str, kind=None):
    if not isinstance(obj, dict):
        raise MapError(f"{where}: expected an object")
    if key not in obj:
        raise MapError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is not None and not isinstance(value, kind) or isinstance(value, bool):
        raise MapError(f"{where}.{key}: wrong type {type(value).__name__}")
    return value


def parse_map(data: bytes | str) -> MapDocument:
    """Parse and validate a JSON map document."""
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MapError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise MapError("top level must be an object")
    lanes_raw = raw.get("lanes")
    if not lanes_raw:
        raise MapError("no lanes")
    lanes: list[Lane] = []
    seen: set[str] = set()
    for i, item in enumerate(lanes_raw):
        where = f"lanes[{i}]"
        lane_id = _field(item, "id", where, str)
        if lane_id in seen:
            raise MapError(f"{where}.id: duplicate lane id {lane_id!r}")
        seen.add(lane_id)
        length = _field(item, "length_m", where, (int, float))
        if not length > 0:
            raise MapError(f"{where}.length_m: length must be positive, got {length}")
        try:
            turn = Turn(_field(item, "turn", where, str))
            label = Label(_field(item, "label", where, str))
        except ValueError as exc:
            raise MapError(f"{where}: {exc}") from exc
        src = _field(item, "from", where, str)
        dst = _field(item, "to", where, str)
        if not src or not dst:
            raise MapError(f"{where}: empty location name")
        lanes.append(Lane(lane_id, src, dst, turn, label, float(length)))
    by_id = {ln.id: ln for ln in lanes}
    locations = {ln.source for ln in lanes} | {ln.target for ln in lanes}

    objects: list[MapObject] = []
    for i, item in enumerate(raw.get("objects", [])):
        where = f"objects[{i}]"
        kind = _field(item, "kind", where, str)
        if kind not in OBJECT_KINDS:
            raise MapError(f"{where}.kind: unknown kind {kind!r}")
        lane = _field(item, "lane", where, str)
        if lane not in by_id:
            raise MapError(f"{where}.lane: dangling lane reference {lane!r}")
        offset = float(_field(item, "offset_m", where, (int, float)))
        if offset < 0 or offset > by_id[lane].length:
            raise MapError(f"{where}.offset_m: {offset} beyond lane length {by_id[lane].length}")
        phases: list[tuple[str, float]] = []
        for j, ph in enumerate(item.get("phases", [])):
            if (
                not isinstance(ph, list)
                or len(ph) != 2
                or ph[0] not in COLORS
                or not isinstance(ph[1], (int, float))
                or ph[1] <= 0
            ):
                raise MapError(f"{where}.phases[{j}]: expected [color, positive seconds]")
            phases.append((ph[0], float(ph[1])))
        if kind == "traffic_light" and not phases:
            raise MapError(f"{where}.phases: traffic light needs a phase program")
        obj_id = item.get("id", f"{kind}_{i}")
        objects.append(MapObject(str(obj_id), kind, lane, offset, tuple(phases)))

    speed_limit = raw.get("speed_limit_mps", 11.176)
    if not isinstance(speed_limit, (int, float)) or speed_limit <= 0:
        raise MapError("speed_limit_mps: must be a positive number")

    entex: list[tuple[str, str]] = []
    for i, pair in enumerate(raw.get("entex", [])):
        if not isinstance(pair, list) or len(pair) != 2:
            raise MapError(f"entex[{i}]: expected [entrance, exit]")
        for loc in pair:
            if loc not in locations:
                raise MapError(f"entex[{i}]: dangling location {loc!r}")
        entex.append((pair[0], pair[1]))
    return MapDocument(tuple(lanes), tuple(objects), float(speed_limit), tuple(entex))


def load_map(path) -> MapDocument:
    with open(path, "rb") as fh:
        return parse_map(fh.read())


def build_metric_graph(doc: MapDocument) -> tuple[MetricGraph, dict[str, Position]]:
    """One vertex per location, one segment-labelled edge per lane."""
    graph = MetricGraph(
        [Segment(ln.id, ln.length, ln.turn, ln.label) for ln in doc.lanes],
        [(ln.source, ln.id, ln.target) for ln in doc.lanes],
    )
    placements = {ob.id: graph.position(ob.lane, ob.offset) for ob in doc.objects}
    return graph, placements


@dataclass(frozen=True)
class Road:
    vertices: tuple[str, ...]
    segments: tuple[str, ...]

    @property
    def entrance(self) -> str:
        return self.vertices[0]

    @property
    def exit(self) -> str:
        return self.vertices[-1]


@dataclass(frozen=True)
class Junction:
    id: str
    entrances: tuple[str, ...]
    exits: tuple[str, ...]
    segments: frozenset[str]

    @property
    def entex(self) -> dict[str, str]:
        return dict(zip(self.entrances, self.exits))

    @property
    def arms(self) -> int:
        return len(self.entrances)

    def index(self, entrance: str) -> int:
        return self.entrances.index(entrance)


@dataclass
class Decomposition:
    roads: list[Road]
    junctions: list[Junction]
    junction_of_segment: dict[str, str] = field(default_factory=dict)
    junction_of_entrance: dict[str, str] = field(default_factory=dict)

    def junction(self, jid: str) -> Junction:
        for j in self.junctions:
            if j.id == jid:
                return j
        raise MapError(f"unknown junction {jid!r}")

    def is_entrance(self, v: str) -> bool:
        return v in self.junction_of_entrance


def decompose(graph: MetricGraph, entex: tuple[tuple[str, str], ...] = ()) -> Decomposition:
    """Split the graph into maximal roads and connected junctions."""
    road_segs = [s for s, seg in graph.segments.items() if seg.label is Label.ROAD]
    junc_segs = [s for s, seg in graph.segments.items() if seg.label is Label.JUNCTION]

    def chain_interior(v: str) -> bool:
        ins, outs = graph.in_segments[v], graph.out_segments[v]
        return (
            len(ins) == 1
            and len(outs) == 1
            and graph.segments[ins[0]].label is Label.ROAD
            and graph.segments[outs[0]].label is Label.ROAD
        )

    roads: list[Road] = []
    used: set[str] = set()
    for seg in road_segs:
        if seg in used or chain_interior(graph.source(seg)):
            continue
        verts, segs = [graph.source(seg)], []
        cur = seg
        while True:
            used.add(cur)
            segs.append(cur)
            v = graph.target(cur)
            verts.append(v)
            if not chain_interior(v):
                break
            cur = graph.out_segments[v][0]
        roads.append(Road(tuple(verts), tuple(segs)))
    for seg in road_segs:  # pure cycles of chain vertices
        if seg in used:
            continue
        verts, segs, cur = [graph.source(seg)], [], seg
        while cur not in used:
            used.add(cur)
            segs.append(cur)
            verts.append(graph.target(cur))
            cur = graph.out_segments[graph.target(cur)][0]
        roads.append(Road(tuple(verts), tuple(segs)))

    # Weakly connected components of junction edges (union-find over vertices).
    parent: dict[str, str] = {}

    def find(v: str) -> str:
        while parent.setdefault(v, v) != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for seg in junc_segs:
        a, b = find(graph.source(seg)), find(graph.target(seg))
        if a != b:
            parent[a] = b
    groups: dict[str, set[str]] = {}
    for seg in junc_segs:
        groups.setdefault(find(graph.source(seg)), set()).add(seg)

    pair_of = dict(entex)
    road_exits = {r.exit for r in roads}
    junctions: list[Junction] = []
    for segs in groups.values():
        sources = {graph.source(s) for s in segs}
        for v in sources:
            if v not in road_exits:
                raise MapError(f"junction entrance {v!r} is not fed by any road")
        ordered = [en for en, _ in entex if en in sources]
        missing = sources - set(ordered)
        if missing:
            raise MapError(f"entrances without an entex pair: {sorted(missing)}")
        junctions.append(
            Junction("", tuple(ordered), tuple(pair_of[en] for en in ordered), frozenset(segs))
        )
    junctions.sort(key=lambda j: [e for e, _ in entex].index(j.entrances[0]))
    junctions = [Junction(f"J{i}", j.entrances, j.exits, j.segments) for i, j in enumerate(junctions)]
    dec = Decomposition(roads, junctions)
    for j in junctions:
        for s in j.segments:
            dec.junction_of_segment[s] = j.id
        for en in j.entrances:
            dec.junction_of_entrance[en] = j.id
    return dec


def _junction_moves(graph: MetricGraph, dec: Decomposition, v: str) -> list[tuple[str, Turn]]:
    return [
        (graph.target(s), graph.segments[s].turn)
        for s in graph.out_segments.get(v, [])
        if s in dec.junction_of_segment
    ]


def _require_entrance(dec: Decomposition, *vs: str) -> None:
    for v in vs:
        if not dec.is_entrance(v):
            raise MapError(f"{v!r} is not a junction entrance")


def right_of(graph: MetricGraph, dec: Decomposition, v1: str, v2: str) -> bool:
    """v1 is to the right of v2: v1 turning right meets v2 going straight,
    or v1 going straight meets v2 turning left."""
    _require_entrance(dec, v1, v2)
    m1, m2 = _junction_moves(graph, dec, v1), _junction_moves(graph, dec, v2)
    for t1, d1 in m1:
        for t2, d2 in m2:
            if t1 == t2 and (
                (d1 is Turn.RIGHT and d2 is Turn.STRAIGHT)
                or (d1 is Turn.STRAIGHT and d2 is Turn.LEFT)
            ):
                return True
    return False


def opposite(graph: MetricGraph, dec: Decomposition, v1: str, v2: str) -> bool:
    """Each entrance goes straight into the other's paired exit."""
    _require_entrance(dec, v1, v2)
    j1 = dec.junction(dec.junction_of_entrance[v1])
    if dec.junction_of_entrance[v2] != j1.id:
        return False
    pairs = j1.entex
    s1 = {t for t, d in _junction_moves(graph, dec, v1) if d is Turn.STRAIGHT}
    s2 = {t for t, d in _junction_moves(graph, dec, v2) if d is Turn.STRAIGHT}
    return pairs[v2] in s1 and pairs[v1] in s2


@dataclass
class MapModel:
    """A parsed map together with everything derived from it."""

    doc: MapDocument
    graph: MetricGraph
    placements: dict[str, Position]
    dec: Decomposition

    @classmethod
    def from_document(cls, doc: MapDocument) -> "MapModel":
        graph, placements = build_metric_graph(doc)
        return cls(doc, graph, placements, decompose(graph, doc.entex))

    @classmethod
    def load(cls, path) -> "MapModel":
        return cls.from_document(load_map(path))

    @property
    def speed_limit(self) -> float:
        return self.doc.speed_limit

    def objects(self):
        return self.doc.objects

    def object_entrance(self, obj: MapObject) -> str | None:
        """The entrance an object guards, if it sits at one."""
        pos = self.placements[obj.id]
        v = self.graph.vertex_at(pos)
        if v is not None and self.dec.is_entrance(v):
            return v
        return None

    def junction_kind(self, jid: str) -> str | None:
        junction = self.dec.junction(jid)
        kinds = set()
        for en in junction.entrances:
            guards = {ob.kind for ob in self.doc.objects if self.object_entrance(ob) == en}
            kinds.add(frozenset(guards))
        if kinds == {frozenset({"stop_sign"})}:
            return "all_way_stop"
        if kinds == {frozenset({"traffic_light"})}:
            return "traffic_light"
        return None
