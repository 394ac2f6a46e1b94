"""Directed graphs whose edges carry length-bearing segments.

Positions live on segments as (segment, offset). A position at offset 0 or at
the segment's full length coincides with a vertex, which matters for distance
queries: from a vertex, every outgoing segment is available.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Union

import networkx as nx

TOL = 1e-9


class Turn(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    STRAIGHT = "straight"


class Label(str, Enum):
    ROAD = "road"
    JUNCTION = "junction"


class Unreachable(Enum):
    """Distance value for positions that no ride connects.

    Compares greater than every number and absorbs addition, so it can be
    used in min/<= comparisons alongside ordinary floats.
    """

    INF = "inf"

    def __repr__(self) -> str:
        return "INF"

    def __float__(self) -> float:
        return math.inf

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__


INF = Unreachable.INF
Distance = Union[float, Unreachable]


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    id: str
    length: float
    turn: Turn = Turn.STRAIGHT
    label: Label = Label.ROAD


@dataclass(frozen=True)
class Position:
    segment: str
    offset: float


@dataclass(frozen=True)
class SubSegment:
    segment: str
    start: float
    end: float

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Ride:
    start: Position
    path: tuple[SubSegment, ...]
    end: Position

    @property
    def length(self) -> float:
        return sum(s.length for s in self.path)


class MetricGraph:
    """Immutable directed multigraph with one segment per edge."""

    def __init__(self, segments: Iterable[Segment], edges: Iterable[tuple[str, str, str]]):
        self.segments: dict[str, Segment] = {}
        for seg in segments:
            if seg.id in self.segments:
                raise GraphError(f"duplicate segment id {seg.id!r}")
            if not seg.length > 0:
                raise GraphError(f"segment {seg.id!r} must have positive length")
            self.segments[seg.id] = seg
        self._ends: dict[str, tuple[str, str]] = {}
        self.vertices: set[str] = set()
        self.out_segments: dict[str, list[str]] = {}
        self.in_segments: dict[str, list[str]] = {}
        for src, seg_id, dst in edges:
            if seg_id not in self.segments:
                raise GraphError(f"edge uses unknown segment {seg_id!r}")
            if seg_id in self._ends:
                raise GraphError(f"segment {seg_id!r} labels more than one edge")
            self._ends[seg_id] = (src, dst)
            for v in (src, dst):
                self.vertices.add(v)
                self.out_segments.setdefault(v, [])
                self.in_segments.setdefault(v, [])
            self.out_segments[src].append(seg_id)
            self.in_segments[dst].append(seg_id)
        missing = set(self.segments) - set(self._ends)
        if missing:
            raise GraphError(f"segments without an edge: {sorted(missing)}")
        self._nx = nx.DiGraph()
        self._nx.add_nodes_from(self.vertices)
        for seg_id, (src, dst) in self._ends.items():
            w = self.segments[seg_id].length
            if not self._nx.has_edge(src, dst) or self._nx[src][dst]["weight"] > w:
                self._nx.add_edge(src, dst, weight=w)

    # -- structure -------------------------------------------------------
    @property
    def edges(self) -> list[tuple[str, str, str]]:
        return [(s, seg, t) for seg, (s, t) in self._ends.items()]

    def source(self, seg_id: str) -> str:
        return self._ends[seg_id][0]

    def target(self, seg_id: str) -> str:
        return self._ends[seg_id][1]

    def length(self, seg_id: str) -> float:
        return self.segments[seg_id].length

    def checksum(self) -> str:
        payload = sorted(
            [seg.id, seg.length, seg.turn.value, seg.label.value, *self._ends[seg.id]]
            for seg in self.segments.values()
        )
        return hashlib.sha256(json.dumps(payload).encode()).hexdigest()[:16]

    # -- positions -------------------------------------------------------
    def position(self, seg_id: str, offset: float) -> Position:
        if seg_id not in self.segments:
            raise GraphError(f"unknown segment {seg_id!r}")
        length = self.segments[seg_id].length
        if offset < -TOL or offset > length + TOL:
            raise GraphError(f"offset {offset} outside [0, {length}] on {seg_id!r}")
        return Position(seg_id, min(max(offset, 0.0), length))

    def subsegment(self, seg_id: str, start: float, end: float) -> SubSegment:
        a = self.position(seg_id, start).offset
        b = self.position(seg_id, end).offset
        if not a < b:
            raise GraphError(f"empty interval [{start}, {end}] on {seg_id!r}")
        return SubSegment(seg_id, a, b)

    def vertex_at(self, p: Position) -> str | None:
        """The vertex a boundary position coincides with, else None."""
        if p.offset <= TOL:
            return self.source(p.segment)
        if p.offset >= self.length(p.segment) - TOL:
            return self.target(p.segment)
        return None

    def _check(self, p: Position) -> None:
        self.position(p.segment, p.offset)

    # -- distance --------------------------------------------------------
    def distance(self, p: Position, q: Position) -> Distance:
        """Length of the shortest ride from p to q, or INF."""
        self._check(p)
        self._check(q)
        vp, vq = self.vertex_at(p), self.vertex_at(q)
        if (vp is not None and vp == vq) or (
            p.segment == q.segment and abs(p.offset - q.offset) <= TOL
        ):
            return 0.0
        best: Distance = INF
        # Forward along the shared segment without leaving it.
        if vp is None and vq is None and p.segment == q.segment and q.offset > p.offset:
            best = q.offset - p.offset
        # Otherwise leave p's segment (or vertex), travel the graph, enter q.
        if vp is not None:
            origin, lead = vp, 0.0
        else:
            origin, lead = self.target(p.segment), self.length(p.segment) - p.offset
        if vq is not None:
            goal, tail = vq, 0.0
        else:
            goal, tail = self.source(q.segment), q.offset
        try:
            between = nx.dijkstra_path_length(self._nx, origin, goal, weight="weight")
        except nx.NetworkXNoPath:
            return best
        return min(best, lead + between + tail)

    # -- exhaustive rides ------------------------------------------------
    def enumerate_rides(self, p: Position, q: Position, max_hops: int) -> list[Ride]:
        """Every ride from p to q that enters at most max_hops segments.

        Exponential; meant as an oracle on small graphs.
        """
        if max_hops < 0:
            raise GraphError("max_hops must be >= 0")
        self._check(p)
        self._check(q)
        vq = self.vertex_at(q)
        found: dict[tuple[SubSegment, ...], Ride] = {}

        def record(path: list[SubSegment]) -> None:
            key = tuple(path)
            found.setdefault(key, Ride(p, key, q))

        def from_vertex(v: str, path: list[SubSegment]) -> None:
            if vq == v:
                record(path)
            if len(path) >= max_hops:
                return
            for seg_id in self.out_segments[v]:
                length = self.length(seg_id)
                if vq is None and q.segment == seg_id:
                    record(path + [SubSegment(seg_id, 0.0, q.offset)])
                from_vertex(self.target(seg_id), path + [SubSegment(seg_id, 0.0, length)])

        vp = self.vertex_at(p)
        if vp is not None:
            from_vertex(vp, [])
        elif p.segment == q.segment and abs(p.offset - q.offset) <= TOL:
            record([])
        else:
            if max_hops >= 1:
                if vq is None and q.segment == p.segment and q.offset > p.offset:
                    record([SubSegment(p.segment, p.offset, q.offset)])
                end = self.length(p.segment)
                from_vertex(self.target(p.segment), [SubSegment(p.segment, p.offset, end)])
        return sorted(found.values(), key=lambda r: (r.length, len(r.path)))
