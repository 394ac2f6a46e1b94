"""Abstract junction scenarios, rotation classes and concretisation.

An abstract scenario assigns each entrance ``i`` a symbolic direction
``d_j`` meaning "leave by exit ``(i + j) mod arms``". Rotating a scenario
moves every agent one arm on: ``new[i + 1] = old[i]``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import gcd
from typing import Callable, Sequence

from .map_model import MapModel
from .metric_graph import SubSegment
from .scenario import AgentSpec, ConcreteScenario

EMPTY = 0  # no agent at this entrance


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class AbstractScenario:
    """Direction index per entrance; 0 marks an empty entrance."""

    directions: tuple[int, ...]

    @property
    def arms(self) -> int:
        return len(self.directions)

    def rotate(self, r: int = 1) -> "AbstractScenario":
        n = self.arms
        return AbstractScenario(tuple(self.directions[(i - r) % n] for i in range(n)))

    def rotations(self) -> list["AbstractScenario"]:
        return [self.rotate(r) for r in range(self.arms)]

    def canonical(self) -> "AbstractScenario":
        return min(self.rotations())

    def rotation_to(self, other: "AbstractScenario") -> int:
        for r in range(self.arms):
            if self.rotate(r) == other:
                return r
        raise ScenarioError(f"{other.key} is not a rotation of {self.key}")

    @property
    def key(self) -> str:
        return "-".join(f"{i}d{d}" for i, d in enumerate(self.directions) if d != EMPTY)

    @classmethod
    def from_key(cls, key: str, arms: int) -> "AbstractScenario":
        dirs = [EMPTY] * arms
        for part in key.split("-"):
            try:
                i, d = (int(x) for x in part.split("d"))
            except ValueError as exc:
                raise ScenarioError(f"bad scenario key {key!r}") from exc
            if not 0 <= i < arms or dirs[i] != EMPTY or d == EMPTY:
                raise ScenarioError(f"bad scenario key {key!r}")
            dirs[i] = d
        sc = cls(tuple(dirs))
        sc.validate()
        return sc

    def validate(self) -> None:
        k = self.arms - 1
        for d in self.directions:
            if d != EMPTY and not 1 <= d <= k:
                raise ScenarioError(f"direction d{d} out of range 1..{k}")

    def exit_of(self, entrance: int) -> int:
        return (entrance + self.directions[entrance]) % self.arms


@dataclass(frozen=True)
class EquivalenceClass:
    representative: AbstractScenario
    members: tuple[AbstractScenario, ...]

    @property
    def key(self) -> str:
        return self.representative.key


def enumerate_maximal(arms: int) -> list[AbstractScenario]:
    """All k^(k+1) scenarios with one agent per entrance, in lexicographic order."""
    k = arms - 1
    if k < 1:
        raise ScenarioError("a junction needs at least two arms")
    return [AbstractScenario(d) for d in itertools.product(range(1, k + 1), repeat=arms)]


def enumerate_partial(arms: int, agents: int) -> list[AbstractScenario]:
    """Scenarios with exactly ``agents`` occupied entrances."""
    k = arms - 1
    out = []
    for d in itertools.product(range(0, k + 1), repeat=arms):
        if sum(1 for x in d if x != EMPTY) == agents:
            out.append(AbstractScenario(d))
    return out


def quotient_by_rotation(scenarios: Sequence[AbstractScenario]) -> list[EquivalenceClass]:
    """Group scenarios into rotation orbits, ordered by representative."""
    groups: dict[AbstractScenario, list[AbstractScenario]] = {}
    for sc in scenarios:
        groups.setdefault(sc.canonical(), []).append(sc)
    classes = []
    for rep in sorted(groups):
        members = sorted(set(groups[rep]), key=lambda s: rep.rotation_to(s))
        classes.append(EquivalenceClass(rep, tuple(members)))
    return classes


def burnside_count(arms: int) -> int:
    """Number of rotation orbits of maximal scenarios, by Burnside's lemma.

    A rotation by r fixes a direction vector iff it is constant on each of
    the gcd(r, n) cycles, giving k^gcd(r, n) fixed points.
    """
    n, k = arms, arms - 1
    return sum(k ** gcd(r, n) for r in range(n)) // n


def extend_key(scenario: AbstractScenario, suffixes: Sequence[float]) -> tuple:
    """Canonical form of a scenario extended by per-entrance approach lengths.

    Two extended scenarios are equivalent iff these keys agree.
    """
    if len(suffixes) != scenario.arms:
        raise ScenarioError("one approach length per entrance is required")
    pairs = tuple(zip(scenario.directions, suffixes))
    n = len(pairs)
    return min(tuple(pairs[(i - r) % n] for i in range(n)) for r in range(n))


def build_itinerary(model: MapModel, junction: str, entrance: int, direction: int, distance: float):
    """Approach suffix of ``distance`` metres, the junction lane, and the exit road."""
    graph, dec = model.graph, model.dec
    j = dec.junction(junction)
    en = j.entrances[entrance]
    ex = j.exits[(entrance + direction) % j.arms]
    lanes = [s for s in graph.out_segments[en] if s in j.segments and graph.target(s) == ex]
    if not lanes:
        raise ScenarioError(f"no junction lane from {en} to {ex}")
    inner = lanes[0]
    approach: list[SubSegment] = []
    need = distance
    v = en
    while need > 1e-12:
        feeders = [s for s in graph.in_segments[v] if s not in dec.junction_of_segment]
        if len(feeders) != 1:
            raise ScenarioError(f"approach to {en} shorter than {distance} m")
        seg = feeders[0]
        length = graph.length(seg)
        take = min(length, need)
        approach.insert(0, graph.subsegment(seg, length - take, length))
        need -= take
        v = graph.source(seg)
    tail: list[SubSegment] = []
    v = ex
    while True:
        outs = [s for s in graph.out_segments.get(v, []) if s not in dec.junction_of_segment]
        if len(outs) != 1:
            break
        seg = outs[0]
        tail.append(graph.subsegment(seg, 0.0, graph.length(seg)))
        v = graph.target(seg)
        if v in dec.junction_of_entrance or len(tail) > 50:
            break
    if not tail:
        raise ScenarioError(f"exit {ex} has no road to leave by")
    return tuple(approach) + (graph.subsegment(inner, 0.0, graph.length(inner)),) + tuple(tail)


def concretize(
    model: MapModel,
    junction: str,
    scenario: AbstractScenario,
    distances: Sequence[float],
    speeds: Sequence[float],
    safe_speed_fn: Callable[[float], float | None] | None = None,
    creation_order: Sequence[int] | None = None,
    signal_rotation: int = 0,
    key: str | None = None,
) -> ConcreteScenario:
    """Attach distances and speeds to the occupied entrances.

    ``distances`` and ``speeds`` are listed per occupied entrance in entrance
    order. A speed above ``safe_speed_fn(distance)`` is rejected.
    """
    occupied = [i for i, d in enumerate(scenario.directions) if d != EMPTY]
    if len(distances) != len(occupied) or len(speeds) != len(occupied):
        raise ScenarioError(
            f"need {len(occupied)} distances and speeds, got {len(distances)} and {len(speeds)}"
        )
    agents = {}
    for i, d, v in zip(occupied, distances, speeds):
        if d <= 0 or v < 0:
            raise ScenarioError(f"entrance {i}: distance must be positive and speed non-negative")
        if safe_speed_fn is not None and v > 0:
            vmax = safe_speed_fn(d)
            if vmax is None or v > vmax + 1e-9:
                raise ScenarioError(
                    f"entrance {i}: speed {v} m/s exceeds the safe braking speed "
                    f"{vmax} m/s at {d} m"
                )
        itin = build_itinerary(model, junction, i, scenario.directions[i], d)
        agents[i] = AgentSpec(f"a{i}", i, scenario.directions[i], float(d), float(v), itin)
    order = list(creation_order) if creation_order is not None else occupied
    order = [i for i in order if i in agents] + [i for i in occupied if i not in order]
    return ConcreteScenario(
        junction, key or scenario.key, tuple(agents[i] for i in order), signal_rotation
    )


def scenario_to_json(sc: ConcreteScenario) -> str:
    return json.dumps(
        {
            "junction": sc.junction,
            "assignment": {str(a.entrance): f"d{a.direction}" for a in sorted(sc.agents, key=lambda a: a.entrance)},
            "distances_m": [a.distance for a in sorted(sc.agents, key=lambda a: a.entrance)],
            "speeds_mps": [a.speed for a in sorted(sc.agents, key=lambda a: a.entrance)],
        },
        sort_keys=True,
    )


def scenario_from_json(model: MapModel, text: str, safe_speed_fn=None) -> ConcreteScenario:
    data = json.loads(text)
    jid = data["junction"]
    arms = model.dec.junction(jid).arms
    dirs = [EMPTY] * arms
    for i, d in data["assignment"].items():
        dirs[int(i)] = int(str(d).lstrip("d"))
    sc = AbstractScenario(tuple(dirs))
    sc.validate()
    return concretize(model, jid, sc, data["distances_m"], data["speeds_mps"], safe_speed_fn)
