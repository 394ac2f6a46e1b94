"""Ready-made maps used by tests, demos and the campaign defaults.

Arm ``i`` of a junction has an approach lane ``in{i}`` ending at entrance
``en{i}`` and an exit lane ``out{i}`` starting at exit ``ex{i}``. The junction
lane ``j{i}d{j}`` leads from ``en{i}`` to ``ex{(i+j) % arms}``; on a four-way
junction d1 turns right, d2 goes straight and d3 turns left.
"""

from __future__ import annotations

from .map_model import Lane, MapDocument, MapModel, MapObject
from .metric_graph import Label, Turn

SPEED_LIMIT = 11.176  # 25 mph

DEFAULT_TURN_LENGTHS = {Turn.RIGHT: 10.0, Turn.STRAIGHT: 20.0, Turn.LEFT: 26.0}
DEFAULT_PHASES = {"green": 20.0, "yellow": 3.0}


def direction_turn(j: int, arms: int) -> Turn:
    """Turn type of symbolic direction d_j on a junction with ``arms`` arms."""
    k = arms - 1
    if k == 1:
        return Turn.STRAIGHT
    if j == 1:
        return Turn.RIGHT
    if j == k:
        return Turn.LEFT
    return Turn.STRAIGHT


def junction_lanes(
    arms: int,
    prefix: str = "",
    approach: float = 60.0,
    exit_length: float = 40.0,
    turn_lengths: dict[Turn, float] | None = None,
) -> tuple[list[Lane], list[tuple[str, str]]]:
    lengths = {**DEFAULT_TURN_LENGTHS, **(turn_lengths or {})}
    lanes: list[Lane] = []
    entex: list[tuple[str, str]] = []
    for i in range(arms):
        p = prefix
        lanes.append(Lane(f"{p}in{i}", f"{p}s{i}", f"{p}en{i}", Turn.STRAIGHT, Label.ROAD, approach))
        lanes.append(Lane(f"{p}out{i}", f"{p}ex{i}", f"{p}t{i}", Turn.STRAIGHT, Label.ROAD, exit_length))
        entex.append((f"{p}en{i}", f"{p}ex{i}"))
    for i in range(arms):
        for j in range(1, arms):
            turn = direction_turn(j, arms)
            lanes.append(
                Lane(
                    f"{prefix}j{i}d{j}",
                    f"{prefix}en{i}",
                    f"{prefix}ex{(i + j) % arms}",
                    turn,
                    Label.JUNCTION,
                    lengths[turn],
                )
            )
    return lanes, entex


def light_phases(arm: int, green: float, yellow: float) -> tuple[tuple[str, float], ...]:
    """Two-phase program: even arms start green, odd arms start red."""
    if arm % 2 == 0:
        return (("green", green), ("yellow", yellow), ("red", green + yellow))
    return (("red", green + yellow), ("green", green), ("yellow", yellow))


def junction_map(
    arms: int = 4,
    control: str = "stop",
    approach: float = 60.0,
    exit_length: float = 40.0,
    turn_lengths: dict[Turn, float] | None = None,
    green: float = DEFAULT_PHASES["green"],
    yellow: float = DEFAULT_PHASES["yellow"],
    speed_limit: float = SPEED_LIMIT,
    copies: int = 1,
) -> MapDocument:
    """A symmetric junction, or several disjoint copies of it."""
    lanes: list[Lane] = []
    objects: list[MapObject] = []
    entex: list[tuple[str, str]] = []
    for c in range(copies):
        prefix = "" if copies == 1 else f"{chr(ord('A') + c)}_"
        ls, ex = junction_lanes(arms, prefix, approach, exit_length, turn_lengths)
        lanes += ls
        entex += ex
        for i in range(arms):
            lane = f"{prefix}in{i}"
            if control == "stop":
                objects.append(MapObject(f"{prefix}stop{i}", "stop_sign", lane, approach))
            elif control == "light":
                objects.append(
                    MapObject(f"{prefix}lt{i}", "traffic_light", lane, approach, light_phases(i, green, yellow))
                )
            elif control != "none":
                raise ValueError(f"unknown control {control!r}")
    return MapDocument(tuple(lanes), tuple(objects), speed_limit, tuple(entex))


def four_way_stop(**kw) -> MapModel:
    return MapModel.from_document(junction_map(4, "stop", **kw))


def four_way_light(**kw) -> MapModel:
    return MapModel.from_document(junction_map(4, "light", **kw))


def three_way_stop(**kw) -> MapModel:
    return MapModel.from_document(junction_map(3, "stop", **kw))


def two_stop_junctions(**kw) -> MapModel:
    return MapModel.from_document(junction_map(3, "stop", copies=2, **kw))


def fig2_map() -> MapDocument:
    """Road lane l2->l1 fed by a straight and a left-turning junction lane."""
    return MapDocument(
        (
            Lane("s1", "l2", "l1", Turn.STRAIGHT, Label.ROAD, 8.0),
            Lane("s2", "l3", "l2", Turn.STRAIGHT, Label.JUNCTION, 10.0),
            Lane("s3", "l4", "l2", Turn.LEFT, Label.JUNCTION, 12.0),
        ),
        (),
        SPEED_LIMIT,
        (),
    )
