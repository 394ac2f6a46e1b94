"""Independent reference computations and generators shared by the tests."""

import math
import random

from trafficrv.logic import (
    FALSE,
    TRUE,
    Always,
    And,
    Eventually,
    Implies,
    Next,
    Not,
    Or,
    Until,
)
from trafficrv.metric_graph import MetricGraph, Position, Segment
from trafficrv.scenario_gen import concretize, enumerate_maximal, quotient_by_rotation
from trafficrv.simulator import ControllerParams, FaultConfig, run_scenario


def random_graph(rng: random.Random, max_vertices: int = 6) -> MetricGraph:
    n = rng.randint(2, max_vertices)
    vertices = [f"v{i}" for i in range(n)]
    segments, edges = [], []
    for k in range(rng.randint(1, 2 * n)):
        a, b = rng.choice(vertices), rng.choice(vertices)
        sid = f"s{k}"
        segments.append(Segment(sid, round(rng.uniform(0.5, 10.0), 3)))
        edges.append((a, sid, b))
    return MetricGraph(segments, edges)


def random_position(rng: random.Random, g: MetricGraph) -> Position:
    sid = rng.choice(sorted(g.segments))
    length = g.length(sid)
    offset = rng.choice([0.0, length, round(rng.uniform(0, length), 3)])
    return Position(sid, offset)


def burnside_orbits(arms: int) -> int:
    """Rotation orbits of direction vectors: average number of fixed vectors per rotation."""
    k = arms - 1
    return sum(k ** math.gcd(r, arms) for r in range(arms)) // arms


def stopping_speed_bound(brake: float, d: float, dt: float) -> float:
    """Highest speed that halts within d when braking at ``brake`` from the first tick.

    The position advances by the already reduced speed each tick, so the
    stopping distance is v^2/(2b) - v*dt/2; solve that for v.
    """
    half = brake * dt / 2
    return half + math.sqrt(half * half + 2 * brake * d)


def random_formula(rng: random.Random, props, max_depth: int):
    if max_depth <= 1 or rng.random() < 0.25:
        return rng.choice(list(props) + [TRUE, FALSE])
    sub = lambda: random_formula(rng, props, max_depth - 1)
    kind = rng.randrange(8)
    if kind == 0:
        return Not(sub())
    if kind == 1:
        return Next(sub())
    if kind == 2:
        return Always(sub())
    if kind == 3:
        return Eventually(sub())
    if kind == 4:
        return And((sub(), sub()))
    if kind == 5:
        return Or((sub(), sub()))
    if kind == 6:
        return Implies(sub(), sub())
    return Until(sub(), sub())


def random_trace(rng: random.Random, props, max_len: int = 50):
    return [{p: rng.random() < 0.5 for p in props} for _ in range(rng.randint(1, max_len))]


def recorded_runs(model, n, seed, max_ticks=200):
    rng = random.Random(seed)
    classes = [c.representative for c in quotient_by_rotation(enumerate_maximal(4))]
    for _ in range(n):
        sc = rng.choice(classes)
        distances = [rng.choice([0.01, 0.3, 5.0, 20.0]) for _ in range(4)]
        faults = rng.sample(["i1", "i2", "i3", "i4", "i5"], rng.randint(0, 3))
        conc = concretize(model, "J0", sc, distances, [0.0] * 4, creation_order=rng.sample(range(4), 4))
        params = ControllerParams(aggression=rng.randint(1, 3), speed_limit=model.speed_limit)
        fc = FaultConfig.from_names(faults, zone_scale=rng.choice([0.5, 1.0]), rng_seed=rng.randint(0, 99))
        yield run_scenario(model, conc, params, fc, max_ticks=max_ticks)


