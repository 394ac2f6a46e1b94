import itertools
import math
import random

import pytest
from oracles import random_graph, random_position

from trafficrv.metric_graph import INF, GraphError, MetricGraph, Position, Segment


def floyd_warshall(g: MetricGraph) -> dict:
    vs = sorted(g.vertices)
    d = {(a, b): (0.0 if a == b else math.inf) for a in vs for b in vs}
    for src, sid, dst in g.edges:
        d[src, dst] = min(d[src, dst], g.length(sid))
    for k in vs:
        for i in vs:
            for j in vs:
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


def vertex_distance_oracle(g: MetricGraph, p: Position, q: Position) -> float:
    """Shortest ride computed from all-pairs vertex distances."""
    vd = floyd_warshall(g)
    tol = 1e-9

    def vertex(pos):
        if pos.offset <= tol:
            return g.source(pos.segment)
        if pos.offset >= g.length(pos.segment) - tol:
            return g.target(pos.segment)
        return None

    vp, vq = vertex(p), vertex(q)
    if vp is not None and vp == vq:
        return 0.0
    if p.segment == q.segment and abs(p.offset - q.offset) <= tol:
        return 0.0
    best = math.inf
    if vp is None and vq is None and p.segment == q.segment and q.offset > p.offset:
        best = q.offset - p.offset
    starts = [(vp, 0.0)] if vp is not None else [(g.target(p.segment), g.length(p.segment) - p.offset)]
    ends = [(vq, 0.0)] if vq is not None else [(g.source(q.segment), q.offset)]
    for (a, lead), (b, tail) in itertools.product(starts, ends):
        best = min(best, lead + vd[a, b] + tail)
    return best


def as_float(d) -> float:
    return math.inf if d is INF else d


def test_distance_matches_ride_enumeration_on_random_graphs():
    rng = random.Random(7)
    checked = 0
    for _ in range(100):
        g = random_graph(rng)
        for _ in range(5):
            p, q = random_position(rng, g), random_position(rng, g)
            d = as_float(g.distance(p, q))
            rides = g.enumerate_rides(p, q, max_hops=len(g.segments) + 1)
            brute = min((r.length for r in rides), default=math.inf)
            assert d == pytest.approx(brute, abs=1e-9)
            assert d == pytest.approx(vertex_distance_oracle(g, p, q), abs=1e-9)
            checked += 1
    assert checked == 500


def test_distance_to_self_is_zero():
    rng = random.Random(1)
    for _ in range(50):
        g = random_graph(rng)
        p = random_position(rng, g)
        assert g.distance(p, p) == 0.0


def test_unreachable_is_infinite():
    g = MetricGraph([Segment("a", 5.0), Segment("b", 3.0)], [("x", "a", "y"), ("z", "b", "w")])
    assert g.distance(Position("a", 1.0), Position("b", 1.0)) is INF
    # Going backwards along a one-way segment is impossible too.
    assert g.distance(Position("a", 4.0), Position("a", 1.0)) is INF


def test_triangle_inequality_on_sampled_triples():
    rng = random.Random(3)
    for _ in range(100):
        g = random_graph(rng)
        p, q, r = (random_position(rng, g) for _ in range(3))
        lhs = as_float(g.distance(p, r))
        rhs = as_float(g.distance(p, q)) + as_float(g.distance(q, r))
        assert lhs <= rhs + 1e-9


def test_inf_orders_above_numbers_and_absorbs_addition():
    assert INF > 1e300
    assert not INF < 5
    assert INF + 3 is INF
    assert 3 + INF is INF
    assert min(INF, 2.0) == 2.0


def test_cycle_distance_goes_around():
    g = MetricGraph(
        [Segment("a", 4.0), Segment("b", 6.0)],
        [("x", "a", "y"), ("y", "b", "x")],
    )
    assert g.distance(Position("a", 3.0), Position("a", 1.0)) == pytest.approx(1.0 + 6.0 + 1.0)


@pytest.mark.parametrize(
    "segments,edges,message",
    [
        ([Segment("a", 1.0), Segment("a", 2.0)], [("x", "a", "y")], "duplicate"),
        ([Segment("a", 0.0)], [("x", "a", "y")], "positive length"),
        ([Segment("a", 1.0)], [("x", "b", "y")], "unknown segment"),
        ([Segment("a", 1.0), Segment("b", 1.0)], [("x", "a", "y")], "without an edge"),
    ],
)
def test_invalid_graphs_are_rejected(segments, edges, message):
    with pytest.raises(GraphError, match=message):
        MetricGraph(segments, edges)


def test_position_outside_segment_is_rejected():
    g = MetricGraph([Segment("a", 2.0)], [("x", "a", "y")])
    with pytest.raises(GraphError):
        g.position("a", 2.5)
