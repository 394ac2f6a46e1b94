import io
import json

import pytest

from trafficrv import fixtures
from trafficrv.metric_graph import INF, MetricGraph, Position, Segment, SubSegment
from trafficrv.scenario_gen import AbstractScenario, concretize
from trafficrv.semantic_state import (
    AgentState,
    TraceError,
    advance_agent,
    read_trace,
    remaining_distance_to,
    write_trace,
)
from trafficrv.simulator import run_scenario


@pytest.fixture
def chain():
    # s1 (10 m) -> s7 (5 m) -> s3 (9 m)
    return MetricGraph(
        [Segment("s1", 10.0), Segment("s7", 5.0), Segment("s3", 9.0)],
        [("a", "s1", "b"), ("b", "s7", "c"), ("c", "s3", "d")],
    )


def test_start_position_is_head_of_itinerary(chain):
    a = AgentState.start("a1", [SubSegment("s1", 8.0, 10.0), SubSegment("s7", 0.0, 5.0)])
    assert a.pos == Position("s1", 8.0)


def test_zero_displacement_is_identity(chain):
    a = AgentState.start("a1", [SubSegment("s1", 8.0, 10.0)])
    moved, excess = advance_agent(chain, a, 0.0)
    assert moved == a and excess == 0.0


def test_advance_to_next_segment_start(chain):
    a = AgentState.start("a1", [SubSegment("s1", 8.0, 10.0), SubSegment("s7", 0.0, 5.0), SubSegment("s3", 0.0, 7.0)])
    moved, _ = advance_agent(chain, a, 10.0 - 8.0)
    assert moved.pos == Position("s7", 0.0)
    assert len(moved.itinerary) == 2


def test_advance_across_two_boundaries():
    g = MetricGraph(
        [Segment("x", 2.0), Segment("y", 3.0), Segment("z", 4.0)],
        [("p", "x", "q"), ("q", "y", "r"), ("r", "z", "s")],
    )
    a = AgentState.start("a", [SubSegment("x", 0, 2), SubSegment("y", 0, 3), SubSegment("z", 0, 4)])
    moved, excess = advance_agent(g, a, 6.0)
    assert moved.pos == Position("z", 1.0)
    assert moved.itinerary == (SubSegment("z", 1.0, 4.0),)
    assert excess == 0.0


def test_overshoot_finishes_and_reports_excess(chain):
    a = AgentState.start("a1", [SubSegment("s1", 8.0, 10.0)])
    moved, excess = advance_agent(chain, a, 3.5)
    assert moved.finished
    assert excess == pytest.approx(1.5)
    assert moved.pos == Position("s1", 10.0)


def test_remaining_distance(chain):
    a = AgentState.start("a1", [SubSegment("s1", 2.0, 10.0), SubSegment("s7", 0.0, 5.0)])
    assert remaining_distance_to(chain, a, a.pos) == 0.0
    assert remaining_distance_to(chain, a, Position("s1", 10.0)) == pytest.approx(8.0)
    assert remaining_distance_to(chain, a, Position("s7", 2.0)) == pytest.approx(10.0)
    assert remaining_distance_to(chain, a, Position("s3", 1.0)) is INF


@pytest.fixture(scope="module")
def recorded():
    m = fixtures.four_way_stop()
    sc = concretize(m, "J0", AbstractScenario.from_key("0d2-1d1-2d3-3d1", 4), [20.0] * 4, [0.0] * 4)
    return m, run_scenario(m, sc, max_ticks=100)


def test_trace_round_trip(recorded):
    m, run = recorded
    buf = io.StringIO()
    write_trace(run, buf)
    buf.seek(0)
    back = read_trace(buf, m.graph)
    assert back.states == run.states
    assert back.delta_t == run.delta_t
    assert back.meta["junction"] == "J0"


def test_hundred_tick_run_has_header_plus_101_states(recorded):
    _, run = recorded
    buf = io.StringIO()
    write_trace(run, buf)
    lines = buf.getvalue().splitlines()
    # tick 0 plus 100 steps, after one header line
    assert len(lines) == 1 + 101
    assert json.loads(lines[-1])["tick"] == 100


def test_trace_from_another_map_is_refused(recorded):
    _, run = recorded
    buf = io.StringIO()
    write_trace(run, buf)
    buf.seek(0)
    other = fixtures.three_way_stop()
    with pytest.raises(TraceError, match="checksum"):
        read_trace(buf, other.graph)


def test_malformed_trace_record(recorded):
    m, run = recorded
    buf = io.StringIO()
    write_trace(run, buf)
    text = buf.getvalue().splitlines()
    text[3] = '{"tick": 2}'
    with pytest.raises(TraceError, match="line 4"):
        read_trace(io.StringIO("\n".join(text)), m.graph)
    with pytest.raises(TraceError, match="empty"):
        read_trace(io.StringIO(""), m.graph)
