import random

import pytest

from trafficrv import fixtures
from trafficrv.metric_graph import Turn
from trafficrv.scenario import ConcreteScenario
from trafficrv.scenario_gen import AbstractScenario, concretize
from trafficrv.semantic_state import remaining_distance_to
from trafficrv.simulator import (
    ACCEL,
    BRAKE,
    ControllerParams,
    FaultConfig,
    SchedulerConfig,
    Simulator,
    closed_form_safe_speed,
    estimate_safe_speed,
    run_scenario,
    unrealistic_stops,
)


@pytest.fixture(scope="module")
def stop_map():
    return fixtures.four_way_stop()


@pytest.fixture(scope="module")
def light_map():
    return fixtures.four_way_light()


def scenario(model, key, distances, speeds, **kw):
    arms = model.dec.junctions[0].arms
    return concretize(model, "J0", AbstractScenario.from_key(key, arms), distances, speeds, **kw)


def in_junction(state):
    return [a.agent_id for a in state.agents if a.pos.segment.startswith("j") and a.pos.offset > 1e-9]


def entered_at(run, agent_id):
    for s in run.states:
        if agent_id in in_junction(s):
            return s.tick
    return None


# ------------------------------------------------------------------ stepping --
def test_first_tick_from_standstill_gains_accel_times_dt(stop_map):
    sc = scenario(stop_map, "0d2", [50.0], [0.0])
    run = run_scenario(stop_map, sc, max_ticks=1)
    assert run.states[1].agents[0].speed == pytest.approx(ACCEL[1] * 0.1)


def test_zero_agents_gives_initial_state_only(stop_map):
    run = run_scenario(stop_map, ConcreteScenario("J0", "empty", ()))
    assert len(run.states) == 1


def test_finished_agents_only_advance_the_clock(stop_map):
    sc = scenario(stop_map, "0d1", [1.0], [0.0])
    sim = Simulator(stop_map)
    run = sim.run(sc)
    last = run.states[-1]
    assert last.agents[0].finished
    nxt = sim.step(last)
    assert nxt.tick == last.tick + 1
    assert nxt.agents == last.agents


def test_runs_are_deterministic(stop_map):
    sc = scenario(stop_map, "0d2-1d1-2d3-3d1", [20.0, 0.3, 20.0, 0.3], [0.0] * 4)
    faults = FaultConfig.from_names(["i1", "i2", "i3"], zone_scale=0.6)
    a = run_scenario(stop_map, sc, faults=faults)
    b = run_scenario(stop_map, sc, faults=faults)
    assert a.states == b.states


def test_max_ticks_exhaustion_is_flagged(stop_map):
    sc = scenario(stop_map, "0d2", [50.0], [0.0])
    run = run_scenario(stop_map, sc, max_ticks=5)
    assert run.meta["max_ticks_exhausted"]
    assert len(run.states) == 6


def test_state_invariants_hold_on_a_busy_run(stop_map):
    sc = scenario(stop_map, "0d2-1d1-2d3-3d1", [20.0] * 4, [10.0] * 4)
    params = ControllerParams(speed_limit=stop_map.speed_limit)
    run = run_scenario(stop_map, sc, params)
    dt = params.delta_t
    for prev, cur in zip(run.states, run.states[1:]):
        for a, b in zip(prev.agents, cur.agents):
            assert 0.0 <= b.speed <= params.speed_limit + params.accel * dt + 1e-9
            if b.waiting_time > 0:
                assert a.speed < 0.01
            if not a.finished:
                # Position advances by exactly the integrated displacement.
                moved = remaining_distance_to(run.graph, a, b.pos) if not b.finished else None
                if moved is not None:
                    assert moved == pytest.approx(b.speed * dt, abs=1e-6)


# ---------------------------------------------------------------- controller --
def test_i1_agent_at_one_centimetre_crosses_the_line(stop_map):
    sc = scenario(stop_map, "0d2", [0.01], [0.0])
    run = run_scenario(stop_map, sc, faults=FaultConfig.from_names(["i1"]), max_ticks=50)
    assert entered_at(run, "a0") is not None
    # Without the fault the agent stays behind the line until granted, and is
    # then granted only after stopping.
    calm = run_scenario(stop_map, sc, max_ticks=50)
    first = entered_at(calm, "a0")
    assert first is None or calm.states[first - 1].agents[0].speed < 0.01


def test_red_light_holds_a_straight_agent(light_map):
    # Arm 1 starts red.
    sc = scenario(light_map, "1d2", [0.5], [0.0])
    sim = Simulator(light_map)
    state = sim.initial_state(sc)
    for _ in range(30):
        state = sim.step(state)
    agent = state.agents[0]
    # Stopped on the line itself, which is offset 0 of the junction lane.
    assert agent.speed < 0.01 and not in_junction(state)
    assert light_map.graph.vertex_at(agent.pos) == "en1"
    assert sim.controller_target_speed(agent, state) == 0.0
    run = run_scenario(light_map, sc, max_ticks=200)
    assert entered_at(run, "a1") is None


def test_green_right_turn_drives_at_turn_speed_inside(light_map):
    params = ControllerParams(speed_limit=light_map.speed_limit)
    sc = scenario(light_map, "0d1", [5.0], [0.0])
    sim = Simulator(light_map, params)
    state = sim.initial_state(sc)
    while not (state.agents[0].pos.segment == "j0d1" and state.agents[0].pos.offset > 1.0):
        state = sim.step(state)
    agent = state.agents[0]
    turn_speed = params.turn_speed(Turn.RIGHT)
    assert sim.controller_target_speed(agent, state) == pytest.approx(sim.controller_step(agent.speed, turn_speed))
    assert params.turn_speed(Turn.STRAIGHT) > turn_speed


def test_i4_right_on_red_goes_after_the_seeded_wait(light_map):
    lo, hi = FaultConfig().i4_wait_range
    seed = 5
    expected_wait = round(random.Random(seed).uniform(lo, hi), 1)
    # a1 turns right on red; a0 approaches from its left on green.
    sc = scenario(light_map, "0d2-1d1", [40.0, 0.01], [0.0, 0.0])
    faults = FaultConfig.from_names(["i4"], rng_seed=seed)
    run = run_scenario(light_map, sc, faults=faults, max_ticks=300)
    tick = entered_at(run, "a1")
    assert tick is not None
    stopped_since = next(s.tick for s in run.states if s.agents[1].speed < 0.01 and s.agents[1].wait_ticks >= 1) - 1
    assert (tick - 1 - stopped_since) * 0.1 == pytest.approx(expected_wait, abs=0.15)
    # Correct mode waits for a car from the left that is within look-ahead.
    sc = scenario(light_map, "0d2-1d1", [20.0, 0.01], [0.0, 0.0])
    calm = run_scenario(light_map, sc, max_ticks=300)
    assert entered_at(calm, "a1") > entered_at(calm, "a0")


# ----------------------------------------------------------------- scheduler --
def test_single_agent_is_granted(stop_map):
    run = run_scenario(stop_map, scenario(stop_map, "2d3", [5.0], [0.0]), max_ticks=400)
    assert run.states[-1].agents[0].finished


def test_right_of_way_versus_creation_order(stop_map):
    # en1 is to the right of en0; create a0 first.
    sc = scenario(stop_map, "0d2-1d2", [20.0, 20.0], [0.0, 0.0], creation_order=[0, 1])
    calm = run_scenario(stop_map, sc)
    assert entered_at(calm, "a1") < entered_at(calm, "a0")
    faulty = run_scenario(stop_map, sc, faults=FaultConfig.from_names(["i3"]))
    assert entered_at(faulty, "a0") < entered_at(faulty, "a1")


def test_earlier_arrival_goes_first(stop_map):
    sc = scenario(stop_map, "0d2-1d2", [5.0, 25.0], [0.0, 0.0])
    run = run_scenario(stop_map, sc)
    assert entered_at(run, "a0") < entered_at(run, "a1")


def test_circular_deadlock_is_broken_by_lowest_entrance(stop_map):
    sc = scenario(stop_map, "0d2-1d2-2d2-3d2", [20.0] * 4, [0.0] * 4)
    run = run_scenario(stop_map, sc)
    assert any("deadlock-broken" in n and "a0" in n for n in run.meta["notes"])
    order = sorted(("a0", "a1", "a2", "a3"), key=lambda a: entered_at(run, a))
    assert order[0] == "a0"


def test_config_a_with_i1_overlaps_and_faults_off_does_not(stop_map):
    sc = scenario(stop_map, "0d2-1d1-2d1-3d1", [0.01] * 4, [0.0] * 4)
    faulty = run_scenario(stop_map, sc, faults=FaultConfig.from_names(["i1"]))
    assert any(len(in_junction(s)) > 1 for s in faulty.states)
    calm = run_scenario(stop_map, sc)
    assert all(len(in_junction(s)) <= 1 for s in calm.states)


def test_shrunken_zone_lets_a_second_agent_in(stop_map):
    sc = scenario(stop_map, "0d2-1d2", [20.0, 20.0], [0.0, 0.0])
    calm = run_scenario(stop_map, sc)
    assert all(len(in_junction(s)) <= 1 for s in calm.states)
    faulty = run_scenario(stop_map, sc, faults=FaultConfig.from_names(["i2"], zone_scale=0.5))
    assert any(len(in_junction(s)) > 1 for s in faulty.states)


def test_zone_bounds_are_validated():
    with pytest.raises(ValueError):
        FaultConfig(zone_bounds={"j0d1": (0.6, 0.4)})
    with pytest.raises(ValueError):
        FaultConfig(zone_scale=0.0)
    with pytest.raises(ValueError, match="unknown fault"):
        FaultConfig.from_names(["i9"])


def test_configs_round_trip_through_json():
    f = FaultConfig.from_names(["i2", "i4"], zone_bounds={"j0d1": (0.1, 0.9)}, rng_seed=3)
    assert FaultConfig.from_json(f.to_json()) == f
    assert FaultConfig.from_json(f.to_json()).zone_bounds == f.zone_bounds
    p = ControllerParams(aggression=2, right_turn_factor=0.4)
    assert ControllerParams.from_json(p.to_json()) == p
    s = SchedulerConfig(startup_delay=0.5)
    assert SchedulerConfig.from_json(s.to_json()) == s


# ---------------------------------------------------------------- safe speed --
DISTANCES = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)


@pytest.mark.parametrize("aggression", [1, 2, 3])
def test_safe_speed_is_monotone_and_near_closed_form(aggression):
    params = ControllerParams(aggression=aggression)
    curve = [estimate_safe_speed(params, d) for d in DISTANCES]
    assert all(a <= b for a, b in zip(curve, curve[1:]))
    for d, v in zip(DISTANCES, curve):
        if d >= 1.0:
            assert v == pytest.approx(closed_form_safe_speed(BRAKE[aggression], d, 0.1), rel=0.05)


def test_safe_speed_grows_with_aggression():
    for d in DISTANCES:
        vs = [estimate_safe_speed(ControllerParams(aggression=a), d) for a in (1, 2, 3)]
        assert vs[0] <= vs[1] <= vs[2]


def test_one_centimetre_is_unsafe_under_i1_but_fine_otherwise():
    params = ControllerParams(aggression=1)
    assert estimate_safe_speed(params, 0.01, FaultConfig.from_names(["i1"])) is None
    assert estimate_safe_speed(params, 0.01) >= 0.0


def test_safe_speed_needs_positive_distance():
    with pytest.raises(ValueError):
        estimate_safe_speed(ControllerParams(), 0.0)


def test_unrealistic_braking_flag_is_detected(stop_map):
    sc = scenario(stop_map, "0d2", [20.0], [10.0])
    honest = run_scenario(stop_map, sc)
    assert unrealistic_stops(honest) == []
    params = ControllerParams(aggression=1, speed_limit=stop_map.speed_limit)
    sc_fast = scenario(stop_map, "0d2", [2.0], [10.0])
    cheat = run_scenario(stop_map, sc_fast, params, FaultConfig(unrealistic_braking=True))
    assert unrealistic_stops(cheat)
