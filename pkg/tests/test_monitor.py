
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import recorded_runs
from trafficrv import fixtures
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
    Prop,
    Until,
    builtin,
    depth,
    parse_formula,
)
from trafficrv.monitor import (
    RULE_NOT_APPLICABLE,
    TRIVIALLY_SATISFIED,
    AutomatonOverflow,
    MonitorAutomaton,
    Verdict,
    build_automaton,
    check,
    check_oracle,
    check_valuations,
    evaluate_positions,
    oracle_valuations,
    run_automaton,
)
from trafficrv.scenario_gen import AbstractScenario, concretize
from trafficrv.simulator import FaultConfig, run_scenario

PROPS = [Prop(f"p{i}") for i in range(4)]


def formulas(max_depth: int):
    leaves = st.sampled_from(PROPS + [TRUE, FALSE])
    if max_depth <= 1:
        return leaves
    sub = st.deferred(lambda: formulas(max_depth - 1))
    return st.one_of(
        leaves,
        sub.map(Not),
        sub.map(Next),
        sub.map(Always),
        sub.map(Eventually),
        st.tuples(sub, sub).map(lambda t: And(t)),
        st.tuples(sub, sub).map(lambda t: Or(t)),
        st.tuples(sub, sub).map(lambda t: Implies(*t)),
        st.tuples(sub, sub).map(lambda t: Until(*t)),
    )


traces = st.lists(st.tuples(*[st.booleans()] * 4), min_size=1, max_size=50).map(
    lambda rows: [dict(zip(PROPS, row)) for row in rows]
)


@settings(max_examples=1000, deadline=None)
@given(formulas(5), traces)
def test_monitor_agrees_with_recursive_semantics(f, trace):
    assert depth(f) <= 5
    expected = oracle_valuations(f, trace).value
    assert check_valuations(f, trace).value == expected
    assert evaluate_positions(f, trace)[0] == (expected == "Pass")


def trace_of(*rows):
    return [dict(zip(PROPS, row)) for row in rows]


def test_rejecting_tick_is_first_violation():
    t = trace_of((1, 0, 0, 0), (1, 0, 0, 0), (1, 0, 0, 0), (0, 0, 0, 0), (1, 0, 0, 0))
    v = check_valuations(Always(PROPS[0]), t)
    assert v.value == "Fail" and v.witness_tick == 3


def test_pending_eventuality_fails_at_the_last_tick():
    t = trace_of((0, 0, 0, 0), (0, 0, 0, 0))
    assert check_valuations(Eventually(PROPS[0]), t).witness_tick == 1
    # Strong next is false on the final state.
    assert check_valuations(Next(TRUE), trace_of((1, 1, 1, 1))).value == "Fail"


def test_empty_trace_is_refused():
    with pytest.raises(ValueError):
        run_automaton(MonitorAutomaton(Always(PROPS[0])), [])


def test_response_automaton_is_small_and_complete():
    f = parse_formula("G (?p -> F ?q)", allow_props=True)
    aut = build_automaton(f)
    assert len(aut.states) == 2
    assert aut.classify(aut.initial) == MonitorAutomaton.UNDETERMINED
    # Every state has a transition for each of the four letters.
    assert len(aut.transitions) == 4 * len(aut.states)


def test_automaton_overflow_is_reported():
    f = parse_formula("G (?a -> X X X ?b)", allow_props=True)
    with pytest.raises(AutomatonOverflow, match="oracle"):
        build_automaton(f, cap=3)


def test_verdicts_carry_their_evidence():
    with pytest.raises(ValueError):
        Verdict("Fail")
    with pytest.raises(ValueError):
        Verdict("NA")
    report = Verdict("Fail", witness_tick=7, witness_binding=(("a", "a0"),)).report("p1", "0d2", 1.23456)
    assert report == {
        "property": "p1",
        "scenario_key": "0d2",
        "verdict": "Fail",
        "elapsed_ms": 1.235,
        "witness_tick": 7,
        "witness_binding": {"a": "a0"},
    }


# ------------------------------------------------------------ real traces --
@pytest.fixture(scope="module")
def stop_map():
    return fixtures.four_way_stop()


@pytest.fixture(scope="module")
def light_map():
    return fixtures.four_way_light()


def run_on(model, key, distances, faults=(), max_ticks=3000):
    sc = concretize(model, "J0", AbstractScenario.from_key(key, 4), distances, [0.0] * len(distances))
    return run_scenario(model, sc, faults=FaultConfig.from_names(list(faults)), max_ticks=max_ticks)


def test_light_rules_do_not_apply_at_a_stop_junction(stop_map):
    run = run_on(stop_map, "0d2-1d1-2d3-3d1", [20.0] * 4)
    for p in ("p4", "p5"):
        v = check(builtin(p), stop_map, run)
        assert (v.value, v.reason) == ("NA", RULE_NOT_APPLICABLE)


def test_left_turn_rule_is_trivial_without_a_left_turner(light_map):
    run = run_on(light_map, "0d2-2d1", [20.0, 20.0])
    v = check(builtin("p6"), light_map, run)
    assert (v.value, v.reason) == ("NA", TRIVIALLY_SATISFIED)


def test_overlap_fails_with_a_binding(stop_map):
    run = run_on(stop_map, "0d2-1d1-2d1-3d1", [0.01] * 4, faults=["i1"])
    v = check(builtin("p1"), stop_map, run)
    assert v.value == "Fail"
    a, b = dict(v.witness_binding)["a"], dict(v.witness_binding)["b"]
    assert a != b


def test_trace_needs_its_own_map(stop_map, light_map):
    run = run_on(stop_map, "0d2", [5.0])
    with pytest.raises(ValueError):
        check(builtin("p1"), fixtures.three_way_stop(), run)


@pytest.mark.parametrize(
    "which,props,seed",
    [("stop", ("p1", "p2", "p3"), 11), ("light", ("p4", "p5", "p6"), 12)],
)
def test_builtins_agree_with_oracle_on_recorded_runs(which, props, seed, stop_map, light_map):
    model = stop_map if which == "stop" else light_map
    seen = set()
    for run in recorded_runs(model, 100, seed):
        for p in props:
            f = builtin(p)
            got, want = check(f, model, run), check_oracle(f, model, run)
            assert (got.value, got.reason) == (want.value, want.reason), (p, run.meta.get("scenario"))
            seen.add(got.value)
    assert seen >= {"Pass", "Fail"}
