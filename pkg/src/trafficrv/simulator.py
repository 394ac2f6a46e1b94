"""Deterministic discrete-time traffic simulation with fault injection.

Each tick every agent picks a speed from a longitudinal controller, moves
``speed * delta_t`` metres along its itinerary (semi-implicit Euler), and
updates its waiting time. Stop-sign junctions are run by a scheduler that
grants entry one agent at a time; traffic lights follow fixed phase programs.

Fault switches reproduce five known controller/scheduler deficiencies:

* ``i1`` the first ticks after initialisation accelerate without checking
  the braking distance;
* ``i2`` the scheduler judges junction occupancy by a smaller inner zone;
* ``i3`` ties in waiting time are broken by creation order, ignoring
  right-of-way;
* ``i4`` a right turn on red goes after a random wait and only looks for
  left traffic that is still approaching;
* ``i5`` left turns on green do not yield to oncoming traffic.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable

from .map_model import MapModel, opposite, right_of
from .metric_graph import TOL, Turn
from .scenario import AgentSpec, ConcreteScenario
from .semantic_state import AgentState, GlobalState, ObjectState, Run, advance_agent

ACCEL = {1: 1.5, 2: 3.0, 3: 4.5}
BRAKE = {1: 3.0, 2: 4.5, 3: 6.0}
STOPPED = 0.01
AT_ENTRANCE = 0.2
SNAP = 1e-4


@dataclass(frozen=True)
class ControllerParams:
    aggression: int = 1
    speed_limit: float = 11.176
    turn_factor: float = 0.6
    right_turn_factor: float | None = None
    stop_threshold: float = AT_ENTRANCE
    delta_t: float = 0.1
    look_ahead: float = 30.0
    conflict_entry_speed: float = 1.5

    def __post_init__(self):
        if self.aggression not in ACCEL:
            raise ValueError(f"aggression must be 1, 2 or 3, got {self.aggression}")
        if not 0 < self.turn_factor <= 1:
            raise ValueError("turn_factor must be in (0, 1]")

    @property
    def accel(self) -> float:
        return ACCEL[self.aggression]

    @property
    def brake(self) -> float:
        return BRAKE[self.aggression]

    def turn_speed(self, turn: Turn) -> float:
        if turn is Turn.STRAIGHT:
            return self.speed_limit
        if turn is Turn.RIGHT and self.right_turn_factor is not None:
            return self.right_turn_factor * self.speed_limit
        return self.turn_factor * self.speed_limit

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ControllerParams":
        return cls(**data)


@dataclass(frozen=True)
class FaultConfig:
    i1_init_ignores_braking: bool = False
    i1_ticks: int = 2
    # Within this many metres of the line the burst aims at the turn speed.
    i1_reach: float = 1.0
    i2_shrunken_boundary_zone: bool = False
    zone_scale: float = 1.0
    zone_bounds: dict[str, tuple[float, float]] = field(default_factory=dict, hash=False)
    i3_creation_order_priority: bool = False
    i4_random_right_on_red: bool = False
    i4_wait_range: tuple[float, float] = (1.0, 3.0)
    i5_incomplete_lane_order: bool = False
    rng_seed: int = 0
    unrealistic_braking: bool = False

    def __post_init__(self):
        if not 0 < self.zone_scale <= 1:
            raise ValueError("zone_scale must be in (0, 1]")
        for seg, (lo, hi) in self.zone_bounds.items():
            if not 0 <= lo < hi <= 1:
                raise ValueError(f"zone bounds for {seg!r} must satisfy 0 <= lo < hi <= 1")

    @classmethod
    def from_names(cls, names: Iterable[str], **kw) -> "FaultConfig":
        flags = {
            "i1": "i1_init_ignores_braking",
            "i2": "i2_shrunken_boundary_zone",
            "i3": "i3_creation_order_priority",
            "i4": "i4_random_right_on_red",
            "i5": "i5_incomplete_lane_order",
        }
        chosen = {}
        for name in names:
            name = name.strip().lower()
            if not name:
                continue
            if name not in flags:
                raise ValueError(f"unknown fault {name!r}")
            chosen[flags[name]] = True
        return cls(**chosen, **kw)

    @property
    def names(self) -> list[str]:
        flags = [
            ("i1", self.i1_init_ignores_braking),
            ("i2", self.i2_shrunken_boundary_zone),
            ("i3", self.i3_creation_order_priority),
            ("i4", self.i4_random_right_on_red),
            ("i5", self.i5_incomplete_lane_order),
        ]
        return [n for n, on in flags if on]

    @property
    def any(self) -> bool:
        return bool(self.names) or self.unrealistic_braking

    def zone(self, segment: str) -> tuple[float, float]:
        """Fractional [lo, hi] of a junction segment inside the scheduler zone."""
        if segment in self.zone_bounds:
            return self.zone_bounds[segment]
        half = self.zone_scale / 2
        return 0.5 - half, 0.5 + half

    def to_json(self) -> dict[str, Any]:
        data = asdict(self)
        data["zone_bounds"] = {k: list(v) for k, v in sorted(self.zone_bounds.items())}
        data["i4_wait_range"] = list(self.i4_wait_range)
        return data

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "FaultConfig":
        data = dict(data)
        if "zone_bounds" in data:
            data["zone_bounds"] = {k: tuple(v) for k, v in data["zone_bounds"].items()}
        if "i4_wait_range" in data:
            data["i4_wait_range"] = tuple(data["i4_wait_range"])
        return cls(**data)


@dataclass(frozen=True)
class SchedulerConfig:
    """Stop-sign scheduler behaviour that is not a fault.

    ``min_stop`` is how long an agent must have been stopped at the line
    before it can be granted. ``approach_grant`` lets an agent be granted
    while still approaching, within that many metres, when the junction is
    idle. ``startup_delay`` is the reaction time of a stopped agent after
    its grant.
    """

    min_stop: float = 0.1
    approach_grant: float = 0.0
    startup_delay: float = 0.0

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "SchedulerConfig":
        return cls(**data)


@dataclass(frozen=True)
class Crossing:
    """The next junction an agent will traverse."""

    junction: str
    segment: str
    entrance: str
    turn: Turn
    distance: float  # to the entrance; 0 when at the line
    inside: bool


@dataclass
class AgentMemory:
    creation: int
    init_ticks: int
    granted: set[str] = field(default_factory=set)
    entered: set[str] = field(default_factory=set)
    committed: set[str] = field(default_factory=set)
    start_tick: int = 0
    red_wait: float | None = None


@dataclass
class JunctionSchedule:
    current: set[str] = field(default_factory=set)
    # waiter -> agents it must let into the junction first
    obligations: dict[str, set[str]] = field(default_factory=dict)


def light_color(program: tuple[tuple[str, float], ...], time: float) -> str:
    cycle = sum(d for _, d in program)
    t = math.fmod(time + 1e-9, cycle)
    for color, dur in program:
        if t < dur:
            return color
        t -= dur
    return program[-1][0]


def envelope_speed(d: float, brake: float, dt: float, terminal: float = 0.0) -> float:
    """Largest speed v with v*dt + (v^2 - terminal^2) / (2*brake) <= d."""
    if d <= 0:
        return min(terminal, 0.0) if terminal <= 0 else max(0.0, min(terminal, d / dt))
    c = terminal * terminal / (2 * brake) + d
    return brake * (-dt + math.sqrt(dt * dt + 2 * c / brake))


class Simulator:
    def __init__(
        self,
        model: MapModel,
        params: ControllerParams | None = None,
        faults: FaultConfig | None = None,
        scheduler: SchedulerConfig | None = None,
        signal_rotation: int = 0,
        hold_all: bool = False,
    ):
        self.model = model
        self.graph = model.graph
        self.dec = model.dec
        self.params = params or ControllerParams(speed_limit=model.speed_limit)
        self.faults = faults or FaultConfig()
        self.sched_cfg = scheduler or SchedulerConfig()
        self.hold_all = hold_all
        self.rng = random.Random(self.faults.rng_seed)
        self.memory: dict[str, AgentMemory] = {}
        self.schedules = {j.id: JunctionSchedule() for j in self.dec.junctions}
        self.notes: list[str] = []
        self.control: dict[str, str] = {}
        self.light_of: dict[str, str] = {}
        self.programs: dict[str, tuple[tuple[str, float], ...]] = {}
        self._init_controls(signal_rotation)
        self._right = {}
        self._opp = {}
        for j in self.dec.junctions:
            for a in j.entrances:
                for b in j.entrances:
                    self._right[a, b] = right_of(self.graph, self.dec, a, b)
                    self._opp[a, b] = opposite(self.graph, self.dec, a, b)

    def _init_controls(self, rotation: int) -> None:
        by_entrance = {}
        for ob in self.model.doc.objects:
            en = self.model.object_entrance(ob)
            if en is None:
                continue
            self.control[en] = "stop" if ob.kind == "stop_sign" else "light"
            if ob.kind == "traffic_light":
                self.light_of[en] = ob.id
                by_entrance[en] = ob
        for ob in self.model.doc.objects:
            if ob.kind != "traffic_light":
                continue
            en = self.model.object_entrance(ob)
            source = ob
            if en is not None and rotation:
                j = self.dec.junction(self.dec.junction_of_entrance[en])
                src_en = j.entrances[(j.index(en) - rotation) % j.arms]
                source = by_entrance.get(src_en, ob)
            self.programs[ob.id] = source.phases

    # ---------------------------------------------------------- queries --
    def crossing(self, agent: AgentState) -> Crossing | None:
        travelled = 0.0
        for item in agent.itinerary:
            jid = self.dec.junction_of_segment.get(item.segment)
            if jid is not None:
                inside = item.start > TOL
                return Crossing(
                    jid,
                    item.segment,
                    self.graph.source(item.segment),
                    self.graph.segments[item.segment].turn,
                    0.0 if inside else travelled,
                    inside,
                )
            travelled += item.length
        return None

    def color_at(self, entrance: str, time: float) -> str | None:
        lt = self.light_of.get(entrance)
        if lt is None:
            return None
        return light_color(self.programs[lt], time)

    def in_zone(self, agent: AgentState, jid: str) -> bool:
        """Occupancy as the scheduler sees it."""
        seg = agent.pos.segment
        if self.dec.junction_of_segment.get(seg) != jid or agent.pos.offset <= TOL:
            return False
        if not self.faults.i2_shrunken_boundary_zone:
            return True
        lo, hi = self.faults.zone(seg)
        frac = agent.pos.offset / self.graph.length(seg)
        return lo <= frac <= hi

    def past_zone(self, agent: AgentState, jid: str) -> bool:
        mem = self.memory[agent.agent_id]
        if jid not in mem.entered:
            return False
        seg = agent.pos.segment
        if self.dec.junction_of_segment.get(seg) != jid:
            return True
        if not self.faults.i2_shrunken_boundary_zone:
            return False
        _, hi = self.faults.zone(seg)
        return agent.pos.offset / self.graph.length(seg) > hi

    # ------------------------------------------------------------ setup --
    def initial_state(self, scenario: ConcreteScenario) -> GlobalState:
        self.memory.clear()
        self.schedules = {j.id: JunctionSchedule() for j in self.dec.junctions}
        self.notes = []
        self.rng = random.Random(self.faults.rng_seed)
        agents = []
        for n, agent in enumerate(scenario.agents):
            agents.append(AgentState.start(agent.agent_id, agent.itinerary, agent.speed))
            init = self.faults.i1_ticks if self.faults.i1_init_ignores_braking else 0
            self.memory[agent.agent_id] = AgentMemory(creation=n, init_ticks=init)
        return GlobalState(0, 0.0, tuple(agents), self._objects(0.0))

    def _objects(self, time: float) -> tuple[ObjectState, ...]:
        out = []
        for ob in self.model.doc.objects:
            color = light_color(self.programs[ob.id], time) if ob.kind == "traffic_light" else None
            out.append(ObjectState(ob.id, ob.kind, self.model.placements[ob.id], color))
        return tuple(out)

    # --------------------------------------------------------- stepping --
    def step(self, state: GlobalState) -> GlobalState:
        dt = self.params.delta_t
        crossings = {a.agent_id: self.crossing(a) for a in state.agents}
        self._schedule(state, crossings)
        new_agents = []
        for agent in state.agents:
            if agent.finished:
                new_agents.append(agent)
                continue
            v_new = self._control(agent, crossings[agent.agent_id], state)
            moved, _ = advance_agent(self.graph, agent, v_new * dt)
            if moved.finished:
                v_new = 0.0
            if v_new < STOPPED and agent.speed < STOPPED and not moved.finished:
                ticks = agent.wait_ticks + 1
            else:
                ticks = 0
            moved = replace(moved, speed=v_new, wait_ticks=ticks, waiting_time=round(ticks * dt, 9))
            new_agents.append(moved)
            cr = crossings[agent.agent_id]
            if cr is not None and moved.pos.segment == cr.segment and moved.pos.offset > TOL:
                self.memory[agent.agent_id].entered.add(cr.junction)
            if self.memory[agent.agent_id].init_ticks > 0:
                self.memory[agent.agent_id].init_ticks -= 1
        tick = state.tick + 1
        time = round(tick * dt, 9)
        return GlobalState(tick, time, tuple(new_agents), self._objects(time))

    # Stop-sign scheduling -------------------------------------------------
    def _schedule(self, state: GlobalState, crossings: dict[str, Crossing | None]) -> None:
        for j in self.dec.junctions:
            if not all(self.control.get(en) == "stop" for en in j.entrances):
                continue
            sched = self.schedules[j.id]
            by_id = {a.agent_id: a for a in state.agents}
            for aid in list(sched.current):
                if self.past_zone(by_id[aid], j.id) or by_id[aid].finished:
                    sched.current.discard(aid)
            waiting = [
                a
                for a in state.agents
                if crossings[a.agent_id] is not None
                and crossings[a.agent_id].junction == j.id
                and not crossings[a.agent_id].inside
                and j.id not in self.memory[a.agent_id].granted
            ]
            at_line = [a for a in waiting if crossings[a.agent_id].distance <= self.params.stop_threshold]
            if not self.faults.i3_creation_order_priority:
                self._track_obligations(sched, at_line, crossings, state)
            if self.hold_all:
                continue
            occupied = bool(sched.current) or any(self.in_zone(a, j.id) for a in state.agents)
            if occupied:
                continue
            min_ticks = round(self.sched_cfg.min_stop / self.params.delta_t)
            queue = [
                a
                for a in at_line
                if a.speed < STOPPED
                and crossings[a.agent_id].distance <= TOL
                and a.wait_ticks >= min_ticks
            ]
            winner = self.scheduler_grant(j.id, queue, crossings, state)
            if winner is None and not queue and self.sched_cfg.approach_grant > 0:
                winner = self._rolling_grant(j.id, waiting, crossings, state)
            if winner is not None:
                mem = self.memory[winner.agent_id]
                mem.granted.add(j.id)
                sched.current.add(winner.agent_id)
                delay = round(self.sched_cfg.startup_delay / self.params.delta_t)
                mem.start_tick = state.tick + (delay if winner.speed < STOPPED else 0)

    def _track_obligations(self, sched, at_line, crossings, state) -> None:
        """Record who must let whom enter first, mirroring right-of-way and FIFO."""
        for a in at_line:
            for b in at_line:
                if a is b:
                    continue
                ea, eb = crossings[a.agent_id].entrance, crossings[b.agent_id].entrance
                # b waits for a when a is on b's right with equal wait, or a waited longer.
                if (a.wait_ticks == b.wait_ticks and self._right[ea, eb]) or b.wait_ticks < a.wait_ticks:
                    sched.obligations.setdefault(b.agent_id, set()).add(a.agent_id)
        for waiter, owed in list(sched.obligations.items()):
            owed -= {o for o in owed if crossings.get(o) is None or crossings[o].inside}

    def scheduler_grant(self, jid: str, queue: list[AgentState], crossings, state) -> AgentState | None:
        """Pick the next agent from those stopped at the line, or None."""
        if not queue:
            return None
        longest = max(a.wait_ticks for a in queue)
        tied = [a for a in queue if a.wait_ticks == longest]
        if self.faults.i3_creation_order_priority:
            return min(tied, key=lambda a: self.memory[a.agent_id].creation)
        sched = self.schedules[jid]
        free = [a for a in tied if not sched.obligations.get(a.agent_id)]
        j = self.dec.junction(jid)
        order = lambda a: j.index(crossings[a.agent_id].entrance)
        if free:
            return min(free, key=order)
        pick = min(tied, key=order)
        self.notes.append(f"tick {state.tick}: deadlock-broken at {jid}, granted {pick.agent_id}")
        sched.obligations.pop(pick.agent_id, None)
        return pick

    def _rolling_grant(self, jid, waiting, crossings, state) -> AgentState | None:
        near = [a for a in waiting if crossings[a.agent_id].distance <= self.sched_cfg.approach_grant]
        if not near:
            return None
        if self.faults.i3_creation_order_priority:
            return min(near, key=lambda a: self.memory[a.agent_id].creation)
        # Correct mode only lets an agent roll through when nobody else is near.
        if len(near) == 1 and not self.schedules[jid].obligations.get(near[0].agent_id):
            return near[0]
        return None

    # Controller ------------------------------------------------------------
    def _control(self, agent: AgentState, cr: Crossing | None, state: GlobalState) -> float:
        p = self.params
        mem = self.memory[agent.agent_id]
        v = agent.speed
        dt = p.delta_t
        if cr is not None and cr.inside:
            target = p.turn_speed(cr.turn)
        else:
            target = p.speed_limit
        if mem.init_ticks > 0:
            # Initial burst with no braking check.
            near = cr is not None and (cr.inside or cr.distance <= self.faults.i1_reach)
            return self.controller_step(v, p.turn_speed(cr.turn) if near else p.speed_limit)
        v_cand = self.controller_step(v, target)
        if cr is None or cr.inside:
            return v_cand
        cleared, terminal = self._cleared(agent, cr, state)
        if cleared and terminal is None:
            return v_cand
        d = cr.distance
        brake = p.brake
        v_min = max(0.0, v - brake * dt)
        if cleared:
            # Pass the line at no more than ``terminal``.
            cap = envelope_speed(d, brake, dt, terminal) if d > TOL else v_cand
            return max(v_min, min(v_cand, cap))
        v_new = max(v_min, min(v_cand, envelope_speed(d, brake, dt)))
        if self.faults.unrealistic_braking and v_new * dt > d:
            return d / dt
        if v_new * dt > d - SNAP:
            if v_min * dt <= d:
                v_new = d / dt
        return v_new

    def controller_step(self, v: float, target: float) -> float:
        """Speed after one tick of unconstrained tracking of ``target``."""
        p = self.params
        if v < target:
            return min(target, v + p.accel * (target - v) / p.speed_limit * p.delta_t)
        return max(target, v - p.brake * p.delta_t)

    def controller_target_speed(self, agent: AgentState, state: GlobalState) -> float:
        """Speed the controller commands for ``agent`` in ``state``."""
        return self._control(agent, self.crossing(agent), state)

    def _stopped_at_line(self, agent: AgentState, cr: Crossing) -> bool:
        return cr.distance <= TOL and agent.speed < STOPPED

    def _cleared(self, agent: AgentState, cr: Crossing, state: GlobalState) -> tuple[bool, float | None]:
        mem = self.memory[agent.agent_id]
        kind = self.control.get(cr.entrance)
        if kind is None:
            return True, None
        if kind == "stop":
            return cr.junction in mem.granted and state.tick >= mem.start_tick, None
        if cr.junction in mem.committed:
            return True, None
        color = self.color_at(cr.entrance, state.time)
        p = self.params
        if color == "green":
            if cr.turn is Turn.LEFT and not self.faults.i5_incomplete_lane_order:
                for other, ocr in self._others_at(state, cr.junction):
                    if (
                        self._opp[cr.entrance, ocr.entrance]
                        and ocr.turn is not Turn.LEFT
                        and ocr.distance <= p.look_ahead
                    ):
                        return False, None
            terminal = None
            if cr.distance > TOL and self._conflict_waiting(agent, cr, state):
                terminal = p.conflict_entry_speed
            return True, terminal
        if color == "yellow":
            v = agent.speed
            if v < STOPPED or v * v / (2 * p.brake) <= cr.distance:
                return False, None
            mem.committed.add(cr.junction)
            return True, None
        # red
        if cr.turn is not Turn.RIGHT or not self._stopped_at_line(agent, cr) or agent.wait_ticks < 1:
            return False, None
        lefts = [
            (o, ocr)
            for o, ocr in self._others_at(state, cr.junction)
            if self._right[cr.entrance, ocr.entrance]
        ]
        if self.faults.i4_random_right_on_red:
            if mem.red_wait is None:
                lo, hi = self.faults.i4_wait_range
                mem.red_wait = round(self.rng.uniform(lo, hi), 1)
            if agent.wait_ticks * p.delta_t + 1e-9 < mem.red_wait:
                return False, None
            busy = any(p.stop_threshold < ocr.distance <= p.look_ahead for _, ocr in lefts)
        else:
            busy = any(ocr.distance <= p.look_ahead for _, ocr in lefts)
        if busy:
            return False, None
        mem.committed.add(cr.junction)
        return True, None

    def _others_at(self, state: GlobalState, jid: str):
        for other in state.agents:
            if other.finished:
                continue
            ocr = self.crossing(other)
            if ocr is not None and ocr.junction == jid and not ocr.inside:
                yield other, ocr

    def _conflict_waiting(self, agent: AgentState, cr: Crossing, state: GlobalState) -> bool:
        """Someone is stopped at another entrance, headed for the same exit."""
        exit_v = self.graph.target(cr.segment)
        for other, ocr in self._others_at(state, cr.junction):
            if other is agent or ocr.entrance == cr.entrance:
                continue
            if self.graph.target(ocr.segment) == exit_v and self._stopped_at_line(other, ocr):
                return True
        return False

    # -------------------------------------------------------------- run --
    def run(self, scenario: ConcreteScenario, max_ticks: int = 1200) -> Run:
        state = self.initial_state(scenario)
        states = [state]
        while state.tick < max_ticks and not all(a.finished for a in state.agents):
            state = self.step(state)
            states.append(state)
        exhausted = not all(a.finished for a in state.agents)
        meta = {
            "scenario": scenario.key,
            "junction": scenario.junction,
            "max_ticks_exhausted": exhausted,
            "notes": list(self.notes),
            "faults": self.faults.names,
        }
        return Run(self.graph, self.params.delta_t, states, meta)


def step(model: MapModel, state: GlobalState, simulator: Simulator) -> GlobalState:
    """Functional wrapper: advance ``state`` by one tick."""
    return simulator.step(state)


def run_scenario(
    model: MapModel,
    scenario: ConcreteScenario,
    params: ControllerParams | None = None,
    faults: FaultConfig | None = None,
    max_ticks: int = 1200,
    scheduler: SchedulerConfig | None = None,
) -> Run:
    sim = Simulator(model, params, faults, scheduler, signal_rotation=scenario.signal_rotation)
    return sim.run(scenario, max_ticks)


# -------------------------------------------------------------- safe speed --
def _probe_model(params: ControllerParams, d: float) -> MapModel:
    from .fixtures import junction_map

    return MapModel.from_document(
        junction_map(2, "stop", approach=max(60.0, d + 60.0), speed_limit=params.speed_limit)
    )


def stops_before_line(
    params: ControllerParams, d: float, v0: float, faults: FaultConfig | None = None, model=None
) -> bool:
    """Does a lone agent ``d`` metres before an ungranted stop line halt in time?"""
    model = model or _probe_model(params, d)
    approach = model.graph.length("in0")
    probe = AgentSpec(
        "probe",
        0,
        1,
        d,
        v0,
        (
            model.graph.subsegment("in0", approach - d, approach),
            model.graph.subsegment("j0d1", 0.0, model.graph.length("j0d1")),
        ),
    )
    sim = Simulator(model, params, faults or FaultConfig(), hold_all=True)
    state = sim.initial_state(ConcreteScenario("J0", "probe", (probe,)))
    for _ in range(int(60 / params.delta_t)):
        state = sim.step(state)
        a = state.agents[0]
        if a.pos.segment == "j0d1" and a.pos.offset > TOL or a.finished:
            return False
        if a.speed < STOPPED and a.wait_ticks >= 1:
            return True
    return True


def estimate_safe_speed(
    params: ControllerParams, d: float, faults: FaultConfig | None = None, resolution: float = 0.01
) -> float | None:
    """Largest initial speed from which the agent stops before the line.

    Returns None when not even a standing start is safe.
    """
    if d <= 0:
        raise ValueError("distance must be positive")
    model = _probe_model(params, d)
    if not stops_before_line(params, d, 0.0, faults, model):
        return None
    lo, hi = 0.0, max(1.0, math.sqrt(2 * params.brake * d) * 2)
    while stops_before_line(params, d, hi, faults, model):
        lo, hi = hi, hi * 2
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if stops_before_line(params, d, mid, faults, model):
            lo = mid
        else:
            hi = mid
    return math.floor(lo / resolution) * resolution


def closed_form_safe_speed(brake: float, d: float, dt: float) -> float:
    """Kinematic bound when braking starts in the very first tick.

    Semi-implicit stepping covers v^2/(2b) - v*dt/2 before halting.
    """
    half = brake * dt / 2
    return half + math.sqrt(half * half + 2 * brake * d)


def unrealistic_stops(run: Run, from_speed: float = 10.0, within: float = 3.5) -> list[tuple[str, int]]:
    """Agents that halt from ``from_speed`` or more in under ``within`` metres."""
    found = []
    ids = run.agent_ids
    for idx, aid in enumerate(ids):
        travelled = None
        for n, s in enumerate(run.states):
            a = s.agents[idx]
            if a.speed >= from_speed:
                travelled = 0.0
                continue
            if travelled is None:
                continue
            travelled += a.speed * run.delta_t
            if a.speed < STOPPED and not a.finished:
                if travelled < within:
                    found.append((aid, n))
                travelled = None
    return found
