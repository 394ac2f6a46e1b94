"""Checking formulas against finite runs.

The pipeline is: expand ``take``, unfold quantifiers over the finite domains
of the run, fold everything the static map decides, decide applicability,
then feed per-tick atom valuations to a progression automaton.

``check_oracle`` is a separate brute-force evaluator that interprets the
quantified formula directly over the trace; the two must always agree.
"""

from __future__ import annotations

import functools
import itertools
import time
from collections import deque
from dataclasses import dataclass, field, fields
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .logic import (
    ATOMS, FALSE, TRUE, And, At, Bool, ColorIs, Const, Eventually, Exists, Forall,
    Formula, Implies, Next, Not, Opposite, Or, Always, RightOf, Same, Until, Var,
    atoms_of, eval_atom, expand_take, position_near_vertex, substitute, to_text,
)
from .map_model import MapModel, opposite, right_of
from .semantic_state import GlobalState, Run, TraceError

DEFAULT_STATE_CAP = 10**6

PASS, FAIL, NA = "Pass", "Fail", "NA"
RULE_NOT_APPLICABLE = "rule_not_applicable"
TRIVIALLY_SATISFIED = "trivially_satisfied"


class AutomatonOverflow(RuntimeError):
    pass


@dataclass(frozen=True)
class Verdict:
    value: str
    reason: str | None = None
    witness_tick: int | None = None
    witness_binding: tuple[tuple[str, str], ...] | None = None
    witness_formula: str | None = None

    def __post_init__(self):
        if self.value == FAIL and self.witness_tick is None:
            raise ValueError("a Fail verdict needs a witness tick")
        if self.value == NA and self.reason not in (RULE_NOT_APPLICABLE, TRIVIALLY_SATISFIED):
            raise ValueError("an NA verdict needs a reason")

    def report(self, prop: str, scenario_key: str | None, elapsed_ms: float) -> dict[str, Any]:
        out: dict[str, Any] = {
            "property": prop,
            "scenario_key": scenario_key,
            "verdict": self.value,
            "elapsed_ms": round(elapsed_ms, 3),
        }
        if self.reason:
            out["reason"] = self.reason
        if self.witness_tick is not None:
            out["witness_tick"] = self.witness_tick
        if self.witness_binding is not None:
            out["witness_binding"] = dict(self.witness_binding)
        return out

    @property
    def cell(self) -> str:
        return self.value


# ------------------------------------------------------------ construction --
def _order(f: Formula):
    return hash(f)


def mk_not(f: Formula) -> Formula:
    if isinstance(f, Bool):
        return FALSE if f.value else TRUE
    if isinstance(f, Not):
        return f.f
    return Not(f)


def mk_and(args: Iterable[Formula]) -> Formula:
    seen: dict[Formula, None] = {}
    for a in args:
        if isinstance(a, And):
            for b in a.args:
                seen[b] = None
        elif a == FALSE:
            return FALSE
        elif a != TRUE:
            seen[a] = None
    if FALSE in seen:
        return FALSE
    if not seen:
        return TRUE
    if len(seen) == 1:
        return next(iter(seen))
    return And(tuple(sorted(seen, key=_order)))


def mk_or(args: Iterable[Formula]) -> Formula:
    seen: dict[Formula, None] = {}
    for a in args:
        if isinstance(a, Or):
            for b in a.args:
                seen[b] = None
        elif a == TRUE:
            return TRUE
        elif a != FALSE:
            seen[a] = None
    if TRUE in seen:
        return TRUE
    if not seen:
        return FALSE
    if len(seen) == 1:
        return next(iter(seen))
    return Or(tuple(sorted(seen, key=_order)))


def mk_implies(a: Formula, b: Formula) -> Formula:
    if a == FALSE or b == TRUE:
        return TRUE
    if a == TRUE:
        return b
    if b == FALSE:
        return mk_not(a)
    return Implies(a, b)


# ----------------------------------------------------------------- domains --
@dataclass(frozen=True)
class Domains:
    """Finite constant sets per sort, taken from the map and the first state."""

    agent: tuple[str, ...]
    entrance: tuple[str, ...]
    light: tuple[str, ...]
    object: tuple[str, ...]
    junction: tuple[str, ...]
    focus: str | None

    def of(self, sort: str) -> tuple[str, ...]:
        return getattr(self, sort)

    @classmethod
    def build(cls, model: MapModel, first: GlobalState, focus: str | None) -> "Domains":
        junctions = tuple(j.id for j in model.dec.junctions)
        entrances: tuple[str, ...] = ()
        if focus is not None:
            entrances = tuple(model.dec.junction(focus).entrances)
        return cls(
            agent=tuple(sorted(a.agent_id for a in first.agents)),
            entrance=entrances,
            light=tuple(o.object_id for o in first.objects if o.kind == "traffic_light"),
            object=tuple(o.object_id for o in first.objects),
            junction=junctions,
            focus=focus,
        )


def focus_junction(model: MapModel, run: Run, junction: str | None = None) -> str | None:
    if junction is not None:
        model.dec.junction(junction)
        return junction
    meta = run.meta.get("junction")
    if meta:
        return meta
    return model.dec.junctions[0].id if model.dec.junctions else None


def _focus_const(f: Formula, focus: str | None) -> Formula:
    """Replace the symbolic junction J by the junction under test."""
    if focus is None:
        return f
    return substitute_focus(f, focus)


def substitute_focus(f: Formula, focus: str) -> Formula:
    if isinstance(f, At) and f.region == Const("J"):
        return At(f.x, Const(focus))
    from .logic import children, rebuild

    kids = children(f)
    if not kids:
        return f
    return rebuild(f, tuple(substitute_focus(k, focus) for k in kids))


def unfold_instances(f: Formula, domains: Domains) -> list[tuple[tuple[tuple[str, str], ...], Formula]]:
    """Instantiate the leading universal prefix, one entry per binding."""
    return list(_unfold_instances(f, domains))


@functools.lru_cache(maxsize=256)
def _unfold_instances(f: Formula, domains: Domains) -> tuple:
    # Runs with the same agents and junction share their instances.
    prefix = []
    body = f
    while isinstance(body, Forall):
        prefix.append((body.var, body.sort))
        body = body.body
    out = []
    for values in itertools.product(*(domains.of(s) for _, s in prefix)):
        inst = body
        for (var, _), value in zip(prefix, values):
            inst = substitute(inst, var, Const(value))
        out.append((tuple((v, c) for (v, _), c in zip(prefix, values)), unfold(inst, domains)))
    return tuple(out)


def unfold(f: Formula, domains: Domains) -> Formula:
    """Quantifier-free equivalent: forall becomes a conjunction, exists a disjunction.

    An empty domain makes forall true and exists false.
    """
    if isinstance(f, (Forall, Exists)):
        parts = [unfold(substitute(f.body, f.var, Const(c)), domains) for c in domains.of(f.sort)]
        if isinstance(f, Forall):
            return And(tuple(parts)) if len(parts) > 1 else (parts[0] if parts else TRUE)
        return Or(tuple(parts)) if len(parts) > 1 else (parts[0] if parts else FALSE)
    from .logic import children, rebuild

    kids = children(f)
    if not kids:
        return f
    return rebuild(f, tuple(unfold(k, domains) for k in kids))


# ------------------------------------------------------------ static model --
@dataclass(frozen=True)
class StaticModel:
    """Facts that hold at every tick: map relations and fixed objects."""

    right_of: frozenset[tuple[str, str]]
    opposite: frozenset[tuple[str, str]]
    object_regions: Mapping[str, frozenset[str]]
    object_kind: Mapping[str, str]
    entex: Mapping[str, str]


def extract(model: MapModel, first: GlobalState) -> StaticModel:
    graph, dec = model.graph, model.dec
    ro, op, entex = set(), set(), {}
    for j in dec.junctions:
        entex.update(j.entex)
        for e1, e2 in itertools.permutations(j.entrances, 2):
            if right_of(graph, dec, e1, e2):
                ro.add((e1, e2))
            if opposite(graph, dec, e1, e2):
                op.add((e1, e2))
    regions, kinds = {}, {}
    for o in first.objects:
        where = set()
        for j in dec.junctions:
            if o.pos.segment in j.segments:
                where.add(j.id)
            for en in j.entrances:
                if position_near_vertex(graph, o.pos, en):
                    where.add(en)
        regions[o.object_id] = frozenset(where)
        kinds[o.object_id] = o.kind
    return StaticModel(frozenset(ro), frozenset(op), regions, kinds, entex)


def _static_value(atom: Formula, static: StaticModel) -> bool | None:
    if isinstance(atom, RightOf) and isinstance(atom.e1, Const) and isinstance(atom.e2, Const):
        return (atom.e1.name, atom.e2.name) in static.right_of
    if isinstance(atom, Opposite) and isinstance(atom.e1, Const) and isinstance(atom.e2, Const):
        return (atom.e1.name, atom.e2.name) in static.opposite
    if isinstance(atom, Same) and isinstance(atom.x, Const) and isinstance(atom.y, Const):
        return atom.x.name == atom.y.name
    if isinstance(atom, At) and isinstance(atom.x, Const) and atom.x.name in static.object_regions:
        if isinstance(atom.region, Const):
            return atom.region.name in static.object_regions[atom.x.name]
    if isinstance(atom, ColorIs) and isinstance(atom.light, Const):
        if static.object_kind.get(atom.light.name, "traffic_light") != "traffic_light":
            return False
    return None


def simplify(f: Formula, static: StaticModel) -> Formula:
    """Fold statically decided atoms and boolean constants."""
    if isinstance(f, ATOMS):
        v = _static_value(f, static)
        return f if v is None else (TRUE if v else FALSE)
    if isinstance(f, Bool):
        return f
    if isinstance(f, Not):
        return mk_not(simplify(f.f, static))
    if isinstance(f, And):
        return mk_and(simplify(a, static) for a in f.args)
    if isinstance(f, Or):
        return mk_or(simplify(a, static) for a in f.args)
    if isinstance(f, Implies):
        return mk_implies(simplify(f.left, static), simplify(f.right, static))
    if isinstance(f, Next):
        g = simplify(f.f, static)
        return FALSE if g == FALSE else Next(g)
    if isinstance(f, Always):
        g = simplify(f.f, static)
        return g if isinstance(g, Bool) else Always(g)
    if isinstance(f, Eventually):
        g = simplify(f.f, static)
        return g if isinstance(g, Bool) else Eventually(g)
    if isinstance(f, Until):
        left, right = simplify(f.left, static), simplify(f.right, static)
        if isinstance(right, Bool):
            return right
        if left == FALSE:
            return right
        return Until(left, right)
    raise TypeError(f"cannot simplify {to_text(f)}")


# ------------------------------------------------------------- progression --
def progress(f: Formula, val: Mapping[Formula, bool]) -> Formula:
    """Obligation on the rest of the trace after reading one valuation."""
    if isinstance(f, Bool):
        return f
    if isinstance(f, ATOMS):
        return TRUE if val[f] else FALSE
    if isinstance(f, Not):
        return mk_not(progress(f.f, val))
    if isinstance(f, And):
        out = []
        for a in f.args:
            p = progress(a, val)
            if p == FALSE:
                return FALSE
            out.append(p)
        return mk_and(out)
    if isinstance(f, Or):
        out = []
        for a in f.args:
            p = progress(a, val)
            if p == TRUE:
                return TRUE
            out.append(p)
        return mk_or(out)
    if isinstance(f, Implies):
        return mk_or((mk_not(progress(f.left, val)), progress(f.right, val)))
    if isinstance(f, Next):
        return f.f
    if isinstance(f, Always):
        return mk_and((progress(f.f, val), f))
    if isinstance(f, Eventually):
        return mk_or((progress(f.f, val), f))
    if isinstance(f, Until):
        return mk_or((progress(f.right, val), mk_and((progress(f.left, val), f))))
    raise TypeError(f"cannot progress {to_text(f)}")


def progress_last(f: Formula, val: Mapping[Formula, bool]) -> bool:
    """Truth of ``f`` on the final position, where nothing follows."""
    if isinstance(f, Bool):
        return f.value
    if isinstance(f, ATOMS):
        return bool(val[f])
    if isinstance(f, Not):
        return not progress_last(f.f, val)
    if isinstance(f, And):
        return all(progress_last(a, val) for a in f.args)
    if isinstance(f, Or):
        return any(progress_last(a, val) for a in f.args)
    if isinstance(f, Implies):
        return (not progress_last(f.left, val)) or progress_last(f.right, val)
    if isinstance(f, Next):
        return False
    if isinstance(f, (Always, Eventually)):
        return progress_last(f.f, val)
    if isinstance(f, Until):
        return progress_last(f.right, val)
    raise TypeError(f"cannot evaluate {to_text(f)}")


class MonitorAutomaton:
    """Deterministic monitor whose states are normalised residual formulas.

    Transitions are built on demand and memoised; ``explore`` builds the
    full reachable automaton over every valuation of the atoms.
    """

    ACCEPTING, REJECTED, UNDETERMINED = "accepting", "rejected", "undetermined"

    def __init__(self, formula: Formula, cap: int = DEFAULT_STATE_CAP):
        self.initial = formula
        self.cap = cap
        self.states: dict[Formula, int] = {formula: 0}
        self.transitions: dict[tuple[Formula, frozenset], Formula] = {}
        self._atoms: dict[Formula, tuple] = {}

    def _state_atoms(self, state: Formula) -> tuple:
        if state not in self._atoms:
            self._atoms[state] = tuple(atoms_of(state))
        return self._atoms[state]

    def step(self, state: Formula, val: Mapping[Formula, bool]) -> Formula:
        if isinstance(state, Bool):
            return state
        key = (state, frozenset(a for a in self._state_atoms(state) if val[a]))
        nxt = self.transitions.get(key)
        if nxt is None:
            nxt = progress(state, val)
            self.transitions[key] = nxt
            if nxt not in self.states:
                if len(self.states) >= self.cap:
                    raise AutomatonOverflow(
                        f"monitor exceeded {self.cap} states; use the oracle evaluator instead"
                    )
                self.states[nxt] = len(self.states)
        return nxt

    def classify(self, state: Formula) -> str:
        if state == TRUE:
            return self.ACCEPTING
        if state == FALSE:
            return self.REJECTED
        return self.UNDETERMINED

    def explore(self) -> "MonitorAutomaton":
        atoms = sorted(atoms_of(self.initial), key=to_text)
        letters = [dict(zip(atoms, bits)) for bits in itertools.product((False, True), repeat=len(atoms))]
        queue = deque([self.initial])
        seen = {self.initial}
        while queue:
            s = queue.popleft()
            for val in letters:
                t = self.step(s, val)
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        return self


def build_automaton(formula: Formula, cap: int = DEFAULT_STATE_CAP) -> MonitorAutomaton:
    return MonitorAutomaton(formula, cap).explore()


def run_automaton(aut: MonitorAutomaton, valuations: Sequence[Mapping[Formula, bool]]) -> tuple[bool, int | None]:
    """Verdict of the monitor on a finite trace and the rejecting tick."""
    if not valuations:
        raise ValueError("cannot monitor an empty trace")
    state = aut.initial
    last = len(valuations) - 1
    for i, val in enumerate(valuations):
        if state == TRUE:
            return True, None
        if i == last:
            ok = progress_last(state, val)
            return ok, (None if ok else i)
        state = aut.step(state, val)
        if state == FALSE:
            return False, i
    raise AssertionError("unreachable")


# ------------------------------------------------ positionwise evaluation --
def evaluate_positions(
    f: Formula, valuations: Sequence[Mapping[Formula, bool]], memo: dict | None = None
) -> list[bool]:
    """Truth of ``f`` at every position, by one backward pass per operator.

    Pass the same ``memo`` for several formulas over one trace to share work.
    """
    n = len(valuations)
    memo = {} if memo is None else memo

    def ev(g: Formula) -> np.ndarray:
        res = memo.get(g)
        if res is not None:
            return res
        if isinstance(g, Bool):
            res = np.full(n, g.value)
        elif isinstance(g, ATOMS):
            res = np.fromiter((bool(v[g]) for v in valuations), bool, n)
        elif isinstance(g, Not):
            res = ~ev(g.f)
        elif isinstance(g, And):
            res = np.logical_and.reduce([ev(x) for x in g.args]) if g.args else np.ones(n, bool)
        elif isinstance(g, Or):
            res = np.logical_or.reduce([ev(x) for x in g.args]) if g.args else np.zeros(n, bool)
        elif isinstance(g, Implies):
            res = ~ev(g.left) | ev(g.right)
        elif isinstance(g, Next):
            res = np.zeros(n, bool)
            res[:-1] = ev(g.f)[1:]
        elif isinstance(g, Always):
            res = np.logical_and.accumulate(ev(g.f)[::-1])[::-1]
        elif isinstance(g, Eventually):
            res = np.logical_or.accumulate(ev(g.f)[::-1])[::-1]
        elif isinstance(g, Until):
            a, b = ev(g.left).tolist(), ev(g.right).tolist()
            out = [False] * n
            nxt = False
            for i in range(n - 1, -1, -1):
                nxt = b[i] or (a[i] and nxt)
                out[i] = nxt
            res = np.array(out, bool)
        else:
            raise TypeError(f"cannot evaluate {to_text(g)}")
        memo[g] = res
        return res

    return ev(f).tolist()


# ------------------------------------------------------------------ check --
@dataclass
class Instance:
    binding: tuple[tuple[str, str], ...]
    formula: Formula
    antecedent: Formula | None = None


@dataclass
class Prepared:
    instances: list[Instance]
    guarded: bool  # every instance has the shape G (A -> B)
    formula: Formula = field(init=False)

    def __post_init__(self):
        self.formula = mk_and(i.formula for i in self.instances)


def _guard_split(body: Formula) -> tuple[Formula, Formula] | None:
    if isinstance(body, Always) and isinstance(body.f, Implies):
        return body.f.left, body.f.right
    return None


def _strip_forall(f: Formula) -> Formula:
    while isinstance(f, Forall):
        f = f.body
    return f


def prepare(formula: Formula, domains: Domains, static: StaticModel) -> Prepared:
    """Unfold and simplify, keeping each instantiation's trigger apart."""
    f = _focus_const(expand_take(formula), domains.focus)
    guarded = _guard_split(_strip_forall(f)) is not None
    instances = []
    for binding, inst in unfold_instances(f, domains):
        parts = _guard_split(inst) if guarded else None
        if parts is not None:
            a = simplify(parts[0], static)
            if a == FALSE:
                continue
            b = simplify(parts[1], static)
            body = simplify(Always(mk_implies(a, b)), static)
            instances.append(Instance(binding, body, a))
        else:
            s = simplify(inst, static)
            if s != TRUE:
                instances.append(Instance(binding, s))
    return Prepared(instances, guarded)


def valuations_for(model: MapModel, run: Run, atoms: Iterable[Formula], focus: str | None) -> list[dict]:
    atoms = list(atoms)
    graph, dec = model.graph, model.dec
    return [{a: eval_atom(graph, dec, s, a, {}, focus) for a in atoms} for s in run.states]


def _verify(model: MapModel, run: Run) -> None:
    if not run.states:
        raise TraceError("run has no states")
    if run.graph.checksum() != model.graph.checksum():
        raise TraceError("run was recorded on a different map")


def check(
    formula: Formula, model: MapModel, run: Run, junction: str | None = None, cap: int = DEFAULT_STATE_CAP
) -> Verdict:
    _verify(model, run)
    focus = focus_junction(model, run, junction)
    domains = Domains.build(model, run.states[0], focus)
    static = extract(model, run.states[0])
    prep = prepare(formula, domains, static)
    if prep.guarded and not prep.instances:
        return Verdict(NA, RULE_NOT_APPLICABLE)
    atoms = atoms_of(prep.formula)
    for inst in prep.instances:
        if inst.antecedent is not None:
            atoms |= atoms_of(inst.antecedent)
    vals = valuations_for(model, run, atoms, focus)
    memo: dict = {}
    if prep.guarded and not any(any(evaluate_positions(i.antecedent, vals, memo)) for i in prep.instances):
        return Verdict(NA, TRIVIALLY_SATISFIED)
    ok, tick = run_automaton(MonitorAutomaton(prep.formula, cap), vals)
    if ok:
        return Verdict(PASS)
    culprit = _first_failing(prep.instances, vals, cap, memo)
    return Verdict(
        FAIL,
        witness_tick=tick,
        witness_binding=culprit.binding if culprit else None,
        witness_formula=to_text(culprit.formula) if culprit else None,
    )


def _first_failing(instances: list[Instance], vals, cap: int, memo: dict | None = None) -> Instance | None:
    best, best_tick = None, None
    memo = {} if memo is None else memo
    for inst in instances:
        if evaluate_positions(inst.formula, vals, memo)[0]:
            continue
        ok, tick = run_automaton(MonitorAutomaton(inst.formula, cap), vals)
        if not ok and (best_tick is None or tick < best_tick):
            best, best_tick = inst, tick
    return best


def check_valuations(formula: Formula, valuations: Sequence[Mapping[Formula, bool]]) -> Verdict:
    """Monitor a quantifier-free formula over explicit atom valuations."""
    ok, tick = run_automaton(MonitorAutomaton(formula), valuations)
    return Verdict(PASS) if ok else Verdict(FAIL, witness_tick=tick)


# ----------------------------------------------------------------- oracle --
class _Oracle:
    """Direct evaluator of the finite-trace semantics.

    Each (subformula, binding) pair is evaluated at every position at once;
    temporal operators use their one-step expansions, filled in from the end.
    """

    def __init__(self, valuation_of, n: int, domains: Domains | None):
        self.val = valuation_of
        self.n = n
        self.domains = domains
        self.memo: dict = {}

    def sat(self, f: Formula, i: int, env: tuple) -> bool:
        return self.column(f, env)[i]

    def column(self, f: Formula, env: tuple) -> list[bool]:
        if isinstance(f, ATOMS):
            # Bindings that agree on the atom's own variables share its values.
            names = _atom_vars(f)
            env = tuple((k, v) for k, v in env if k in names)
        key = (f, env)
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = self._column(f, env)
        return hit

    def _column(self, f: Formula, env: tuple) -> list[bool]:
        n = self.n
        if isinstance(f, Bool):
            return [f.value] * n
        if isinstance(f, ATOMS):
            binding = dict(env)
            return [bool(self.val(f, i, binding)) for i in range(n)]
        if isinstance(f, Not):
            return [not x for x in self.column(f.f, env)]
        if isinstance(f, (And, Or)):
            cols = [self.column(a, env) for a in f.args]
            combine = all if isinstance(f, And) else any
            return [combine(row) for row in zip(*cols)]
        if isinstance(f, Implies):
            return [(not a) or b for a, b in zip(self.column(f.left, env), self.column(f.right, env))]
        if isinstance(f, Next):
            # Strong next: false at the last position.
            return self.column(f.f, env)[1:] + [False]
        if isinstance(f, (Always, Eventually, Until)):
            out = [False] * n
            if isinstance(f, Until):
                left, right = self.column(f.left, env), self.column(f.right, env)
                later = False
                for j in range(n - 1, -1, -1):
                    later = out[j] = right[j] or (left[j] and later)
                return out
            col = self.column(f.f, env)
            later = isinstance(f, Always)
            for j in range(n - 1, -1, -1):
                later = out[j] = (col[j] and later) if isinstance(f, Always) else (col[j] or later)
            return out
        if isinstance(f, (Forall, Exists)):
            values = self.domains.of(f.sort) if self.domains else ()
            cols = [self.column(f.body, env + ((f.var, c),)) for c in values]
            if not cols:
                return [isinstance(f, Forall)] * n
            combine = all if isinstance(f, Forall) else any
            return [combine(row) for row in zip(*cols)]
        raise TypeError(f"cannot evaluate {to_text(f)}")


@functools.lru_cache(maxsize=None)
def _atom_vars(atom: Formula) -> frozenset[str]:
    return frozenset(getattr(atom, f.name).name for f in fields(atom) if isinstance(getattr(atom, f.name), Var))


_STATIC_ATOMS = (RightOf, Opposite, Same)



def _maybe(f: Formula, static_val) -> bool | None:
    """Three-valued truth where only static atoms are known."""
    if isinstance(f, Bool):
        return f.value
    if isinstance(f, ATOMS):
        return static_val(f)
    if isinstance(f, Not):
        v = _maybe(f.f, static_val)
        return None if v is None else not v
    if isinstance(f, And):
        vals = [_maybe(a, static_val) for a in f.args]
        if False in vals:
            return False
        return True if all(v is True for v in vals) else None
    if isinstance(f, Or):
        vals = [_maybe(a, static_val) for a in f.args]
        if True in vals:
            return True
        return False if all(v is False for v in vals) else None
    if isinstance(f, Implies):
        return _maybe(Or((Not(f.left), f.right)), static_val)
    if isinstance(f, Next):
        return False if _maybe(f.f, static_val) is False else None
    if isinstance(f, (Always, Eventually)):
        return _maybe(f.f, static_val)
    if isinstance(f, Until):
        return _maybe(f.right, static_val) if _maybe(f.right, static_val) is not None else None
    return None


def check_oracle(formula: Formula, model: MapModel, run: Run, junction: str | None = None) -> Verdict:
    """Brute-force verdict straight from the finite-trace semantics."""
    _verify(model, run)
    focus = focus_junction(model, run, junction)
    domains = Domains.build(model, run.states[0], focus)
    graph, dec = model.graph, model.dec
    states = run.states
    f = expand_take(formula)

    def val(atom, i, env):
        return eval_atom(graph, dec, states[i], atom, env, focus)

    oracle = _Oracle(val, len(states), domains)
    prefix = []
    body = f
    while isinstance(body, Forall):
        prefix.append((body.var, body.sort))
        body = body.body
    guard = _guard_split(body)
    if guard is not None:
        antecedent = guard[0]
        live = []
        for values in itertools.product(*(domains.of(s) for _, s in prefix)):
            env = tuple((v, c) for (v, _), c in zip(prefix, values))

            def static_val(atom, env=env):
                if isinstance(atom, _STATIC_ATOMS):
                    return eval_atom(graph, dec, states[0], atom, dict(env), focus)
                if isinstance(atom, At):
                    x = dict(env).get(atom.x.name, atom.x.name)
                    if x in domains.object:
                        return eval_atom(graph, dec, states[0], atom, dict(env), focus)
                if isinstance(atom, ColorIs):
                    x = dict(env).get(atom.light.name, atom.light.name)
                    if x in domains.object and states[0].obj(x).kind != "traffic_light":
                        return False
                return None

            if _maybe(antecedent, static_val) is not False:
                live.append(env)
        if not live:
            return Verdict(NA, RULE_NOT_APPLICABLE)
        if not any(oracle.sat(antecedent, i, env) for env in live for i in range(len(states))):
            return Verdict(NA, TRIVIALLY_SATISFIED)
    if oracle.sat(f, 0, ()):
        return Verdict(PASS)
    return Verdict(FAIL, witness_tick=_oracle_witness(oracle, f))


def _oracle_witness(oracle: _Oracle, f: Formula) -> int:
    """Earliest tick where the body of the outer G fails under some binding."""
    prefix = []
    body = f
    while isinstance(body, Forall):
        prefix.append((body.var, body.sort))
        body = body.body
    if isinstance(body, Always):
        for i in range(oracle.n):
            for values in itertools.product(*(oracle.domains.of(s) for _, s in prefix)):
                env = tuple((v, c) for (v, _), c in zip(prefix, values))
                if not oracle.sat(body.f, i, env):
                    return i
    return 0


def oracle_valuations(formula: Formula, valuations: Sequence[Mapping[Formula, bool]]) -> Verdict:
    oracle = _Oracle(lambda atom, i, env: bool(valuations[i][atom]), len(valuations), None)
    if oracle.sat(formula, 0, ()):
        return Verdict(PASS)
    return Verdict(FAIL, witness_tick=_oracle_witness(oracle, formula))


def timed_check(prop: str, formula: Formula, model: MapModel, run: Run, **kw) -> tuple[Verdict, dict]:
    t0 = time.perf_counter()
    v = check(formula, model, run, **kw)
    elapsed = (time.perf_counter() - t0) * 1000
    return v, v.report(prop, run.meta.get("scenario"), elapsed)
