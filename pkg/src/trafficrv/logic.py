"""First-order finite-trace temporal logic over junction predicates.

Formulas are immutable, hashable trees. The text syntax::

    formula := ("forall" | "exists") NAME ":" SORT "." formula | implication
    implication := disjunction ["->" implication]
    disjunction := conjunction {"|" conjunction}
    conjunction := until {"&" until}
    until := unary ["U" until]
    unary := ("!" | "G" | "F" | "X") unary | primary
    primary := "(" formula ")" | "true" | "false" | atom

Atoms: ``at(x, r)``, ``turn(a, left)``, ``right_of(e, f)``,
``opposite(e, f)``, ``take(a, e, right)``, ``a.wt = b.wt``, ``a.wt < b.wt``,
``l.cl = red``, ``a = b`` and ``a != b``. Sorts are ``agent``, ``entrance``,
``object``, ``light`` (traffic-light objects only) and ``junction``; ``J``
names the junction under test.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, fields
from typing import Iterator, Union

from .map_model import opposite, right_of

SORTS = ("agent", "entrance", "light", "object", "junction")
DIRECTIONS = ("left", "right", "straight")
COLORS = ("red", "yellow", "green")
FOCUS = "J"


class FormulaError(ValueError):
    pass


def node(cls):
    """Frozen dataclass whose hash is computed once; formulas are hashed a lot."""
    cls = dataclass(frozen=True)(cls)
    names = tuple(f.name for f in fields(cls))
    tag = cls.__name__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((tag,) + tuple(getattr(self, n) for n in names))
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls


# ------------------------------------------------------------------ terms --
@node
class Var:
    name: str


@node
class Const:
    name: str


Term = Union[Var, Const]


# ------------------------------------------------------------------ atoms --
@node
class At:
    x: Term
    region: Term


@node
class TurnIs:
    agent: Term
    direction: str


@node
class RightOf:
    e1: Term
    e2: Term


@node
class Opposite:
    e1: Term
    e2: Term


@node
class Same:
    x: Term
    y: Term


@node
class WtEq:
    a: Term
    b: Term


@node
class WtLt:
    a: Term
    b: Term


@node
class ColorIs:
    light: Term
    color: str


@node
class Take:
    agent: Term
    entrance: Term
    direction: str


@node
class Prop:
    """Opaque proposition, used for propositional traces."""

    name: str


@node
class Bool:
    value: bool


TRUE = Bool(True)
FALSE = Bool(False)

ATOMS = (At, TurnIs, RightOf, Opposite, Same, WtEq, WtLt, ColorIs, Prop)


# ------------------------------------------------------------- connectives --
@node
class Not:
    f: "Formula"


@node
class And:
    args: tuple["Formula", ...]


@node
class Or:
    args: tuple["Formula", ...]


@node
class Implies:
    left: "Formula"
    right: "Formula"


@node
class Next:
    f: "Formula"


@node
class Always:
    f: "Formula"


@node
class Eventually:
    f: "Formula"


@node
class Until:
    left: "Formula"
    right: "Formula"


@node
class Forall:
    var: str
    sort: str
    body: "Formula"


@node
class Exists:
    var: str
    sort: str
    body: "Formula"


Formula = Union[
    At, TurnIs, RightOf, Opposite, Same, WtEq, WtLt, ColorIs, Take, Prop, Bool,
    Not, And, Or, Implies, Next, Always, Eventually, Until, Forall, Exists,
]


def conj(*args: Formula) -> Formula:
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*args: Formula) -> Formula:
    return args[0] if len(args) == 1 else Or(tuple(args))


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Next, Always, Eventually)):
        return (f.f,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Implies, Until)):
        return (f.left, f.right)
    if isinstance(f, (Forall, Exists)):
        return (f.body,)
    return ()


def rebuild(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    if isinstance(f, Not):
        return Not(kids[0])
    if isinstance(f, Next):
        return Next(kids[0])
    if isinstance(f, Always):
        return Always(kids[0])
    if isinstance(f, Eventually):
        return Eventually(kids[0])
    if isinstance(f, And):
        return And(kids)
    if isinstance(f, Or):
        return Or(kids)
    if isinstance(f, Implies):
        return Implies(*kids)
    if isinstance(f, Until):
        return Until(*kids)
    if isinstance(f, Forall):
        return Forall(f.var, f.sort, kids[0])
    if isinstance(f, Exists):
        return Exists(f.var, f.sort, kids[0])
    return f


def atoms_of(f: Formula) -> set:
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, ATOMS):
            out.add(g)
        stack.extend(children(g))
    return out


def depth(f: Formula) -> int:
    kids = children(f)
    return 1 + max((depth(k) for k in kids), default=0)


# --------------------------------------------------------------- printing --
def term_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if t.name == FOCUS:
        return FOCUS
    return f"'{t.name}'"


def to_text(f: Formula) -> str:
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, At):
        return f"at({term_str(f.x)},{term_str(f.region)})"
    if isinstance(f, TurnIs):
        return f"turn({term_str(f.agent)},{f.direction})"
    if isinstance(f, RightOf):
        return f"right_of({term_str(f.e1)},{term_str(f.e2)})"
    if isinstance(f, Opposite):
        return f"opposite({term_str(f.e1)},{term_str(f.e2)})"
    if isinstance(f, Take):
        return f"take({term_str(f.agent)},{term_str(f.entrance)},{f.direction})"
    if isinstance(f, Same):
        return f"{term_str(f.x)} = {term_str(f.y)}"
    if isinstance(f, WtEq):
        return f"{term_str(f.a)}.wt = {term_str(f.b)}.wt"
    if isinstance(f, WtLt):
        return f"{term_str(f.a)}.wt < {term_str(f.b)}.wt"
    if isinstance(f, ColorIs):
        return f"{term_str(f.light)}.cl = {f.color}"
    if isinstance(f, Prop):
        return f"?{f.name}"
    if isinstance(f, Not):
        if isinstance(f.f, Same):
            return f"{term_str(f.f.x)} != {term_str(f.f.y)}"
        return f"!{_wrap(f.f)}"
    if isinstance(f, Next):
        return f"X {_wrap(f.f)}"
    if isinstance(f, Always):
        return f"G {_wrap(f.f)}"
    if isinstance(f, Eventually):
        return f"F {_wrap(f.f)}"
    if isinstance(f, And):
        return "(" + " & ".join(_wrap(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(" + " | ".join(_wrap(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"({_wrap(f.left)} -> {_wrap(f.right)})"
    if isinstance(f, Until):
        return f"({_wrap(f.left)} U {_wrap(f.right)})"
    if isinstance(f, Forall):
        return f"forall {f.var}:{f.sort}. {to_text(f.body)}"
    if isinstance(f, Exists):
        return f"exists {f.var}:{f.sort}. {to_text(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula) -> str:
    text = to_text(f)
    if isinstance(f, (Same, WtEq, WtLt, ColorIs, Forall, Exists)) or (
        isinstance(f, Not) and isinstance(f.f, Same)
    ):
        return f"({text})"
    return text


# ---------------------------------------------------------------- parsing --
_TOKEN = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<neq>!=)|(?P<sym>[()!&|.,:=<])|(?P<quoted>'[^']*')|(?P<name>\??[A-Za-z_][A-Za-z0-9_]*))"
)
KEYWORDS = {"forall", "exists", "G", "F", "X", "U", "true", "false"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks, i = [], 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            raise FormulaError(f"unexpected character {text[i]!r} at position {i}")
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind in ("arrow", "neq", "sym"):
            kind = value
        elif kind == "name" and value in KEYWORDS:
            kind = value
        toks.append(_Tok(kind, value, start))
        i = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, allow_props: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.scope: dict[str, str] = {}
        self.allow_props = allow_props

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def eat(self, kind: str) -> _Tok:
        if self.tok.kind != kind:
            shown = self.tok.text or "end of input"
            raise FormulaError(f"expected {kind!r} at position {self.tok.pos}, found {shown!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind: str) -> bool:
        if self.tok.kind == kind:
            self.i += 1
            return True
        return False

    def formula(self) -> Formula:
        if self.tok.kind in ("forall", "exists"):
            q = self.eat(self.tok.kind).kind
            var = self.eat("name").text
            self.eat(":")
            sort_tok = self.eat("name")
            if sort_tok.text not in SORTS:
                raise FormulaError(f"unknown sort {sort_tok.text!r} at position {sort_tok.pos}")
            self.eat(".")
            shadow = self.scope.get(var)
            self.scope[var] = sort_tok.text
            body = self.formula()
            if shadow is None:
                del self.scope[var]
            else:
                self.scope[var] = shadow
            return (Forall if q == "forall" else Exists)(var, sort_tok.text, body)
        return self.implication()

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.accept("->"):
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        args = [self.conjunction()]
        while self.accept("|"):
            args.append(self.conjunction())
        return disj(*args)

    def conjunction(self) -> Formula:
        args = [self.until()]
        while self.accept("&"):
            args.append(self.until())
        return conj(*args)

    def until(self) -> Formula:
        left = self.unary()
        if self.accept("U"):
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        k = self.tok.kind
        if k == "!":
            self.i += 1
            return Not(self.unary())
        if k in ("G", "F", "X"):
            self.i += 1
            inner = self.unary()
            return {"G": Always, "F": Eventually, "X": Next}[k](inner)
        if k in ("forall", "exists"):
            return self.formula()
        return self.primary()

    def primary(self) -> Formula:
        if self.accept("("):
            f = self.formula()
            self.eat(")")
            return f
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        return self.atom()

    def term(self, *sorts: str) -> Term:
        tok = self.tok
        if tok.kind == "quoted":
            self.i += 1
            return Const(tok.text[1:-1])
        name = self.eat("name").text
        if name == FOCUS:
            if sorts and "junction" not in sorts:
                raise FormulaError(f"sort mismatch at position {tok.pos}: J is a junction")
            return Const(FOCUS)
        if name not in self.scope:
            raise FormulaError(f"unbound variable {name!r} at position {tok.pos}")
        if sorts and self.scope[name] not in sorts:
            raise FormulaError(
                f"sort mismatch at position {tok.pos}: {name!r} is {self.scope[name]}, "
                f"expected {' or '.join(sorts)}"
            )
        return Var(name)

    def word(self, choices: tuple[str, ...]) -> str:
        tok = self.eat("name")
        if tok.text not in choices:
            raise FormulaError(f"expected one of {choices} at position {tok.pos}, found {tok.text!r}")
        return tok.text

    def atom(self) -> Formula:
        tok = self.tok
        if tok.kind == "name" and tok.text.startswith("?"):
            if not self.allow_props:
                raise FormulaError(f"propositions are not allowed here (position {tok.pos})")
            self.i += 1
            return Prop(tok.text[1:])
        if tok.kind == "name" and self.toks[self.i + 1].kind == "(":
            name = tok.text
            self.i += 2
            if name == "at":
                x = self.term("agent", "light", "object")
                self.eat(",")
                r = self.term("entrance", "junction")
                out: Formula = At(x, r)
            elif name == "turn":
                a = self.term("agent")
                self.eat(",")
                out = TurnIs(a, self.word(DIRECTIONS))
            elif name in ("right_of", "opposite"):
                e1 = self.term("entrance")
                self.eat(",")
                e2 = self.term("entrance")
                out = RightOf(e1, e2) if name == "right_of" else Opposite(e1, e2)
            elif name == "take":
                a = self.term("agent")
                self.eat(",")
                e = self.term("entrance")
                self.eat(",")
                out = Take(a, e, self.word(DIRECTIONS))
            else:
                raise FormulaError(f"unknown predicate {name!r} at position {tok.pos}")
            self.eat(")")
            return out
        if tok.kind in ("name", "quoted"):
            left = self.term()
            if self.accept("."):
                field_tok = self.eat("name")
                if field_tok.text == "wt":
                    self._need_sort(left, "agent", field_tok.pos)
                    op = self.tok.kind
                    if op not in ("=", "<"):
                        raise FormulaError(f"expected '=' or '<' at position {self.tok.pos}")
                    self.i += 1
                    right = self.term("agent")
                    self.eat(".")
                    if self.eat("name").text != "wt":
                        raise FormulaError("waiting times compare with .wt on both sides")
                    return WtEq(left, right) if op == "=" else WtLt(left, right)
                if field_tok.text == "cl":
                    self._need_sort(left, ("light", "object"), field_tok.pos)
                    self.eat("=")
                    return ColorIs(left, self.word(COLORS))
                raise FormulaError(f"unknown field {field_tok.text!r} at position {field_tok.pos}")
            if self.tok.kind in ("=", "!="):
                op = self.tok.kind
                self.i += 1
                right = self.term()
                ls, rs = self._sort_of(left), self._sort_of(right)
                if ls and rs and ls != rs:
                    raise FormulaError(f"sort mismatch at position {tok.pos}: {ls} vs {rs}")
                eq = Same(left, right)
                return eq if op == "=" else Not(eq)
            raise FormulaError(f"incomplete atom at position {self.tok.pos}")
        shown = tok.text or "end of input"
        raise FormulaError(f"unexpected {shown!r} at position {tok.pos}")

    def _sort_of(self, t: Term) -> str | None:
        if isinstance(t, Var):
            return self.scope.get(t.name)
        return "junction" if t.name == FOCUS else None

    def _need_sort(self, t: Term, sort, pos: int) -> None:
        s = self._sort_of(t)
        sorts = (sort,) if isinstance(sort, str) else sort
        if s is not None and s not in sorts:
            raise FormulaError(f"sort mismatch at position {pos}: expected {sort}, got {s}")


def parse_formula(text: str, allow_props: bool = False) -> Formula:
    """Parse DSL text into a well-sorted formula."""
    p = _Parser(text, allow_props)
    f = p.formula()
    if p.tok.kind != "eof":
        raise FormulaError(f"unexpected {p.tok.text!r} at position {p.tok.pos}")
    return f


# ------------------------------------------------------------------ macros --
def expand_take(f: Formula) -> Formula:
    """Replace take(a, e, d) by at(a,e) & (at(a,e) U (at(a,J) & turn(a,d)))."""
    if isinstance(f, Take):
        here = At(f.agent, f.entrance)
        return And((here, Until(here, And((At(f.agent, Const(FOCUS)), TurnIs(f.agent, f.direction))))))
    kids = children(f)
    if not kids:
        return f
    return rebuild(f, tuple(expand_take(k) for k in kids))


def substitute(f: Formula, var: str, value: Const) -> Formula:
    def sub(t: Term) -> Term:
        return value if isinstance(t, Var) and t.name == var else t

    if isinstance(f, At):
        return At(sub(f.x), sub(f.region))
    if isinstance(f, TurnIs):
        return TurnIs(sub(f.agent), f.direction)
    if isinstance(f, RightOf):
        return RightOf(sub(f.e1), sub(f.e2))
    if isinstance(f, Opposite):
        return Opposite(sub(f.e1), sub(f.e2))
    if isinstance(f, Same):
        return Same(sub(f.x), sub(f.y))
    if isinstance(f, WtEq):
        return WtEq(sub(f.a), sub(f.b))
    if isinstance(f, WtLt):
        return WtLt(sub(f.a), sub(f.b))
    if isinstance(f, ColorIs):
        return ColorIs(sub(f.light), f.color)
    if isinstance(f, Take):
        return Take(sub(f.agent), sub(f.entrance), f.direction)
    if isinstance(f, (Forall, Exists)) and f.var == var:
        return f
    kids = children(f)
    if not kids:
        return f
    return rebuild(f, tuple(substitute(k, var, value) for k in kids))


# ---------------------------------------------------------------- built-ins --
BUILTIN_TEXT = {
    "p1": "forall a:agent. forall b:agent. G ((at(a,J) & a != b) -> !at(b,J))",
    "p2": (
        "forall e:entrance. forall f:entrance. forall a:agent. forall b:agent. "
        "G ((at(a,e) & at(b,f) & a.wt = b.wt & right_of(e,f)) -> ((X at(b,f)) U at(a,J)))"
    ),
    "p3": (
        "forall e:entrance. forall f:entrance. forall a:agent. forall b:agent. "
        "G ((at(a,e) & at(b,f) & a.wt < b.wt) -> ((X at(a,e)) U at(b,J)))"
    ),
    "p4": (
        "forall e:entrance. forall a:agent. forall l:light. "
        "G ((at(a,e) & at(l,e) & l.cl = red & !take(a,e,right)) -> (at(a,e) U l.cl = green))"
    ),
    "p5": (
        "forall e:entrance. forall f:entrance. forall a:agent. forall b:agent. forall l:light. "
        "G ((at(a,e) & at(b,f) & right_of(e,f) & at(l,e) & l.cl = red & take(a,e,right)) "
        "-> ((X at(a,e)) U at(b,J)))"
    ),
    "p6": (
        "forall e:entrance. forall f:entrance. forall a:agent. forall b:agent. "
        "G ((at(a,e) & at(b,f) & opposite(e,f) & take(a,e,left) & !take(b,f,left)) "
        "-> ((X at(a,e)) U at(b,J)))"
    ),
}

BUILTIN_SUMMARY = {
    "p1": "at most one vehicle inside the junction",
    "p2": "equal waits: the vehicle on the right goes first",
    "p3": "first to arrive is first to enter",
    "p4": "red means wait for green unless turning right",
    "p5": "right turn on red waits for traffic from the left",
    "p6": "left turn on green yields to oncoming traffic",
}


def builtin(name: str) -> Formula:
    if name not in BUILTIN_TEXT:
        raise FormulaError(f"unknown built-in property {name!r}")
    return parse_formula(BUILTIN_TEXT[name])


def load_property(source: str) -> tuple[str, Formula]:
    """Resolve ``builtin:pN`` or a path to a property file."""
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        return name, builtin(name)
    with open(source, encoding="utf-8") as fh:
        lines = [ln.split("#", 1)[0] for ln in fh]
    text = " ".join(ln.strip() for ln in lines if ln.strip())
    if not text:
        raise FormulaError(f"{source}: no formula found")
    return os.path.splitext(os.path.basename(source))[0], parse_formula(text)


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    for k in children(f):
        yield from walk(k)


# --------------------------------------------------------- atom semantics --
AT_ENTRANCE = 0.2  # arrival threshold in metres


class BindingError(KeyError):
    pass


def resolve(t: Term, binding: dict[str, str], focus: str | None = None) -> str:
    if isinstance(t, Const):
        if t.name == FOCUS:
            if focus is None:
                raise BindingError("no junction under test")
            return focus
        return t.name
    try:
        return binding[t.name]
    except KeyError:
        raise BindingError(f"unbound variable {t.name!r}") from None


def agent_at_vertex(graph, agent, vertex: str, threshold: float = AT_ENTRANCE) -> bool:
    """Agent within ``threshold`` metres before ``vertex`` along its itinerary."""
    if graph.vertex_at(agent.pos) == vertex:
        return True
    travelled = 0.0
    for item in agent.itinerary:
        if travelled > threshold + TOL_AT:
            return False
        if item.start <= TOL_AT and graph.source(item.segment) == vertex:
            return travelled <= threshold + TOL_AT
        travelled += item.length
        if item.end >= graph.length(item.segment) - TOL_AT and graph.target(item.segment) == vertex:
            return travelled <= threshold + TOL_AT
    return False


TOL_AT = 1e-9


def position_near_vertex(graph, pos, vertex: str, threshold: float = AT_ENTRANCE) -> bool:
    if graph.vertex_at(pos) == vertex:
        return True
    seg = pos.segment
    return graph.target(seg) == vertex and graph.length(seg) - pos.offset <= threshold + TOL_AT


def first_junction_turn(graph, agent) -> str | None:
    for item in agent.itinerary:
        seg = graph.segments[item.segment]
        if seg.label.value == "junction":
            return seg.turn.value
    return None


def eval_atom(graph, dec, state, atom: Formula, binding: dict[str, str], focus: str | None = None) -> bool:
    """Truth value of an atom at one global state."""
    if isinstance(atom, Bool):
        return atom.value
    if isinstance(atom, Same):
        return resolve(atom.x, binding, focus) == resolve(atom.y, binding, focus)
    if isinstance(atom, RightOf):
        return right_of(graph, dec, resolve(atom.e1, binding, focus), resolve(atom.e2, binding, focus))
    if isinstance(atom, Opposite):
        return opposite(graph, dec, resolve(atom.e1, binding, focus), resolve(atom.e2, binding, focus))
    if isinstance(atom, At):
        x = resolve(atom.x, binding, focus)
        region = resolve(atom.region, binding, focus)
        a = next((a for a in state.agents if a.agent_id == x), None)
        junction = next((j for j in dec.junctions if j.id == region), None)
        if a is not None:
            if junction is not None:
                if a.finished:
                    return False
                return a.pos.segment in junction.segments and a.pos.offset > TOL_AT
            return not a.finished and agent_at_vertex(graph, a, region)
        ob = state.obj(x)
        if junction is not None:
            return ob.pos.segment in junction.segments
        return position_near_vertex(graph, ob.pos, region)
    if isinstance(atom, TurnIs):
        a = state.agent(resolve(atom.agent, binding, focus))
        return first_junction_turn(graph, a) == atom.direction
    if isinstance(atom, WtEq):
        a = state.agent(resolve(atom.a, binding, focus))
        b = state.agent(resolve(atom.b, binding, focus))
        return a.wait_ticks == b.wait_ticks
    if isinstance(atom, WtLt):
        a = state.agent(resolve(atom.a, binding, focus))
        b = state.agent(resolve(atom.b, binding, focus))
        return a.wait_ticks < b.wait_ticks
    if isinstance(atom, ColorIs):
        return state.obj(resolve(atom.light, binding, focus)).color == atom.color
    raise TypeError(f"not a state atom: {to_text(atom)}")
