"""Guard-labeled transition graphs for scenario objects, and whole models.

An ObjectGraph is the explicit form of a scenario object: states carry
request/block/waitfor formulas, edges carry guard formulas, and a subset of
states may be marked bad (safety-property objects use that). States where the
object does not wake keep an implicit self-loop; it is materialized as a
single complement-guard edge during composition and export.

A Model bundles named scenario objects (scripts or graphs) over one variable
set. Discrete-event objects are supported through ``encode_discrete``, which
embeds them into the real-valued setting with one fresh variable: event i
becomes the atom ``x == i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from . import solver
from .formulas import (
    FALSE,
    Assignment,
    Formula,
    VarSet,
    canonicalize,
    disj,
    formula_key,
    negate,
    to_infix,
    to_sexpr,
    var_atom,
)

StateId = str


class GraphError(ValueError):
    """Malformed graph construction (unknown states, missing labels)."""


class EncodingError(ValueError):
    """Discrete object references an event absent from the event list."""


@dataclass(frozen=True)
class Edge:
    src: StateId
    guard: Formula
    dst: StateId

    def key(self) -> tuple:
        return (self.src, self.dst, formula_key(self.guard))


@dataclass
class ObjectGraph:
    """Explicit transition graph of one scenario object.

    Immutable by convention after construction; use ``make`` so that label
    maps are total (missing entries default to false) and edges come out in
    canonical order.
    """

    states: frozenset[StateId]
    initial: StateId
    request: dict[StateId, Formula]
    block: dict[StateId, Formula]
    waitfor: dict[StateId, Formula]
    edges: tuple[Edge, ...]
    bad: frozenset[StateId] = field(default_factory=frozenset)

    @staticmethod
    def make(
        states: Iterable[StateId],
        initial: StateId,
        request: Mapping[StateId, Formula] = (),
        block: Mapping[StateId, Formula] = (),
        waitfor: Mapping[StateId, Formula] = (),
        edges: Iterable[tuple[StateId, Formula, StateId]] = (),
        bad: Iterable[StateId] = (),
    ) -> "ObjectGraph":
        state_set = frozenset(states)
        if initial not in state_set:
            raise GraphError(f"initial state {initial!r} not among states")
        for name, labels in (("request", request), ("block", block), ("waitfor", waitfor)):
            unknown = set(dict(labels)) - state_set
            if unknown:
                raise GraphError(f"{name} labels reference unknown states {sorted(unknown)}")
        bad_set = frozenset(bad)
        if not bad_set <= state_set:
            raise GraphError(f"bad states {sorted(bad_set - state_set)} not among states")
        edge_objs = []
        for src, guard, dst in edges:
            if src not in state_set or dst not in state_set:
                raise GraphError(f"edge {src!r} -> {dst!r} references unknown states")
            edge_objs.append(Edge(src, canonicalize(guard), dst))
        edge_objs.sort(key=Edge.key)

        def total(labels: Mapping[StateId, Formula]) -> dict[StateId, Formula]:
            table = dict(labels)
            return {q: canonicalize(table.get(q, FALSE)) for q in sorted(state_set)}

        return ObjectGraph(
            states=state_set,
            initial=initial,
            request=total(request),
            block=total(block),
            waitfor=total(waitfor),
            edges=tuple(edge_objs),
            bad=bad_set,
        )

    def out_edges(self, q: StateId) -> list[Edge]:
        return [e for e in self.edges if e.src == q]

    def wake(self, q: StateId) -> Formula:
        """Condition under which the object leaves its synchronization point."""
        return disj([self.request[q], self.waitfor[q]])

    def stay_guard(self, q: StateId) -> Formula:
        """Guard of the implicit self-loop taken when the object does not wake."""
        return negate(self.wake(q))

    def reachable(self) -> list[StateId]:
        """States reachable from the initial state via edges, BFS order."""
        seen = {self.initial}
        order = [self.initial]
        i = 0
        while i < len(order):
            for e in self.out_edges(order[i]):
                if e.dst not in seen:
                    seen.add(e.dst)
                    order.append(e.dst)
            i += 1
        return order


@dataclass(frozen=True)
class DiscreteObject:
    """A classic discrete-event scenario object: labels are event-name sets."""

    states: frozenset[StateId]
    initial: StateId
    request: Mapping[StateId, frozenset[str]]
    block: Mapping[StateId, frozenset[str]]
    waitfor: Mapping[StateId, frozenset[str]]
    edges: tuple[tuple[StateId, str, StateId], ...]
    bad: frozenset[StateId] = frozenset()

    @staticmethod
    def make(
        states: Iterable[StateId],
        initial: StateId,
        request: Mapping[StateId, Iterable[str]] = (),
        block: Mapping[StateId, Iterable[str]] = (),
        waitfor: Mapping[StateId, Iterable[str]] = (),
        edges: Iterable[tuple[StateId, str, StateId]] = (),
        bad: Iterable[StateId] = (),
    ) -> "DiscreteObject":
        state_set = frozenset(states)

        def total(labels: Mapping[StateId, Iterable[str]]) -> dict[StateId, frozenset[str]]:
            table = {q: frozenset(names) for q, names in dict(labels).items()}
            return {q: table.get(q, frozenset()) for q in state_set}

        return DiscreteObject(
            states=state_set,
            initial=initial,
            request=total(request),
            block=total(block),
            waitfor=total(waitfor),
            edges=tuple(edges),
            bad=frozenset(bad),
        )


def encode_discrete(events: list[str], obj: DiscreteObject, var: str = "x") -> ObjectGraph:
    """Embed a discrete-event object into the real-valued setting.

    A fresh variable takes the index of the triggered event: event i maps to
    the atom ``var == i``, and event sets become disjunctions of equalities.
    """
    index = {name: i for i, name in enumerate(events)}

    def event_atom(name: str) -> Formula:
        if name not in index:
            raise EncodingError(f"unknown event {name!r}; declared events: {events}")
        return var_atom(var, "==", index[name])

    def set_formula(names: frozenset[str]) -> Formula:
        return disj([event_atom(n) for n in sorted(names)])

    return ObjectGraph.make(
        states=obj.states,
        initial=obj.initial,
        request={q: set_formula(s) for q, s in obj.request.items()},
        block={q: set_formula(s) for q, s in obj.block.items()},
        waitfor={q: set_formula(s) for q, s in obj.waitfor.items()},
        edges=[(src, event_atom(ev), dst) for src, ev, dst in obj.edges],
        bad=obj.bad,
    )


# ---------------------------------------------------------------------------
# models and traces


@dataclass(frozen=True)
class NamedObject:
    name: str
    item: Union["object", ObjectGraph]  # ScenarioScript or ObjectGraph


@dataclass
class Model:
    """A collection of named scenario objects over one variable set."""

    vars: VarSet
    objects: tuple[NamedObject, ...]

    def __post_init__(self) -> None:
        names = [o.name for o in self.objects]
        if len(set(names)) != len(names):
            raise GraphError(f"duplicate object names in model: {names}")

    def names(self) -> list[str]:
        return [o.name for o in self.objects]

    def get(self, name: str):
        for o in self.objects:
            if o.name == name:
                return o.item
        raise KeyError(name)

    def without(self, name: str) -> "Model":
        kept = tuple(o for o in self.objects if o.name != name)
        if len(kept) == len(self.objects):
            raise KeyError(name)
        return Model(self.vars, kept)


@dataclass(frozen=True)
class TraceStep:
    state: StateId
    assignment: Assignment


@dataclass(frozen=True)
class Trace:
    """A run prefix through a composite graph, plus how it ended."""

    steps: tuple[TraceStep, ...]
    verdict: str  # "Safe" | "BadReached" | "Deadlock"
    end_state: StateId

    def __len__(self) -> int:
        return len(self.steps)


# ---------------------------------------------------------------------------
# export


def materialized_edges(g: ObjectGraph, q: StateId) -> list[Edge]:
    """Explicit out-edges plus the stay self-loop, when satisfiable."""
    out = g.out_edges(q)
    stay = g.stay_guard(q)
    if solver.check_sat(stay, _graph_vars(g)).is_sat:
        out = out + [Edge(q, stay, q)]
    return out


def _graph_vars(g: ObjectGraph) -> VarSet:
    names: set[str] = set()
    from .formulas import variables_of

    for table in (g.request, g.block, g.waitfor):
        for f in table.values():
            names |= variables_of(f)
    for e in g.edges:
        names |= variables_of(e.guard)
    return VarSet(tuple(names) if names else ("_",))


def to_json_dict(g: ObjectGraph) -> dict:
    """JSON-ready dict; formulas as s-expression strings, stay loops included."""
    states = sorted(g.states)
    edges = []
    for q in states:
        for e in materialized_edges(g, q):
            edges.append({"from": e.src, "guard": to_sexpr(e.guard), "to": e.dst})
    return {
        "states": states,
        "initial": g.initial,
        "labels": {
            q: {
                "request": to_sexpr(g.request[q]),
                "block": to_sexpr(g.block[q]),
                "waitfor": to_sexpr(g.waitfor[q]),
            }
            for q in states
        },
        "edges": edges,
        "bad": sorted(g.bad),
    }


def to_dot(g: ObjectGraph, name: str = "object") -> str:
    """Graphviz rendering: states as boxes with labels, guards on edges."""

    def quote(s: str) -> str:
        return '"' + s.replace('"', '\\"') + '"'

    lines = [f"digraph {quote(name)} {{", "  node [shape=box];"]
    for q in sorted(g.states):
        label = [q, f"R: {to_infix(g.request[q])}", f"B: {to_infix(g.block[q])}"]
        wf = g.waitfor[q]
        if to_infix(wf) != "false":
            label.append(f"W: {to_infix(wf)}")
        attrs = f"label={quote(chr(10).join(label))}"
        if q in g.bad:
            attrs += ", peripheries=2, style=filled, fillcolor=lightcoral"
        lines.append(f"  {quote(q)} [{attrs}];")
    lines.append(f"  __start [shape=point]; __start -> {quote(g.initial)};")
    for q in sorted(g.states):
        for e in materialized_edges(g, q):
            lines.append(f"  {quote(e.src)} -> {quote(e.dst)} [label={quote(to_infix(e.guard))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
