"""Transition-graph extraction: from scenario scripts to ObjectGraphs.

The interpreter half advances a script one triggered assignment at a time: a
script waits at a synchronization point, wakes only when the assignment
satisfies its request-or-waitfor condition, then runs straight-line code
(branching on the assignment) to the next sync point. Program location fully
determines the state, which is what makes extraction terminate.

The extraction half explores, at every reachable state, each complete sign
assignment over the script's collected predicates. Each satisfiable cell is
concretized by the solver and triggered through the interpreter, recording a
cell-guarded edge. Enumerating complete sign assignments (rather than only
positive predicate subsets) keeps cells pairwise disjoint, so every branch
that is reachable under some cell gets explored and the extracted graph
simulates the script exactly, in both directions.

Self-loops where the object does not wake are left implicit in the extracted
graph; composition and export materialize them as one complement-guard loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import solver
from .dsl import IfStmt, LoopStmt, PredicateSet, ScenarioScript, SyncStmt, collect_predicates
from .formulas import (
    FALSE,
    Assignment,
    Formula,
    VarSet,
    disj,
    evaluate,
)
from .graphs import ObjectGraph
from .minimize import boolean_minimize, cell_formula

END_LOCATION = -1


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class ScriptState:
    """A script paused at a synchronization point (or finished).

    Equality and hashing use the location only; the script reference and the
    provenance trail (cells taken to get here, for debugging) do not
    distinguish states.
    """

    script: ScenarioScript = field(compare=False, repr=False)
    location: int = 0
    provenance: tuple[str, ...] = field(compare=False, default=())

    @property
    def ended(self) -> bool:
        return self.location == END_LOCATION

    @property
    def name(self) -> str:
        return "end" if self.ended else f"s{self.location}"

    def sync(self) -> Optional[SyncStmt]:
        return None if self.ended else self.script.syncs[self.location]


# continuation frames: (statement list, resume index), outermost first
_Frames = list[tuple[tuple, int]]


def _continuations(script: ScenarioScript) -> dict[int, _Frames]:
    table: dict[int, _Frames] = {}

    def walk(stmts: list, stack: _Frames) -> None:
        body = tuple(stmts)
        for i, st in enumerate(stmts):
            if isinstance(st, SyncStmt):
                table[st.uid] = stack + [(body, i + 1)]
            elif isinstance(st, IfStmt):
                walk(st.then, stack + [(body, i + 1)])
                walk(st.orelse, stack + [(body, i + 1)])
            elif isinstance(st, LoopStmt):
                walk(st.body, stack + [(body, i)])

    walk(script.body, [])
    return table


def _walk_to_sync(frames: _Frames, a: Optional[Assignment]) -> int:
    """Run straight-line control flow until the next sync; returns its uid."""
    stack = list(frames)
    while stack:
        stmts, i = stack.pop()
        while i < len(stmts):
            st = stmts[i]
            if isinstance(st, SyncStmt):
                return st.uid
            if isinstance(st, IfStmt):
                if a is None:
                    raise ExtractionError("conditional reached with no triggered assignment")
                stack.append((stmts, i + 1))
                stmts = tuple(st.then if evaluate(st.cond, a) else st.orelse)
                i = 0
                continue
            if isinstance(st, LoopStmt):
                stack.append((stmts, i))  # loops repeat forever
                stmts = tuple(st.body)
                i = 0
                continue
            raise TypeError(f"not a statement: {st!r}")
    return END_LOCATION


def initial_state(script: ScenarioScript) -> ScriptState:
    loc = _walk_to_sync([(tuple(script.body), 0)], None)
    return ScriptState(script=script, location=loc)


def step_script(s: ScriptState, a: Assignment) -> ScriptState:
    """Advance one triggered assignment.

    If the assignment does not satisfy the pending sync's request-or-waitfor
    condition the object does not wake and the state is returned unchanged.
    A finished script absorbs everything.
    """
    if s.ended:
        return s
    sync = s.sync()
    assert sync is not None
    if not evaluate(sync.wake(), a):
        return s
    frames = _continuations(s.script)[sync.uid]
    nxt = _walk_to_sync(frames, a)
    return ScriptState(script=s.script, location=nxt, provenance=s.provenance)


@dataclass
class ExtractStats:
    """Instrumentation for extraction runs."""

    predicates: Optional[PredicateSet] = None
    cells_per_state: dict[str, int] = field(default_factory=dict)
    satisfiable_cells_per_state: dict[str, int] = field(default_factory=dict)


def extract_graph(
    script: ScenarioScript,
    vars: Optional[VarSet] = None,
    stats: Optional[ExtractStats] = None,
    max_predicates: int = 16,
) -> ObjectGraph:
    """Breadth-first extraction of a script's underlying transition graph.

    At each discovered state, all 2^|P| sign cells over the script's
    predicate set P are enumerated; satisfiable cells are concretized and
    triggered through the interpreter. Edges carry the cell conjunctions as
    guards (merge them afterwards with ``simplify_graph``).
    """
    predicates = collect_predicates(script)
    if len(predicates) > max_predicates:
        raise ExtractionError(
            f"object {script.name!r} collects {len(predicates)} predicates, over the "
            f"cap of {max_predicates}; reduce distinct predicates in the script")
    atoms = list(predicates.atoms)
    if vars is None:
        names = {v for a in atoms for v in a.variables()}
        vars = VarSet(tuple(names) if names else ("_",))
    if stats is not None:
        stats.predicates = predicates

    cells: list[tuple[Formula, Optional[Assignment]]] = []
    for mask in range(1 << len(atoms)):
        guard = cell_formula(atoms, mask)
        result = solver.check_sat(guard, vars)
        cells.append((guard, result.model))

    start = initial_state(script)
    states: dict[int, ScriptState] = {start.location: start}
    order = [start]
    edges: list[tuple[str, Formula, str]] = []
    labels_r: dict[str, Formula] = {}
    labels_b: dict[str, Formula] = {}
    labels_w: dict[str, Formula] = {}
    bad: set[str] = set()

    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        sync = state.sync()
        if sync is None:
            labels_r[state.name] = FALSE
            labels_b[state.name] = FALSE
            labels_w[state.name] = FALSE
        else:
            labels_r[state.name] = sync.request
            labels_b[state.name] = sync.block
            labels_w[state.name] = sync.waitfor
            if sync.bad:
                bad.add(state.name)
        examined = 0
        satisfiable = 0
        for guard, model in cells:
            examined += 1
            if model is None:
                continue
            satisfiable += 1
            if sync is None or not evaluate(sync.wake(), model):
                continue  # no wake: implicit self-loop, not recorded
            nxt = step_script(state, model)
            edges.append((state.name, guard, nxt.name))
            if nxt.location not in states:
                states[nxt.location] = nxt
                order.append(nxt)
        if stats is not None:
            stats.cells_per_state[state.name] = examined
            stats.satisfiable_cells_per_state[state.name] = satisfiable

    return ObjectGraph.make(
        states=[s.name for s in order],
        initial=start.name,
        request=labels_r,
        block=labels_b,
        waitfor=labels_w,
        edges=edges,
        bad=bad,
    )


def simplify_graph(g: ObjectGraph, vars: Optional[VarSet] = None) -> ObjectGraph:
    """Merge parallel edges into one disjunction and shrink its formula.

    Rewrites only take effect when the solver certifies equivalence, so the
    run set is preserved exactly.
    """
    if vars is None:
        from .graphs import _graph_vars

        vars = _graph_vars(g)
    groups: dict[tuple[str, str], list[Formula]] = {}
    for e in g.edges:
        groups.setdefault((e.src, e.dst), []).append(e.guard)
    edges = []
    for (src, dst), guards in sorted(groups.items()):
        merged = disj(guards)
        edges.append((src, boolean_minimize(merged, vars), dst))
    return ObjectGraph.make(
        states=g.states,
        initial=g.initial,
        request=g.request,
        block=g.block,
        waitfor=g.waitfor,
        edges=edges,
        bad=g.bad,
    )
