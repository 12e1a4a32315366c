"""Safety checking and automated repair of composed models.

Checking: compose the model with a property object (one that only observes
and marks bad states), then breadth-first search the composite along edges
that can actually fire, i.e. whose guard intersects the source state's
requested-and-not-blocked formula. A reachable bad state yields the shortest
counterexample, concretized to exact assignments and re-validated by direct
evaluation (no trust placed in the solver's model).

Repair: grow the initially-bad set to the full bad attractor (states whose
every enabled move leads back into the set; deadlocked states stay out), then
synthesize a patch object that shadows the composite ("keeps track of the
execution") and blocks, at each tracked state, exactly the guards of edges
that fall into the attractor. The patch requests nothing, so composing it in
removes the violating runs and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from . import solver
from .compose import JOIN, compose, compose_all, enabled_guard
from .dsl import ScenarioScript, emit_script
from .extract import extract_graph, simplify_graph
from .formulas import FalseF, Formula, VarSet, conj, disj, evaluate, negate
from .graphs import Edge, GraphError, Model, NamedObject, ObjectGraph, Trace, TraceStep
from .minimize import boolean_minimize
from .runsets import CellRuns, CellSpace, runs_equal_minus_violations

PROPERTY_NAME = "property"

# the repair algorithm's bad set: composite states from which every
# continuation reaches a marked state
BadSet = frozenset


class InvalidPropertyError(ValueError):
    """Property objects must observe only: no requests, no blocks."""


class UnrepairableError(RuntimeError):
    """Every run violates the property; blocking cannot repair the model."""


class DeterminizationError(RuntimeError):
    """Tracker guards overlap; the patch cannot follow the execution."""


class RepairUnsoundError(RuntimeError):
    def __init__(self, message: str, report: "Report"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Safe:
    composite: ObjectGraph


@dataclass(frozen=True)
class Counterexample:
    trace: Trace
    composite: ObjectGraph


def property_graph(prop: Union[ScenarioScript, ObjectGraph], vars: VarSet) -> ObjectGraph:
    g = prop if isinstance(prop, ObjectGraph) else simplify_graph(extract_graph(prop, vars), vars)
    for q in sorted(g.states):
        if not isinstance(g.request[q], FalseF) or not isinstance(g.block[q], FalseF):
            raise InvalidPropertyError(
                f"property state {q!r} requests or blocks; properties may only wait and mark bad")
    return g


def _with_property(m: Model, prop_graph: ObjectGraph) -> Model:
    name = PROPERTY_NAME
    while name in m.names():
        name += "_"
    return Model(m.vars, m.objects + (NamedObject(name, prop_graph),))


def _enabled_edges(g: ObjectGraph, vars: VarSet) -> dict[str, list[Edge]]:
    table: dict[str, list[Edge]] = {}
    for q in g.reachable():
        enabled = enabled_guard(g, q)
        table[q] = [e for e in g.out_edges(q)
                    if solver.check_sat(conj([e.guard, enabled]), vars).is_sat]
    return table


def check_safety(m: Model, prop: Union[ScenarioScript, ObjectGraph]) -> Union[Safe, Counterexample]:
    """BFS for a reachable bad state; shortest counterexample on violation."""
    pg = property_graph(prop, m.vars)
    composite = compose_all(_with_property(m, pg))
    vars = m.vars
    enabled_edges = _enabled_edges(composite, vars)

    parent: dict[str, tuple[str, Edge]] = {}
    visited = {composite.initial}
    queue = [composite.initial]
    target: Optional[str] = None
    if composite.initial in composite.bad:
        target = composite.initial
    while queue and target is None:
        q = queue.pop(0)
        for e in enabled_edges[q]:
            if e.dst in visited:
                continue
            visited.add(e.dst)
            parent[e.dst] = (q, e)
            if e.dst in composite.bad:
                target = e.dst
                break
            queue.append(e.dst)
    if target is None:
        return Safe(composite)

    path: list[Edge] = []
    cur = target
    while cur != composite.initial:
        prev, edge = parent[cur]
        path.append(edge)
        cur = prev
    path.reverse()

    steps = []
    for e in path:
        query = conj([e.guard, enabled_guard(composite, e.src)])
        model = solver.check_sat(query, vars).model
        assert model is not None, "enabled edge lost satisfiability"
        a = model.restricted_to(vars)
        if not evaluate(query, a):  # independent validation of the solver's witness
            raise RuntimeError(f"counterexample step at {e.src!r} fails its own guard")
        steps.append(TraceStep(e.src, a))
    trace = Trace(steps=tuple(steps), verdict="BadReached", end_state=target)
    return Counterexample(trace, composite)


def find_deadlocks(g: ObjectGraph, vars: Optional[VarSet] = None) -> frozenset[str]:
    """States an execution can reach where nothing requested is unblocked.

    Reachability follows enabled edges only: a state behind a permanently
    disabled guard cannot occur in any run, so it cannot deadlock one.
    """
    if vars is None:
        from .graphs import _graph_vars

        vars = _graph_vars(g)
    return frozenset(
        q for q in _enabled_reachable(g, vars)
        if not solver.check_sat(enabled_guard(g, q), vars).is_sat
    )


def compute_bad_attractor(
    g: ObjectGraph, initial_bad: Iterable[str], vars: Optional[VarSet] = None
) -> frozenset[str]:
    """Least fixpoint: add states whose every enabled edge leads into the set.

    Deadlocked states (no enabled edge at all) are never added; they end the
    run without violating anything. Raises UnrepairableError when the initial
    state itself falls in.
    """
    if vars is None:
        from .graphs import _graph_vars

        vars = _graph_vars(g)
    reachable = set(g.reachable())
    bad = set(initial_bad)
    if not bad <= reachable:
        raise GraphError(f"initial bad states {sorted(bad - reachable)} are not reachable states")
    enabled_edges = _enabled_edges(g, vars)
    changed = True
    while changed:
        changed = False
        for q in sorted(reachable - bad):
            succs = {e.dst for e in enabled_edges[q]}
            if succs and succs <= bad:
                bad.add(q)
                changed = True
    if g.initial in bad:
        raise UnrepairableError(
            "the initial state is in the bad attractor; the model is inherently violating")
    return frozenset(bad)


@dataclass
class Patch:
    """A synthesized blocking object: a tracker of the composite execution
    plus the formula it blocks at each tracked state."""

    tracker: ObjectGraph
    block_at: dict[str, Formula]
    name: str = "Patch"

    def to_script_text(self) -> str:
        return emit_script(self.tracker, self.name)

    def as_named_object(self) -> NamedObject:
        return NamedObject(self.name, self.tracker)

    def cut_edges(self) -> list[tuple[str, Formula]]:
        return [(q, f) for q, f in sorted(self.block_at.items(), key=lambda kv: kv[0])
                if not isinstance(f, FalseF)]


def synthesize_patch(
    g: ObjectGraph, bad: frozenset[str], vars: Optional[VarSet] = None, name: str = "Patch"
) -> Patch:
    """Build the patch that cuts exactly the edges entering the bad set."""
    if vars is None:
        from .graphs import _graph_vars

        vars = _graph_vars(g)
    if g.initial in bad:
        raise UnrepairableError("cannot patch a model whose initial state is bad")
    tracked = [q for q in g.reachable() if q not in bad]
    tracked_set = set(tracked)
    kept: dict[str, list[Edge]] = {q: [] for q in tracked}
    cut: dict[str, list[Formula]] = {q: [] for q in tracked}
    for e in g.edges:
        if e.src not in tracked_set:
            continue
        if e.dst in bad:
            cut[e.src].append(e.guard)
        elif e.dst in tracked_set:
            kept[e.src].append(e)

    for q in tracked:
        edges = kept[q]
        for i, a in enumerate(edges):
            for b in edges[i + 1:]:
                if solver.check_sat(conj([a.guard, b.guard]), vars).is_sat:
                    raise DeterminizationError(
                        f"overlapping guards out of {q!r}; tracker cannot be deterministic")

    block_at = {q: boolean_minimize(disj(cut[q]), vars) for q in tracked}
    waitfor = {q: boolean_minimize(disj([e.guard for e in kept[q]]), vars) for q in tracked}
    for q in tracked:
        enabled = enabled_guard(g, q)
        if not solver.check_sat(enabled, vars).is_sat:
            continue  # was already deadlocked before the patch
        if not solver.check_sat(conj([enabled, negate(block_at[q])]), vars).is_sat:
            report = Report(details={"deadlocked_state": q})
            raise RepairUnsoundError(f"patch would deadlock state {q!r}", report)

    tracker = ObjectGraph.make(
        states=tracked,
        initial=g.initial,
        request={},
        block=block_at,
        waitfor=waitfor,
        edges=[(e.src, e.guard, e.dst) for q in tracked for e in kept[q]],
    )
    return Patch(tracker=tracker, block_at=block_at, name=name)


def _projector(original: ObjectGraph):
    """Map states of compose(original, extra) back onto original's states.

    Composite state names are join-separated; the original's own names may
    already contain the separator, so strip by fragment count.
    """
    keep = len(original.initial.split(JOIN))

    def project(name: str) -> str:
        return JOIN.join(name.split(JOIN)[:keep])

    return project


def _enabled_reachable(g: ObjectGraph, vars: VarSet) -> list[str]:
    enabled_edges = _enabled_edges(g, vars)
    seen = {g.initial}
    order = [g.initial]
    i = 0
    while i < len(order):
        for e in enabled_edges[order[i]]:
            if e.dst not in seen:
                seen.add(e.dst)
                order.append(e.dst)
        i += 1
    return order


def repair(m: Model, prop: Union[ScenarioScript, ObjectGraph], name: str = "Patch") -> tuple[Patch, frozenset[str], ObjectGraph]:
    """Full pipeline: compose, find the attractor, synthesize the patch.

    Returns (patch, bad attractor, composite with property). Bad states that
    only edges with unsatisfiable enabling can reach do not count as
    violations (the checker cannot reach them either); on a safe model the
    attractor is empty and the patch blocks nothing (identity patch).
    """
    pg = property_graph(prop, m.vars)
    composite = compose_all(_with_property(m, pg))
    reachable_bad = [q for q in _enabled_reachable(composite, m.vars) if q in composite.bad]
    if not reachable_bad:
        identity = synthesize_patch(composite, frozenset(), m.vars, name)
        return identity, frozenset(), composite
    attractor = compute_bad_attractor(composite, reachable_bad, m.vars)
    return synthesize_patch(composite, attractor, m.vars, name), attractor, composite


@dataclass
class Report:
    """Evidence for the three repair-soundness clauses."""

    safe_after_patch: Optional[bool] = None
    no_new_deadlocks: Optional[bool] = None
    containment_ok: Optional[bool] = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.safe_after_patch and self.no_new_deadlocks and self.containment_ok)

    def summary(self) -> str:
        mark = {True: "pass", False: "FAIL", None: "skipped"}
        return (
            f"safety after patch: {mark[self.safe_after_patch]}; "
            f"no new deadlocks: {mark[self.no_new_deadlocks]}; "
            f"run containment: {mark[self.containment_ok]}"
        )


def verify_patch(
    m: Model,
    patch: Patch,
    prop: Union[ScenarioScript, ObjectGraph],
    depth: int = 8,
    samples: int = 200,
    seed: int = 7,
) -> Report:
    """Check the three soundness clauses of a synthesized patch.

    (a) the patched model satisfies the property; (b) the patch introduces no
    deadlocks; (c) sampled runs of the patched model are runs of the original
    and sampled non-violating original runs survive. Raises RepairUnsoundError
    (with the report and a witness) if any clause fails.
    """
    report = Report()
    pg = property_graph(prop, m.vars)

    patched_model = Model(m.vars, m.objects + (patch.as_named_object(),))
    verdict = check_safety(patched_model, pg)
    report.safe_after_patch = isinstance(verdict, Safe)
    if not report.safe_after_patch:
        report.details["violation"] = verdict.trace

    original = compose_all(_with_property(m, pg))
    patched = compose(original, patch.tracker, m.vars)
    dl_before = find_deadlocks(original, m.vars)
    dl_after = find_deadlocks(patched, m.vars)
    project = _projector(original)
    new_deadlocks = sorted(q for q in dl_after if project(q) not in dl_before)
    report.no_new_deadlocks = not new_deadlocks
    if new_deadlocks:
        report.details["new_deadlocks"] = new_deadlocks

    space = CellSpace.for_graphs([original, patched], m.vars)
    runs_orig = CellRuns.build(original, space)
    runs_patched = CellRuns.build(patched, space)
    doomed = _doomed_states(original, m.vars)
    report.containment_ok = True
    for word in runs_patched.sample(depth, samples, seed):
        if not runs_orig.accepts(word):
            report.containment_ok = False
            report.details["foreign_run"] = word
            break
    if report.containment_ok:
        # non-violating original runs (those staying clear of the attractor,
        # from which violation is inevitable) must survive the patch
        for word in runs_orig.sample(depth, samples, seed + 1, avoid=doomed):
            if not runs_patched.accepts(word):
                report.containment_ok = False
                report.details["lost_run"] = word
                break
    report.details["cells"] = len(space.witnesses)

    if not report.ok:
        raise RepairUnsoundError(f"repair is unsound: {report.summary()}", report)
    return report


def _doomed_states(composite: ObjectGraph, vars: VarSet) -> frozenset[str]:
    """The bad attractor of a composite, empty when no bad state is live."""
    seeds = [q for q in _enabled_reachable(composite, vars) if q in composite.bad]
    if not seeds:
        return frozenset()
    return compute_bad_attractor(composite, seeds, vars)


def runs_preserved_exactly(
    m: Model, patch: Patch, prop: Union[ScenarioScript, ObjectGraph], depth: int = 6
) -> Optional[tuple]:
    """Exact bounded check that the patch removes precisely the violating runs.

    A run counts as violating once violation becomes inevitable (it enters
    the bad attractor). Compares the depth-bounded cell-run sets of the
    original and patched composites; returns None when runs(patched) equals
    runs(original) minus the violating runs, else the first differing run.
    """
    pg = property_graph(prop, m.vars)
    original = compose_all(_with_property(m, pg))
    patched = compose(original, patch.tracker, m.vars)
    space = CellSpace.for_graphs([original, patched], m.vars)
    return runs_equal_minus_violations(
        CellRuns.build(original, space),
        CellRuns.build(patched, space),
        depth,
        doomed=_doomed_states(original, m.vars),
    )
