"""Direct execution of models: solver-backed event selection, step by step.

Each step gathers the request and block declarations of every object at its
current synchronization point, asks the solver for an assignment satisfying
``(or of requests) and not (or of blocks)``, broadcasts it, and advances the
objects it wakes. No composite graph is built; this is the run-time twin of
the graph-based analyses, and the two agree path-for-path.

Two selection policies:

* ``first-model``: the solver's deterministic model every time. Stable, but
  replays a single run.
* ``random-cell``: first pick (seeded) a satisfiable sign cell over the atoms
  of the current declarations, then solve inside it. Runs vary across seeds
  but stay reproducible, and coverage spreads across qualitatively different
  behaviors instead of hugging one boundary.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional, Union

from . import solver
from .dsl import ScenarioScript
from .extract import ScriptState, initial_state, step_script
from .formulas import (
    FALSE,
    Assignment,
    Formula,
    VarSet,
    atoms_of,
    canonicalize,
    conj,
    disj,
    evaluate,
    negate,
)
from .graphs import Model, ObjectGraph
from .minimize import cell_formula

FIRST_MODEL = "first-model"
RANDOM_CELL = "random-cell"
POLICIES = (FIRST_MODEL, RANDOM_CELL)


@dataclass(frozen=True)
class ExecutionConfig:
    max_steps: int
    seed: int = 0
    policy: str = FIRST_MODEL

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; choose from {POLICIES}")


@dataclass(frozen=True)
class LogEntry:
    step: int
    assignment: Assignment
    woke: tuple[str, ...]


@dataclass
class EventLog:
    entries: list[LogEntry] = field(default_factory=list)
    stop_reason: str = "max-steps"  # "max-steps" | "deadlock" | "ended"

    def assignments(self) -> list[Assignment]:
        return [e.assignment for e in self.entries]

    def to_jsonl(self) -> str:
        lines = []
        for e in self.entries:
            lines.append(json.dumps({
                "step": e.step,
                "assignment": {v: str(e.assignment.values[v]) for v in sorted(e.assignment.values)},
                "woke": list(e.woke),
            }, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")


def select_event(
    declarations: list[tuple[Formula, Formula]],
    vars: VarSet,
    policy: str = FIRST_MODEL,
    rng: Optional[random.Random] = None,
) -> Optional[Assignment]:
    """Pick an assignment requested by some object and blocked by none.

    Returns None on deadlock (no such assignment exists).
    """
    requests = disj([r for r, _ in declarations])
    blocks = disj([b for _, b in declarations])
    base = canonicalize(conj([requests, negate(blocks)]))
    first = solver.check_sat(base, vars)
    if not first.is_sat:
        return None
    if policy == FIRST_MODEL or rng is None:
        return first.model.restricted_to(vars)

    atoms = atoms_of(base)
    if atoms and len(atoms) <= 12:
        n = len(atoms)
        tried: set[int] = set()
        for _ in range(64):
            mask = rng.getrandbits(n)
            if mask in tried:
                continue
            tried.add(mask)
            probe = solver.check_sat(conj([base, cell_formula(atoms, mask)]), vars)
            if probe.is_sat:
                return probe.model.restricted_to(vars)
        masks = list(range(1 << n))
        rng.shuffle(masks)
        for mask in masks:
            probe = solver.check_sat(conj([base, cell_formula(atoms, mask)]), vars)
            if probe.is_sat:
                return probe.model.restricted_to(vars)
    return first.model.restricted_to(vars)


_ObjState = Union[ScriptState, str]


def _object_state(item: Union[ScenarioScript, ObjectGraph]) -> _ObjState:
    if isinstance(item, ScenarioScript):
        return initial_state(item)
    return item.initial


def _declaration(item, state: _ObjState) -> tuple[Formula, Formula]:
    if isinstance(item, ObjectGraph):
        return item.request[state], item.block[state]
    sync = state.sync()
    if sync is None:
        return FALSE, FALSE
    return sync.request, sync.block


def _wake_condition(item, state: _ObjState) -> Formula:
    if isinstance(item, ObjectGraph):
        return item.wake(state)
    sync = state.sync()
    if sync is None:
        return FALSE
    return sync.wake()


def _advance(item, state: _ObjState, a: Assignment) -> _ObjState:
    if isinstance(item, ObjectGraph):
        for e in item.out_edges(state):
            if evaluate(e.guard, a):
                return e.dst
        return state  # woke but the graph gives no move: stay put
    return step_script(state, a)


def run(m: Model, cfg: ExecutionConfig) -> EventLog:
    """Execute a model: reproducible given (model, config)."""
    rng = random.Random(cfg.seed)
    states: list[_ObjState] = [_object_state(o.item) for o in m.objects]
    log = EventLog()
    for step in range(1, cfg.max_steps + 1):
        declarations = [_declaration(o.item, s) for o, s in zip(m.objects, states)]
        a = select_event(declarations, m.vars, cfg.policy, rng)
        if a is None:
            log.stop_reason = "deadlock"
            return log
        woke = []
        for i, (named, state) in enumerate(zip(m.objects, states)):
            if evaluate(_wake_condition(named.item, state), a):
                woke.append(named.name)
                states[i] = _advance(named.item, state, a)
        log.entries.append(LogEntry(step, a, tuple(woke)))
        if all(isinstance(o.item, ScenarioScript) and s.ended for o, s in zip(m.objects, states)):
            log.stop_reason = "ended"
            return log
    return log
