"""Run sets of composite graphs over a finite cell abstraction.

Guards in desk-scale models are built from single-variable atoms, so the
thresholds appearing in a composite partition each variable's axis into
finitely many elementary regions (points and open intervals). A cell is one
region per variable; every formula of the composite is constant on each cell,
so a cell with an integer-grid witness in [-25, 25] stands for all the
assignments inside it. Runs become words over the cell alphabet, which makes
"the patched model removes exactly the violating runs and nothing else"
checkable by exhaustive bounded-depth comparison.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .compose import enabled_guard
from .formulas import Assignment, LinearAtom, VarSet, evaluate
from .graphs import ObjectGraph

GRID = 25


class AbstractionError(ValueError):
    """The graph's atoms do not fit the single-variable grid abstraction."""


def _graph_atoms(g: ObjectGraph) -> list[LinearAtom]:
    from .formulas import atoms_of

    found: dict[tuple, LinearAtom] = {}
    for table in (g.request, g.block, g.waitfor):
        for f in table.values():
            for a in atoms_of(f):
                found.setdefault(a.key(), a)
    for e in g.edges:
        for a in atoms_of(e.guard):
            found.setdefault(a.key(), a)
    return [found[k] for k in sorted(found)]


def _regions_for(thresholds: list[Fraction], grid: int) -> list[Fraction]:
    """Integer representatives of the elementary regions cut by thresholds.

    Regions are the cut points themselves and the open intervals between
    them; a region without an integer point inside [-grid, grid] is dropped
    (consistently for every graph sharing the same thresholds).
    """
    import math

    cuts = sorted(set(thresholds))
    if not cuts:
        return [Fraction(0)]
    reps: list[Fraction] = []
    for c in cuts:
        if c.denominator == 1 and -grid <= c <= grid:
            reps.append(c)
    bounds: list[Optional[Fraction]] = [None] + cuts + [None]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        n = -grid if lo is None else max(math.floor(lo) + 1, -grid)
        if n > grid:
            continue
        if hi is not None and not n < hi:
            continue
        reps.append(Fraction(n))
    return sorted(set(reps))


@dataclass(frozen=True)
class CellSpace:
    """Product of per-variable region representatives."""

    vars: tuple[str, ...]
    witnesses: tuple[Assignment, ...]

    @staticmethod
    def for_graphs(graphs: list[ObjectGraph], vars: VarSet, grid: int = GRID) -> "CellSpace":
        thresholds: dict[str, list[Fraction]] = {v: [] for v in vars.names}
        for g in graphs:
            for a in _graph_atoms(g):
                if len(a.coeffs) != 1:
                    raise AbstractionError(f"atom {a} is not single-variable")
                var = a.coeffs[0][0]
                if var not in thresholds:
                    raise AbstractionError(f"atom {a} uses a variable outside {vars.names}")
                thresholds[var].append(a.const)
        per_var = [(_v, _regions_for(ts, grid)) for _v, ts in sorted(thresholds.items())]
        cells: list[Assignment] = []

        def build(i: int, acc: dict[str, Fraction]) -> None:
            if i == len(per_var):
                cells.append(Assignment(dict(acc)))
                return
            name, reps = per_var[i]
            for r in reps:
                acc[name] = r
                build(i + 1, acc)
            del acc[name]

        build(0, {})
        return CellSpace(tuple(v for v, _ in per_var), tuple(cells))

    def key_of(self, a: Assignment) -> tuple:
        return tuple(a.values[v] for v in self.vars)


@dataclass
class CellRuns:
    """Per-state enabled-cell transition table of one composite graph."""

    graph: ObjectGraph
    space: CellSpace
    moves: dict[str, list[tuple[tuple, str]]]  # state -> [(cell key, successor)]

    @staticmethod
    def build(g: ObjectGraph, space: CellSpace) -> "CellRuns":
        moves: dict[str, list[tuple[tuple, str]]] = {}
        for q in g.reachable():
            enabled = enabled_guard(g, q)
            out = g.out_edges(q)
            table: list[tuple[tuple, str]] = []
            for cell in space.witnesses:
                if not evaluate(enabled, cell):
                    continue
                dst = q  # implicit stay when no edge matches
                for e in out:
                    if evaluate(e.guard, cell):
                        dst = e.dst
                        break
                table.append((space.key_of(cell), dst))
            moves[q] = table
        return CellRuns(g, space, moves)

    def runs(self, depth: int, avoid: Optional[frozenset] = None) -> set[tuple]:
        """All cell-words of length <= depth (optionally avoiding some states)."""
        banned = avoid if avoid is not None else frozenset()
        out: set[tuple] = set()

        def walk(state: str, prefix: tuple) -> None:
            if len(prefix) == depth:
                return
            for key, dst in self.moves[state]:
                if dst in banned:
                    continue
                word = prefix + (key,)
                out.add(word)
                walk(dst, word)

        if self.graph.initial in banned:
            return out
        walk(self.graph.initial, ())
        return out

    def accepts(self, word: tuple, avoid: Optional[frozenset] = None) -> bool:
        banned = avoid if avoid is not None else frozenset()
        state = self.graph.initial
        for key in word:
            nxt = None
            for k, dst in self.moves[state]:
                if k == key:
                    nxt = dst
                    break
            if nxt is None or nxt in banned:
                return False
            state = nxt
        return True

    def sample(self, depth: int, count: int, seed: int, avoid: Optional[frozenset] = None) -> list[tuple]:
        banned = avoid if avoid is not None else frozenset()
        rng = random.Random(seed)
        words: list[tuple] = []
        for _ in range(count):
            state = self.graph.initial
            word: list[tuple] = []
            length = rng.randint(1, depth)
            for _ in range(length):
                options = [(k, d) for k, d in self.moves[state] if d not in banned]
                if not options:
                    break
                key, dst = options[rng.randrange(len(options))]
                word.append(key)
                state = dst
            if word:
                words.append(tuple(word))
        return words


def runs_equal_minus_violations(
    original: CellRuns, patched: CellRuns, depth: int, doomed: Optional[frozenset] = None
) -> Optional[tuple]:
    """Check runs(patched) == runs(original) minus violating runs, exactly.

    A finite run counts as violating once it enters ``doomed`` (the bad
    attractor: from there every maximal continuation reaches a bad state), so
    the comparison matches removal of violating maximal runs. Works by
    synchronized, memoized descent over the two transition tables, which
    decides set equality of the depth-bounded run sets without materializing
    them. Returns None on success, else a differing word (on one side only).
    """
    banned = doomed if doomed is not None else original.graph.bad
    memo: set[tuple[str, str, int]] = set()

    def rec(qa: str, qb: str, d: int, prefix: tuple) -> Optional[tuple]:
        if d == 0 or (qa, qb, d) in memo:
            return None
        steps_a = {key: dst for key, dst in original.moves[qa] if dst not in banned}
        steps_b = {key: dst for key, dst in patched.moves[qb]}
        for key, dst in patched.moves[qb]:
            if dst in patched.graph.bad:
                return prefix + (key,)  # a violating run survived the patch
        if set(steps_a) != set(steps_b):
            diff = set(steps_a) ^ set(steps_b)
            return prefix + (sorted(diff)[0],)
        for key in steps_a:
            found = rec(steps_a[key], steps_b[key], d - 1, prefix + (key,))
            if found is not None:
                return found
        memo.add((qa, qb, d))
        return None

    return rec(original.graph.initial, patched.graph.initial, depth, ())
