"""Guard-formula minimization over sign cells of the formula's own atoms.

A formula over atoms a1..an is constant on each sign cell (a complete
true/false choice per atom), so it is a Boolean function of the atom signs.
Cells that are arithmetically unsatisfiable (e.g. h >= 10 and h < 0 together)
can never occur and act as don't-cares. Quine-McCluskey with those don't-cares
yields a small disjunction of literal conjunctions; the result is only used
when the solver certifies equivalence with the input, so this is purely a
readability transform and never changes semantics.
"""

from __future__ import annotations

from . import solver
from .formulas import (
    FALSE,
    TRUE,
    And,
    Atom,
    Formula,
    LinearAtom,
    Or,
    VarSet,
    atoms_of,
    canonicalize,
    conj,
    substitute_signs,
    TrueF,
)

_MAX_ATOMS = 12

# satisfiable-cell tables keyed by the atoms' canonical keys
_cell_cache: dict[tuple, frozenset[int]] = {}


def cell_formula(atoms: list[LinearAtom], mask: int) -> Formula:
    """Conjunction asserting each atom positively (bit set) or negatively."""
    literals = []
    for i, a in enumerate(atoms):
        literals.append(Atom(a) if (mask >> i) & 1 else Atom(a.negated()))
    return conj(literals)


def satisfiable_cells(atoms: list[LinearAtom], vars: VarSet) -> frozenset[int]:
    key = tuple(a.key() for a in atoms)
    cached = _cell_cache.get(key)
    if cached is None:
        cached = frozenset(
            mask for mask in range(1 << len(atoms))
            if solver.check_sat(cell_formula(atoms, mask), vars).is_sat
        )
        _cell_cache[key] = cached
    return cached


def _combine(implicants: set[tuple[int, int]]) -> set[tuple[int, int]]:
    # implicant = (values, care_mask); merge pairs differing in one cared bit
    out: set[tuple[int, int]] = set()
    merged: set[tuple[int, int]] = set()
    items = sorted(implicants)
    for i, (va, ca) in enumerate(items):
        for vb, cb in items[i + 1:]:
            if ca != cb:
                continue
            diff = va ^ vb
            if diff and not (diff & (diff - 1)):
                out.add((va & ~diff, ca & ~diff))
                merged.add((va, ca))
                merged.add((vb, cb))
    out |= implicants - merged
    return out


def _prime_implicants(on: set[int], dc: set[int], n: int) -> list[tuple[int, int]]:
    full = (1 << n) - 1
    current: set[tuple[int, int]] = {(m, full) for m in on | dc}
    while True:
        nxt = _combine(current)
        if nxt == current:
            break
        current = nxt
    return sorted(current)


def _covers(implicant: tuple[int, int], minterm: int) -> bool:
    value, care = implicant
    return (minterm & care) == (value & care)


def _select_cover(on: set[int], primes: list[tuple[int, int]]) -> list[tuple[int, int]]:
    remaining = set(on)
    chosen: list[tuple[int, int]] = []
    cover_map = {p: {m for m in on if _covers(p, m)} for p in primes}
    # essential primes first
    for m in sorted(on):
        owners = [p for p in primes if m in cover_map[p]]
        if len(owners) == 1 and owners[0] not in chosen:
            chosen.append(owners[0])
            remaining -= cover_map[owners[0]]
    while remaining:
        best = max(
            primes,
            key=lambda p: (len(cover_map[p] & remaining), bin(~p[1]).count("1"), [-x for x in p]),
        )
        if not cover_map[best] & remaining:
            raise AssertionError("prime cover selection stalled")
        chosen.append(best)
        remaining -= cover_map[best]
    return chosen


def _implicant_formula(implicant: tuple[int, int], atoms: list[LinearAtom]) -> Formula:
    value, care = implicant
    literals = []
    for i, a in enumerate(atoms):
        if (care >> i) & 1:
            literals.append(Atom(a) if (value >> i) & 1 else Atom(a.negated()))
    return conj(literals) if literals else TRUE


def _polarity_classes(atoms: list[LinearAtom]) -> list[LinearAtom]:
    """One representative per {atom, negated atom} pair, canonical order."""
    reps: dict[tuple, LinearAtom] = {}
    for a in atoms:
        b = a.negated()
        rep = a if a.key() <= b.key() else b
        reps.setdefault(rep.key(), rep)
    return [reps[k] for k in sorted(reps)]


def boolean_minimize(f: Formula, vars: VarSet) -> Formula:
    """Smallest equivalent disjunction-of-conjunctions found, else ``f``."""
    f = canonicalize(f)
    atoms = _polarity_classes(atoms_of(f))
    if not atoms or len(atoms) > _MAX_ATOMS:
        return f
    sat = satisfiable_cells(atoms, vars)
    n = len(atoms)
    on: set[int] = set()
    dc: set[int] = set(range(1 << n)) - set(sat)
    for mask in sat:
        signs: dict[tuple, bool] = {}
        for i, a in enumerate(atoms):
            value = bool((mask >> i) & 1)
            signs[a.key()] = value
            signs[a.negated().key()] = not value
        if isinstance(substitute_signs(f, signs), TrueF):
            on.add(mask)
    if not on:
        return FALSE
    primes = _prime_implicants(on, dc, n)
    cover = _select_cover(on, primes)
    result = canonicalize(Or(tuple(_implicant_formula(p, atoms) for p in cover)))
    if _smaller(result, f) and solver.equivalent(result, f, vars):
        return result
    return f


def _size(f: Formula) -> int:
    if isinstance(f, (And, Or)):
        return 1 + sum(_size(c) for c in f.children)
    return 1


def _smaller(candidate: Formula, original: Formula) -> bool:
    return _size(candidate) <= _size(original)
