"""Satisfiability of quantifier-free linear real arithmetic, with models.

Architecture: a small DPLL search over the Boolean structure (branching on
atoms and partially evaluating the formula) hands conjunctions of theory
literals to a general-simplex feasibility check. Strict inequalities are
handled symbolically with delta-rationals (value + infinitesimal * delta) and
concretized afterwards to a small positive rational, so returned models are
plain exact rationals that satisfy strict bounds strictly.

Disequalities are kept as primitive atoms and split into ``<`` or ``>`` at the
theory level. The solver is deterministic: identical queries yield identical
models, and unconstrained variables are assigned 0.

Everything here is self-contained and exact; no floats, no external solver.
Set the environment variable ``SBM_SOLVER_DEBUG=1`` to dump each query in
SMT-LIB2 QF_LRA syntax on stderr for cross-checking against external tools.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .formulas import (
    FALSE,
    TRUE,
    And,
    Assignment,
    Atom,
    FalseF,
    Formula,
    LinearAtom,
    Or,
    TrueF,
    VarSet,
    canonicalize,
    conj,
    evaluate,
    formula_key,
    negate,
    to_sexpr,
    variables_of,
)


@dataclass(frozen=True)
class DeltaRational:
    """A rational plus an infinitesimal multiple of a symbolic delta > 0.

    Comparison is lexicographic on (standard, infinitesimal), which is exactly
    the ordering of standard + infinitesimal*delta for delta small enough.
    """

    standard: Fraction
    infinitesimal: Fraction = Fraction(0)

    def __add__(self, other: "DeltaRational") -> "DeltaRational":
        return DeltaRational(self.standard + other.standard, self.infinitesimal + other.infinitesimal)

    def __sub__(self, other: "DeltaRational") -> "DeltaRational":
        return DeltaRational(self.standard - other.standard, self.infinitesimal - other.infinitesimal)

    def scaled(self, k: Fraction) -> "DeltaRational":
        return DeltaRational(self.standard * k, self.infinitesimal * k)

    def _key(self) -> tuple[Fraction, Fraction]:
        return (self.standard, self.infinitesimal)

    def __lt__(self, other: "DeltaRational") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "DeltaRational") -> bool:
        return self._key() <= other._key()

    def concretize(self, delta: Fraction) -> Fraction:
        return self.standard + self.infinitesimal * delta


ZERO = DeltaRational(Fraction(0))


@dataclass(frozen=True)
class SatResult:
    """Outcome of a satisfiability query: a model, or None for Unsat."""

    model: Optional[Assignment]

    @property
    def is_sat(self) -> bool:
        return self.model is not None


UNSAT = SatResult(None)


# ---------------------------------------------------------------------------
# theory layer: conjunction feasibility via bounds + general simplex


class _Simplex:
    """General simplex over delta-rationals (Bland's rule, no objective)."""

    def __init__(self) -> None:
        self.order: list[str] = []  # fixed variable order; index is Bland priority
        self.value: dict[str, DeltaRational] = {}
        self.lower: dict[str, DeltaRational] = {}
        self.upper: dict[str, DeltaRational] = {}
        self.rows: dict[str, dict[str, Fraction]] = {}  # basic -> {nonbasic: coeff}
        self.basic: set[str] = set()

    def add_var(self, name: str) -> None:
        if name not in self.value:
            self.order.append(name)
            self.value[name] = ZERO

    def add_row(self, slack: str, combo: dict[str, Fraction]) -> None:
        # slack = sum(combo); incoming vars are nonbasic with value 0, so slack
        # starts at 0 as well.
        self.add_var(slack)
        self.rows[slack] = dict(combo)
        self.basic.add(slack)

    def set_bound(self, var: str, lo: Optional[DeltaRational], hi: Optional[DeltaRational]) -> bool:
        if lo is not None and (var not in self.lower or self.lower[var] < lo):
            self.lower[var] = lo
        if hi is not None and (var not in self.upper or hi < self.upper[var]):
            self.upper[var] = hi
        if var in self.lower and var in self.upper and self.upper[var] < self.lower[var]:
            return False
        return True

    def _update(self, var: str, val: DeltaRational) -> None:
        diff = val - self.value[var]
        for b, row in self.rows.items():
            coeff = row.get(var)
            if coeff:
                self.value[b] = self.value[b] + diff.scaled(coeff)
        self.value[var] = val

    def _pivot(self, xi: str, xj: str) -> None:
        row = self.rows.pop(xi)
        aij = row[xj]
        new_row = {v: -c / aij for v, c in row.items() if v != xj}
        new_row[xi] = Fraction(1) / aij
        for b, other in list(self.rows.items()):
            c = other.pop(xj, None)
            if c:
                for v, k in new_row.items():
                    other[v] = other.get(v, Fraction(0)) + c * k
                    if other[v] == 0:
                        del other[v]
        self.rows[xj] = new_row
        self.basic.discard(xi)
        self.basic.add(xj)

    def _pivot_and_update(self, xi: str, xj: str, target: DeltaRational) -> None:
        aij = self.rows[xi][xj]
        theta = (target - self.value[xi]).scaled(Fraction(1) / aij)
        self.value[xi] = target
        self.value[xj] = self.value[xj] + theta
        for b, row in self.rows.items():
            if b != xi:
                coeff = row.get(xj)
                if coeff:
                    self.value[b] = self.value[b] + theta.scaled(coeff)
        self._pivot(xi, xj)

    def solve(self) -> bool:
        # Move nonbasic vars inside their bounds first (basic ones follow).
        for v in self.order:
            if v in self.basic:
                continue
            lo, hi = self.lower.get(v), self.upper.get(v)
            if lo is not None and self.value[v] < lo:
                self._update(v, lo)
            elif hi is not None and hi < self.value[v]:
                self._update(v, hi)
        idx = {v: i for i, v in enumerate(self.order)}
        while True:
            broken = None
            for v in sorted(self.basic, key=idx.__getitem__):
                lo, hi = self.lower.get(v), self.upper.get(v)
                if lo is not None and self.value[v] < lo:
                    broken, target, increase = v, lo, True
                    break
                if hi is not None and hi < self.value[v]:
                    broken, target, increase = v, hi, False
                    break
            if broken is None:
                return True
            row = self.rows[broken]
            candidate = None
            for u in sorted(row, key=idx.__getitem__):
                coeff = row[u]
                room_up = self.upper.get(u) is None or self.value[u] < self.upper[u]
                room_down = self.lower.get(u) is None or self.lower[u] < self.value[u]
                if increase and ((coeff > 0 and room_up) or (coeff < 0 and room_down)):
                    candidate = u
                    break
                if not increase and ((coeff < 0 and room_up) or (coeff > 0 and room_down)):
                    candidate = u
                    break
            if candidate is None:
                return False
            self._pivot_and_update(broken, candidate, target)


def _bound_for(rel: str, const: Fraction) -> tuple[Optional[DeltaRational], Optional[DeltaRational]]:
    if rel == "<=":
        return None, DeltaRational(const)
    if rel == "<":
        return None, DeltaRational(const, Fraction(-1))
    if rel == ">=":
        return DeltaRational(const), None
    if rel == ">":
        return DeltaRational(const, Fraction(1)), None
    if rel == "==":
        return DeltaRational(const), DeltaRational(const)
    raise ValueError(rel)


def _feasible(constraints: list[tuple[LinearAtom, str]]) -> Optional[dict[str, DeltaRational]]:
    """Feasibility of atoms under effective relations (no ``!=`` here)."""
    simplex = _Simplex()
    for a, _ in constraints:
        for v in a.variables():
            simplex.add_var(v)
    slack_of: dict[tuple, str] = {}
    for a, rel in constraints:
        lo, hi = _bound_for(rel, a.const)
        if len(a.coeffs) == 1:
            var = a.coeffs[0][0]  # leading coefficient is 1 by normalization
            if not simplex.set_bound(var, lo, hi):
                return None
        else:
            key = a.coeffs
            slack = slack_of.get(key)
            if slack is None:
                slack = f"$s{len(slack_of)}"
                slack_of[key] = slack
                simplex.add_row(slack, {v: c for v, c in a.coeffs})
            if not simplex.set_bound(slack, lo, hi):
                return None
    if not simplex.solve():
        return None
    return {v: simplex.value[v] for v in simplex.order if not v.startswith("$s")}


def _theory_model(literals: list[tuple[LinearAtom, bool]]) -> Optional[dict[str, DeltaRational]]:
    """Solve a conjunction of signed atoms, splitting ``!=`` into ``<`` or ``>``."""
    plain: list[tuple[LinearAtom, str]] = []
    splits: list[LinearAtom] = []
    for a, value in literals:
        eff = a if value else a.negated()
        if eff.rel == "!=":
            splits.append(eff)
        else:
            plain.append((eff, eff.rel))
    if not splits:
        return _feasible(plain)
    head, rest = splits[0], splits[1:]
    for rel in ("<", ">"):
        attempt = plain + [(head, rel)] + [(s, "!=") for s in rest]
        result = _theory_model_resolved(attempt)
        if result is not None:
            return result
    return None


def _theory_model_resolved(items: list[tuple[LinearAtom, str]]) -> Optional[dict[str, DeltaRational]]:
    pending = [(a, rel) for a, rel in items if rel == "!="]
    resolved = [(a, rel) for a, rel in items if rel != "!="]
    if not pending:
        return _feasible(resolved)
    head = pending[0][0]
    for rel in ("<", ">"):
        result = _theory_model_resolved(resolved + [(head, rel)] + pending[1:])
        if result is not None:
            return result
    return None


def _concretize(values: dict[str, DeltaRational], literals: list[tuple[LinearAtom, bool]]) -> dict[str, Fraction]:
    """Pick a concrete rational delta small enough to keep every constraint true."""
    bounds: list[Fraction] = []
    for a, value in literals:
        eff = a if value else a.negated()
        lhs_std = Fraction(0)
        lhs_inf = Fraction(0)
        for var, coeff in eff.coeffs:
            d = values.get(var, ZERO)
            lhs_std += coeff * d.standard
            lhs_inf += coeff * d.infinitesimal
        gap = eff.const - lhs_std
        if eff.rel in ("<", "<=") and lhs_inf > 0 and gap > 0:
            bounds.append(gap / lhs_inf)
        elif eff.rel in (">", ">=") and lhs_inf < 0 and gap < 0:
            bounds.append(gap / lhs_inf)
    delta = min(bounds + [Fraction(1)]) / 2
    for _ in range(64):
        concrete = {v: d.concretize(delta) for v, d in values.items()}
        if all((a.holds(concrete) if value else not a.holds(concrete)) for a, value in literals):
            return concrete
        delta /= 2  # only exact-hit disequalities can land here
    raise AssertionError("delta concretization failed to converge")


# ---------------------------------------------------------------------------
# Boolean search


def _assign_atom(f: Formula, key: tuple, value: bool) -> Formula:
    """Partially evaluate a canonical formula under atom := value."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Atom):
        if f.atom.key() == key:
            return TRUE if value else FALSE
        return f
    if isinstance(f, And):
        kids = []
        for c in f.children:
            g = _assign_atom(c, key, value)
            if isinstance(g, FalseF):
                return FALSE
            if not isinstance(g, TrueF):
                kids.append(g)
        if not kids:
            return TRUE
        return kids[0] if len(kids) == 1 else And(tuple(kids))
    if isinstance(f, Or):
        kids = []
        for c in f.children:
            g = _assign_atom(c, key, value)
            if isinstance(g, TrueF):
                return TRUE
            if not isinstance(g, FalseF):
                kids.append(g)
        if not kids:
            return FALSE
        return kids[0] if len(kids) == 1 else Or(tuple(kids))
    raise TypeError(f"unexpected node in canonical formula: {f!r}")


def _first_atom(f: Formula) -> LinearAtom:
    if isinstance(f, Atom):
        return f.atom
    if isinstance(f, (And, Or)):
        return _first_atom(f.children[0])
    raise TypeError(f"unexpected node in canonical formula: {f!r}")


def _search(f: Formula, trail: list[tuple[LinearAtom, bool]], depth: int) -> Optional[dict[str, DeltaRational]]:
    if isinstance(f, FalseF):
        return None
    if isinstance(f, TrueF):
        return _theory_model(trail)
    # periodic theory pruning keeps arithmetic-inconsistent trails from
    # blowing up the Boolean search on formulas with many atoms
    if depth and depth % 4 == 0 and _theory_model(trail) is None:
        return None
    branch = _first_atom(f)
    for value in (True, False):
        trail.append((branch, value))
        result = _search(_assign_atom(f, branch.key(), value), trail, depth + 1)
        if result is not None:
            return result
        trail.pop()
    return None


# query cache: everything here is deterministic and formulas are immutable,
# so identical queries (frequent across extraction/composition) are replayed
_cache: dict[tuple, SatResult] = {}
_CACHE_LIMIT = 200_000


def check_sat(f: Formula, vars: VarSet) -> SatResult:
    """Decide satisfiability of ``f``; on Sat, return a concrete rational model.

    The model covers every variable in ``vars`` (and any extra variables the
    formula mentions); unconstrained variables are assigned 0. Deterministic.
    """
    if os.environ.get("SBM_SOLVER_DEBUG") == "1":
        print(to_smtlib2(f, vars), file=sys.stderr)
    g = canonicalize(f)
    key = (formula_key(g), vars.names)
    hit = _cache.get(key)
    if hit is not None:
        return hit
    trail: list[tuple[LinearAtom, bool]] = []
    solution = _search(g, trail, 0)
    if solution is None:
        result = UNSAT
    else:
        concrete = _concretize(solution, trail)
        names = set(vars.names) | variables_of(g)
        model = Assignment({v: concrete.get(v, Fraction(0)) for v in sorted(names)})
        assert evaluate(g, model), "solver produced a non-model"
        result = SatResult(model)
    if len(_cache) < _CACHE_LIMIT:
        _cache[key] = result
    return result


def entails(f: Formula, g: Formula, vars: Optional[VarSet] = None) -> bool:
    """True iff every assignment satisfying ``f`` satisfies ``g``."""
    if vars is None:
        names = variables_of(f) | variables_of(g)
        vars = VarSet(tuple(names) if names else ("_",))
    return not check_sat(conj([f, negate(g)]), vars).is_sat


def equivalent(f: Formula, g: Formula, vars: Optional[VarSet] = None) -> bool:
    """Mutual entailment, via two unsatisfiability queries."""
    return entails(f, g, vars) and entails(g, f, vars)


def to_smtlib2(f: Formula, vars: VarSet) -> str:
    """Render the query in SMT-LIB2 QF_LRA syntax (debug interchange)."""
    names = sorted(set(vars.names) | variables_of(f))
    lines = ["(set-logic QF_LRA)"]
    lines += [f"(declare-const {v} Real)" for v in names]
    lines.append(f"(assert {to_sexpr(f)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines)
