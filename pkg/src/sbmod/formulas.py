"""Linear-arithmetic formulas over real variables, with exact semantics.

Everything downstream (solving, extraction, composition, repair) hinges on two
facts about this module: arithmetic is exact rational (``fractions.Fraction``,
never floats, since guard satisfaction is boundary-sensitive), and every
formula has a canonical form so that syntactically different but structurally
equal formulas compare equal.

Atoms read ``sum(c_i * x_i) REL constant`` with REL one of
``< <= == >= > !=``. Atom construction normalizes coefficients so the first
nonzero coefficient (in variable order) is 1, flipping the relation when
scaling by a negative. Formula canonicalization pushes negation into atoms,
flattens and sorts connectives, and is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Rational = Union[int, Fraction]

RELATIONS = ("<", "<=", "==", ">=", ">", "!=")

# relation under logical negation: not (x < c)  <=>  x >= c
_NEGATE_REL = {"<": ">=", "<=": ">", "==": "!=", ">=": "<", ">": "<=", "!=": "=="}
# relation mirrored when both sides are scaled by a negative factor
_FLIP_REL = {"<": ">", "<=": ">=", "==": "==", ">=": "<=", ">": "<", "!=": "!="}


class DomainMismatchError(KeyError):
    """A formula mentions a variable the assignment does not cover."""


@dataclass(frozen=True)
class VarSet:
    """Ordered set of real-valued variable names (lexicographic, no dupes)."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.names:
            raise ValueError("variable set must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate variable names in {self.names}")
        object.__setattr__(self, "names", tuple(sorted(self.names)))

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def __iter__(self):
        return iter(self.names)


@dataclass(frozen=True)
class LinearAtom:
    """A single linear constraint ``sum(c_i * x_i) REL const``.

    ``coeffs`` is a sorted tuple of (variable, coefficient) pairs with no zero
    coefficients; use :meth:`make` rather than the raw constructor so the
    leading-coefficient normalization holds.
    """

    coeffs: tuple[tuple[str, Fraction], ...]
    rel: str
    const: Fraction

    @staticmethod
    def make(coeffs: Mapping[str, Rational], rel: str, const: Rational) -> "LinearAtom":
        if rel not in RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        items = sorted((v, Fraction(c)) for v, c in coeffs.items() if Fraction(c) != 0)
        if not items:
            raise ValueError("linear atom needs at least one nonzero coefficient")
        lead = items[0][1]
        if lead != 1:
            items = [(v, c / lead) for v, c in items]
            const = Fraction(const) / lead
            if lead < 0:
                rel = _FLIP_REL[rel]
        return LinearAtom(tuple(items), rel, Fraction(const))

    def negated(self) -> "LinearAtom":
        return LinearAtom(self.coeffs, _NEGATE_REL[self.rel], self.const)

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def lhs_value(self, values: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for var, coeff in self.coeffs:
            try:
                total += coeff * values[var]
            except KeyError:
                raise DomainMismatchError(f"assignment missing variable {var!r}")
        return total

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        lhs = self.lhs_value(values)
        if self.rel == "<":
            return lhs < self.const
        if self.rel == "<=":
            return lhs <= self.const
        if self.rel == "==":
            return lhs == self.const
        if self.rel == ">=":
            return lhs >= self.const
        if self.rel == ">":
            return lhs > self.const
        return lhs != self.const

    def key(self) -> tuple:
        return (self.coeffs, RELATIONS.index(self.rel), self.const)

    def __str__(self) -> str:
        parts = []
        for i, (var, coeff) in enumerate(self.coeffs):
            if coeff == 1:
                term = var
            elif coeff == -1:
                term = f"-{var}"
            else:
                term = f"{coeff}*{var}"
            if i and not term.startswith("-"):
                term = "+ " + term
            elif i:
                term = "- " + term.lstrip("-")
            parts.append(term)
        return f"{' '.join(parts)} {self.rel} {self.const}"


class Formula:
    """Base class; concrete nodes are TrueF, FalseF, Atom, Not, And, Or, Implies."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FalseF(Formula):
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class Atom(Formula):
    atom: LinearAtom

    def __str__(self) -> str:
        return str(self.atom)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def __str__(self) -> str:
        return f"!({self.child})"


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    def __str__(self) -> str:
        return "(" + " && ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def __str__(self) -> str:
        return "(" + " || ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} -> {self.right})"


TRUE = TrueF()
FALSE = FalseF()


def atom(coeffs: Mapping[str, Rational], rel: str, const: Rational) -> Atom:
    return Atom(LinearAtom.make(coeffs, rel, const))


def var_atom(name: str, rel: str, const: Rational) -> Atom:
    """Shorthand for single-variable atoms like ``v >= 2``."""
    return atom({name: 1}, rel, const)


def conj(parts: Iterable[Formula]) -> Formula:
    return canonicalize(And(tuple(parts)))


def disj(parts: Iterable[Formula]) -> Formula:
    return canonicalize(Or(tuple(parts)))


def negate(f: Formula) -> Formula:
    return canonicalize(Not(f))


@dataclass(frozen=True)
class Assignment:
    """Total map from variable names to exact rationals."""

    values: Mapping[str, Fraction]

    @staticmethod
    def make(values: Mapping[str, Rational]) -> "Assignment":
        return Assignment({v: Fraction(c) for v, c in values.items()})

    def __getitem__(self, name: str) -> Fraction:
        return self.values[name]

    def restricted_to(self, vars: VarSet) -> "Assignment":
        return Assignment({v: self.values[v] for v in vars.names})

    def __str__(self) -> str:
        inner = ", ".join(f"{v}={self.values[v]}" for v in sorted(self.values))
        return "{" + inner + "}"


def evaluate(f: Formula, a: Assignment) -> bool:
    """Exact truth value of ``f`` under total assignment ``a``.

    Raises DomainMismatchError if ``f`` mentions a variable outside ``a``.
    """
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Atom):
        return f.atom.holds(a.values)
    if isinstance(f, Not):
        return not evaluate(f.child, a)
    if isinstance(f, And):
        return all(evaluate(c, a) for c in f.children)
    if isinstance(f, Or):
        return any(evaluate(c, a) for c in f.children)
    if isinstance(f, Implies):
        return (not evaluate(f.left, a)) or evaluate(f.right, a)
    raise TypeError(f"not a formula: {f!r}")


def _formula_key(f: Formula) -> tuple:
    # Total deterministic order over canonical formulas, used for child sorting.
    if isinstance(f, FalseF):
        return (0,)
    if isinstance(f, TrueF):
        return (1,)
    if isinstance(f, Atom):
        return (2, f.atom.key())
    if isinstance(f, And):
        return (3, tuple(_formula_key(c) for c in f.children))
    if isinstance(f, Or):
        return (4, tuple(_formula_key(c) for c in f.children))
    raise TypeError(f"non-canonical node in key computation: {f!r}")


def formula_key(f: Formula) -> tuple:
    """Sort key for canonical formulas (deterministic across runs)."""
    return _formula_key(f)


def _nnf(f: Formula, negated: bool) -> Formula:
    if isinstance(f, TrueF):
        return FALSE if negated else TRUE
    if isinstance(f, FalseF):
        return TRUE if negated else FALSE
    if isinstance(f, Atom):
        a = f.atom.negated() if negated else f.atom
        # re-run make() so legacy/unnormalized atoms come out canonical
        return Atom(LinearAtom.make(dict(a.coeffs), a.rel, a.const))
    if isinstance(f, Not):
        return _nnf(f.child, not negated)
    if isinstance(f, Implies):
        return _nnf(Or((Not(f.left), f.right)), negated)
    if isinstance(f, And):
        kids = tuple(_nnf(c, negated) for c in f.children)
        return Or(kids) if negated else And(kids)
    if isinstance(f, Or):
        kids = tuple(_nnf(c, negated) for c in f.children)
        return And(kids) if negated else Or(kids)
    raise TypeError(f"not a formula: {f!r}")


def _normalize(f: Formula) -> Formula:
    if isinstance(f, (TrueF, FalseF, Atom)):
        return f
    kids = [_normalize(c) for c in f.children]  # type: ignore[union-attr]
    flat: list[Formula] = []
    if isinstance(f, And):
        for k in kids:
            if isinstance(k, FalseF):
                return FALSE
            if isinstance(k, TrueF):
                continue
            flat.extend(k.children if isinstance(k, And) else (k,))
        unit: Formula = TRUE
    else:
        for k in kids:
            if isinstance(k, TrueF):
                return TRUE
            if isinstance(k, FalseF):
                continue
            flat.extend(k.children if isinstance(k, Or) else (k,))
        unit = FALSE
    seen: dict[tuple, Formula] = {}
    for k in flat:
        seen.setdefault(_formula_key(k), k)
    ordered = tuple(seen[key] for key in sorted(seen))
    if not ordered:
        return unit
    if len(ordered) == 1:
        return ordered[0]
    return And(ordered) if isinstance(f, And) else Or(ordered)


def canonicalize(f: Formula) -> Formula:
    """Semantically equal normal form: negations pushed into atoms, atoms
    normalized, connectives flattened, deduplicated, and sorted. Idempotent."""
    return _normalize(_nnf(f, False))


def atoms_of(f: Formula) -> list[LinearAtom]:
    """Distinct atoms of a formula, in canonical order."""
    found: dict[tuple, LinearAtom] = {}

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            found.setdefault(g.atom.key(), g.atom)
        elif isinstance(g, Not):
            walk(g.child)
        elif isinstance(g, (And, Or)):
            for c in g.children:
                walk(c)
        elif isinstance(g, Implies):
            walk(g.left)
            walk(g.right)

    walk(f)
    return [found[k] for k in sorted(found)]


def variables_of(f: Formula) -> set[str]:
    return {v for a in atoms_of(f) for v in a.variables()}


def substitute_signs(f: Formula, signs: Mapping[tuple, bool]) -> Formula:
    """Boolean-evaluate ``f`` given truth values for (a superset of) its atoms.

    Used by graph simplification, where a formula over a known atom set is
    constant on each sign cell. Atoms are looked up by canonical key.
    """
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Atom):
        return TRUE if signs[f.atom.key()] else FALSE
    if isinstance(f, Not):
        inner = substitute_signs(f.child, signs)
        return FALSE if isinstance(inner, TrueF) else TRUE
    if isinstance(f, And):
        return TRUE if all(isinstance(substitute_signs(c, signs), TrueF) for c in f.children) else FALSE
    if isinstance(f, Or):
        return TRUE if any(isinstance(substitute_signs(c, signs), TrueF) for c in f.children) else FALSE
    if isinstance(f, Implies):
        left = substitute_signs(f.left, signs)
        if isinstance(left, FalseF):
            return TRUE
        return substitute_signs(f.right, signs)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# printers


def _frac_str(x: Fraction) -> str:
    return str(x)


def to_infix(f: Formula) -> str:
    """Deterministic infix rendering, the same syntax the DSL parses."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return _atom_infix(f.atom)
    if isinstance(f, Not):
        return f"!({to_infix(f.child)})"
    if isinstance(f, And):
        return " && ".join(_wrap_infix(c, for_and=True) for c in f.children)
    if isinstance(f, Or):
        return " || ".join(_wrap_infix(c, for_and=False) for c in f.children)
    if isinstance(f, Implies):
        return f"!({to_infix(f.left)}) || ({to_infix(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def _wrap_infix(f: Formula, for_and: bool) -> str:
    text = to_infix(f)
    needs_parens = isinstance(f, Or) if for_and else isinstance(f, (And, Or))
    if isinstance(f, And) and not for_and:
        needs_parens = True
    return f"({text})" if needs_parens else text


def _atom_infix(a: LinearAtom) -> str:
    parts: list[str] = []
    for i, (var, coeff) in enumerate(a.coeffs):
        mag = abs(coeff)
        term = var if mag == 1 else f"{_frac_str(mag)}*{var}"
        if i == 0:
            parts.append(term if coeff > 0 else f"-{term}")
        else:
            parts.append(("+ " if coeff > 0 else "- ") + term)
    return f"{' '.join(parts)} {a.rel} {_frac_str(a.const)}"


_SEXPR_REL = {"<": "<", "<=": "<=", "==": "=", ">=": ">=", ">": ">", "!=": "distinct"}


def to_sexpr(f: Formula) -> str:
    """SMT-LIB-flavored s-expression string, e.g. ``(and (>= v 2) (= h 0))``."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return _atom_sexpr(f.atom)
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.child)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_sexpr(c) for c in f.children) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_sexpr(c) for c in f.children) + ")"
    if isinstance(f, Implies):
        return f"(=> {to_sexpr(f.left)} {to_sexpr(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def _num_sexpr(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator) if x >= 0 else f"(- {-x.numerator})"
    text = f"(/ {abs(x.numerator)} {x.denominator})"
    return text if x >= 0 else f"(- {text})"


def _atom_sexpr(a: LinearAtom) -> str:
    terms = []
    for var, coeff in a.coeffs:
        terms.append(var if coeff == 1 else f"(* {_num_sexpr(coeff)} {var})")
    lhs = terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"
    return f"({_SEXPR_REL[a.rel]} {lhs} {_num_sexpr(a.const)})"
