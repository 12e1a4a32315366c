from __future__ import annotations

import random
from fractions import Fraction

from sbmod.formulas import (
    VarSet,
    conj,
    disj,
    evaluate,
    negate,
    var_atom,
)
from sbmod.solver import DeltaRational, check_sat, entails, equivalent, to_smtlib2

from oracles import (
    fourier_motzkin_satisfiable,
    grid_satisfiable,
    rand_atom_pool,
    rand_conjunction,
    rand_formula,
)

VH = VarSet(("v", "h"))


def test_sat_with_model():
    f = conj([var_atom("v", ">=", 2), var_atom("h", "==", 0)])
    r = check_sat(f, VH)
    assert r.is_sat
    assert evaluate(f, r.model)


def test_unsat_contradiction():
    f = conj([var_atom("x", "<", 5), var_atom("x", ">=", 5)])
    assert not check_sat(f, VarSet(("x",))).is_sat


def test_interval_intersection():
    # independent oracle: intersect per-variable bounds by hand
    # h in [18, 20) and v in (-5, 5) with v == 0 -> v must be 0, h in [18, 20)
    f = conj([
        var_atom("h", ">=", 18), var_atom("h", "<", 20),
        var_atom("v", ">", -5), var_atom("v", "<", 5), var_atom("v", "==", 0),
    ])
    r = check_sat(f, VH)
    assert r.is_sat
    assert r.model["v"] == 0
    assert Fraction(18) <= r.model["h"] < Fraction(20)


def test_strict_inequalities_satisfied_strictly():
    f = conj([var_atom("x", ">", 0), var_atom("x", "<", Fraction(1, 1000))])
    r = check_sat(f, VarSet(("x",)))
    assert r.is_sat
    assert 0 < r.model["x"] < Fraction(1, 1000)


def test_disequality_split():
    f = conj([var_atom("x", "!=", 0), var_atom("x", ">=", 0), var_atom("x", "<=", 1)])
    r = check_sat(f, VarSet(("x",)))
    assert r.is_sat
    assert 0 < r.model["x"] <= 1


def test_unconstrained_variables_default_to_zero():
    r = check_sat(var_atom("v", ">=", 2), VH)
    assert r.model["h"] == 0


def test_determinism():
    f = disj([conj([var_atom("v", ">=", 2), var_atom("h", "<", 0)]), var_atom("h", ">", 7)])
    models = [check_sat(f, VH).model for _ in range(3)]
    assert models[0] == models[1] == models[2]


def test_entails_interval_containment():
    assert entails(var_atom("h", ">=", 18), var_atom("h", ">=", 10))
    assert not entails(var_atom("h", ">=", 10), var_atom("h", ">=", 18))


def test_entails_needs_block_context():
    # without the drone's blocks v can reach 5; with them it cannot
    f = conj([var_atom("v", ">=", 4), var_atom("h", "==", 0)])
    goal = negate(var_atom("v", ">=", 5))
    blocks = disj([
        var_atom("h", "<=", -20), var_atom("h", ">=", 20),
        var_atom("v", "<=", -5), var_atom("v", ">=", 5),
    ])
    assert not entails(f, goal, VH)
    assert entails(conj([f, negate(blocks)]), goal, VH)
    # cross-check on the integer grid
    assert grid_satisfiable(conj([f, negate(goal)]), ("v", "h"))
    assert not grid_satisfiable(conj([f, negate(blocks), negate(goal)]), ("v", "h"))


def test_equivalent_absorption_and_excluded_middle():
    assert equivalent(disj([var_atom("h", ">=", 10), var_atom("h", ">=", 18)]), var_atom("h", ">=", 10))
    from sbmod.formulas import TRUE

    assert equivalent(TRUE, disj([var_atom("h", "<", 0), var_atom("h", ">=", 0)]))
    lhs = conj([var_atom("v", ">=", 2), var_atom("h", "==", 0)])
    rhs = conj([var_atom("v", ">=", 2), var_atom("h", "<=", 0), var_atom("h", ">=", 0)])
    assert equivalent(lhs, rhs)
    # grid cross-check of the last equivalence
    assert not grid_satisfiable(conj([lhs, negate(rhs)]), ("v", "h"))
    assert not grid_satisfiable(conj([rhs, negate(lhs)]), ("v", "h"))


def test_model_soundness_randomized():
    rng = random.Random(11)
    vars = VarSet(("w", "x", "y", "z"))
    for _ in range(1500):
        f = rand_formula(rng, rng.randint(1, 6), rand_atom_pool(rng))
        r = check_sat(f, vars)
        if r.is_sat:
            assert evaluate(f, r.model)


def test_conjunction_agrees_with_fourier_motzkin():
    rng = random.Random(5)
    for _ in range(400):
        atoms = rand_conjunction(rng)
        ours = check_sat(conj([_wrap(a) for a in atoms]), VarSet(("w", "x", "y", "z"))).is_sat
        oracle = fourier_motzkin_satisfiable(atoms)
        assert ours == oracle


def _wrap(a):
    from sbmod.formulas import Atom

    return Atom(a)


def test_delta_rational_ordering():
    a = DeltaRational(Fraction(1), Fraction(0))
    b = DeltaRational(Fraction(1), Fraction(1))
    c = DeltaRational(Fraction(2), Fraction(-5))
    assert a < b < c


def test_multivar_constraints_via_simplex():
    # x + y >= 10, x - y >= 0, x <= 6 forces x in [5, 6], y in [10 - x, x]
    f = conj([
        _wrap_atoms({"x": 1, "y": 1}, ">=", 10),
        _wrap_atoms({"x": 1, "y": -1}, ">=", 0),
        var_atom("x", "<=", 6),
    ])
    r = check_sat(f, VarSet(("x", "y")))
    assert r.is_sat
    assert evaluate(f, r.model)
    unsat = conj([
        _wrap_atoms({"x": 1, "y": 1}, ">=", 10),
        var_atom("x", "<=", 2),
        var_atom("y", "<=", 2),
    ])
    assert not check_sat(unsat, VarSet(("x", "y"))).is_sat


def _wrap_atoms(coeffs, rel, const):
    from sbmod.formulas import atom

    return atom(coeffs, rel, const)


def test_smtlib2_dump_shape():
    f = conj([var_atom("v", ">=", 2), var_atom("h", "==", 0)])
    text = to_smtlib2(f, VH)
    assert "(set-logic QF_LRA)" in text
    assert "(declare-const h Real)" in text
    assert "(assert (and (= h 0) (>= v 2)))" in text
    assert text.strip().endswith("(get-model)")
