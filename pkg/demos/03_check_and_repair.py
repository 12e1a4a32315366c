"""Model checking a safety property, then repairing the violation.

The drone model allows a sharp climb followed immediately by a sharp right
turn; the property object marks that sequence bad. Checking finds the
shortest violating run with concrete assignments. Repair grows the set of
states doomed to violate, synthesizes a patch object that shadows the
execution and blocks exactly the transitions into that set, and emits it
back as scenario-script text; adding the patch to the model removes the
violating runs and nothing else.
"""

from pathlib import Path

from sbmod import parse_model, to_infix
from sbmod.dsl import insert_object
from sbmod.verify import Counterexample, Safe, check_safety, repair, verify_patch

MODEL_PATH = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "drone.sbm"
PROPERTY = "NoConsecutiveSharpTurns"

if __name__ == "__main__":
    model = parse_model(MODEL_PATH.read_text())
    base = model.without(PROPERTY)
    prop = model.get(PROPERTY)

    verdict = check_safety(base, prop)
    assert isinstance(verdict, Counterexample)
    print("The property is violated; shortest run to a bad state:")
    for i, step in enumerate(verdict.trace.steps, start=1):
        print(f"  step {i}: trigger {step.assignment}")
    print()

    patch, attractor, composite = repair(base, prop)
    print(f"States doomed to violate: {sorted(attractor)}")
    for state, guard in patch.cut_edges():
        print(f"Patch blocks [{to_infix(guard)}] while the model is at {state}")
    print()
    print("Synthesized patch object:")
    print(patch.to_script_text())
    print()

    report = verify_patch(base, patch, prop)
    print(f"Soundness: {report.summary()}")

    patched_text = insert_object(MODEL_PATH.read_text(), patch.to_script_text())
    patched = parse_model(patched_text)
    assert isinstance(check_safety(patched.without(PROPERTY), patched.get(PROPERTY)), Safe)
    print("Re-parsed and composed, the patched model satisfies the property.")

    out = Path(__file__).resolve().parent / "drone_patched.sbm"
    out.write_text(patched_text)
    print(f"Patched model written to {out.name}")
