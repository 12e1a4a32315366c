"""Extracting transition graphs from scenario scripts.

The drone model's Navigate object requests a climb, then right turns, with
branching on how sharp the first turn came out. Extraction enumerates every
sign cell over the script's predicates, asks the solver for a concrete
assignment per satisfiable cell, and triggers it through the interpreter;
simplification then merges the cell-guarded edges back into the handful of
readable guards. The composite of all objects is the product graph the
checker and the repair engine work on.
"""

from pathlib import Path

from sbmod import (
    ExtractStats,
    compose_all,
    extract_graph,
    parse_model,
    simplify_graph,
    to_dot,
    to_infix,
)

MODEL_PATH = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "drone.sbm"


def describe(name, graph):
    print(f"{name}: {len(graph.states)} states")
    for e in graph.edges:
        print(f"  {e.src} --[{to_infix(e.guard)}]--> {e.dst}")


if __name__ == "__main__":
    model = parse_model(MODEL_PATH.read_text())

    stats = ExtractStats()
    nav_raw = extract_graph(model.get("Navigate"), model.vars, stats=stats)
    print(f"Navigate collects {len(stats.predicates)} predicates, so extraction")
    print(f"examines {2 ** len(stats.predicates)} sign cells at each of its states.")
    print(f"Raw extraction carries {len(nav_raw.edges)} cell-guarded edges;")
    nav = simplify_graph(nav_raw, model.vars)
    print(f"after merging, {len(nav.edges)} remain:\n")
    describe("Navigate", nav)

    print()
    composite = compose_all(model)
    describe("composite (all objects + property)", composite)
    print(f"bad states: {sorted(composite.bad)}")

    out = Path(__file__).resolve().parent / "drone_composite.dot"
    out.write_text(to_dot(composite, "drone"))
    print(f"\nGraphviz rendering written to {out.name} (dot -Tpng {out.name})")
