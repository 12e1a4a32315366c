from __future__ import annotations

import json

import pytest

from sbmod.compose import compose_all
from sbmod.formulas import FALSE, TRUE, VarSet, disj, var_atom
from sbmod.graphs import (
    DiscreteObject,
    GraphError,
    Model,
    NamedObject,
    ObjectGraph,
    encode_discrete,
    to_dot,
    to_json_dict,
)
from sbmod.graphs import EncodingError
from sbmod.runsets import CellRuns, CellSpace

from conftest import WATER_TAP_EVENTS, water_adder, water_tap_objects
from oracles import discrete_runs


def idle_graph() -> ObjectGraph:
    return ObjectGraph.make(states=["i"], initial="i")


def test_labels_default_to_false():
    g = idle_graph()
    assert g.request["i"] == FALSE
    assert g.block["i"] == FALSE
    assert g.waitfor["i"] == FALSE


def test_unknown_edge_state_rejected():
    with pytest.raises(GraphError):
        ObjectGraph.make(states=["a"], initial="a", edges=[("a", TRUE, "ghost")])
    with pytest.raises(GraphError):
        ObjectGraph.make(states=["a"], initial="b")
    with pytest.raises(GraphError):
        ObjectGraph.make(states=["a"], initial="a", bad=["ghost"])


def test_stay_guard_complements_wake():
    g = ObjectGraph.make(
        states=["a", "b"], initial="a",
        request={"a": var_atom("x", "<", 5)},
        edges=[("a", var_atom("x", "<", 5), "b")],
    )
    assert g.stay_guard("a") == var_atom("x", ">=", 5)
    assert g.stay_guard("b") == TRUE


def test_encode_discrete_single_object():
    hot = encode_discrete(WATER_TAP_EVENTS, water_adder("AddHot"))
    # four states; the second requests exactly x == 1
    assert len(hot.states) == 4
    assert hot.request["w1"] == var_atom("x", "==", 1)
    assert hot.waitfor["w0"] == var_atom("x", "==", 0)
    guards = sorted(str(e.guard) for e in hot.out_edges("w1"))
    assert guards == ["x == 1"]


def test_encode_discrete_empty_request_is_false():
    obj = DiscreteObject.make(states=["a"], initial="a")
    g = encode_discrete(WATER_TAP_EVENTS, obj)
    assert g.request["a"] == FALSE


def test_encode_discrete_multi_event_set_becomes_disjunction():
    obj = DiscreteObject.make(
        states=["a"], initial="a", request={"a": ["AddHot", "AddCold"]})
    g = encode_discrete(WATER_TAP_EVENTS, obj)
    assert g.request["a"] == disj([var_atom("x", "==", 1), var_atom("x", "==", 2)])


def test_encode_discrete_unknown_event():
    obj = DiscreteObject.make(states=["a"], initial="a", request={"a": ["Explode"]})
    with pytest.raises(EncodingError):
        encode_discrete(WATER_TAP_EVENTS, obj)


def _encoded_model(with_stability: bool) -> Model:
    objs = water_tap_objects(with_stability)
    return Model(
        VarSet(("x",)),
        tuple(NamedObject(n, encode_discrete(WATER_TAP_EVENTS, d)) for n, d in objs),
    )


@pytest.mark.parametrize("with_stability", [True, False])
def test_encoded_runs_match_discrete_semantics(with_stability):
    # brute-force the discrete executions, then compare against the encoded
    # composite's runs decoded back to event names (depth 8)
    depth = 8
    discrete = [d for _, d in water_tap_objects(with_stability)]
    expected, _ = discrete_runs(discrete, depth)

    model = _encoded_model(with_stability)
    composite = compose_all(model)
    space = CellSpace.for_graphs([composite], model.vars)
    runs = CellRuns.build(composite, space).runs(depth)
    names = {0: "WaterLow", 1: "AddHot", 2: "AddCold"}
    decoded = set()
    for word in runs:
        assert all(value.denominator == 1 and int(value) in names for (value,) in word)
        decoded.add(tuple(names[int(value)] for (value,) in word))
    assert decoded == expected


def test_json_schema_shape():
    g = ObjectGraph.make(
        states=["a", "b"], initial="a",
        request={"a": var_atom("v", ">=", 2)},
        edges=[("a", var_atom("v", ">=", 2), "b")],
        bad=["b"],
    )
    data = to_json_dict(g)
    assert set(data) == {"states", "initial", "labels", "edges", "bad"}
    assert data["states"] == ["a", "b"]
    assert data["initial"] == "a"
    assert data["labels"]["a"]["request"] == "(>= v 2)"
    assert data["bad"] == ["b"]
    # the non-wake self-loop is materialized on export
    assert {"from": "a", "guard": "(< v 2)", "to": "a"} in data["edges"]
    json.dumps(data)  # must be serializable as-is


def test_dot_contains_labels_and_guards():
    g = ObjectGraph.make(
        states=["a"], initial="a", request={"a": var_atom("v", ">=", 2)},
        edges=[("a", var_atom("v", ">=", 2), "a")],
    )
    dot = to_dot(g, "demo")
    assert dot.startswith('digraph "demo"')
    assert "R: v >= 2" in dot
    assert '"a" -> "a" [label="v >= 2"];' in dot


def test_model_rejects_duplicate_names():
    g = idle_graph()
    with pytest.raises(GraphError):
        Model(VarSet(("x",)), (NamedObject("A", g), NamedObject("A", g)))
