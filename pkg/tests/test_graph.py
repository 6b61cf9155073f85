import random
from datetime import datetime
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventgraph.errors import (
    DuplicateNode,
    EndpointKindViolation,
    FrozenGraph,
    MissingRequiredProperty,
    TypeMismatch,
    UnknownNode,
)
from eventgraph.graph import ENDPOINTS, EdgeKind, EventGraph, NodeKind

T0 = datetime(2013, 10, 29, 6, 0, 0)


def event(graph, activity="HA", ts=T0):
    return graph.add_node(NodeKind.EVENT, {"activity": activity, "timestamp": ts})


def entity(graph, entity_type="Patient", entity_id="Patient_4900"):
    return graph.add_node(NodeKind.ENTITY, {"entity_type": entity_type, "entity_id": entity_id})


def test_first_node_gets_id_zero():
    assert event(EventGraph()) == 0


def test_event_requires_timestamp():
    with pytest.raises(MissingRequiredProperty) as err:
        EventGraph().add_node(NodeKind.EVENT, {"activity": "HA"})
    assert err.value.name == "timestamp"


@pytest.mark.parametrize("value", [1.5, True, [1], datetime(2013, 1, 1, 0, 0, 0, 5)])
def test_unsupported_scalars_rejected(value):
    with pytest.raises(TypeMismatch):
        EventGraph().add_node(NodeKind.LOG, {"x": value})


def test_wrong_type_for_required_property():
    with pytest.raises(TypeMismatch):
        EventGraph().add_node(NodeKind.EVENT, {"activity": "HA", "timestamp": "2013-10-29"})


def test_supported_scalars_accepted():
    g = EventGraph()
    g.add_node(NodeKind.LOG, {"s": "x", "i": 3, "d": Decimal("1.25"), "t": T0, "n": None})
    assert g.node(0)["d"] == Decimal("1.25")


def test_nodes_by_kind_in_insertion_order():
    g = EventGraph()
    ids = [event(g, a) for a in "abc"]
    assert g.nodes_by_kind(NodeKind.EVENT) == ids == [0, 1, 2]


def test_ids_are_previous_max_plus_one():
    g = EventGraph()
    entity(g)
    g.add_node(NodeKind.LOG)
    assert event(g) == 2


def test_legal_corr_edge():
    g = EventGraph()
    e, p = event(g), entity(g)
    assert g.add_edge(EdgeKind.CORR, e, p) == 0


def test_df_to_entity_is_endpoint_violation():
    g = EventGraph()
    e, p = event(g), entity(g)
    with pytest.raises(EndpointKindViolation):
        g.add_edge(EdgeKind.DF, e, p, {"entity_type": "Patient", "entity_id": "x"})


def test_unknown_endpoint():
    g = EventGraph()
    e = event(g)
    with pytest.raises(UnknownNode):
        g.add_edge(EdgeKind.CORR, e, 7)


def test_df_requires_labels():
    g = EventGraph()
    a, b = event(g), event(g)
    with pytest.raises(MissingRequiredProperty):
        g.add_edge(EdgeKind.DF, a, b, {"entity_type": "Patient"})


def test_df_c_count_must_be_positive():
    g = EventGraph()
    a = g.add_node(NodeKind.EVENT_CLASS, {"activity": "a"})
    with pytest.raises(TypeMismatch):
        g.add_edge(EdgeKind.DF_C, a, a, {"entity_type": "T", "count": 0})


def test_has_edge_updates_incoming_adjacency():
    g = EventGraph()
    e = event(g)
    log = g.add_node(NodeKind.LOG)
    g.add_edge(EdgeKind.HAS, log, e)
    assert len(g.in_edges(e, EdgeKind.HAS)) == 1
    # oracle: rescan the flat edge list
    assert [x.id for x in g.edges if x.kind is EdgeKind.HAS and x.dst == e] == g.in_edges(e, EdgeKind.HAS)


def test_fresh_node_has_no_neighbors():
    g = EventGraph()
    e = event(g)
    for kind in EdgeKind:
        assert g.neighbors(e, kind, "out") == []
        assert g.neighbors(e, kind, "in") == []


def test_neighbors_keep_insertion_order():
    g = EventGraph()
    e1, e2 = event(g, "a"), event(g, "b")
    p = entity(g)
    g.add_edge(EdgeKind.CORR, e1, p)
    g.add_edge(EdgeKind.CORR, e2, p)
    assert g.neighbors(p, EdgeKind.CORR, "in") == [e1, e2]


def test_neighbors_of_unknown_node():
    with pytest.raises(UnknownNode):
        EventGraph().neighbors(0, EdgeKind.CORR)


def test_duplicate_entity_and_class_rejected():
    g = EventGraph()
    entity(g)
    with pytest.raises(DuplicateNode):
        entity(g)
    g.add_node(NodeKind.EVENT_CLASS, {"activity": "a"})
    with pytest.raises(DuplicateNode):
        g.add_node(NodeKind.EVENT_CLASS, {"activity": "a"})
    # same label under another classifier is a different class
    g.add_node(NodeKind.EVENT_CLASS, {"activity": "a", "classifier": "EntityType"})


def test_frozen_graph_rejects_insertions():
    g = EventGraph()
    event(g)
    g.freeze()
    with pytest.raises(FrozenGraph):
        event(g)


def _random_graph(seed, n_edges=50):
    rng = random.Random(seed)
    g = EventGraph()
    by_kind = {k: [] for k in NodeKind}
    for i in range(12):
        by_kind[NodeKind.EVENT].append(event(g, f"a{i % 3}"))
    for i in range(4):
        by_kind[NodeKind.ENTITY].append(entity(g, "T", str(i)))
    by_kind[NodeKind.LOG].append(g.add_node(NodeKind.LOG))
    for i in range(3):
        by_kind[NodeKind.EVENT_CLASS].append(g.add_node(NodeKind.EVENT_CLASS, {"activity": f"a{i}"}))
    props = {
        EdgeKind.DF: {"entity_type": "T", "entity_id": "0"},
        EdgeKind.DF_C: {"entity_type": "T", "count": 1},
    }
    kinds = list(EdgeKind)
    for _ in range(n_edges):
        kind = rng.choice(kinds)
        src_kind, dst_kind = ENDPOINTS[kind]
        g.add_edge(kind, rng.choice(by_kind[src_kind]), rng.choice(by_kind[dst_kind]), props.get(kind))
    return g


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_neighbors_match_brute_force_filter(seed):
    g = _random_graph(seed)
    for node in g.nodes:
        for kind in EdgeKind:
            out = [e.dst for e in g.edges if e.kind is kind and e.src == node.id]
            inc = [e.src for e in g.edges if e.kind is kind and e.dst == node.id]
            assert g.neighbors(node.id, kind, "out") == out
            assert g.neighbors(node.id, kind, "in") == inc
    assert g.check_consistency() == []


def test_edge_kind_table_is_total():
    g = _random_graph(3, 200)
    for e in g.edges:
        assert (g.node(e.src).kind, g.node(e.dst).kind) == ENDPOINTS[e.kind]


def test_identical_insertions_give_identical_graphs():
    assert _random_graph(11) == _random_graph(11)
    assert _random_graph(11) != _random_graph(12)
