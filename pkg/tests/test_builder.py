from collections import Counter
from datetime import datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventgraph.builder import (
    BuildConfig,
    aggregate_classes,
    build_all,
    build_event_layer,
    correlate_entities,
    derive_df,
    derive_entity_relations,
    reify_relations,
)
from eventgraph.errors import BuildError, EmptyLog, UncorrelatedEvent
from eventgraph.graph import EdgeKind, NodeKind
from eventgraph.ingest import EntityRef, EventRecord
from eventgraph.invariants import check_graph
from eventgraph.synth import random_log

from oracles import entity_key, flatten_dfg, graph_class_counts

NO_REIFY = BuildConfig(reify_pairs=())


def rec(activity, ts, *refs, row=1, props=None):
    entities = tuple(EntityRef.parse(r) for r in refs)
    return EventRecord(activity, datetime(2020, 1, 1, 0, 0, ts), entities, props or {}, row)


def entity_set(graph):
    return {(graph.node(e)["entity_type"], graph.node(e)["entity_id"]) for e in graph.nodes_by_kind(NodeKind.ENTITY)}


def chain(graph, entity_type, entity_id):
    """Follow the DF chain of one entity from its unique start."""
    edges = {e.src: e.dst for e in graph.iter_edges(EdgeKind.DF)
             if (e["entity_type"], e["entity_id"]) == (entity_type, entity_id)}
    if not edges:
        return []
    (start,) = set(edges) - set(edges.values())
    out = [start]
    while out[-1] in edges:
        out.append(edges[out[-1]])
    return [graph.node(n)["activity"] for n in out]


# -- step 1 -------------------------------------------------------------


def test_event_layer_patient_4900(patient_records):
    graph = build_event_layer(patient_records)
    assert len(graph.nodes_by_kind(NodeKind.EVENT)) == 6
    assert len(graph.nodes_by_kind(NodeKind.LOG)) == 1
    assert len(graph.edges_by_kind(EdgeKind.HAS)) == 6


@pytest.mark.parametrize("n", [1, 7, 120])
def test_event_layer_counts(n):
    graph = build_event_layer(random_log(n, n))
    assert (graph.num_nodes(), graph.num_edges()) == (n + 1, n)


def test_empty_log():
    with pytest.raises(EmptyLog):
        build_all([])


def test_reserved_property_name():
    with pytest.raises(BuildError):
        build_event_layer([rec("a", 1, "T:1", props={"activity": "x"})])


# -- step 2 -------------------------------------------------------------


def test_patient_4900_entities(patient_records):
    graph = build_all(patient_records, NO_REIFY)
    assert entity_set(graph) == {("Patient", "Patient_4900"), ("Admission", "Outpatient"),
                                 ("Admission", "115281"), ("Admission", "174010")}


def test_one_record_one_entity():
    graph = correlate_entities(build_event_layer([rec("a", 1, "T:1")]), [rec("a", 1, "T:1")])
    assert len(graph.nodes_by_kind(NodeKind.ENTITY)) == 1
    assert len(graph.edges_by_kind(EdgeKind.CORR)) == 1


@pytest.mark.parametrize("seed", range(5))
def test_entity_count_matches_set_oracle(seed):
    records = random_log(seed, 200)
    graph = build_all(records, NO_REIFY)
    assert entity_set(graph) == {(r.entity_type, r.entity_id) for x in records for r in x.entities}
    assert len(graph.edges_by_kind(EdgeKind.CORR)) == sum(len(x.entities) for x in records)


def test_restricted_types_and_uncorrelated_event():
    records = [rec("a", 1, "A:1", "B:1"), rec("b", 2, "A:1"), rec("c", 3, "B:2")]
    graph = build_all(records[:2], BuildConfig(entity_types=("A",), reify_pairs=()))
    assert entity_set(graph) == {("A", "1")}
    with pytest.raises(UncorrelatedEvent):
        build_all(records, BuildConfig(entity_types=("A",), reify_pairs=()))


# -- step 3 -------------------------------------------------------------


def _rel_pairs(graph):
    out = []
    for e in graph.iter_edges(EdgeKind.REL):
        s, d = graph.node(e.src), graph.node(e.dst)
        out.append(((s["entity_type"], s["entity_id"]), (d["entity_type"], d["entity_id"])))
    return out


def test_rel_direction_follows_type_order():
    records = [rec("a", 1, "Patient:P", "Admission:1")]
    assert _rel_pairs(build_all(records, NO_REIFY)) == [(("Patient", "P"), ("Admission", "1"))]
    flipped = BuildConfig(entity_types=("Admission", "Patient"), reify_pairs=())
    assert _rel_pairs(build_all(records, flipped)) == [(("Admission", "1"), ("Patient", "P"))]


def test_no_cooccurrence_no_rel():
    graph = build_all([rec("a", 1, "A:1"), rec("b", 2, "B:1")], NO_REIFY)
    assert graph.edges_by_kind(EdgeKind.REL) == []


def test_rel_dedup():
    records = [rec("a", i, "A:1", "B:1", row=i) for i in range(1, 6)]
    assert len(build_all(records, NO_REIFY).edges_by_kind(EdgeKind.REL)) == 1


@pytest.mark.parametrize("seed", range(5))
def test_rel_matches_cooccurrence_oracle(seed):
    records = random_log(seed, 150)
    expected = set()
    for x in records:
        for a in x.entities:
            for b in x.entities:
                if a.entity_type != b.entity_type:
                    expected.add(frozenset([(a.entity_type, a.entity_id), (b.entity_type, b.entity_id)]))
    got = _rel_pairs(build_all(records, NO_REIFY))
    assert len(got) == len(expected)
    assert {frozenset(p) for p in got} == expected


# -- step 4 -------------------------------------------------------------


def test_reify_patient_4900_default(patient_records):
    graph = build_all(patient_records)
    composites = {i for t, i in entity_set(graph) if t == "Patient|Admission"}
    assert composites == {"Patient_4900|115281", "Patient_4900|174010"}


def test_reify_patient_4900_with_outpatient(patient_records):
    graph = build_all(patient_records, BuildConfig(reify_exclude_ids=()))
    composites = {i for t, i in entity_set(graph) if t == "Patient|Admission"}
    assert composites == {"Patient_4900|115281", "Patient_4900|174010", "Patient_4900|Outpatient"}


def test_empty_reify_pairs_is_identity(patient_records):
    graph = build_event_layer(patient_records)
    correlate_entities(graph, patient_records)
    derive_entity_relations(graph)
    before = (graph.num_nodes(), graph.num_edges())
    reify_relations(graph, NO_REIFY)
    assert (graph.num_nodes(), graph.num_edges()) == before


@pytest.mark.parametrize("seed", range(4))
def test_composite_in_degree_is_intersection(seed):
    records = random_log(seed, 250, n_types=2)
    config = BuildConfig(reify_pairs=(("T0", "T1"),), reify_exclude_ids=())
    graph = build_all(records, config)
    expected = Counter(entity_key(x, "T0|T1") for x in records)
    expected.pop(None, None)
    got = {}
    for ent in graph.nodes_by_kind(NodeKind.ENTITY):
        node = graph.node(ent)
        if node["entity_type"] == "T0|T1":
            got[node["entity_id"]] = len(graph.in_edges(ent, EdgeKind.CORR))
            assert set(graph.neighbors(ent, EdgeKind.REL, "in")) == {
                graph.find_entity("T0", node["entity_id"].split("|")[0]),
                graph.find_entity("T1", node["entity_id"].split("|")[1]),
            }
    assert got == dict(expected)


# -- step 5 -------------------------------------------------------------


def test_single_event_entity_has_no_df():
    graph = build_all([rec("a", 1, "A:1")])
    assert graph.edges_by_kind(EdgeKind.DF) == []


def test_patient_4900_patient_chain(patient_records):
    graph = build_all(patient_records)
    assert chain(graph, "Patient", "Patient_4900") == ["TBS", "TIW 27", "L_Taken", "HA", "LAM", "CA DM HL HT"]
    patient_df = [e for e in graph.iter_edges(EdgeKind.DF) if e["entity_type"] == "Patient"]
    assert len(patient_df) == 5
    assert chain(graph, "Admission", "115281") == ["TBS", "TIW 27", "CA DM HL HT"]


def test_timestamp_ties_broken_by_row():
    records = [rec("x", 1, "A:1", row=1), rec("y", 1, "A:1", row=2), rec("z", 0, "A:1", row=3)]
    assert chain(build_all(records), "A", "1") == ["z", "x", "y"]


@pytest.mark.parametrize("seed", range(6))
def test_df_count_per_entity(seed):
    records = random_log(seed, 300)
    graph = build_all(records)
    df = Counter((e["entity_type"], e["entity_id"]) for e in graph.iter_edges(EdgeKind.DF))
    for ent in graph.nodes_by_kind(NodeKind.ENTITY):
        node = graph.node(ent)
        n = len(graph.in_edges(ent, EdgeKind.CORR))
        assert df[(node["entity_type"], node["entity_id"])] == max(0, n - 1)


# -- step 6 -------------------------------------------------------------


def test_self_loop_class():
    graph = build_all([rec("a", 1, "A:1", row=1), rec("a", 2, "A:1", row=2)])
    (dfc,) = graph.edges_by_kind(EdgeKind.DF_C)
    edge = graph.edge(dfc)
    assert edge.src == edge.dst and edge["count"] == 1


def test_three_case_entity_type_a_counts(three_case_records):
    graph = build_all(three_case_records)
    got = graph_class_counts(graph, "EntityTypeA")
    assert got == flatten_dfg(three_case_records, "EntityTypeA")
    # case 3 has c at 10-19, before a and b, so its trace is c, a, b
    assert got == {("a", "b"): 3, ("b", "c"): 2, ("c", "f"): 2, ("c", "a"): 1}


def test_three_case_all_types_match_oracle(three_case_records):
    graph = build_all(three_case_records)
    for entity_type in ("EntityTypeA", "EntityTypeB", "EntityTypeC"):
        assert graph_class_counts(graph, entity_type) == flatten_dfg(three_case_records, entity_type)


@pytest.mark.parametrize("seed", range(6))
def test_conservation(seed):
    graph = build_all(random_log(seed, 300))
    df = Counter(e["entity_type"] for e in graph.iter_edges(EdgeKind.DF))
    dfc = Counter()
    for e in graph.iter_edges(EdgeKind.DF_C):
        dfc[e["entity_type"]] += e["count"]
    assert dfc == df


def test_property_classes(patient_records):
    graph = build_all(patient_records, BuildConfig(property_classes=True))
    classes = [graph.node(c) for c in graph.nodes_by_kind(NodeKind.EVENT_CLASS)]
    by_property = {c["activity"] for c in classes if c.get("classifier") == "EntityType"}
    assert by_property == {"Lab. Measurement", "Diagnosis", "Logistic"}
    assert len([c for c in classes if c.get("classifier") is None]) == 6
    counts = graph_class_counts(graph, "Patient", "EntityType")
    # TBS, TIW 27, L_Taken, HA, LAM, CA..: Lo Lo La Lo La Di
    assert counts == Counter({("Logistic", "Logistic"): 1, ("Logistic", "Lab. Measurement"): 2,
                              ("Lab. Measurement", "Logistic"): 1, ("Lab. Measurement", "Diagnosis"): 1})
    assert check_graph(graph) == []


# -- whole build --------------------------------------------------------


def test_patient_4900_invariants(patient_records):
    assert check_graph(build_all(patient_records)) == []


def test_determinism(three_case_records):
    assert build_all(three_case_records) == build_all(three_case_records)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 80))
def test_random_logs_match_oracle(seed, n):
    records = random_log(seed, n)
    graph = build_all(records)
    assert check_graph(graph) == []
    types = {graph.node(e)["entity_type"] for e in graph.nodes_by_kind(NodeKind.ENTITY)}
    for t in types:
        assert graph_class_counts(graph, t) == flatten_dfg(records, t)


def test_derive_df_uses_composites(patient_records):
    graph = build_all(patient_records)
    assert chain(graph, "Patient|Admission", "Patient_4900|115281") == ["TBS", "TIW 27", "CA DM HL HT"]


def test_stepwise_build_equals_build_all(patient_records):
    graph = build_event_layer(patient_records)
    correlate_entities(graph, patient_records)
    derive_entity_relations(graph)
    reify_relations(graph)
    derive_df(graph)
    aggregate_classes(graph)
    assert graph == build_all(patient_records)
