"""Directly-follows views queried from a built event graph.

Views are plain value objects; they keep no reference to the graph they
came from, so they can be filtered and exported independently.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

from .errors import InstanceLevelNotFilterable, UnknownCase, UnknownEntityType
from .graph import ACTIVITY_CLASSIFIER, EdgeKind, NodeKind
from .ingest import EntityRef

INSTANCE = "instance"
CLASS = "class"

# Event property used to classify (and colour) view nodes.
DEFAULT_CLASSIFICATION = "EntityType"


@dataclass(frozen=True)
class DfgNode:
    id: int
    label: str
    classification: str | None = None


@dataclass(frozen=True)
class DfgEdge:
    src: int
    dst: int
    entity_type: str
    entity_id: str | None = None
    count: int = 1


@dataclass(frozen=True)
class DfgView:
    level: str
    nodes: tuple[DfgNode, ...]
    edges: tuple[DfgEdge, ...]
    entity_types: frozenset
    scope: EntityRef | None = None
    classifier: str = ACTIVITY_CLASSIFIER

    def node(self, node_id):
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def edge_counts(self):
        """``{(src label, dst label, entity type): count}`` for quick comparisons."""
        labels = {n.id: n.label for n in self.nodes}
        out = Counter()
        for e in self.edges:
            out[(labels[e.src], labels[e.dst], e.entity_type)] += e.count
        return dict(out)


def _graph_entity_types(graph):
    types = {}
    for entity in graph.nodes_by_kind(NodeKind.ENTITY):
        types.setdefault(graph.node(entity)["entity_type"], None)
    return types


def _select_types(graph, entity_types):
    known = _graph_entity_types(graph)
    if entity_types is None:
        return frozenset(known)
    selected = frozenset(entity_types)
    unknown = sorted(selected - set(known))
    if unknown:
        raise UnknownEntityType(f"entity types not in graph: {', '.join(unknown)}")
    return selected


def _classify(values):
    values = [str(v) for v in values if v is not None]
    if not values:
        return None
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def project_class_dfg(graph, entity_types=None, classifier=ACTIVITY_CLASSIFIER,
                      classification=DEFAULT_CLASSIFICATION):
    """Class-level DFG: DF_C edges of the selected entity types.

    ``entity_types=None`` selects every type; an empty set gives an empty view.
    """
    selected = _select_types(graph, entity_types)
    edges = []
    used = set()
    for dfc in graph.iter_edges(EdgeKind.DF_C):
        if dfc.get("classifier", ACTIVITY_CLASSIFIER) != classifier:
            continue
        if dfc["entity_type"] not in selected:
            continue
        edges.append(DfgEdge(dfc.src, dfc.dst, dfc["entity_type"], None, dfc["count"]))
        used.update((dfc.src, dfc.dst))
    nodes = []
    for class_id in sorted(used):
        node = graph.node(class_id)
        observed = graph.neighbors(class_id, EdgeKind.OBSERVES, "out")
        label = node["activity"]
        cls = _classify(graph.node(e).get(classification) for e in observed)
        nodes.append(DfgNode(class_id, label, cls))
    return DfgView(CLASS, tuple(nodes), tuple(edges), selected, None, classifier)


def related_entities(graph, entity):
    """The entity itself plus every entity one REL edge away (composites included)."""
    related = {entity}
    related.update(graph.neighbors(entity, EdgeKind.REL, "out"))
    related.update(graph.neighbors(entity, EdgeKind.REL, "in"))
    return related


def project_instance_dfg(graph, case, entity_types=None, classification=DEFAULT_CLASSIFICATION):
    """Event-level DFG around one case entity.

    The events are the case's own events plus the events of its related
    entities (of the selected types) that no other entity of the case's
    type touches, so a shared bucket such as ``Admission:Outpatient`` does
    not drag in other patients. Edges are the DF edges of the case and its
    related entities, restricted to the selected types, whose endpoints are
    both among those events.
    """
    if isinstance(case, str):
        case = EntityRef.parse(case)
    entity = graph.find_entity(case.entity_type, case.entity_id)
    if entity is None:
        raise UnknownCase(f"no entity {case} in graph")
    selected = _select_types(graph, entity_types)

    def foreign(event):
        for other in graph.neighbors(event, EdgeKind.CORR, "out"):
            if other != entity and graph.node(other)["entity_type"] == case.entity_type:
                return True
        return False

    node_ids = set(graph.neighbors(entity, EdgeKind.CORR, "in"))
    labels = set()
    for ent in sorted(related_entities(graph, entity)):
        node = graph.node(ent)
        if node["entity_type"] not in selected:
            continue
        labels.add((node["entity_type"], node["entity_id"]))
        if ent != entity:
            node_ids.update(e for e in graph.neighbors(ent, EdgeKind.CORR, "in") if not foreign(e))

    edges = []
    for event in sorted(node_ids):
        for df_id in graph.out_edges(event, EdgeKind.DF):
            df = graph.edge(df_id)
            if df.dst in node_ids and (df["entity_type"], df["entity_id"]) in labels:
                edges.append(DfgEdge(df.src, df.dst, df["entity_type"], df["entity_id"], 1))
    nodes = []
    for event in sorted(node_ids):
        node = graph.node(event)
        value = node.get(classification)
        nodes.append(DfgNode(event, node["activity"], None if value is None else str(value)))
    return DfgView(INSTANCE, tuple(nodes), tuple(edges), selected, case)


def filter_dfg(view, min_count):
    """Drop class-level edges below ``min_count`` and the nodes left isolated."""
    if view.level != CLASS:
        raise InstanceLevelNotFilterable()
    if isinstance(min_count, bool) or not isinstance(min_count, int) or min_count < 1:
        raise ValueError(f"min_count must be a positive integer, not {min_count!r}")
    edges = tuple(e for e in view.edges if e.count >= min_count)
    keep = {e.src for e in edges} | {e.dst for e in edges}
    nodes = tuple(n for n in view.nodes if n.id in keep)
    return replace(view, nodes=nodes, edges=edges)
