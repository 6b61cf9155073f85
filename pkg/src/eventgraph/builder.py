"""Turning an event record list into an event graph.

Construction runs in six stages, each a function over the graph:

1. :func:`build_event_layer` - one Event node per record, a Log node, HAS edges
2. :func:`correlate_entities` - Entity nodes and CORR edges
3. :func:`derive_entity_relations` - REL edges between co-occurring entities
4. :func:`reify_relations` - composite entities for selected REL type pairs
5. :func:`derive_df` - per-entity directly-follows chains (DF edges)
6. :func:`aggregate_classes` - EventClass nodes, OBSERVES and DF_C edges

:func:`build_all` runs them in order and freezes the result.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels
from .errors import BuildError, EmptyLog, UncorrelatedEvent
from .graph import ACTIVITY_CLASSIFIER, EdgeKind, EventGraph, NodeKind

# Equal timestamps are ordered by source row, then by node id.
TIE_BREAK = ("timestamp", "source_row", "node_id")

RESERVED_EVENT_PROPERTIES = ("activity", "timestamp", "source_row")

COMPOSITE_SEPARATOR = "|"


@dataclass(frozen=True)
class BuildConfig:
    """Options for :func:`build_all`.

    ``entity_types`` restricts correlation to the listed types and fixes their
    order (REL edges point from the earlier type to the later one); ``None``
    correlates every type in order of first appearance. Reification pairs
    whose types do not occur in the log are skipped. Pairs involving an id in
    ``reify_exclude_ids`` are not reified; by default that is the shared
    outpatient bucket, so no ``Patient_X|Outpatient`` composites appear.
    """

    entity_types: tuple[str, ...] | None = None
    reify_pairs: tuple[tuple[str, str], ...] = (("Patient", "Admission"),)
    reify_exclude_ids: tuple[str, ...] = ("Outpatient",)
    property_classes: bool = False
    property_classifier: str = "EntityType"

    def __post_init__(self):
        if self.entity_types is not None:
            object.__setattr__(self, "entity_types", tuple(self.entity_types))
            if len(set(self.entity_types)) != len(self.entity_types):
                raise ValueError("entity_types lists a type twice")
        pairs = tuple(tuple(p) for p in self.reify_pairs)
        for pair in pairs:
            if len(pair) != 2 or pair[0] == pair[1]:
                raise ValueError(f"reify pair must name two distinct types: {pair!r}")
            if self.entity_types is not None and not set(pair) <= set(self.entity_types):
                raise ValueError(f"reify pair {pair!r} uses a type that is not correlated")
        object.__setattr__(self, "reify_pairs", pairs)
        object.__setattr__(self, "reify_exclude_ids", tuple(self.reify_exclude_ids))


DEFAULT_CONFIG = BuildConfig()


def build_event_layer(records) -> EventGraph:
    if not records:
        raise EmptyLog()
    graph = EventGraph()
    for rec in records:
        props = {"activity": rec.activity, "timestamp": rec.timestamp, "source_row": rec.source_row}
        for name, value in rec.properties.items():
            if name in RESERVED_EVENT_PROPERTIES:
                raise BuildError(f"record {rec.source_row}: property name {name!r} is reserved")
            props[name] = value
        graph.add_node(NodeKind.EVENT, props)
    log = graph.add_node(NodeKind.LOG, {"events": len(records)})
    for event in graph.nodes_by_kind(NodeKind.EVENT):
        graph.add_edge(EdgeKind.HAS, log, event)
    return graph


def correlate_entities(graph, records, config=DEFAULT_CONFIG):
    events = graph.nodes_by_kind(NodeKind.EVENT)
    if len(events) != len(records):
        raise BuildError("record list does not match the graph's event layer")
    allowed = None if config.entity_types is None else set(config.entity_types)
    for event, rec in zip(events, records):
        linked = 0
        for ref in rec.entities:
            if allowed is not None and ref.entity_type not in allowed:
                continue
            entity = graph.find_entity(ref.entity_type, ref.entity_id)
            if entity is None:
                entity = graph.add_node(
                    NodeKind.ENTITY, {"entity_type": ref.entity_type, "entity_id": ref.entity_id}
                )
            graph.add_edge(EdgeKind.CORR, event, entity)
            linked += 1
        if not linked:
            raise UncorrelatedEvent(
                f"record {rec.source_row} ({rec.activity!r}) has no entity of a correlated type"
            )
    return graph


def _type_order(graph, config):
    if config.entity_types is not None:
        order = list(config.entity_types)
    else:
        order = []
        for entity in graph.nodes_by_kind(NodeKind.ENTITY):
            entity_type = graph.node(entity)["entity_type"]
            if entity_type not in order:
                order.append(entity_type)
    return {t: i for i, t in enumerate(order)}


def derive_entity_relations(graph, config=DEFAULT_CONFIG):
    """Relate entities of different types that share at least one event.

    One REL edge per unordered entity pair, pointing from the entity whose
    type comes first in the type order.
    """
    rank = _type_order(graph, config)
    seen = set()
    for event in graph.nodes_by_kind(NodeKind.EVENT):
        entities = graph.neighbors(event, EdgeKind.CORR, "out")
        for i, a in enumerate(entities):
            type_a = graph.node(a)["entity_type"]
            for b in entities[i + 1:]:
                type_b = graph.node(b)["entity_type"]
                if type_a == type_b:
                    continue
                src, dst = (a, b) if rank[type_a] < rank[type_b] else (b, a)
                key = (min(a, b), max(a, b))
                if key in seen:
                    continue
                seen.add(key)
                graph.add_edge(EdgeKind.REL, src, dst)
    return graph


def composite_type(type_a, type_b):
    return f"{type_a}{COMPOSITE_SEPARATOR}{type_b}"


def reify_relations(graph, config=DEFAULT_CONFIG):
    """Materialise selected REL edges as composite entities.

    For a pair ``(A, B)`` every REL edge between an ``A`` entity and a ``B``
    entity gets an Entity node of type ``A|B`` with id ``idA|idB``. Events
    correlated to both constituents are correlated to the composite, and
    each constituent gets a REL edge to it.
    """
    if not config.reify_pairs:
        return graph
    wanted = {}
    for a, b in config.reify_pairs:
        wanted[(a, b)] = (a, b)
        wanted[(b, a)] = (a, b)
    excluded = set(config.reify_exclude_ids)

    for rel in list(graph.iter_edges(EdgeKind.REL)):
        src, dst = graph.node(rel.src), graph.node(rel.dst)
        pair = wanted.get((src["entity_type"], dst["entity_type"]))
        if pair is None:
            continue
        first, second = (src, dst) if src["entity_type"] == pair[0] else (dst, src)
        if first["entity_id"] in excluded or second["entity_id"] in excluded:
            continue
        composite = graph.add_node(
            NodeKind.ENTITY,
            {
                "entity_type": composite_type(*pair),
                "entity_id": f"{first['entity_id']}{COMPOSITE_SEPARATOR}{second['entity_id']}",
            },
        )
        shared = set(graph.neighbors(second.id, EdgeKind.CORR, "in"))
        for event in graph.neighbors(first.id, EdgeKind.CORR, "in"):
            if event in shared:
                graph.add_edge(EdgeKind.CORR, event, composite)
        graph.add_edge(EdgeKind.REL, first.id, composite)
        graph.add_edge(EdgeKind.REL, second.id, composite)
    return graph


def event_order(graph):
    """Event node ids sorted by timestamp, then source row, then node id."""
    def key(event):
        node = graph.node(event)
        return (node["timestamp"], node.get("source_row", 0), event)

    return sorted(graph.nodes_by_kind(NodeKind.EVENT), key=key)


def derive_df(graph, config=DEFAULT_CONFIG):
    """Add one DF edge between each pair of consecutive events of every entity."""
    events = graph.nodes_by_kind(NodeKind.EVENT)
    position = {event: i for i, event in enumerate(events)}
    rank = [0] * len(events)
    for r, event in enumerate(event_order(graph)):
        rank[position[event]] = r

    entities = graph.nodes_by_kind(NodeKind.ENTITY)
    owners, members = [], []
    for idx, entity in enumerate(entities):
        for event in graph.neighbors(entity, EdgeKind.CORR, "in"):
            owners.append(idx)
            members.append(position[event])

    chain_owner, src, dst = kernels.df_chains(owners, members, rank)
    for idx, a, b in zip(chain_owner, src, dst):
        entity = graph.node(entities[idx])
        graph.add_edge(
            EdgeKind.DF,
            events[a],
            events[b],
            {"entity_type": entity["entity_type"], "entity_id": entity["entity_id"]},
        )
    return graph


def _add_classes(graph, classifier, key_of):
    """Create classes for one classifier; returns event id -> class index, class ids."""
    class_ids = []
    index = {}
    event_class = {}
    for event in graph.nodes_by_kind(NodeKind.EVENT):
        value = key_of(graph.node(event))
        if value is None:
            continue
        if value not in index:
            props = {"activity": value}
            if classifier != ACTIVITY_CLASSIFIER:
                props["classifier"] = classifier
            index[value] = len(class_ids)
            class_ids.append(graph.add_node(NodeKind.EVENT_CLASS, props))
        event_class[event] = index[value]
        graph.add_edge(EdgeKind.OBSERVES, class_ids[index[value]], event)
    return event_class, class_ids


def _aggregate(graph, classifier, event_class, class_ids):
    type_index = {}
    types, srcs, dsts = [], [], []
    for df in graph.iter_edges(EdgeKind.DF):
        a = event_class.get(df.src)
        b = event_class.get(df.dst)
        if a is None or b is None:
            continue
        t = type_index.setdefault(df["entity_type"], len(type_index))
        types.append(t)
        srcs.append(a)
        dsts.append(b)
    type_names = list(type_index)
    for t, a, b, count in zip(*kernels.count_triples(types, srcs, dsts)):
        graph.add_edge(
            EdgeKind.DF_C,
            class_ids[a],
            class_ids[b],
            {"entity_type": type_names[t], "count": count, "classifier": classifier},
        )


def aggregate_classes(graph, config=DEFAULT_CONFIG):
    """Build activity classes (and optionally property classes) and lift DF to DF_C."""
    event_class, class_ids = _add_classes(graph, ACTIVITY_CLASSIFIER, lambda n: n["activity"])
    _aggregate(graph, ACTIVITY_CLASSIFIER, event_class, class_ids)
    if config.property_classes:
        name = config.property_classifier

        def key_of(node):
            value = node.get(name)
            return None if value is None else str(value)

        event_class, class_ids = _add_classes(graph, name, key_of)
        _aggregate(graph, name, event_class, class_ids)
    return graph


def build_all(records, config=DEFAULT_CONFIG) -> EventGraph:
    """Run all six construction stages and return the frozen graph."""
    graph = build_event_layer(records)
    correlate_entities(graph, records, config)
    derive_entity_relations(graph, config)
    reify_relations(graph, config)
    derive_df(graph, config)
    aggregate_classes(graph, config)
    return graph.freeze()
