"""Typed, append-only labeled property graph used to hold event graphs.

Node ids and edge ids are dense integers handed out in insertion order, so
two identical insertion sequences always produce identical graphs. Edge
endpoints are checked against a fixed kind table on insertion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal
from typing import Iterator

from .errors import (
    DuplicateNode,
    EndpointKindViolation,
    FrozenGraph,
    MissingRequiredProperty,
    TypeMismatch,
    UnknownNode,
)


class NodeKind(str, enum.Enum):
    EVENT = "Event"
    ENTITY = "Entity"
    LOG = "Log"
    EVENT_CLASS = "EventClass"

    def __str__(self):
        return self.value


class EdgeKind(str, enum.Enum):
    HAS = "HAS"
    CORR = "CORR"
    REL = "REL"
    DF = "DF"
    OBSERVES = "OBSERVES"
    DF_C = "DF_C"

    def __str__(self):
        return self.value


ENDPOINTS = {
    EdgeKind.HAS: (NodeKind.LOG, NodeKind.EVENT),
    EdgeKind.CORR: (NodeKind.EVENT, NodeKind.ENTITY),
    EdgeKind.REL: (NodeKind.ENTITY, NodeKind.ENTITY),
    EdgeKind.DF: (NodeKind.EVENT, NodeKind.EVENT),
    EdgeKind.OBSERVES: (NodeKind.EVENT_CLASS, NodeKind.EVENT),
    EdgeKind.DF_C: (NodeKind.EVENT_CLASS, NodeKind.EVENT_CLASS),
}

REQUIRED_NODE_PROPERTIES = {
    NodeKind.EVENT: {"activity": str, "timestamp": datetime},
    NodeKind.ENTITY: {"entity_type": str, "entity_id": str},
    NodeKind.LOG: {},
    NodeKind.EVENT_CLASS: {"activity": str},
}

REQUIRED_EDGE_PROPERTIES = {
    EdgeKind.DF: {"entity_type": str, "entity_id": str},
    EdgeKind.DF_C: {"entity_type": str, "count": int},
}

# Event classes built from the activity label; other classifiers name the
# event property they were keyed on.
ACTIVITY_CLASSIFIER = "activity"


def check_scalar(name, value):
    """Reject anything that is not one of the five supported scalar types."""
    if value is None or isinstance(value, (str, Decimal)):
        return
    if isinstance(value, bool):
        raise TypeMismatch(name, value, "str, int, Decimal, datetime or None")
    if isinstance(value, int):
        return
    if isinstance(value, datetime):
        if value.tzinfo is not None or value.microsecond:
            raise TypeMismatch(name, value, "naive timestamp with second precision")
        return
    raise TypeMismatch(name, value, "str, int, Decimal, datetime or None")


def _check_required(kind_label, required, properties):
    for name, typ in required.items():
        if name not in properties or properties[name] is None:
            raise MissingRequiredProperty(kind_label, name)
        value = properties[name]
        if not isinstance(value, typ) or isinstance(value, bool):
            raise TypeMismatch(name, value, typ.__name__)


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    properties: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.properties[name]

    def get(self, name, default=None):
        return self.properties.get(name, default)


@dataclass(frozen=True)
class Edge:
    id: int
    kind: EdgeKind
    src: int
    dst: int
    properties: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.properties[name]

    def get(self, name, default=None):
        return self.properties.get(name, default)


def _edge_kind(kind):
    return kind if kind.__class__ is EdgeKind else EdgeKind(kind)


class EventGraph:
    """In-memory event graph with per-node adjacency grouped by edge kind.

    The graph is single-writer while it is being built. Call :meth:`freeze`
    once construction is complete; afterwards every insertion raises
    :class:`~eventgraph.errors.FrozenGraph` and the graph may be shared
    between readers freely.
    """

    def __init__(self):
        self._nodes: list[Node] = []
        self._edges: list[Edge] = []
        self._out: list[dict] = []
        self._in: list[dict] = []
        self._by_kind = {kind: [] for kind in NodeKind}
        self._edges_by_kind = {kind: [] for kind in EdgeKind}
        self._entity_index: dict[tuple[str, str], int] = {}
        self._class_index: dict[tuple[str, str], int] = {}
        self._frozen = False

    # -- insertion -------------------------------------------------------

    def add_node(self, kind, properties=None) -> int:
        if self._frozen:
            raise FrozenGraph()
        if kind.__class__ is not NodeKind:
            kind = NodeKind(kind)
        properties = dict(properties or {})
        _check_required(kind.value, REQUIRED_NODE_PROPERTIES[kind], properties)
        for name, value in properties.items():
            if not isinstance(name, str):
                raise TypeMismatch(name, name, "string property name")
            check_scalar(name, value)

        if kind is NodeKind.ENTITY:
            key = (properties["entity_type"], properties["entity_id"])
            if key in self._entity_index:
                raise DuplicateNode(kind.value, key)
        elif kind is NodeKind.EVENT_CLASS:
            classifier = properties.get("classifier", ACTIVITY_CLASSIFIER)
            if not isinstance(classifier, str):
                raise TypeMismatch("classifier", classifier, "str")
            key = (classifier, properties["activity"])
            if key in self._class_index:
                raise DuplicateNode(kind.value, key)

        node_id = len(self._nodes)
        self._nodes.append(Node(node_id, kind, properties))
        # adjacency lists per edge kind, created on first use
        self._out.append({})
        self._in.append({})
        self._by_kind[kind].append(node_id)
        if kind is NodeKind.ENTITY:
            self._entity_index[key] = node_id
        elif kind is NodeKind.EVENT_CLASS:
            self._class_index[key] = node_id
        return node_id

    def add_edge(self, kind, src, dst, properties=None) -> int:
        if self._frozen:
            raise FrozenGraph()
        kind = _edge_kind(kind)
        src_node = self.node(src)
        dst_node = self.node(dst)
        want_src, want_dst = ENDPOINTS[kind]
        if src_node.kind is not want_src or dst_node.kind is not want_dst:
            raise EndpointKindViolation(kind.value, src_node.kind.value, dst_node.kind.value)
        properties = dict(properties or {})
        required = REQUIRED_EDGE_PROPERTIES.get(kind)
        if required:
            _check_required(kind.value, required, properties)
        if kind is EdgeKind.DF_C and properties["count"] < 1:
            raise TypeMismatch("count", properties["count"], "positive integer")
        for name, value in properties.items():
            check_scalar(name, value)

        edge_id = len(self._edges)
        self._edges.append(Edge(edge_id, kind, src, dst, properties))
        self._out[src].setdefault(kind, []).append(edge_id)
        self._in[dst].setdefault(kind, []).append(edge_id)
        self._edges_by_kind[kind].append(edge_id)
        return edge_id

    def freeze(self):
        self._frozen = True
        return self

    @property
    def frozen(self):
        return self._frozen

    # -- lookup ----------------------------------------------------------

    def node(self, node_id) -> Node:
        if not isinstance(node_id, int) or not 0 <= node_id < len(self._nodes):
            raise UnknownNode(node_id)
        return self._nodes[node_id]

    def edge(self, edge_id) -> Edge:
        return self._edges[edge_id]

    def has_node(self, node_id):
        return isinstance(node_id, int) and 0 <= node_id < len(self._nodes)

    @property
    def nodes(self) -> list[Node]:
        return list(self._nodes)

    @property
    def edges(self) -> list[Edge]:
        return list(self._edges)

    def num_nodes(self):
        return len(self._nodes)

    def num_edges(self):
        return len(self._edges)

    def nodes_by_kind(self, kind) -> list[int]:
        return list(self._by_kind[NodeKind(kind)])

    def edges_by_kind(self, kind) -> list[int]:
        return list(self._edges_by_kind[EdgeKind(kind)])

    def iter_edges(self, kind) -> Iterator[Edge]:
        for edge_id in self._edges_by_kind[_edge_kind(kind)]:
            yield self._edges[edge_id]

    def out_edges(self, node_id, kind) -> list[int]:
        self.node(node_id)
        return list(self._out[node_id].get(_edge_kind(kind), ()))

    def in_edges(self, node_id, kind) -> list[int]:
        self.node(node_id)
        return list(self._in[node_id].get(_edge_kind(kind), ()))

    def neighbors(self, node_id, kind, direction="out") -> list[int]:
        """Nodes across ``kind`` edges from ``node_id``, in edge insertion order."""
        self.node(node_id)
        kind = _edge_kind(kind)
        if direction == "out":
            return [self._edges[e].dst for e in self._out[node_id].get(kind, ())]
        if direction == "in":
            return [self._edges[e].src for e in self._in[node_id].get(kind, ())]
        raise ValueError(f"direction must be 'out' or 'in', not {direction!r}")

    def find_entity(self, entity_type, entity_id):
        """Node id of the entity, or None."""
        return self._entity_index.get((entity_type, entity_id))

    def find_class(self, activity, classifier=ACTIVITY_CLASSIFIER):
        return self._class_index.get((classifier, activity))

    def log_node(self):
        logs = self._by_kind[NodeKind.LOG]
        return logs[0] if logs else None

    # -- consistency -----------------------------------------------------

    def check_consistency(self):
        """Re-scan the flat edge list and compare against adjacency.

        Returns a list of human readable violations (empty when consistent).
        """
        problems = []
        want_out = [{} for _ in self._nodes]
        want_in = [{} for _ in self._nodes]
        for edge in self._edges:
            want_src, want_dst = ENDPOINTS[edge.kind]
            if self._nodes[edge.src].kind is not want_src or self._nodes[edge.dst].kind is not want_dst:
                problems.append(f"edge {edge.id}: illegal endpoint kinds for {edge.kind}")
            want_out[edge.src].setdefault(edge.kind, []).append(edge.id)
            want_in[edge.dst].setdefault(edge.kind, []).append(edge.id)
        for node_id in range(len(self._nodes)):
            if want_out[node_id] != self._out[node_id]:
                problems.append(f"node {node_id}: outgoing adjacency differs from edge list")
            if want_in[node_id] != self._in[node_id]:
                problems.append(f"node {node_id}: incoming adjacency differs from edge list")
        return problems

    # -- comparison ------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, EventGraph):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __repr__(self):
        return f"<EventGraph nodes={len(self._nodes)} edges={len(self._edges)}>"
