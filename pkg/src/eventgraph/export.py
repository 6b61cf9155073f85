"""Serializers: DOT for views, JSON dumps for graphs, delimited text for logs.

Every function here is a pure, deterministic function of its input.
"""

from __future__ import annotations

import csv
import graphlib
import hashlib
import io
import json
from datetime import datetime
from decimal import Decimal, InvalidOperation

from .dfg import CLASS
from .errors import EventGraphError, MalformedDump, MissingColor
from .graph import EdgeKind, EventGraph, NodeKind
from .ingest import LogSchema, format_timestamp

DEFAULT_PALETTE = {
    "Logistic": "blue",
    "Laboratory_Measurement": "green",
    "Lab. Measurement": "green",
    "Prescriptions": "orange",
    "Diagnosis": "purple",
    "Admission": "red",
    "Patient": "black",
    "Patient|Admission": "firebrick",
}

DUMP_FORMAT = "eventgraph"
DUMP_VERSION = 1


# -- DOT ----------------------------------------------------------------


def _quote(text):
    text = str(text).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{text}"'


def dot_id(kind, label, node_id):
    digest = hashlib.sha1(f"{kind}\x1f{label}\x1f{node_id}".encode("utf-8")).hexdigest()
    return f"n{digest[:12]}"


def _color(palette, key):
    try:
        return palette[key]
    except KeyError:
        raise MissingColor(key) from None


def to_dot(view, palette=None, name="dfg"):
    """Render a :class:`~eventgraph.dfg.DfgView` as a DOT digraph.

    Edges are coloured by entity type, nodes by their classification.
    Class-level edges are labelled with their counts, instance-level edges
    with the id of the entity inducing them.
    """
    palette = DEFAULT_PALETTE if palette is None else palette
    kind = "EventClass" if view.level == CLASS else "Event"
    by_id = {n.id: n for n in view.nodes}
    ids = {n.id: dot_id(kind, n.label, n.id) for n in view.nodes}

    lines = [f"digraph {_quote(name)} {{"]
    for node in sorted(view.nodes, key=lambda n: (n.label, n.id)):
        attrs = [f"label={_quote(node.label)}", "shape=box"]
        if node.classification is not None:
            attrs.append(f"color={_quote(_color(palette, node.classification))}")
        lines.append(f"  {ids[node.id]} [{', '.join(attrs)}];")

    def edge_key(e):
        return (by_id[e.src].label, by_id[e.dst].label, e.entity_type, e.entity_id or "", e.src, e.dst)

    for edge in sorted(view.edges, key=edge_key):
        label = str(edge.count) if view.level == CLASS else edge.entity_id
        attrs = [f"label={_quote(label)}", f"color={_quote(_color(palette, edge.entity_type))}"]
        if view.level == CLASS:
            attrs.append(f"tooltip={_quote(edge.entity_type)}")
        lines.append(f"  {ids[edge.src]} -> {ids[edge.dst]} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- JSON dump ----------------------------------------------------------


def _encode(value):
    if isinstance(value, datetime):
        return {"$timestamp": format_timestamp(value)}
    if isinstance(value, Decimal):
        return {"$decimal": str(value)}
    return value


def _decode(value, where):
    if isinstance(value, dict):
        if set(value) == {"$timestamp"} and isinstance(value["$timestamp"], str):
            try:
                return datetime.strptime(value["$timestamp"], "%Y-%m-%dT%H:%M:%S")
            except ValueError:
                raise MalformedDump("bad timestamp", where) from None
        if set(value) == {"$decimal"} and isinstance(value["$decimal"], str):
            try:
                return Decimal(value["$decimal"])
            except InvalidOperation:
                raise MalformedDump("bad decimal", where) from None
        raise MalformedDump("unrecognised tagged value", where)
    if value is None or isinstance(value, (str, int)) and not isinstance(value, bool):
        return value
    raise MalformedDump(f"unsupported property value {value!r}", where)


def _item(obj):
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def graph_to_json(graph):
    """Dump a graph as JSON text, one node or edge per line."""
    nodes = [
        _item({"id": n.id, "kind": n.kind.value,
               "properties": {k: _encode(v) for k, v in n.properties.items()}})
        for n in graph.nodes
    ]
    edges = [
        _item({"id": e.id, "kind": e.kind.value, "src": e.src, "dst": e.dst,
               "properties": {k: _encode(v) for k, v in e.properties.items()}})
        for e in graph.edges
    ]
    parts = [f'{{"format": "{DUMP_FORMAT}", "version": {DUMP_VERSION},', ' "nodes": [']
    parts.append(",\n".join(f"  {n}" for n in nodes))
    parts.append(' ],\n "edges": [')
    parts.append(",\n".join(f"  {e}" for e in edges))
    parts.append(" ]}")
    return "\n".join(p for p in parts if p) + "\n"


def _properties(obj, where):
    props = obj.get("properties", {})
    if not isinstance(props, dict):
        raise MalformedDump("properties must be an object", where)
    return {k: _decode(v, f"{where}.properties.{k}") for k, v in props.items()}


def graph_from_json(text):
    """Rebuild a (frozen) graph from :func:`graph_to_json` output."""
    if not isinstance(text, str):
        text = text.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDump(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict) or doc.get("format") != DUMP_FORMAT:
        raise MalformedDump("not an eventgraph dump", "$")
    if doc.get("version") != DUMP_VERSION:
        raise MalformedDump(f"unsupported dump version {doc.get('version')!r}", "$.version")
    nodes, edges = doc.get("nodes"), doc.get("edges")
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise MalformedDump("nodes and edges must be arrays", "$")

    graph = EventGraph()
    for i, obj in enumerate(nodes):
        where = f"$.nodes[{i}]"
        if not isinstance(obj, dict) or obj.get("id") != i:
            raise MalformedDump("node ids must be dense and in order", where)
        try:
            graph.add_node(NodeKind(obj.get("kind")), _properties(obj, where))
        except (ValueError, EventGraphError) as exc:
            if isinstance(exc, MalformedDump):
                raise
            raise MalformedDump(str(exc), where) from None
    for i, obj in enumerate(edges):
        where = f"$.edges[{i}]"
        if not isinstance(obj, dict) or obj.get("id") != i:
            raise MalformedDump("edge ids must be dense and in order", where)
        try:
            graph.add_edge(EdgeKind(obj.get("kind")), obj.get("src"), obj.get("dst"), _properties(obj, where))
        except (ValueError, EventGraphError) as exc:
            if isinstance(exc, MalformedDump):
                raise
            raise MalformedDump(str(exc), where) from None
    return graph.freeze()


# -- delimited logs -----------------------------------------------------


def _merged_order(sequences):
    """Order items so every sequence keeps its relative order, else first appearance."""
    first = {}
    sorter = graphlib.TopologicalSorter()
    for seq in sequences:
        for i, item in enumerate(seq):
            first.setdefault(item, len(first))
            sorter.add(item, *seq[:i][-1:])
    try:
        sorter.prepare()
    except graphlib.CycleError:
        return tuple(first)
    out = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready(), key=first.__getitem__)
        out.extend(ready)
        sorter.done(*ready)
    return tuple(out)


def infer_schema(records, activity_column="Activity", timestamp_column="Timestamp", delimiter=","):
    """Schema covering every entity type and property used by ``records``.

    Entity columns follow the order in which records list their entities,
    so parsing the written log gives back identical records.
    """
    entity_seqs = [tuple(ref.entity_type for ref in rec.entities) for rec in records]
    prop_cols = {}
    for rec in records:
        for name in rec.properties:
            prop_cols.setdefault(name, None)
    entity_cols = _merged_order(entity_seqs)
    if not entity_cols:
        raise ValueError("cannot infer a schema without entity references")
    return LogSchema(activity_column, timestamp_column, entity_cols, tuple(prop_cols), delimiter)


def log_to_tabular(records, schema=None):
    """Write records as delimited text that :func:`~eventgraph.ingest.parse_log` reads back."""
    if schema is None:
        schema = infer_schema(records) if records else LogSchema("Activity", "Timestamp", ("Case",))
    out = io.StringIO()
    writer = csv.writer(out, delimiter=schema.delimiter, lineterminator="\n")
    writer.writerow(schema.columns)
    for rec in records:
        ids = {ref.entity_type: ref.entity_id for ref in rec.entities}
        row = [rec.activity, format_timestamp(rec.timestamp)]
        row.extend(ids.get(name, "") for name in schema.entity_columns)
        row.extend(rec.properties.get(name, "") for name in schema.property_columns)
        writer.writerow(row)
    return out.getvalue()
