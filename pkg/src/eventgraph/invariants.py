"""Structural checks for built event graphs.

:func:`check_graph` returns a list of violation messages; an empty list
means the graph satisfies every check.
"""

from collections import Counter, defaultdict

from .graph import ACTIVITY_CLASSIFIER, EdgeKind, NodeKind


def check_graph(graph):
    problems = list(graph.check_consistency())

    logs = graph.nodes_by_kind(NodeKind.LOG)
    if len(logs) != 1:
        problems.append(f"expected exactly one Log node, found {len(logs)}")

    events = graph.nodes_by_kind(NodeKind.EVENT)
    for event in events:
        n_has = len(graph.in_edges(event, EdgeKind.HAS))
        if n_has != 1:
            problems.append(f"event {event}: {n_has} incoming HAS edges")
        if not graph.out_edges(event, EdgeKind.CORR):
            problems.append(f"event {event}: no CORR edge")

    problems.extend(_check_df_chains(graph))
    problems.extend(_check_conservation(graph))
    return problems


def _check_df_chains(graph):
    problems = []
    df_by_entity = defaultdict(list)
    for df in graph.iter_edges(EdgeKind.DF):
        entity = graph.find_entity(df["entity_type"], df["entity_id"])
        if entity is None:
            problems.append(f"DF edge {df.id}: labelled with unknown entity")
            continue
        correlated = graph.neighbors(df.src, EdgeKind.CORR, "out")
        if entity not in correlated or entity not in graph.neighbors(df.dst, EdgeKind.CORR, "out"):
            problems.append(f"DF edge {df.id}: endpoints not both correlated to its entity")
        df_by_entity[entity].append(df)

    for entity in graph.nodes_by_kind(NodeKind.ENTITY):
        members = graph.neighbors(entity, EdgeKind.CORR, "in")
        chain = df_by_entity.get(entity, [])
        expected = max(0, len(members) - 1)
        if len(chain) != expected:
            problems.append(f"entity {entity}: {len(chain)} DF edges for {len(members)} events")
            continue
        if not chain:
            continue
        succ = {}
        preds = Counter()
        for df in chain:
            if df.src in succ:
                problems.append(f"entity {entity}: event {df.src} has two DF successors")
            succ[df.src] = df.dst
            preds[df.dst] += 1
        heads = [e for e in members if preds[e] == 0]
        if len(heads) != 1 or any(c > 1 for c in preds.values()):
            problems.append(f"entity {entity}: DF edges do not form a simple path")
            continue
        visited = [heads[0]]
        seen = {heads[0]}
        while visited[-1] in succ:
            nxt = succ[visited[-1]]
            if nxt in seen:
                break
            seen.add(nxt)
            visited.append(nxt)
        if seen != set(members) or len(visited) != len(members):
            problems.append(f"entity {entity}: DF path does not visit every event once")
            continue
        stamps = [graph.node(e)["timestamp"] for e in visited]
        if any(a > b for a, b in zip(stamps, stamps[1:])):
            problems.append(f"entity {entity}: DF path goes backwards in time")
    return problems


def _check_conservation(graph):
    """Per classifier and entity type, DF_C counts must add up to the DF edges."""
    problems = []
    observed_by = defaultdict(dict)
    for ob in graph.iter_edges(EdgeKind.OBSERVES):
        classifier = graph.node(ob.src).get("classifier", ACTIVITY_CLASSIFIER)
        observed_by[classifier][ob.dst] = ob.src

    totals = Counter()
    for dfc in graph.iter_edges(EdgeKind.DF_C):
        totals[(dfc.get("classifier", ACTIVITY_CLASSIFIER), dfc["entity_type"])] += dfc["count"]

    expected = Counter()
    for classifier, mapping in observed_by.items():
        for df in graph.iter_edges(EdgeKind.DF):
            if df.src in mapping and df.dst in mapping:
                expected[(classifier, df["entity_type"])] += 1
    if graph.nodes_by_kind(NodeKind.EVENT) and ACTIVITY_CLASSIFIER not in observed_by:
        if graph.edges_by_kind(EdgeKind.DF):
            problems.append("DF edges present but no activity classes")
    for key in set(totals) | set(expected):
        if totals[key] != expected[key]:
            problems.append(
                f"classifier {key[0]!r}, entity type {key[1]!r}: DF_C counts sum to "
                f"{totals[key]} but there are {expected[key]} DF edges"
            )
    return problems
