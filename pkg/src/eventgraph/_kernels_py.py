"""Pure-Python versions of the chaining and counting kernels.

Always importable; used when the compiled extension is unavailable and as
the reference the compiled kernels are tested against.
"""


def df_chains(owners, events, rank):
    """Consecutive pairs of events per owner, ordered by ``rank``.

    ``owners[i]`` and ``events[i]`` describe one correlation (owner, event);
    ``rank`` maps an event position to its position in the global ordering.
    Returns ``(chain_owner, src, dst)`` lists sorted by owner then chain order.
    """
    order = sorted(range(len(owners)), key=lambda i: (owners[i], rank[events[i]]))
    chain_owner, src, dst = [], [], []
    prev_owner = prev_event = None
    for i in order:
        owner, event = owners[i], events[i]
        if owner == prev_owner:
            chain_owner.append(owner)
            src.append(prev_event)
            dst.append(event)
        prev_owner, prev_event = owner, event
    return chain_owner, src, dst


def count_triples(types, srcs, dsts):
    """Count identical ``(type, src, dst)`` triples.

    Returns ``(types, srcs, dsts, counts)`` with one entry per distinct
    triple, sorted ascending by the triple.
    """
    counts = {}
    for key in zip(types, srcs, dsts):
        counts[key] = counts.get(key, 0) + 1
    out_t, out_s, out_d, out_c = [], [], [], []
    for (t, s, d), c in sorted(counts.items()):
        out_t.append(t)
        out_s.append(s)
        out_d.append(d)
        out_c.append(c)
    return out_t, out_s, out_d, out_c
