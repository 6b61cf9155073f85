"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when
``EVENTGRAPH_PURE_PYTHON`` is set to a non-empty value, the pure-Python
implementation is used. ``BACKEND`` names the active one.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("EVENTGRAPH_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def df_chains(owners, events, rank):
    try:
        return _impl.df_chains(owners, events, rank)
    except OverflowError:
        return _kernels_py.df_chains(owners, events, rank)


def count_triples(types, srcs, dsts):
    try:
        return _impl.count_triples(types, srcs, dsts)
    except OverflowError:
        return _kernels_py.count_triples(types, srcs, dsts)


__all__ = ["BACKEND", "df_chains", "count_triples"]
