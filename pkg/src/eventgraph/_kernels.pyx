# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled chaining and counting kernels.

Same contracts as ``eventgraph._kernels_py``; integer inputs are packed into
single 64-bit sort keys and sorted with ``qsort``. Triple counting uses a
dense table instead when the key space is small compared to the input.
"""

from cpython cimport array
from libc.stdint cimport int64_t
from libc.stdlib cimport qsort

import array as pyarray

cdef int64_t KEY_LIMIT = (<int64_t>1) << 62
cdef int64_t DENSE_LIMIT = (<int64_t>1) << 24


cdef int _cmp_i64(const void *a, const void *b) noexcept nogil:
    cdef int64_t x = (<const int64_t *>a)[0]
    cdef int64_t y = (<const int64_t *>b)[0]
    return (x > y) - (x < y)


cdef array.array _as_i64(values):
    if isinstance(values, pyarray.array) and values.typecode == "q":
        return values
    return pyarray.array("q", values)


def df_chains(owners, events, rank):
    cdef array.array a_owner = _as_i64(owners)
    cdef array.array a_event = _as_i64(events)
    cdef array.array a_rank = _as_i64(rank)
    cdef int64_t[:] o = a_owner
    cdef int64_t[:] e = a_event
    cdef int64_t[:] r = a_rank
    cdef Py_ssize_t n = o.shape[0]
    cdef Py_ssize_t n_events = r.shape[0]
    cdef Py_ssize_t i
    cdef int64_t max_owner = 0
    if e.shape[0] != n:
        raise ValueError("owners and events differ in length")
    if n == 0:
        return [], [], []
    for i in range(n):
        if o[i] < 0 or e[i] < 0 or e[i] >= n_events:
            raise ValueError("owner/event index out of range")
        if o[i] > max_owner:
            max_owner = o[i]
    if max_owner >= KEY_LIMIT // (n_events + 1):
        raise OverflowError("too many owners to pack into 64-bit keys")

    cdef array.array a_by_rank = array.clone(a_rank, n_events, zero=False)
    cdef int64_t[:] by_rank = a_by_rank
    for i in range(n_events):
        by_rank[r[i]] = i

    cdef array.array a_keys = array.clone(a_owner, n, zero=False)
    cdef int64_t[:] keys = a_keys
    for i in range(n):
        keys[i] = o[i] * n_events + r[e[i]]
    with nogil:
        qsort(&keys[0], n, sizeof(int64_t), _cmp_i64)

    cdef array.array a_co = array.clone(a_owner, n, zero=False)
    cdef array.array a_src = array.clone(a_owner, n, zero=False)
    cdef array.array a_dst = array.clone(a_owner, n, zero=False)
    cdef int64_t[:] co = a_co
    cdef int64_t[:] src = a_src
    cdef int64_t[:] dst = a_dst
    cdef Py_ssize_t m = 0
    cdef int64_t prev_owner = keys[0] // n_events
    cdef int64_t prev_event = by_rank[keys[0] % n_events]
    cdef int64_t cur_owner, cur_event
    with nogil:
        for i in range(1, n):
            cur_owner = keys[i] // n_events
            cur_event = by_rank[keys[i] % n_events]
            if cur_owner == prev_owner:
                co[m] = cur_owner
                src[m] = prev_event
                dst[m] = cur_event
                m += 1
            prev_owner = cur_owner
            prev_event = cur_event
    return a_co[:m].tolist(), a_src[:m].tolist(), a_dst[:m].tolist()


def count_triples(types, srcs, dsts):
    cdef array.array a_t = _as_i64(types)
    cdef array.array a_s = _as_i64(srcs)
    cdef array.array a_d = _as_i64(dsts)
    cdef int64_t[:] t = a_t
    cdef int64_t[:] s = a_s
    cdef int64_t[:] d = a_d
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t i
    cdef int64_t width = 1, max_t = 0
    if s.shape[0] != n or d.shape[0] != n:
        raise ValueError("input sequences differ in length")
    if n == 0:
        return [], [], [], []
    for i in range(n):
        if t[i] < 0 or s[i] < 0 or d[i] < 0:
            raise ValueError("negative index")
        if s[i] >= width:
            width = s[i] + 1
        if d[i] >= width:
            width = d[i] + 1
        if t[i] > max_t:
            max_t = t[i]
    if (max_t + 1) >= KEY_LIMIT // width // width:
        raise OverflowError("triples too wide to pack into 64-bit keys")

    cdef int64_t cells = (max_t + 1) * width * width
    if cells <= DENSE_LIMIT and cells <= 8 * n + 4096:
        return _count_dense(t, s, d, n, width, cells)

    cdef array.array a_keys = array.clone(a_t, n, zero=False)
    cdef int64_t[:] keys = a_keys
    for i in range(n):
        keys[i] = (t[i] * width + s[i]) * width + d[i]
    with nogil:
        qsort(&keys[0], n, sizeof(int64_t), _cmp_i64)

    out_t, out_s, out_d, out_c = [], [], [], []
    cdef int64_t run_key = keys[0]
    cdef int64_t run = 1
    for i in range(1, n + 1):
        if i < n and keys[i] == run_key:
            run += 1
            continue
        out_t.append(run_key // width // width)
        out_s.append((run_key // width) % width)
        out_d.append(run_key % width)
        out_c.append(run)
        if i < n:
            run_key = keys[i]
            run = 1
    return out_t, out_s, out_d, out_c


cdef tuple _count_dense(int64_t[:] t, int64_t[:] s, int64_t[:] d, Py_ssize_t n, int64_t width,
                        int64_t cells):
    cdef array.array a_table = array.clone(array.array("q"), cells, zero=True)
    cdef int64_t[:] table = a_table
    cdef Py_ssize_t i
    cdef int64_t k
    with nogil:
        for i in range(n):
            table[(t[i] * width + s[i]) * width + d[i]] += 1
    out_t, out_s, out_d, out_c = [], [], [], []
    for k in range(cells):
        if table[k]:
            out_t.append(k // width // width)
            out_s.append((k // width) % width)
            out_d.append(k % width)
            out_c.append(table[k])
    return out_t, out_s, out_d, out_c
