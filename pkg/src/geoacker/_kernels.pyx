# cython: language_level=3
"""Compiled hot loops: kd-tree build/query, majority-vote table, 1-D nearest walk.

Every routine here has a line-for-line counterpart in ``_pykernels``; the two
must return identical arrays for identical inputs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64

NAME = "cython"


# ---------------------------------------------------------------- tree build

cdef inline bint _key_less(const f64[:, ::1] pts, int dim, i64 a, i64 b) noexcept nogil:
    cdef f64 va = pts[a, dim]
    cdef f64 vb = pts[b, dim]
    return va < vb or (va == vb and a < b)


cdef void _select(const f64[:, ::1] pts, i64[::1] perm, i64 lo, i64 hi,
                  i64 nth, int dim) noexcept nogil:
    # Quickselect on perm[lo:hi] by (coordinate, index) so that perm[nth] is
    # in sorted position, smaller keys before it and larger after.
    cdef i64 left = lo, right = hi - 1, i, j, mid, pivot, tmp
    while right > left:
        mid = left + (right - left) // 2
        # median of three into perm[mid]
        if _key_less(pts, dim, perm[mid], perm[left]):
            tmp = perm[mid]; perm[mid] = perm[left]; perm[left] = tmp
        if _key_less(pts, dim, perm[right], perm[left]):
            tmp = perm[right]; perm[right] = perm[left]; perm[left] = tmp
        if _key_less(pts, dim, perm[right], perm[mid]):
            tmp = perm[right]; perm[right] = perm[mid]; perm[mid] = tmp
        pivot = perm[mid]
        i = left
        j = right
        while i <= j:
            while _key_less(pts, dim, perm[i], pivot):
                i += 1
            while _key_less(pts, dim, pivot, perm[j]):
                j -= 1
            if i <= j:
                tmp = perm[i]; perm[i] = perm[j]; perm[j] = tmp
                i += 1
                j -= 1
        if nth <= j:
            right = j
        elif nth >= i:
            left = i
        else:
            return


def build_tree(const f64[:, ::1] pts, int leafsize):
    """Build kd-tree arrays over ``pts`` (n x 2).

    Returns ``(perm, lo, hi, left, right, bbox)``; leaves have ``left == -1``.
    """
    cdef i64 n = pts.shape[0]
    # leaves hold at least (leafsize + 1) // 2 points
    cdef i64 cap = 2 * (n // max((leafsize + 1) // 2, 1)) + 3
    perm_arr = np.arange(n, dtype=np.int64)
    lo_arr = np.empty(cap, dtype=np.int64)
    hi_arr = np.empty(cap, dtype=np.int64)
    left_arr = np.empty(cap, dtype=np.int64)
    right_arr = np.empty(cap, dtype=np.int64)
    bbox_arr = np.empty((cap, 4), dtype=np.float64)
    cdef i64[::1] perm = perm_arr
    cdef i64[::1] lo = lo_arr
    cdef i64[::1] hi = hi_arr
    cdef i64[::1] left = left_arr
    cdef i64[::1] right = right_arr
    cdef f64[:, ::1] bbox = bbox_arr
    cdef i64 n_nodes = 1, node = 0, s, e, i, mid, p
    cdef f64 x, y, x0, x1, y0, y1
    cdef int dim
    lo[0] = 0
    hi[0] = n
    with nogil:
        # nodes are created in breadth-first order, so a single forward pass
        # visits every node after its parent
        while node < n_nodes:
            s = lo[node]
            e = hi[node]
            x0 = INFINITY; x1 = -INFINITY; y0 = INFINITY; y1 = -INFINITY
            for i in range(s, e):
                p = perm[i]
                x = pts[p, 0]
                y = pts[p, 1]
                if x < x0: x0 = x
                if x > x1: x1 = x
                if y < y0: y0 = y
                if y > y1: y1 = y
            bbox[node, 0] = x0
            bbox[node, 1] = x1
            bbox[node, 2] = y0
            bbox[node, 3] = y1
            if e - s <= leafsize:
                left[node] = -1
                right[node] = -1
            else:
                dim = 0 if (x1 - x0) >= (y1 - y0) else 1
                mid = s + (e - s) // 2
                _select(pts, perm, s, e, mid, dim)
                left[node] = n_nodes
                lo[n_nodes] = s
                hi[n_nodes] = mid
                right[node] = n_nodes + 1
                lo[n_nodes + 1] = mid
                hi[n_nodes + 1] = e
                n_nodes += 2
            node += 1
    return (perm_arr, lo_arr[:n_nodes].copy(), hi_arr[:n_nodes].copy(),
            left_arr[:n_nodes].copy(), right_arr[:n_nodes].copy(),
            bbox_arr[:n_nodes].copy())


# ---------------------------------------------------------------- tree query

cdef inline bint _greater(f64 da, i64 ia, f64 db, i64 ib) noexcept nogil:
    return da > db or (da == db and ia > ib)


cdef struct Heap:
    f64 *d
    i64 *i
    i64 size
    i64 cap


cdef void _heap_offer(Heap *h, f64 d, i64 idx) noexcept nogil:
    # bounded max-heap keyed by (distance, index)
    cdef i64 pos, parent, child, other
    if h.size < h.cap:
        pos = h.size
        h.size += 1
        while pos > 0:
            parent = (pos - 1) // 2
            if _greater(d, idx, h.d[parent], h.i[parent]):
                h.d[pos] = h.d[parent]
                h.i[pos] = h.i[parent]
                pos = parent
            else:
                break
        h.d[pos] = d
        h.i[pos] = idx
        return
    if not _greater(h.d[0], h.i[0], d, idx):
        return
    pos = 0
    while True:
        child = 2 * pos + 1
        if child >= h.size:
            break
        other = child + 1
        if other < h.size and _greater(h.d[other], h.i[other], h.d[child], h.i[child]):
            child = other
        if _greater(h.d[child], h.i[child], d, idx):
            h.d[pos] = h.d[child]
            h.i[pos] = h.i[child]
            pos = child
        else:
            break
    h.d[pos] = d
    h.i[pos] = idx


cdef inline f64 _box_dist(const f64[:, ::1] bbox, i64 node, f64 qx, f64 qy) noexcept nogil:
    cdef f64 dx = 0.0, dy = 0.0
    if qx < bbox[node, 0]:
        dx = bbox[node, 0] - qx
    elif qx > bbox[node, 1]:
        dx = qx - bbox[node, 1]
    if qy < bbox[node, 2]:
        dy = bbox[node, 2] - qy
    elif qy > bbox[node, 3]:
        dy = qy - bbox[node, 3]
    return sqrt(dx * dx + dy * dy)


cdef void _search(const f64[:, ::1] pts, const i64[::1] perm, const i64[::1] lo,
                  const i64[::1] hi, const i64[::1] left, const i64[::1] right,
                  const f64[:, ::1] bbox, i64 node, f64 qx, f64 qy, i64 excl,
                  Heap *h) noexcept nogil:
    cdef i64 i, p, a, b, t
    cdef f64 dx, dy, da, db, tf
    if left[node] == -1:
        for i in range(lo[node], hi[node]):
            p = perm[i]
            if p == excl:
                continue
            dx = qx - pts[p, 0]
            dy = qy - pts[p, 1]
            _heap_offer(h, sqrt(dx * dx + dy * dy), p)
        return
    a = left[node]
    b = right[node]
    da = _box_dist(bbox, a, qx, qy)
    db = _box_dist(bbox, b, qx, qy)
    if db < da:
        t = a; a = b; b = t
        tf = da; da = db; db = tf
    # prune only when strictly farther: an equal distance can still win on index
    if h.size < h.cap or da <= h.d[0]:
        _search(pts, perm, lo, hi, left, right, bbox, a, qx, qy, excl, h)
    if h.size < h.cap or db <= h.d[0]:
        _search(pts, perm, lo, hi, left, right, bbox, b, qx, qy, excl, h)


cdef void _resift(Heap *h, f64 d, i64 idx) noexcept nogil:
    cdef i64 pos = 0, child, other
    while True:
        child = 2 * pos + 1
        if child >= h.size:
            break
        other = child + 1
        if other < h.size and _greater(h.d[other], h.i[other], h.d[child], h.i[child]):
            child = other
        if _greater(h.d[child], h.i[child], d, idx):
            h.d[pos] = h.d[child]
            h.i[pos] = h.i[child]
            pos = child
        else:
            break
    h.d[pos] = d
    h.i[pos] = idx


def knn_query(const f64[:, ::1] pts, const i64[::1] perm, const i64[::1] lo,
              const i64[::1] hi, const i64[::1] left, const i64[::1] right,
              const f64[:, ::1] bbox, const f64[:, ::1] queries, i64 k,
              const i64[::1] exclude):
    """k nearest points for every query row, ordered by (distance, index)."""
    cdef i64 m = queries.shape[0], q, j, last
    out_idx = np.empty((m, k), dtype=np.int64)
    out_dist = np.empty((m, k), dtype=np.float64)
    cdef i64[:, ::1] oi = out_idx
    cdef f64[:, ::1] od = out_dist
    cdef Heap h
    cdef f64 td
    cdef i64 ti
    if m == 0 or k == 0:
        return out_idx, out_dist
    h.d = <f64 *> malloc(k * sizeof(f64))
    h.i = <i64 *> malloc(k * sizeof(i64))
    h.cap = k
    if h.d == NULL or h.i == NULL:
        free(h.d)
        free(h.i)
        raise MemoryError()
    try:
        with nogil:
            for q in range(m):
                h.size = 0
                _search(pts, perm, lo, hi, left, right, bbox, 0,
                        queries[q, 0], queries[q, 1], exclude[q], &h)
                # heap-sort in place: pop maxima to the back
                last = h.size
                while last > 0:
                    last -= 1
                    td = h.d[0]
                    ti = h.i[0]
                    oi[q, last] = ti
                    od[q, last] = td
                    # move last leaf to root and sift down within [0, last)
                    h.size = last
                    if last > 0:
                        _resift(&h, h.d[last], h.i[last])
    finally:
        free(h.d)
        free(h.i)
    return out_idx, out_dist


# ---------------------------------------------------------------- voting

def vote_predictions(const i64[:, ::1] nbr_labels, const i64[::1] ks, i64 n_classes):
    """Majority class of the first k neighbor labels, for every row and every k.

    Ties between classes go to the class whose nearest member has the
    smallest neighbor rank.
    """
    cdef i64 n = nbr_labels.shape[0], kmax = nbr_labels.shape[1]
    cdef i64 r = ks.shape[0], row, rank, j, c, best, bestc
    out = np.empty((n, r), dtype=np.int64)
    cdef i64[:, ::1] o = out
    if n == 0 or r == 0:
        return out
    cdef i64 *counts = <i64 *> malloc(n_classes * sizeof(i64))
    cdef i64 *first = <i64 *> malloc(n_classes * sizeof(i64))
    if counts == NULL or first == NULL:
        free(counts)
        free(first)
        raise MemoryError()
    try:
        with nogil:
            for row in range(n):
                for c in range(n_classes):
                    counts[c] = 0
                    first[c] = -1
                best = -1
                bestc = 0
                j = 0
                for rank in range(kmax):
                    if j >= r:
                        break
                    c = nbr_labels[row, rank]
                    counts[c] += 1
                    if first[c] < 0:
                        first[c] = rank
                    if counts[c] > bestc or (counts[c] == bestc and first[c] < first[best]):
                        best = c
                        bestc = counts[c]
                    while j < r and ks[j] == rank + 1:
                        o[row, j] = best
                        j += 1
    finally:
        free(counts)
        free(first)
    return out


# ---------------------------------------------------------------- 1-D walk

cdef int _cmp_i64(const void *a, const void *b) noexcept nogil:
    cdef i64 x = (<i64 *> a)[0]
    cdef i64 y = (<i64 *> b)[0]
    return (x > y) - (x < y)


def nearest_1d(const f64[::1] values, const i64[::1] ids, const f64[::1] queries, i64 l):
    """The ``l`` entries closest to each query on a sorted line.

    ``values`` ascending with ties ordered by ``ids``; results are ordered by
    (|value - query|, id).
    """
    cdef i64 n = values.shape[0], m = queries.shape[0]
    out = np.empty((m, l), dtype=np.int64)
    cdef i64[:, ::1] o = out
    cdef i64 q, a, b, lo_, hi_, mid, got, g, t
    cdef f64 x, dl, dr, dmin
    if m == 0 or l == 0:
        return out
    cdef i64 *group = <i64 *> malloc(n * sizeof(i64))
    if group == NULL:
        raise MemoryError()
    try:
        with nogil:
            for q in range(m):
                x = queries[q]
                lo_ = 0
                hi_ = n
                while lo_ < hi_:
                    mid = (lo_ + hi_) // 2
                    if values[mid] < x:
                        lo_ = mid + 1
                    else:
                        hi_ = mid
                a = lo_ - 1
                b = lo_
                got = 0
                while got < l:
                    dl = x - values[a] if a >= 0 else INFINITY
                    dr = values[b] - x if b < n else INFINITY
                    dmin = dl if dl <= dr else dr
                    g = 0
                    while a >= 0 and x - values[a] == dmin:
                        group[g] = ids[a]
                        g += 1
                        a -= 1
                    while b < n and values[b] - x == dmin:
                        group[g] = ids[b]
                        g += 1
                        b += 1
                    if g == 0:
                        break
                    if g > 1:
                        qsort(group, g, sizeof(i64), _cmp_i64)
                    t = 0
                    while t < g and got < l:
                        o[q, got] = group[t]
                        got += 1
                        t += 1
    finally:
        free(group)
    return out
