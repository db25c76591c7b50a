"""Pure-Python versions of the compiled kernels.

Used when the extension is not built, or when ``GEOACKER_PURE_PYTHON=1``.
Same algorithms, same tie rules, same outputs; only slower.
"""

import heapq
import math
from bisect import bisect_left

import numpy as np

NAME = "python"


def build_tree(pts, leafsize):
    n = pts.shape[0]
    perm = np.arange(n, dtype=np.int64)
    lo, hi, left, right, bbox = [0], [n], [], [], []
    node = 0
    while node < len(lo):
        s, e = lo[node], hi[node]
        seg = perm[s:e]
        xs = pts[seg, 0]
        ys = pts[seg, 1]
        if e > s:
            x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
        else:
            x0 = y0 = math.inf
            x1 = y1 = -math.inf
        bbox.append((x0, x1, y0, y1))
        if e - s <= leafsize:
            left.append(-1)
            right.append(-1)
        else:
            dim = 0 if (x1 - x0) >= (y1 - y0) else 1
            mid = s + (e - s) // 2
            perm[s:e] = seg[np.lexsort((seg, pts[seg, dim]))]
            left.append(len(lo))
            right.append(len(lo) + 1)
            lo.extend((s, mid))
            hi.extend((mid, e))
        node += 1
    as_i = lambda v: np.asarray(v, dtype=np.int64)
    return (perm, as_i(lo), as_i(hi), as_i(left), as_i(right),
            np.asarray(bbox, dtype=np.float64).reshape(-1, 4))


def _box_dist(box, qx, qy):
    x0, x1, y0, y1 = box
    dx = dy = 0.0
    if qx < x0:
        dx = x0 - qx
    elif qx > x1:
        dx = qx - x1
    if qy < y0:
        dy = y0 - qy
    elif qy > y1:
        dy = qy - y1
    return math.sqrt(dx * dx + dy * dy)


def knn_query(pts, perm, lo, hi, left, right, bbox, queries, k, exclude):
    m = queries.shape[0]
    out_idx = np.empty((m, k), dtype=np.int64)
    out_dist = np.empty((m, k), dtype=np.float64)
    xs = pts[:, 0].tolist()
    ys = pts[:, 1].tolist()
    perm_l = perm.tolist()
    lo_l, hi_l = lo.tolist(), hi.tolist()
    left_l, right_l = left.tolist(), right.tolist()
    boxes = [tuple(b) for b in bbox.tolist()]

    for q in range(m):
        qx, qy = float(queries[q, 0]), float(queries[q, 1])
        excl = int(exclude[q])
        # max-heap of (-dist, -index) keeps the worst candidate on top
        heap = []

        def offer(d, i):
            if len(heap) < k:
                heapq.heappush(heap, (-d, -i))
            elif (d, i) < (-heap[0][0], -heap[0][1]):
                heapq.heapreplace(heap, (-d, -i))

        def search(node):
            if left_l[node] == -1:
                for j in range(lo_l[node], hi_l[node]):
                    p = perm_l[j]
                    if p == excl:
                        continue
                    dx = qx - xs[p]
                    dy = qy - ys[p]
                    offer(math.sqrt(dx * dx + dy * dy), p)
                return
            a, b = left_l[node], right_l[node]
            da = _box_dist(boxes[a], qx, qy)
            db = _box_dist(boxes[b], qx, qy)
            if db < da:
                a, b, da, db = b, a, db, da
            if len(heap) < k or da <= -heap[0][0]:
                search(a)
            if len(heap) < k or db <= -heap[0][0]:
                search(b)

        search(0)
        found = sorted((-d, -i) for d, i in heap)
        for j, (d, i) in enumerate(found):
            out_idx[q, j] = i
            out_dist[q, j] = d
    return out_idx, out_dist


def vote_predictions(nbr_labels, ks, n_classes):
    n = nbr_labels.shape[0]
    out = np.empty((n, len(ks)), dtype=np.int64)
    ks_l = [int(k) for k in ks]
    for row, labels in enumerate(nbr_labels.tolist()):
        counts = [0] * n_classes
        first = [-1] * n_classes
        best, bestc, j = -1, 0, 0
        for rank, c in enumerate(labels):
            if j >= len(ks_l):
                break
            counts[c] += 1
            if first[c] < 0:
                first[c] = rank
            if counts[c] > bestc or (counts[c] == bestc and first[c] < first[best]):
                best, bestc = c, counts[c]
            while j < len(ks_l) and ks_l[j] == rank + 1:
                out[row, j] = best
                j += 1
    return out


def nearest_1d(values, ids, queries, l):
    vals = values.tolist()
    id_l = ids.tolist()
    n = len(vals)
    out = np.empty((len(queries), l), dtype=np.int64)
    for q, x in enumerate(queries.tolist()):
        b = bisect_left(vals, x)
        a = b - 1
        got = []
        while len(got) < l:
            dl = x - vals[a] if a >= 0 else math.inf
            dr = vals[b] - x if b < n else math.inf
            dmin = min(dl, dr)
            group = []
            while a >= 0 and x - vals[a] == dmin:
                group.append(id_l[a])
                a -= 1
            while b < n and vals[b] - x == dmin:
                group.append(id_l[b])
                b += 1
            if not group:
                break
            group.sort()
            got.extend(group[: l - len(got)])
        out[q, : len(got)] = got
    return out
