"""Interpreted-Python kernels.

Reference implementations of the hot inner loops. The compiled extension
(_compiled.pyx) mirrors these exactly: same visit order, same accumulation
order, same tie-breaking, so both backends produce bit-identical results.
"""

import heapq
import math

BACKEND = "pure"


def _as_list(values):
    tolist = getattr(values, "tolist", None)
    if tolist is not None:
        return tolist()
    return list(values)


def grow_region(norm, grid_rows, grid_cols, c_threshold, r_cap):
    """Grow the lowest-confidence 4-connected region.

    Seeds at the global-minimum cell (ties: smallest row-major index) and
    expands through a min-heap keyed by (confidence, row-major index),
    admitting cells with confidence <= c_threshold until the heap drains
    or the region holds r_cap cells.

    Returns admitted flat indices in admission order.
    """
    vals = _as_list(norm)
    n = grid_rows * grid_cols
    seed = 0
    for i in range(1, n):
        if vals[i] < vals[seed]:
            seed = i
    heap = [(vals[seed], seed)]
    in_region = [False] * n
    admitted = []
    while heap and len(admitted) < r_cap:
        _, p = heapq.heappop(heap)
        if not in_region[p] and vals[p] <= c_threshold:
            in_region[p] = True
            admitted.append(p)
        r, c = divmod(p, grid_cols)
        if r > 0:
            q = p - grid_cols
            if not in_region[q] and vals[q] <= c_threshold:
                heapq.heappush(heap, (vals[q], q))
        if r < grid_rows - 1:
            q = p + grid_cols
            if not in_region[q] and vals[q] <= c_threshold:
                heapq.heappush(heap, (vals[q], q))
        if c > 0:
            q = p - 1
            if not in_region[q] and vals[q] <= c_threshold:
                heapq.heappush(heap, (vals[q], q))
        if c < grid_cols - 1:
            q = p + 1
            if not in_region[q] and vals[q] <= c_threshold:
                heapq.heappush(heap, (vals[q], q))
    return admitted


def anchor_means(norm, grid_rows, grid_cols, offsets_r, offsets_c):
    """Mean confidence of the offset shape anchored at every legal corner.

    Anchors are enumerated row-major; the per-anchor sum runs over offsets
    in the order given. Returns (means, anchor_rows, anchor_cols) as lists;
    empty lists when the shape does not fit.
    """
    vals = _as_list(norm)
    offs_r = _as_list(offsets_r)
    offs_c = _as_list(offsets_c)
    k = len(offs_r)
    max_dr = max(offs_r)
    max_dc = max(offs_c)
    rows = grid_rows - max_dr
    cols = grid_cols - max_dc
    means = []
    anchor_rows = []
    anchor_cols = []
    if rows <= 0 or cols <= 0:
        return means, anchor_rows, anchor_cols
    for r in range(rows):
        for c in range(cols):
            total = 0.0
            for j in range(k):
                total += vals[(r + offs_r[j]) * grid_cols + (c + offs_c[j])]
            means.append(total / k)
            anchor_rows.append(r)
            anchor_cols.append(c)
    return means, anchor_rows, anchor_cols


def directed_min_distances(src_r, src_c, dst_r, dst_c):
    """Euclidean distance from each source point to its nearest dest point.

    Coordinates are integers; the minimum is taken over exact squared
    distances before the square root, so results carry no accumulation
    error and match the compiled kernel bit for bit.
    """
    sr = _as_list(src_r)
    sc = _as_list(src_c)
    dr = _as_list(dst_r)
    dc = _as_list(dst_c)
    m = len(dr)
    out = []
    for i in range(len(sr)):
        r, c = sr[i], sc[i]
        best = (r - dr[0]) ** 2 + (c - dc[0]) ** 2
        for j in range(1, m):
            d = (r - dr[j]) ** 2 + (c - dc[j]) ** 2
            if d < best:
                best = d
        out.append(math.sqrt(best))
    return out
