# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics mirror pure.py exactly (same visit order,
same accumulation order, same tie-breaking)."""

from libc.math cimport sqrt
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.vector cimport vector

BACKEND = "compiled"


def grow_region(double[::1] norm, int grid_rows, int grid_cols,
                double c_threshold, long r_cap):
    """Grow the lowest-confidence 4-connected region; see pure.grow_region."""
    cdef long n = grid_rows * grid_cols
    cdef long i, p, q, r, c
    cdef long seed = 0
    # std::priority_queue is a max-heap: negate both key and index so the
    # top is the (smallest confidence, smallest row-major index) entry.
    cdef priority_queue[pair[double, long]] heap
    cdef vector[char] in_region = vector[char](n, <char>0)
    admitted = []

    for i in range(1, n):
        if norm[i] < norm[seed]:
            seed = i
    heap.push(pair[double, long](-norm[seed], -seed))
    while heap.size() > 0 and <long>len(admitted) < r_cap:
        p = -heap.top().second
        heap.pop()
        if in_region[p] == 0 and norm[p] <= c_threshold:
            in_region[p] = 1
            admitted.append(p)
        r = p // grid_cols
        c = p % grid_cols
        if r > 0:
            q = p - grid_cols
            if in_region[q] == 0 and norm[q] <= c_threshold:
                heap.push(pair[double, long](-norm[q], -q))
        if r < grid_rows - 1:
            q = p + grid_cols
            if in_region[q] == 0 and norm[q] <= c_threshold:
                heap.push(pair[double, long](-norm[q], -q))
        if c > 0:
            q = p - 1
            if in_region[q] == 0 and norm[q] <= c_threshold:
                heap.push(pair[double, long](-norm[q], -q))
        if c < grid_cols - 1:
            q = p + 1
            if in_region[q] == 0 and norm[q] <= c_threshold:
                heap.push(pair[double, long](-norm[q], -q))
    return admitted


def anchor_means(double[::1] norm, int grid_rows, int grid_cols,
                 long[::1] offsets_r, long[::1] offsets_c):
    """Mean confidence at every legal anchor; see pure.anchor_means."""
    cdef long k = offsets_r.shape[0]
    cdef long j, r, c
    cdef long max_dr = offsets_r[0]
    cdef long max_dc = offsets_c[0]
    cdef double total
    for j in range(1, k):
        if offsets_r[j] > max_dr:
            max_dr = offsets_r[j]
        if offsets_c[j] > max_dc:
            max_dc = offsets_c[j]
    cdef long rows = grid_rows - max_dr
    cdef long cols = grid_cols - max_dc
    means = []
    anchor_rows = []
    anchor_cols = []
    if rows <= 0 or cols <= 0:
        return means, anchor_rows, anchor_cols
    for r in range(rows):
        for c in range(cols):
            total = 0.0
            for j in range(k):
                total += norm[(r + offsets_r[j]) * grid_cols + (c + offsets_c[j])]
            means.append(total / k)
            anchor_rows.append(r)
            anchor_cols.append(c)
    return means, anchor_rows, anchor_cols


def directed_min_distances(long[::1] src_r, long[::1] src_c,
                           long[::1] dst_r, long[::1] dst_c):
    """Nearest-point Euclidean distances; see pure.directed_min_distances."""
    cdef long n = src_r.shape[0]
    cdef long m = dst_r.shape[0]
    cdef long i, j, r, c, d, best
    out = []
    for i in range(n):
        r = src_r[i]
        c = src_c[i]
        best = (r - dst_r[0]) ** 2 + (c - dst_c[0]) ** 2
        for j in range(1, m):
            d = (r - dst_r[j]) ** 2 + (c - dst_c[j]) ** 2
            if d < best:
                best = d
        out.append(sqrt(<double>best))
    return out
