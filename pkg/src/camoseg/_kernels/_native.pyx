# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: 8-connected labeling and spaced point selection.

Semantics match ``camoseg._kernels.fallback`` exactly; tests compare the
two implementations bit for bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef int _find(cnp.int32_t[::1] parent, int i) nogil:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def label_components(mask):
    """8-connected labeling; labels 1..count in row-major first-touch order."""
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef int h = m.shape[0]
    cdef int w = m.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    cdef int max_provisional = ((w + 1) // 2) * ((h + 1) // 2) + 1
    parent_arr = np.arange(max_provisional, dtype=np.int32)
    cdef cnp.int32_t[::1] parent = parent_arr
    cdef int next_id = 0
    cdef int x, y, left, up, upleft, upright, ra, rb

    # First pass: provisional labels (stored 1-based in `labels`) with
    # union-find merges against the already-visited 8-neighbors.
    with nogil:
        for y in range(h):
            for x in range(w):
                if not m[y, x]:
                    continue
                left = labels[y, x - 1] if x > 0 else 0
                up = labels[y - 1, x] if y > 0 else 0
                upleft = labels[y - 1, x - 1] if (y > 0 and x > 0) else 0
                upright = labels[y - 1, x + 1] if (y > 0 and x + 1 < w) else 0
                if left == 0 and up == 0 and upleft == 0 and upright == 0:
                    labels[y, x] = next_id + 1
                    next_id += 1
                    continue
                ra = -1
                if left:
                    ra = _find(parent, left - 1)
                if up:
                    rb = _find(parent, up - 1)
                    if ra < 0:
                        ra = rb
                    elif rb < ra:
                        parent[ra] = rb
                        ra = rb
                    elif rb > ra:
                        parent[rb] = ra
                if upleft:
                    rb = _find(parent, upleft - 1)
                    if ra < 0:
                        ra = rb
                    elif rb < ra:
                        parent[ra] = rb
                        ra = rb
                    elif rb > ra:
                        parent[rb] = ra
                if upright:
                    rb = _find(parent, upright - 1)
                    if ra < 0:
                        ra = rb
                    elif rb < ra:
                        parent[ra] = rb
                        ra = rb
                    elif rb > ra:
                        parent[rb] = ra
                labels[y, x] = ra + 1

    # Second pass: compress every class to its root (the minimal provisional
    # id), then renumber roots in ascending order = first-touch order.
    remap_arr = np.zeros(next_id + 1, dtype=np.int32)
    cdef cnp.int32_t[::1] remap = remap_arr
    cdef int count = 0
    cdef int lab
    with nogil:
        for y in range(h):
            for x in range(w):
                lab = labels[y, x]
                if lab == 0:
                    continue
                lab = _find(parent, lab - 1) + 1
                if remap[lab] == 0:
                    count += 1
                    remap[lab] = count
                labels[y, x] = remap[lab]
    return labels_arr, count


def greedy_spaced(ys, xs, cap, spacing):
    """Greedy prioritized selection with a Chebyshev spacing floor."""
    cdef cnp.int64_t[::1] yv = np.ascontiguousarray(ys, dtype=np.int64)
    cdef cnp.int64_t[::1] xv = np.ascontiguousarray(xs, dtype=np.int64)
    cdef int n = yv.shape[0]
    kept_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] kept = kept_arr
    cdef int n_kept = 0
    cdef int icap = -1 if cap is None else int(cap)
    cdef long long sp = spacing
    cdef int i, k
    cdef long long dy, dx
    cdef bint ok
    with nogil:
        for i in range(n):
            if 0 <= icap <= n_kept:
                break
            ok = True
            for k in range(n_kept):
                dy = yv[i] - yv[kept[k]]
                if dy < 0:
                    dy = -dy
                dx = xv[i] - xv[kept[k]]
                if dx < 0:
                    dx = -dx
                if (dy if dy > dx else dx) < sp:
                    ok = False
                    break
            if ok:
                kept[n_kept] = i
                n_kept += 1
    return kept_arr[:n_kept].copy()
