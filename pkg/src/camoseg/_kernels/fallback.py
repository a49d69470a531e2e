"""Pure NumPy/Python implementations of the hot kernels.

Labeling works on horizontal runs instead of single pixels, so the Python
loop length scales with the number of runs (boundary complexity) rather
than the pixel count. Results are bit-identical to the native kernels.
"""

from __future__ import annotations

import numpy as np


def _find(parent: list, i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def label_components(mask: np.ndarray):
    """8-connected component labeling.

    Returns:
        (labels, count): int32 label image with 0 for background and labels
        1..count assigned in row-major first-touch order.
    """
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)
    parent: list = []
    runs = []  # (y, start, end, run_id) in row-major order
    prev_row: list = []  # runs of the previous row
    narrow = w < 64  # plain scanning beats numpy call overhead on short rows
    rows = m.tolist() if narrow else m
    for y in range(h):
        row = rows[y]
        if narrow:
            starts, ends = [], []
            prev = False
            for x, value in enumerate(row):
                if value and not prev:
                    starts.append(x)
                elif prev and not value:
                    ends.append(x)
                prev = value
            if prev:
                ends.append(w)
        else:
            if not row.any():
                prev_row = []
                continue
            padded = np.empty(w + 2, dtype=np.int8)
            padded[0] = padded[-1] = 0
            padded[1:-1] = row
            diff = np.diff(padded)
            starts = np.flatnonzero(diff == 1).tolist()
            ends = np.flatnonzero(diff == -1).tolist()
        if not starts:
            prev_row = []
            continue
        cur_row = []
        j = 0
        for s, e in zip(starts, ends):
            rid = len(parent)
            parent.append(rid)
            runs.append((y, s, e, rid))
            # 8-connectivity: runs [s,e) and [ps,pe) on adjacent rows touch
            # when s <= pe and ps <= e (diagonal contact included).
            while j < len(prev_row) and prev_row[j][1] < s:
                j += 1
            k = j
            while k < len(prev_row) and prev_row[k][0] <= e:
                ra = _find(parent, rid)
                rb = _find(parent, prev_row[k][2])
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb
                k += 1
            cur_row.append((s, e, rid))
        prev_row = cur_row
    # Relabel roots to 1..count in first-touch order (roots are the minimal
    # provisional id of their class, and provisional ids grow in scan order).
    remap: dict = {}
    count = 0
    for y, s, e, rid in runs:
        root = _find(parent, rid)
        lab = remap.get(root)
        if lab is None:
            count += 1
            lab = count
            remap[root] = lab
        labels[y, s:e] = lab
    return labels, count


def greedy_spaced(ys: np.ndarray, xs: np.ndarray, cap: int, spacing: int) -> np.ndarray:
    """Greedy selection of candidate indices with a Chebyshev spacing floor.

    Candidates are visited in the given (already prioritized) order; one is
    kept when it sits at Chebyshev distance >= spacing from everything kept
    so far. ``cap < 0`` means unlimited.
    """
    ys = np.asarray(ys, dtype=np.int64)
    xs = np.asarray(xs, dtype=np.int64)
    kept: list = []
    for i in range(len(ys)):
        if 0 <= cap <= len(kept):
            break
        y, x = ys[i], xs[i]
        ok = True
        for k in kept:
            if max(abs(int(y) - int(ys[k])), abs(int(x) - int(xs[k]))) < spacing:
                ok = False
                break
        if ok:
            kept.append(i)
    return np.asarray(kept, dtype=np.int64)
