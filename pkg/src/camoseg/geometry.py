"""Shared geometry and heatmap math: boxes, masks, in-box normalization, IoU.

Conventions used throughout the package:

* images are ``(H, W, 3)`` uint8 arrays, masks are ``(H, W)`` bool arrays and
  heatmaps are ``(H, W)`` float arrays with finite values;
* boxes are axis-aligned with inclusive-exclusive pixel coordinates,
  ``[x0, x1) x [y0, y1)``, so ``width = x1 - x0``;
* connected components use 8-connectivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ._kernels import label_components

Point = Tuple[int, int]  # (x, y) pixel coordinates


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, inclusive-exclusive: covers [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box {self.as_tuple()}")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"negative box origin {self.as_tuple()}")

    @classmethod
    def full(cls, width: int, height: int) -> "Box":
        return cls(0, 0, width, height)

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains_point(self, x: int, y: int) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def check_frame(self, width: int, height: int) -> None:
        """Raise if the box does not fit a width x height frame."""
        if self.x1 > width or self.y1 > height:
            raise ValueError(f"box {self.as_tuple()} exceeds frame {width}x{height}")

    def slices(self) -> Tuple[slice, slice]:
        """(row, column) slices selecting the box region of an (H, W) array."""
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def expand(self, margin: int, width: int, height: int) -> "Box":
        if margin <= 0:
            return self
        return clamp_box(
            (self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin),
            width,
            height,
        )


@dataclass
class ImageRef:
    """An RGB image plus the stable identifier used to pair it with outputs."""

    identifier: str
    pixels: np.ndarray = field(repr=False)  # (H, W, 3) uint8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("image pixels must be (H, W, 3)")
        if not self.identifier:
            raise ValueError("image identifier must be nonempty")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


def clamp_box(raw: Sequence[float], width: int, height: int) -> Box:
    """Clip a raw (x0, y0, x1, y1) quadruple to the frame.

    A clipped box with zero area degrades to the full-image box so callers
    always get something usable.
    """
    x0, y0, x1, y1 = (int(round(float(v))) for v in raw)
    x0 = min(max(x0, 0), width)
    x1 = min(max(x1, 0), width)
    y0 = min(max(y0, 0), height)
    y1 = min(max(y1, 0), height)
    if x1 <= x0 or y1 <= y0:
        return Box.full(width, height)
    return Box(x0, y0, x1, y1)


def normalize_in_box(heatmap: np.ndarray, box: Box) -> Tuple[np.ndarray, bool]:
    """Min-max rescale the heatmap inside `box`; zero everything outside.

    Uses only the in-box min/max, so the non-degenerate output has exact 0
    and exact 1 somewhere inside the box. A constant in-box region cannot be
    rescaled; it is zeroed out and flagged instead (the caller decides the
    fallback).

    Returns:
        (normalized float64 heatmap, degenerate flag)
    """
    h = np.asarray(heatmap, dtype=np.float64)
    if h.ndim != 2:
        raise ValueError("heatmap must be 2-D")
    box.check_frame(h.shape[1], h.shape[0])
    out = np.zeros_like(h)
    region = h[box.slices()]
    lo = float(region.min())
    hi = float(region.max())
    if hi == lo:
        return out, True
    out[box.slices()] = (region - lo) / (hi - lo)
    return out, False


def iou_box_mask(box: Box, mask: np.ndarray) -> float:
    """IoU between the box treated as a filled region and a binary mask."""
    m = np.asarray(mask, dtype=bool)
    box.check_frame(m.shape[1], m.shape[0])
    inter = int(m[box.slices()].sum())
    union = box.area + int(m.sum()) - inter
    if union == 0:
        return 0.0
    return inter / union


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Plain mask/mask IoU; 1.0 when both masks are empty."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError("mask shapes differ")
    union = int((a | b).sum())
    if union == 0:
        return 1.0
    return int((a & b).sum()) / union


def tight_box(mask: np.ndarray) -> Box:
    """Tight bounding box of the foreground pixels (mask must be nonempty)."""
    ys, xs = np.nonzero(np.asarray(mask, dtype=bool))
    if len(ys) == 0:
        raise ValueError("tight_box of an empty mask")
    return Box(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def connected_components(mask: np.ndarray) -> Tuple[np.ndarray, int]:
    """8-connected labeling; labels are 1..n in row-major first-touch order."""
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError("mask must be 2-D")
    return label_components(m)


def component_boxes(mask: np.ndarray) -> List[Box]:
    m = np.asarray(mask, dtype=bool)
    labels, count = connected_components(m)
    if count == 0:
        return []
    ys, xs = np.nonzero(m)
    labs = labels[ys, xs]
    h, w = m.shape
    x_lo = np.full(count + 1, w, dtype=np.int64)
    y_lo = np.full(count + 1, h, dtype=np.int64)
    x_hi = np.full(count + 1, -1, dtype=np.int64)
    y_hi = np.full(count + 1, -1, dtype=np.int64)
    np.minimum.at(x_lo, labs, xs)
    np.minimum.at(y_lo, labs, ys)
    np.maximum.at(x_hi, labs, xs)
    np.maximum.at(y_hi, labs, ys)
    return [
        Box(int(x_lo[lab]), int(y_lo[lab]), int(x_hi[lab]) + 1, int(y_hi[lab]) + 1)
        for lab in range(1, count + 1)
    ]


def max_iou_box(mask: np.ndarray) -> Box:
    """Candidate box with the best IoU against the mask.

    Candidates are the tight box of every 8-connected component plus the
    tight box of all foreground pixels (so multi-part objects keep a box
    covering every part). Ties prefer the larger box, then the smaller
    (y0, x0). An empty mask falls back to the full-image box.
    """
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    boxes = component_boxes(m)
    if not boxes:
        return Box.full(w, h)
    candidates = {b.as_tuple() for b in boxes}
    candidates.add(
        (
            min(b.x0 for b in boxes),
            min(b.y0 for b in boxes),
            max(b.x1 for b in boxes),
            max(b.y1 for b in boxes),
        )
    )
    total = int(m.sum())
    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(m, axis=0), axis=1, out=integral[1:, 1:])
    best = None
    best_key = None
    for x0, y0, x1, y1 in candidates:
        inter = int(
            integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]
        )
        area = (x1 - x0) * (y1 - y0)
        iou = inter / (area + total - inter)
        key = (-iou, -area, y0, x0)
        if best_key is None or key < best_key:
            best, best_key = Box(x0, y0, x1, y1), key
    return best
