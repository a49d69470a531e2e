"""Dual-stream in-box visual point prompts from relevance heatmaps.

Foreground and background points come from two independently requested
heatmaps. Each heatmap is min-max normalized inside the governing box and
pixels scoring >= the confidence threshold become candidates; the highest
candidates are kept with a minimum Chebyshev spacing. The raw threshold
rule defines a set that may hold hundreds of pixels; the cap + spacing
keeps the strongest spatially spread representatives (promptable
segmenters respond poorly to dense redundant points). Cap=None and
spacing=0 restore the raw set.

Two ablation switches exist: "consensus-baseline" collapses the streams
into a single difference map (foreground points from its peaks, background
points from its troughs), and region "global" drops the box constraint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ._kernels import greedy_spaced
from .backends.base import VlmBackend
from .geometry import Box, ImageRef, Point, normalize_in_box

MODE_DUAL_STREAM = "dual-stream"
MODE_CONSENSUS_BASELINE = "consensus-baseline"
REGION_BOX = "box-constrained"
REGION_GLOBAL = "global"


@dataclass
class PointPromptConfig:
    threshold: float = 0.9
    cap: Optional[int] = 3  # None = keep every candidate
    spacing: int = 5
    mode: str = MODE_DUAL_STREAM
    region: str = REGION_BOX

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be >= 1 (or None for unlimited)")
        if self.spacing < 0:
            raise ValueError("spacing must be >= 0")
        if self.mode not in (MODE_DUAL_STREAM, MODE_CONSENSUS_BASELINE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.region not in (REGION_BOX, REGION_GLOBAL):
            raise ValueError(f"unknown region {self.region!r}")


@dataclass
class PointPrompt:
    """Point sets plus the box that governed their selection."""

    fg_points: List[Point]
    bg_points: List[Point]
    box: Box
    degenerate_fg: bool = False
    degenerate_bg: bool = False


def dual_stream_heatmaps(
    image: ImageRef, fg_text: str, bg_text: str, vlm: VlmBackend
) -> Tuple[np.ndarray, np.ndarray]:
    """Two independent heatmap requests; no fusion between the streams."""
    if not fg_text.strip() or not bg_text.strip():
        raise ValueError("both text prompts must be nonempty")
    return vlm.heatmap(image, fg_text), vlm.heatmap(image, bg_text)


def select_points(
    heatmap: np.ndarray, box: Box, cfg: PointPromptConfig
) -> Tuple[List[Point], bool]:
    """Thresholded in-box candidates, capped with a spacing floor.

    Candidates are ordered by descending normalized value (ties by (y, x));
    a degenerate (constant-in-box) heatmap returns no points plus a flag.
    """
    norm, degenerate = normalize_in_box(heatmap, box)
    if degenerate:
        return [], True
    ys, xs = np.nonzero(norm >= cfg.threshold)
    values = norm[ys, xs]
    order = np.lexsort((xs, ys, -values))
    ys, xs = ys[order], xs[order]
    cap = -1 if cfg.cap is None else cfg.cap
    kept = greedy_spaced(ys, xs, cap, cfg.spacing)
    return [(int(xs[i]), int(ys[i])) for i in kept], False


def build_point_prompt(
    heat_fg: np.ndarray, heat_bg: np.ndarray, box: Box, cfg: PointPromptConfig
) -> PointPrompt:
    """Select both point sets and resolve cross-stream ambiguity.

    A pixel chosen by both streams carries no usable evidence and is
    dropped from both sets. An empty foreground set raises the degenerate
    flag so the segmentation stage can fall back to box-only prompting.
    """
    height, width = np.asarray(heat_fg).shape
    if cfg.region == REGION_GLOBAL:
        box = Box.full(width, height)
    if cfg.mode == MODE_CONSENSUS_BASELINE:
        diff = np.asarray(heat_fg, dtype=np.float64) - np.asarray(heat_bg, dtype=np.float64)
        fg, degen_fg = select_points(diff, box, cfg)
        bg, degen_bg = select_points(-diff, box, cfg)
    else:
        fg, degen_fg = select_points(heat_fg, box, cfg)
        bg, degen_bg = select_points(heat_bg, box, cfg)
    overlap = set(fg) & set(bg)
    if overlap:
        fg = [p for p in fg if p not in overlap]
        bg = [p for p in bg if p not in overlap]
    return PointPrompt(
        fg_points=fg,
        bg_points=bg,
        box=box,
        degenerate_fg=degen_fg or not fg,
        degenerate_bg=degen_bg or not bg,
    )
