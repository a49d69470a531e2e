"""Text-to-mask stages: one promptable-segmentation pass, chained coarse to fine.

The coarse stage prompts with the phrase pair inside the initial box; its
mask is reduced to the best-IoU candidate box, and the fine stage reruns
the same machinery with the word pair inside that refined box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .backends.base import BackendError, VfmBackend, VlmBackend
from .geometry import Box, ImageRef, max_iou_box
from .point_prompts import PointPrompt, PointPromptConfig, build_point_prompt, dual_stream_heatmaps
from .prompt_chain import PromptHierarchy

STAGE_COARSE = "coarse"
STAGE_FINE = "fine"


class StageError(RuntimeError):
    """Backend failure inside one segmentation stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage


@dataclass
class StageResult:
    mask: np.ndarray  # (H, W) bool
    box_used: Box
    prompt: PointPrompt
    stage: str


def run_stage(
    image: ImageRef,
    fg_text: str,
    bg_text: str,
    box: Box,
    cfg: PointPromptConfig,
    vlm: VlmBackend,
    vfm: VfmBackend,
    stage: str,
) -> StageResult:
    """Heatmaps -> point prompt -> segmenter call for one stage.

    A degenerate foreground stream falls back to a box-only segmenter call;
    a degenerate background stream proceeds with foreground points alone.
    """
    try:
        heat_fg, heat_bg = dual_stream_heatmaps(image, fg_text, bg_text, vlm)
        prompt = build_point_prompt(heat_fg, heat_bg, box, cfg)
        if prompt.degenerate_fg:
            mask = vfm.segment(image, [], [], prompt.box)
        else:
            mask = vfm.segment(image, prompt.fg_points, prompt.bg_points, prompt.box)
    except BackendError as exc:
        raise StageError(stage, exc) from exc
    return StageResult(mask=np.asarray(mask, dtype=bool), box_used=prompt.box, prompt=prompt, stage=stage)


def refine_box(coarse: StageResult, margin: int = 0) -> Box:
    """Best-IoU candidate box of the coarse mask.

    An empty coarse mask keeps the coarse stage's own box: widening back to
    the full image would throw away the only localization signal left.
    """
    mask = coarse.mask
    if not mask.any():
        return coarse.box_used
    box = max_iou_box(mask)
    if margin > 0:
        box = box.expand(margin, mask.shape[1], mask.shape[0])
    return box


def coarse_to_fine(
    image: ImageRef,
    hierarchy: PromptHierarchy,
    coarse_box: Box,
    cfg: PointPromptConfig,
    vlm: VlmBackend,
    vfm: VfmBackend,
    skip_coarse_stage: bool = False,
    skip_fine_stage: bool = False,
    box_margin: int = 0,
) -> Tuple[Optional[StageResult], StageResult]:
    """Run both stages; returns (coarse result or None, final result).

    Skipping the coarse stage runs the word prompts directly inside the
    initial box; skipping the fine stage returns the coarse result itself
    as final (no hidden post-processing either way).
    """
    if skip_coarse_stage:
        fine = run_stage(
            image, hierarchy.fg_word, hierarchy.bg_word, coarse_box, cfg, vlm, vfm, STAGE_FINE
        )
        return None, fine
    coarse = run_stage(
        image, hierarchy.fg_phrase, hierarchy.bg_phrase, coarse_box, cfg, vlm, vfm, STAGE_COARSE
    )
    if skip_fine_stage:
        return coarse, coarse
    fine_box = refine_box(coarse, margin=box_margin)
    fine = run_stage(
        image, hierarchy.fg_word, hierarchy.bg_word, fine_box, cfg, vlm, vfm, STAGE_FINE
    )
    return coarse, fine
