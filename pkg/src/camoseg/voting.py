"""Consistency voting over parallel pipeline repetitions.

Chat replies are stochastic in production, so the pipeline runs I
independent repetitions (each with its own synonym of the task-generic
prompt and its own chat session) and keeps the candidate mask closest to
the pixel-wise mean of all candidates. L1 distance to the mean makes the
selection an agreement-weighted vote and is integer-exact after scaling
by I.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .backends.base import MllmBackend, VfmBackend, VlmBackend
from .geometry import Box, ImageRef
from .point_prompts import PointPromptConfig
from .prompt_chain import (
    PromptHierarchy,
    QueryTemplates,
    TaskPrompt,
    run_chain,
    run_direct_chain,
)
from .stages import StageResult, coarse_to_fine


class PipelineError(RuntimeError):
    """Every repetition of one image failed."""


@dataclass
class ConsensusResult:
    selected_index: int
    mask: np.ndarray
    distances: List[float]


def select_consistent_mask(masks: Sequence[np.ndarray]) -> ConsensusResult:
    """Pick the mask with minimal L1 distance to the pixel-wise mean.

    Ties resolve to the lowest index.
    """
    if len(masks) == 0:
        raise ValueError("no masks to vote over")
    arrays = [np.asarray(m, dtype=bool) for m in masks]
    shape = arrays[0].shape
    for m in arrays:
        if m.shape != shape:
            raise ValueError("masks must share dimensions")
    count = len(arrays)
    votes = np.zeros(shape, dtype=np.int64)
    for m in arrays:
        votes += m
    # |m - votes/count| summed, scaled by count: integer-exact, so ties are
    # genuine ties and resolve to the lowest index
    scaled = [int(np.abs(count * m.astype(np.int64) - votes).sum()) for m in arrays]
    selected = int(np.argmin(scaled))
    distances = [s / count for s in scaled]
    return ConsensusResult(selected_index=selected, mask=arrays[selected], distances=distances)


@dataclass
class PipelineConfig:
    prompt: TaskPrompt = field(default_factory=TaskPrompt)
    templates: QueryTemplates = field(default_factory=QueryTemplates)
    repeats: int = 3
    points: PointPromptConfig = field(default_factory=PointPromptConfig)
    skip_decomposition: bool = False  # direct caption->word queries
    skip_coarse_stage: bool = False
    skip_fine_stage: bool = False
    box_margin: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class RepetitionOutcome:
    index: int
    synonym: str
    hierarchy: Optional[PromptHierarchy] = None
    coarse_box: Optional[Box] = None
    coarse: Optional[StageResult] = None
    fine: Optional[StageResult] = None
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.error is None and self.fine is not None

    def to_record(self) -> Dict:
        record: Dict = {"index": self.index, "synonym": self.synonym}
        if self.error is not None:
            record["error"] = self.error
            return record
        record.update(
            caption=self.hierarchy.caption,
            fg_phrase=self.hierarchy.fg_phrase,
            bg_phrase=self.hierarchy.bg_phrase,
            fg_word=self.hierarchy.fg_word,
            bg_word=self.hierarchy.bg_word,
            coarse_box=list(self.coarse_box.as_tuple()),
            fine_box=list(self.fine.box_used.as_tuple()),
            fg_points=[list(p) for p in self.fine.prompt.fg_points],
            bg_points=[list(p) for p in self.fine.prompt.bg_points],
        )
        return record


@dataclass
class PipelineDiagnostics:
    outcomes: List[RepetitionOutcome]
    distances: List[float]
    selected_index: int
    synonyms_cycled: bool
    duration_s: float

    def to_record(self) -> Dict:
        return {
            "selected_index": self.selected_index,
            "distances": self.distances,
            "synonyms_cycled": self.synonyms_cycled,
            "duration_s": self.duration_s,
            "repetitions": [o.to_record() for o in self.outcomes],
        }


def _run_repetition(
    index: int,
    image: ImageRef,
    cfg: PipelineConfig,
    mllm: MllmBackend,
    vlm: VlmBackend,
    vfm: VfmBackend,
) -> RepetitionOutcome:
    synonym = cfg.prompt.synonym(index)
    outcome = RepetitionOutcome(index=index, synonym=synonym)
    try:
        chain = run_direct_chain if cfg.skip_decomposition else run_chain
        hierarchy, coarse_box, _session = chain(image, mllm, cfg.templates, synonym)
        coarse, fine = coarse_to_fine(
            image,
            hierarchy,
            coarse_box,
            cfg.points,
            vlm,
            vfm,
            skip_coarse_stage=cfg.skip_coarse_stage,
            skip_fine_stage=cfg.skip_fine_stage,
            box_margin=cfg.box_margin,
        )
        outcome.hierarchy = hierarchy
        outcome.coarse_box = coarse_box
        outcome.coarse = coarse
        outcome.fine = fine
    except Exception as exc:  # noqa: BLE001 - failed repetitions are excluded, not fatal
        outcome.error = f"{type(exc).__name__}: {exc}"
    return outcome


def run_pipeline(
    image: ImageRef,
    cfg: PipelineConfig,
    mllm: MllmBackend,
    vlm: VlmBackend,
    vfm: VfmBackend,
) -> Tuple[np.ndarray, PipelineDiagnostics]:
    """Full per-image pipeline: I repetitions, then consistency voting.

    Failed repetitions are excluded from the vote; the image fails only
    when no repetition survived.
    """
    start = time.perf_counter()
    indices = list(range(cfg.repeats))
    if cfg.workers > 1 and cfg.repeats > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(
                pool.map(lambda i: _run_repetition(i, image, cfg, mllm, vlm, vfm), indices)
            )
    else:
        outcomes = [_run_repetition(i, image, cfg, mllm, vlm, vfm) for i in indices]

    survivors = [o for o in outcomes if o.succeeded]
    if not survivors:
        reasons = "; ".join(o.error or "unknown" for o in outcomes)
        raise PipelineError(f"all {cfg.repeats} repetitions failed ({reasons})")
    consensus = select_consistent_mask([o.fine.mask for o in survivors])
    selected = survivors[consensus.selected_index]
    diagnostics = PipelineDiagnostics(
        outcomes=outcomes,
        distances=consensus.distances,
        selected_index=selected.index,
        synonyms_cycled=cfg.repeats > len(cfg.prompt.synonyms),
        duration_s=time.perf_counter() - start,
    )
    return consensus.mask, diagnostics
