"""Backend interfaces shared by remote clients and synthetic test doubles.

Three frozen models drive the pipeline:

* a multimodal chat model (``ask``) answering image-grounded questions,
* a vision-language model (``heatmap``) scoring per-pixel text relevance,
* a promptable segmenter (``segment``) mapping points + box to a mask.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Tuple

import numpy as np

from ..geometry import Box, ImageRef, Point

DEFAULT_MLLM_MODEL = "LLaVA-1.5-13B"
DEFAULT_VLM_MODEL = "CS-ViT-L/14@336px"
DEFAULT_VFM_MODEL = "HQ-SAM-ViT-H"

ENDPOINT_ENV = {
    "mllm": "CAMOSEG_MLLM_ENDPOINT",
    "vlm": "CAMOSEG_VLM_ENDPOINT",
    "vfm": "CAMOSEG_VFM_ENDPOINT",
}
TOKEN_ENV = "CAMOSEG_API_TOKEN"


class BackendError(RuntimeError):
    """A backend could not produce an answer (transport failure after retries)."""

    def __init__(self, message: str, *, question: Optional[str] = None):
        super().__init__(message)
        self.question = question


class ProtocolError(RuntimeError):
    """A remote service replied with a malformed or mismatched payload."""


@dataclass
class BackendConfig:
    kind: str = "synthetic"  # "synthetic" | "remote"
    endpoint: Optional[str] = None
    model: str = ""
    timeout_s: float = 30.0
    retries: int = 2
    serialize_access: bool = False

    def __post_init__(self):
        if self.kind not in ("synthetic", "remote"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retry count must be >= 0")

    def resolve_endpoint(self, role: str) -> str:
        url = self.endpoint or os.environ.get(ENDPOINT_ENV[role], "")
        if not url:
            raise BackendError(
                f"no endpoint configured for the {role} backend "
                f"(set {ENDPOINT_ENV[role]} or pass one explicitly)"
            )
        return url


@dataclass
class ChatSession:
    """One image-grounded conversation; the image is bound once at creation."""

    image: ImageRef
    turns: List[Tuple[str, str]] = field(default_factory=list)  # (role, text)

    def add(self, role: str, text: str) -> None:
        self.turns.append((role, text))

    @property
    def qa_pairs(self) -> List[Tuple[str, str]]:
        questions = [t for r, t in self.turns if r == "user"]
        answers = [t for r, t in self.turns if r == "assistant"]
        return list(zip(questions, answers))


class MllmBackend(Protocol):
    def ask(self, session: ChatSession, question: str) -> str:  # pragma: no cover
        ...


class VlmBackend(Protocol):
    def heatmap(self, image: ImageRef, text: str) -> np.ndarray:  # pragma: no cover
        ...


class VfmBackend(Protocol):
    def segment(
        self,
        image: ImageRef,
        fg_points: List[Point],
        bg_points: List[Point],
        box: Box,
    ) -> np.ndarray:  # pragma: no cover
        ...


def check_points_in_box(fg_points, bg_points, box: Box) -> None:
    for x, y in list(fg_points) + list(bg_points):
        if not box.contains_point(x, y):
            raise ValueError(f"point ({x}, {y}) outside box {box.as_tuple()}")
