"""Deterministic synthetic backends for offline end-to-end verification.

A SyntheticScene plants an object region in a frame together with the text
the models are supposed to know about it. The three synthetic backends
answer exactly from that scene:

* the chat backend echoes scene strings and the region's tight box;
* the heatmap backend returns a smoothed indicator of the region for
  object text and of the complement for environment text, plus seeded
  noise of amplitude sigma and, scaled by sigma, distractor blobs that
  mimic object-like background clutter (a camouflage failure mode);
* the segmenter returns the planted components that got a foreground
  point and no background point, clipped to the box - so a background
  point dropped onto the object visibly destroys recovery.

Everything is bit-deterministic given (scene, seed): noise generators are
keyed by a stable digest of the scene seed and the request text.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..geometry import Box, ImageRef, Point, connected_components, tight_box
from .base import ChatSession, check_points_in_box

_QUALIFIERS = (
    "well-hidden",
    "barely visible",
    "carefully concealed",
    "nearly invisible",
    "perfectly disguised",
)
_TEXTURES = (
    "moss-toned",
    "dust-speckled",
    "shadow-dappled",
    "pebble-grained",
    "straw-streaked",
)


def stable_hash(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def box_blur3(arr: np.ndarray) -> np.ndarray:
    """3x3 box mean with zero padding outside the frame."""
    a = np.asarray(arr, dtype=np.float64)
    padded = np.zeros((a.shape[0] + 2, a.shape[1] + 2))
    padded[1:-1, 1:-1] = a
    c = padded.cumsum(axis=0).cumsum(axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    h, w = a.shape
    total = c[3 : 3 + h, 3 : 3 + w] - c[3 : 3 + h, :w] - c[:h, 3 : 3 + w] + c[:h, :w]
    return total / 9.0


@dataclass
class SyntheticScene:
    identifier: str
    region: np.ndarray  # (H, W) bool, the planted object
    object_word: str
    object_phrase: str
    environment_word: str
    environment_phrase: str
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.region = np.asarray(self.region, dtype=bool)
        if self.region.ndim != 2:
            raise ValueError("region must be 2-D")
        if not self.region.any():
            raise ValueError("planted region is empty")
        if (
            self.region[0].any()
            or self.region[-1].any()
            or self.region[:, 0].any()
            or self.region[:, -1].any()
        ):
            raise ValueError("planted region must lie strictly inside the frame")
        _, count = connected_components(self.region)
        if not 1 <= count <= 3:
            raise ValueError(f"region must have 1-3 components, got {count}")
        for name in ("object_word", "object_phrase", "environment_word", "environment_phrase"):
            if not getattr(self, name).strip():
                raise ValueError(f"{name} must be nonempty")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("sigma must lie in [0, 1]")

    @property
    def height(self) -> int:
        return int(self.region.shape[0])

    @property
    def width(self) -> int:
        return int(self.region.shape[1])

    @property
    def object_box(self) -> Box:
        return tight_box(self.region)


def render_scene_image(scene: SyntheticScene) -> ImageRef:
    """Deterministic camouflage-style rendering (texture shared by fg and bg)."""
    rng = np.random.default_rng(stable_hash(scene.seed, "render"))
    base = rng.integers(70, 170, size=3)
    texture = rng.normal(0.0, 18.0, size=(scene.height, scene.width, 1))
    pixels = base[None, None, :] + texture
    # the object is a barely visible tint of the same texture
    pixels[scene.region] += np.array([6.0, -4.0, 3.0])
    pixels = np.clip(pixels, 0, 255).astype(np.uint8)
    return ImageRef(identifier=scene.identifier, pixels=pixels)


class SyntheticMllm:
    """Chat backend answering from scene metadata.

    Phrase replies carry a qualifier derived from the question text, so
    repetitions using different task-generic synonyms produce distinct
    (but still scene-consistent) phrase prompts. For the default synonym
    list the qualifier is injective per synonym; unknown synonyms fall
    back to a hash over 25 qualifier combinations.
    """

    def __init__(self, scene: SyntheticScene, suppress_box_reply: bool = False):
        self.scene = scene
        self.suppress_box_reply = suppress_box_reply

    def _qualifier(self, question: str) -> str:
        from ..prompt_chain import DEFAULT_PROMPT_SYNONYMS

        lowered = question.lower()
        index = None
        for i, synonym in enumerate(DEFAULT_PROMPT_SYNONYMS):
            if synonym in lowered:
                index = i
                break
        if index is None:
            index = stable_hash(self.scene.seed, question) % 25
        return f"{_QUALIFIERS[index % 5]} {_TEXTURES[(index // 5) % 5]}"

    def ask(self, session: ChatSession, question: str) -> str:
        q = question.lower()
        scene = self.scene
        if "bounding box" in q or "box" in q:
            if self.suppress_box_reply:
                answer = "I am not able to locate it."
            else:
                box = scene.object_box
                answer = f"[{box.x0}, {box.y0}, {box.x1}, {box.y1}]"
        elif "one word" in q or "word" in q:
            answer = f"{scene.object_word} / {scene.environment_word}"
        elif "phrase" in q:
            answer = (
                f"Foreground: {self._qualifier(question)} {scene.object_phrase}\n"
                f"Background: {scene.environment_phrase}"
            )
        elif "sentence" in q or "describe" in q:
            answer = (
                f"{scene.object_phrase.capitalize()} is hiding in "
                f"{scene.environment_phrase}, blending into the surroundings."
            )
        else:
            answer = "It blends into its surroundings."
        session.add("user", question)
        session.add("assistant", answer)
        return answer


def _distractors(scene: SyntheticScene) -> Tuple[np.ndarray, float]:
    """Object-like background blobs plus the scene's clutter amplitude.

    Blobs keep a Chebyshev distance >= 6 from the planted region so they sit
    outside its tight box; they only matter when point selection looks at
    the whole frame.
    """
    rng = np.random.default_rng(stable_hash(scene.seed, "distractors"))
    h, w = scene.height, scene.width
    ys, xs = np.nonzero(scene.region)
    ind = np.zeros((h, w), dtype=bool)
    wanted = int(rng.integers(2, 5))
    placed = 0
    for _ in range(200):
        if placed >= wanted:
            break
        r = int(rng.integers(2, 4))
        cy = int(rng.integers(r + 1, h - r - 1))
        cx = int(rng.integers(r + 1, w - r - 1))
        cheb = np.maximum(np.abs(ys - cy), np.abs(xs - cx)).min()
        if cheb < 6 + r:
            continue
        yy, xx = np.ogrid[:h, :w]
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        ind |= disc
        placed += 1
    soft = 0.7 * ind + 0.3 * box_blur3(ind)
    amplitude = float(rng.uniform(1.2, 2.6))
    return soft, amplitude


_WORD_RE_CACHE: dict = {}


def _contains_word(text: str, word: str) -> bool:
    pattern = _WORD_RE_CACHE.get(word)
    if pattern is None:
        pattern = re.compile(rf"\b{re.escape(word.lower())}\b")
        _WORD_RE_CACHE[word] = pattern
    return bool(pattern.search(text.lower()))


class SyntheticVlm:
    """Text-to-heatmap backend grounded in the planted scene."""

    def __init__(self, scene: SyntheticScene):
        self.scene = scene
        self._distractor_soft, self._amplitude = _distractors(scene)
        ind = scene.region.astype(np.float64)
        self._object_base = 0.7 * ind + 0.3 * box_blur3(ind)
        comp = 1.0 - ind
        self._environment_base = 0.7 * comp + 0.3 * box_blur3(comp)

    def _classify(self, text: str) -> str:
        scene = self.scene
        lowered = text.lower()
        if _contains_word(text, scene.object_word) or scene.object_phrase.lower() in lowered:
            return "object"
        if (
            _contains_word(text, scene.environment_word)
            or scene.environment_phrase.lower() in lowered
        ):
            return "environment"
        return "neutral"

    def heatmap(self, image: ImageRef, text: str) -> np.ndarray:
        if not text.strip():
            raise ValueError("text prompt must be nonempty")
        scene = self.scene
        if (image.height, image.width) != (scene.height, scene.width):
            raise ValueError("image dimensions do not match the scene")
        kind = self._classify(text)
        sigma = scene.sigma
        # multi-word (phrase-like) queries respond less sharply than single
        # keywords; irrelevant at sigma=0 (normalization is scale-invariant)
        # but it makes the phrase-driven coarse stage the noisier one
        scale = 0.85 if len(text.split()) >= 3 else 1.0
        if kind == "object":
            heat = scale * self._object_base + sigma * self._amplitude * self._distractor_soft
        elif kind == "environment":
            heat = (
                scale * self._environment_base
                - sigma * self._amplitude * self._distractor_soft
            )
        else:
            heat = np.full((scene.height, scene.width), 0.5)
        if sigma > 0.0:
            rng = np.random.default_rng(stable_hash(scene.seed, "noise", text))
            heat = heat + sigma * rng.random((scene.height, scene.width))
        return heat


class SyntheticVfm:
    """Promptable-segmenter oracle over the planted components.

    A component is returned when it contains at least one foreground point
    and no background point; the result is clipped to the box. Without
    foreground points (box-only fallback) the whole planted region inside
    the box is returned.
    """

    def __init__(self, scene: SyntheticScene):
        self.scene = scene
        self._labels, self._count = connected_components(scene.region)

    def segment(
        self,
        image: ImageRef,
        fg_points: List[Point],
        bg_points: List[Point],
        box: Box,
    ) -> np.ndarray:
        scene = self.scene
        if (image.height, image.width) != (scene.height, scene.width):
            raise ValueError("image dimensions do not match the scene")
        box.check_frame(scene.width, scene.height)
        check_points_in_box(fg_points, bg_points, box)
        box_mask = np.zeros((scene.height, scene.width), dtype=bool)
        box_mask[box.slices()] = True
        if not fg_points:
            return scene.region & box_mask
        fg_labels = {int(self._labels[y, x]) for x, y in fg_points}
        bg_labels = {int(self._labels[y, x]) for x, y in bg_points}
        keep = (fg_labels - {0}) - bg_labels
        mask = np.isin(self._labels, sorted(keep)) if keep else np.zeros_like(box_mask)
        return mask & box_mask
