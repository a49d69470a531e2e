"""Stepwise prompt decomposition: caption -> phrase pair -> word pair -> box.

One chain runs on one chat session so every later question sees the full
earlier context. Chat replies have no guaranteed grammar, so the parsers
here pin explicit conventions:

* two-part replies split at the first of newline / ";" / "/" and shed
  "foreground:"-style labels;
* keywords normalize to a lowercase single token (last token of a
  multi-word reply, head noun approximation);
* box replies are parsed fault-tolerantly - any failure, non-finite value
  or nearly-empty result degrades to the full-image box instead of erroring.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .backends.base import ChatSession, MllmBackend
from .geometry import Box, ImageRef, clamp_box

DEFAULT_PROMPT_SYNONYMS = [
    "camouflaged object",
    "camouflaged animal",
    "camouflaged entity",
]


class ChainError(RuntimeError):
    """A chain step could not extract what it needed from the reply."""

    def __init__(self, step: str, message: str):
        super().__init__(f"{step}: {message}")
        self.step = step


@dataclass
class TaskPrompt:
    """The task-generic prompt: a list of interchangeable synonyms."""

    synonyms: List[str] = field(default_factory=lambda: list(DEFAULT_PROMPT_SYNONYMS))

    def __post_init__(self):
        self.synonyms = [s.strip() for s in self.synonyms if s.strip()]
        if not self.synonyms:
            raise ValueError("at least one prompt synonym is required")

    def synonym(self, index: int) -> str:
        return self.synonyms[index % len(self.synonyms)]


@dataclass
class QueryTemplates:
    """Question templates; "{prompt}" is replaced by the synonym in use."""

    caption: str = (
        "This image is from {prompt} detection task, "
        "describe the {prompt} in one sentence."
    )
    phrase: str = (
        "Provide a concise and comprehensive descriptive compound noun phrase "
        "for {prompt} and its environment."
    )
    keyword: str = "Name of the {prompt} and its environment in one word."
    box: str = (
        "This image is from the {prompt} detection task, "
        "output the bounding box of the {prompt}."
    )

    def __post_init__(self):
        for name in ("caption", "phrase", "keyword", "box"):
            template = getattr(self, name)
            if "{prompt}" not in template:
                raise ValueError(f"{name} template is missing a {{prompt}} slot")
            try:
                template.format(prompt="x")
            except (KeyError, IndexError) as exc:
                raise ValueError(f"{name} template is not formattable: {exc}") from exc


@dataclass
class PromptHierarchy:
    """Per-repetition text prompts: one caption, phrase pair, word pair."""

    caption: str
    fg_phrase: str
    bg_phrase: str
    fg_word: str
    bg_word: str

    def __post_init__(self):
        for name in ("caption", "fg_phrase", "bg_phrase", "fg_word", "bg_word"):
            if not getattr(self, name).strip():
                raise ValueError(f"{name} must be nonempty")
        if " " in self.fg_word or " " in self.bg_word:
            raise ValueError("keywords must be single tokens")


_LABEL_RE = re.compile(
    r"^\s*(?:the\s+)?(?:foreground|background|object|environment)\s*[:\-–—]?\s*",
    re.IGNORECASE,
)
_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")


def split_two_parts(reply: str) -> Optional[Tuple[str, str]]:
    """Split a reply into (foreground, background) at the first delimiter."""
    for delim in ("\n", ";", "/"):
        if delim in reply:
            first, second = reply.split(delim, 1)
            break
    else:
        return None
    parts = []
    for chunk in (first, second):
        chunk = _LABEL_RE.sub("", chunk.strip())
        chunk = chunk.split("\n", 1)[0].strip()
        parts.append(chunk)
    if not parts[0] or not parts[1]:
        return None
    return parts[0], parts[1]


def normalize_keyword(text: str) -> str:
    """Lowercase single token: strips punctuation, keeps the last word."""
    tokens = text.lower().split()
    if not tokens:
        return ""
    return tokens[-1].strip(".,!?:;\"'()[]{}")


def generate_caption(
    session: ChatSession, mllm: MllmBackend, templates: QueryTemplates, synonym: str
) -> str:
    reply = mllm.ask(session, templates.caption.format(prompt=synonym))
    if not reply.strip():
        raise ChainError("caption", "empty reply")
    return reply.strip()


def disentangle_phrases(
    session: ChatSession, mllm: MllmBackend, templates: QueryTemplates, synonym: str
) -> Tuple[str, str]:
    reply = mllm.ask(session, templates.phrase.format(prompt=synonym))
    parts = split_two_parts(reply)
    if parts is None:
        raise ChainError("phrase", f"could not split reply into two phrases: {reply!r}")
    return parts


def identify_keywords(
    session: ChatSession, mllm: MllmBackend, templates: QueryTemplates, synonym: str
) -> Tuple[str, str]:
    reply = mllm.ask(session, templates.keyword.format(prompt=synonym))
    parts = split_two_parts(reply)
    if parts is None:
        raise ChainError("keyword", f"could not split reply into two words: {reply!r}")
    fg, bg = (normalize_keyword(p) for p in parts)
    if not fg or not bg:
        raise ChainError("keyword", f"empty keyword after normalization: {reply!r}")
    return fg, bg


def parse_bbox_text(reply: str, width: int, height: int) -> Box:
    """Total parser: every reply yields a valid box.

    The first quadruple of numbers is used. Values all <= 1.5 are read as
    fractions of the frame, otherwise as pixels. Unparseable replies,
    non-finite values and boxes covering < 1% of the image all fall back to
    the full-image box.
    """
    full = Box.full(width, height)
    numbers = [float(m.group(0)) for m in _NUMBER_RE.finditer(reply)]
    if len(numbers) < 4:
        return full
    quad = numbers[:4]
    if not all(math.isfinite(v) for v in quad):
        return full
    if all(v <= 1.5 for v in quad):
        quad = [quad[0] * width, quad[1] * height, quad[2] * width, quad[3] * height]
    box = clamp_box(quad, width, height)
    if box.area < 0.01 * width * height:
        return full
    return box


def run_chain(
    image: ImageRef,
    mllm: MllmBackend,
    templates: QueryTemplates,
    synonym: str,
) -> Tuple[PromptHierarchy, Box, ChatSession]:
    """The full four-step chain on a fresh session.

    Returns the text prompt hierarchy, the coarse box and the session
    transcript (exactly four question/answer pairs on success).
    """
    session = ChatSession(image=image)
    caption = generate_caption(session, mllm, templates, synonym)
    fg_phrase, bg_phrase = disentangle_phrases(session, mllm, templates, synonym)
    fg_word, bg_word = identify_keywords(session, mllm, templates, synonym)
    reply = mllm.ask(session, templates.box.format(prompt=synonym))
    box = parse_bbox_text(reply, image.width, image.height)
    hierarchy = PromptHierarchy(
        caption=caption,
        fg_phrase=fg_phrase,
        bg_phrase=bg_phrase,
        fg_word=fg_word,
        bg_word=bg_word,
    )
    return hierarchy, box, session


def run_direct_chain(
    image: ImageRef,
    mllm: MllmBackend,
    templates: QueryTemplates,
    synonym: str,
) -> Tuple[PromptHierarchy, Box, ChatSession]:
    """Ablation chain without the stepwise decomposition.

    Asks for the caption and then directly for the keywords; phrase-level
    prompts degrade to the keywords and the coarse box to the full image.
    """
    session = ChatSession(image=image)
    caption = generate_caption(session, mllm, templates, synonym)
    fg_word, bg_word = identify_keywords(session, mllm, templates, synonym)
    hierarchy = PromptHierarchy(
        caption=caption,
        fg_phrase=fg_word,
        bg_phrase=bg_word,
        fg_word=fg_word,
        bg_word=bg_word,
    )
    return hierarchy, Box.full(image.width, image.height), session
