"""Rewrite-instruction sample construction (brief caption → dense caption).

The two conversation templates are byte-exact contracts — trainer data
depends on their spacing and period placement — so they live here as the
single authoritative definition, together with the inverse extractors
used to prove round-trip exactness.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .types import PsrSample

USER_TEMPLATE = "Generate an image with prompt rewrite about {c_brief}."
ASSISTANT_TEMPLATE = (
    "Here is my detailed description: {c_dense} "
    "Here is the generated image: <img>{image_uri}</img>."
)

# Captions or URIs containing these cannot be represented unambiguously.
_RESERVED = ("<img>", "</img>")

_USER_RE = re.compile(r"\AGenerate an image with prompt rewrite about (.*)\.\Z", re.DOTALL)
_ASSISTANT_RE = re.compile(
    r"\AHere is my detailed description: (.*) "
    r"Here is the generated image: <img>(.*)</img>\.\Z",
    re.DOTALL,
)

__all__ = [
    "USER_TEMPLATE",
    "ASSISTANT_TEMPLATE",
    "RecaptionRecord",
    "PsrCorpusStats",
    "render_user_turn",
    "render_assistant_turn",
    "extract_brief",
    "extract_dense_and_image",
    "build_psr_sample",
    "corpus_stats",
]


@dataclass(frozen=True)
class RecaptionRecord:
    """A (brief, dense) caption pair for one image, with token counts."""

    image_uri: str
    c_brief: str
    c_dense: str
    brief_token_count: int
    dense_token_count: int

    def __post_init__(self) -> None:
        if not self.c_brief or not self.c_dense:
            raise ValueError("c_brief and c_dense must be non-empty")
        if not self.image_uri:
            raise ValueError("image_uri must be non-empty")
        if self.brief_token_count != len(self.c_brief.split()):
            raise ValueError("brief_token_count does not match a whitespace split of c_brief")
        if self.dense_token_count != len(self.c_dense.split()):
            raise ValueError("dense_token_count does not match a whitespace split of c_dense")

    @classmethod
    def from_captions(cls, image_uri: str, c_brief: str, c_dense: str) -> "RecaptionRecord":
        return cls(
            image_uri=image_uri,
            c_brief=c_brief,
            c_dense=c_dense,
            brief_token_count=len(c_brief.split()),
            dense_token_count=len(c_dense.split()),
        )


@dataclass(frozen=True)
class PsrCorpusStats:
    mean_brief_tokens: float
    mean_dense_tokens: float
    count: int


def render_user_turn(c_brief: str) -> str:
    return USER_TEMPLATE.format(c_brief=c_brief)


def render_assistant_turn(c_dense: str, image_uri: str) -> str:
    return ASSISTANT_TEMPLATE.format(c_dense=c_dense, image_uri=image_uri)


def extract_brief(user_turn: str) -> str:
    m = _USER_RE.match(user_turn)
    if m is None:
        raise ValueError("user turn does not match the rewrite-prompt template")
    return m.group(1)


def extract_dense_and_image(assistant_turn: str) -> tuple[str, str]:
    m = _ASSISTANT_RE.match(assistant_turn)
    if m is None:
        raise ValueError("assistant turn does not match the rewrite-response template")
    return m.group(1), m.group(2)


def build_psr_sample(rec: RecaptionRecord) -> PsrSample:
    """Render one conversation; pure, byte-stable.

    Rejects captions and URIs containing the image-tag literals, since the
    assistant template could not be decoded unambiguously otherwise.
    """
    for value, label in ((rec.c_brief, "c_brief"), (rec.c_dense, "c_dense"), (rec.image_uri, "image_uri")):
        for lit in _RESERVED:
            if lit in value:
                raise ValueError(f"{label} contains reserved literal {lit!r}")
    return PsrSample(
        c_brief=rec.c_brief,
        c_dense=rec.c_dense,
        image_uri=rec.image_uri,
        user_turn=render_user_turn(rec.c_brief),
        assistant_turn=render_assistant_turn(rec.c_dense, rec.image_uri),
    )


def corpus_stats(records: Sequence[RecaptionRecord]) -> PsrCorpusStats:
    """Arithmetic means of whitespace token counts over the corpus."""
    if not records:
        raise ValueError("corpus_stats needs a non-empty corpus")
    return PsrCorpusStats(
        mean_brief_tokens=sum(r.brief_token_count for r in records) / len(records),
        mean_dense_tokens=sum(r.dense_token_count for r in records) / len(records),
        count=len(records),
    )
