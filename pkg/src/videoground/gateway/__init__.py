"""Client abstraction over the external neural services.

Every model the pipeline consults (captioner, chunker, detector, tracker,
OCR, motion, aesthetic, embedding, perceptual distance, language model)
sits behind the :class:`Gateway` interface.  Two implementations ship:

* :class:`videoground.gateway.stub.StubGateway` — deterministic,
  in-process, fixture-table driven; used by the entire test suite.
* :class:`videoground.gateway.http.HttpGateway` — speaks the JSON wire
  protocol (single JSON object POSTed to ``{base_url}/{name}``) to a real
  adapter service.

Both validate their responses against the core-model invariants before
returning them; a response that fails validation surfaces as a
:class:`ServiceError`.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from ..types import (
    BoundingBox,
    CategoricalDistribution,
    FrameRef,
    InstanceTrack,
    NounChunk,
    VideoRecord,
    validate,
    validate_track_against_video,
)

if TYPE_CHECKING:  # pixel buffers live in evalharness; avoid a module cycle
    from ..evalharness import ImageBuffer

SERVICE_NAMES = (
    "caption",
    "noun_chunks",
    "detect",
    "track",
    "ocr",
    "motion",
    "aesthetic",
    "embed",
    "perceptual",
    "lm",
)

EMBED_SPACES = ("dino", "clip_image", "clip_text")

__all__ = [
    "SERVICE_NAMES",
    "EMBED_SPACES",
    "GatewayError",
    "TransportError",
    "ServiceError",
    "ServiceEndpoint",
    "TrackInit",
    "Gateway",
]


class GatewayError(Exception):
    """Base class for all gateway failures."""

    def __init__(self, message: str, *, service: str | None = None):
        self.service = service
        self.context: dict[str, object] = {}
        super().__init__(message)

    def add_context(self, **kv: object) -> "GatewayError":
        """Attach caller context (e.g. video_id) to an in-flight error."""
        self.context.update(kv)
        return self

    def __str__(self) -> str:
        base = super().__str__()
        if self.service:
            base = f"[{self.service}] {base}"
        if self.context:
            ctx = ", ".join(f"{k}={v}" for k, v in sorted(self.context.items()))
            base = f"{base} ({ctx})"
        return base


class TransportError(GatewayError):
    """Timeout or connection failure — retryable."""


class ServiceError(GatewayError):
    """The service answered but the answer is unusable — never retried."""


@dataclass(frozen=True)
class ServiceEndpoint:
    """Where one named service lives and how patiently to call it."""

    name: str
    base_url: str
    timeout_ms: int = 10_000
    retry_limit: int = 2

    def __post_init__(self) -> None:
        if self.name not in SERVICE_NAMES:
            raise ValueError(f"unknown service name {self.name!r}; expected one of {SERVICE_NAMES}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")

    @property
    def url(self) -> str:
        return f"{self.base_url.rstrip('/')}/{self.name}"


@dataclass(frozen=True)
class TrackInit:
    """Tracker initialization: the detected box and its center point prompt."""

    frame_index: int
    box: BoundingBox
    center: tuple[float, float]

    @classmethod
    def from_box(cls, frame_index: int, box: BoundingBox) -> "TrackInit":
        return cls(frame_index, box, ((box.x1 + box.x2) / 2.0, (box.y1 + box.y2) / 2.0))


class Gateway(abc.ABC):
    """The ten service operations, plus LM vocabulary helpers."""

    @abc.abstractmethod
    def caption(self, frame: FrameRef) -> str: ...

    @abc.abstractmethod
    def noun_chunks(self, caption: str) -> tuple[NounChunk, ...]: ...

    @abc.abstractmethod
    def detect(self, frame: FrameRef, phrase: str) -> tuple[BoundingBox, ...]: ...

    @abc.abstractmethod
    def track(self, video: VideoRecord, chunk: NounChunk, init: TrackInit) -> InstanceTrack: ...

    @abc.abstractmethod
    def ocr_text_ratio(self, frame: FrameRef) -> float: ...

    @abc.abstractmethod
    def motion_score(self, a: FrameRef, b: FrameRef) -> float: ...

    @abc.abstractmethod
    def aesthetic_score(self, frame: FrameRef) -> float: ...

    @abc.abstractmethod
    def embed(self, payload: str, space: str) -> tuple[float, ...]: ...

    @abc.abstractmethod
    def perceptual_distance(self, a: "ImageBuffer | str", b: "ImageBuffer | str") -> float: ...

    @abc.abstractmethod
    def lm_next_distribution(
        self, prefix: Sequence[int], conditioning: str
    ) -> CategoricalDistribution: ...

    @abc.abstractmethod
    def lm_eos_id(self) -> int:
        """Vocab id of the end-of-sequence token."""

    @abc.abstractmethod
    def lm_decode(self, token_ids: Sequence[int]) -> str:
        """Map sampled token ids back to text."""


# ---------------------------------------------------------------------------
# Response validation (shared by stub and HTTP client)
# ---------------------------------------------------------------------------


def _invalid(service: str, detail: str) -> ServiceError:
    return ServiceError(f"response violates core invariants: {detail}", service=service)


def check_caption(text: str) -> str:
    if not isinstance(text, str) or not text:
        raise _invalid("caption", "caption must be a non-empty string")
    return text


def check_chunks(chunks: Sequence[NounChunk]) -> tuple[NounChunk, ...]:
    out = tuple(chunks)
    for ch in out:
        report = validate(ch)
        if not report.ok:
            raise _invalid("noun_chunks", str(report.violations[0]))
    starts = [ch.char_span[0] for ch in out]
    if starts != sorted(starts):
        raise _invalid("noun_chunks", "chunks must be ordered by char_span.start")
    return out


def check_detections(boxes: Sequence[BoundingBox]) -> tuple[BoundingBox, ...]:
    out = tuple(boxes)
    for b in out:
        report = validate(b)
        if not report.ok:
            raise _invalid("detect", str(report.violations[0]))
    confs = [b.confidence for b in out]
    if any(c1 < c2 for c1, c2 in zip(confs, confs[1:])):
        raise _invalid("detect", "detections must be sorted by confidence descending")
    return out


def check_track(track: InstanceTrack, video: VideoRecord) -> InstanceTrack:
    report = validate_track_against_video(track, video)
    if not report.ok:
        raise _invalid("track", str(report.violations[0]))
    return track


def check_scalar(value: float, lo: float, hi: float, service: str) -> float:
    if not isinstance(value, (int, float)) or math.isnan(value) or not lo <= value <= hi:
        raise _invalid(service, f"score {value!r} outside [{lo}, {hi}]")
    return float(value)


def check_unit_vector(vec: Sequence[float], service: str = "embed") -> tuple[float, ...]:
    out = tuple(float(v) for v in vec)
    if not out:
        raise _invalid(service, "empty embedding vector")
    norm = math.sqrt(sum(v * v for v in out))
    if abs(norm - 1.0) > 1e-6:
        raise _invalid(service, f"embedding norm {norm!r} not within 1e-6 of 1")
    return out


def check_distribution(dist: CategoricalDistribution, eos_id: int) -> CategoricalDistribution:
    report = validate(dist)
    if not report.ok:
        raise _invalid("lm", str(report.violations[0]))
    if eos_id not in dist.vocab_ids:
        raise _invalid("lm", f"distribution lacks the end-of-sequence id {eos_id}")
    return dist
