"""Core domain types shared by every pipeline stage.

Records here carry no behavior beyond construction and validation; all
stage logic lives in the sibling modules.  Everything is a frozen
dataclass so instances can be shared freely across worker threads.

Validation is deliberately report-based rather than exception-based:
``validate(record)`` returns a :class:`ValidationReport` listing every
violated invariant with a field path, and never raises.  Pipeline stages
that *require* validity call :meth:`ValidationReport.raise_for_violations`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

__all__ = [
    "VideoRecord",
    "FrameRef",
    "NounChunk",
    "BoundingBox",
    "TrackEntry",
    "InstanceTrack",
    "GroundedInstance",
    "FramePairSample",
    "InterleavedSample",
    "PsrSample",
    "CategoricalDistribution",
    "Violation",
    "ValidationReport",
    "ValidationError",
    "validate",
    "validate_track_against_video",
]


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameRef:
    """A single decoded frame, addressed by URI (pixels never live here)."""

    index: int  # 1-based position within the video
    uri: str
    width: int
    height: int


@dataclass(frozen=True)
class VideoRecord:
    """A source video: ordered frames 1..T plus provenance."""

    video_id: str
    frames: tuple[FrameRef, ...]
    fps: float
    source_tag: str = ""

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def frame_at(self, index: int) -> FrameRef:
        """Fetch the frame with 1-based ``index`` (frames are contiguous)."""
        return self.frames[index - 1]


@dataclass(frozen=True)
class NounChunk:
    """A noun phrase located inside a caption.

    ``char_span`` is a (start, end) pair of **byte** offsets into the
    UTF-8 encoding of the caption; spans at non-boundary positions are
    validation errors.
    """

    text: str
    char_span: tuple[int, int]
    chunk_id: int


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized integer thousandths of frame size.

    Coordinates are resolution-independent: 0 is the top/left edge, 999
    the bottom/right bucket.
    """

    x1: int
    y1: int
    x2: int
    y2: int
    confidence: float = 1.0


@dataclass(frozen=True)
class TrackEntry:
    """Per-frame tracking output: box plus the segment crop's URI."""

    box: BoundingBox
    segment_uri: str


@dataclass(frozen=True)
class InstanceTrack:
    """One instance followed through a video from its init frame onward."""

    chunk: NounChunk
    per_frame: Mapping[int, TrackEntry]
    lost_frames: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        # Freeze the mapping so tracks are safe to share across workers.
        object.__setattr__(self, "per_frame", MappingProxyType(dict(self.per_frame)))
        object.__setattr__(self, "lost_frames", frozenset(self.lost_frames))


@dataclass(frozen=True)
class GroundedInstance:
    """(noun chunk, box at the reference frame, segment URI at the reference frame)."""

    chunk: NounChunk
    box: BoundingBox
    segment_uri: str


@dataclass(frozen=True)
class FramePairSample:
    """A (target frame, reference annotations) training pair.

    The target frame is the generation target x_1; the grounded instances
    carry geometry observed ``t_ref`` frames later, at
    ``reference_frame_index == target_frame.index + t_ref``.
    """

    video_id: str
    target_frame: FrameRef
    reference_frame_index: int
    t_ref: int
    instances: tuple[GroundedInstance, ...]
    caption: str


@dataclass(frozen=True)
class InterleavedSample:
    """A serialized grounded caption ready for manifest storage."""

    serialized_text: str
    target_image_uri: str
    attachments: tuple[str, ...]  # segment URIs of the surviving <img> spans
    rng_seed: int  # 64-bit seed that drove drop augmentation


@dataclass(frozen=True)
class PsrSample:
    """One rewrite-training conversation: brief in, dense + image out."""

    c_brief: str
    c_dense: str
    image_uri: str
    user_turn: str
    assistant_turn: str


@dataclass(frozen=True)
class CategoricalDistribution:
    """A next-token distribution: probabilities parallel to vocab ids."""

    probs: tuple[float, ...]
    vocab_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        object.__setattr__(self, "vocab_ids", tuple(int(v) for v in self.vocab_ids))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ValidationError(ValueError):
    """Raised by :meth:`ValidationReport.raise_for_violations`."""

    def __init__(self, violations: tuple[Violation, ...]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_for_violations(self) -> None:
        if self.violations:
            raise ValidationError(self.violations)


class _Collector:
    def __init__(self) -> None:
        self.violations: list[Violation] = []

    def fail(self, path: str, message: str) -> None:
        self.violations.append(Violation(path, message))

    def check(self, cond: bool, path: str, message: str) -> bool:
        if not cond:
            self.fail(path, message)
        return cond

    def report(self) -> ValidationReport:
        return ValidationReport(tuple(self.violations))


def _check_frame(f: FrameRef, path: str, c: _Collector) -> None:
    c.check(isinstance(f.index, int) and f.index >= 1, f"{path}.index", "index must be >= 1")
    c.check(bool(f.uri), f"{path}.uri", "uri must be non-empty")
    c.check(f.width > 0, f"{path}.width", "width must be > 0")
    c.check(f.height > 0, f"{path}.height", "height must be > 0")


def _check_video(v: VideoRecord, path: str, c: _Collector) -> None:
    c.check(bool(v.video_id), f"{path}.video_id", "video_id must be non-empty")
    c.check(v.fps > 0, f"{path}.fps", "fps must be > 0")
    if not c.check(len(v.frames) > 0, f"{path}.frames", "frames must be non-empty"):
        return
    for i, f in enumerate(v.frames):
        _check_frame(f, f"{path}.frames[{i}]", c)
        if f.index != i + 1:
            c.fail(
                f"{path}.frames[{i}].index",
                f"frame indices must increase contiguously from 1 (expected {i + 1}, got {f.index})",
            )


def _check_box(b: BoundingBox, path: str, c: _Collector) -> None:
    for name in ("x1", "y1", "x2", "y2"):
        val = getattr(b, name)
        if not isinstance(val, int) or not 0 <= val <= 999:
            c.fail(f"{path}.{name}", "coordinates must be integers in [0, 999]")
    c.check(b.x1 < b.x2, f"{path}", "x1 < x2 required")
    c.check(b.y1 < b.y2, f"{path}", "y1 < y2 required")
    c.check(0.0 <= b.confidence <= 1.0, f"{path}.confidence", "confidence must be in [0, 1]")


def _check_chunk(ch: NounChunk, path: str, c: _Collector) -> None:
    c.check(bool(ch.text.strip()), f"{path}.text", "text must be non-empty after trimming")
    start, end = ch.char_span
    c.check(
        isinstance(start, int) and isinstance(end, int) and 0 <= start < end,
        f"{path}.char_span",
        "char_span must satisfy 0 <= start < end",
    )
    c.check(ch.chunk_id >= 1, f"{path}.chunk_id", "chunk_id must be >= 1")


def _span_text(caption: str, span: tuple[int, int]) -> str | None:
    """Decode caption bytes at ``span``; None if offsets are invalid."""
    raw = caption.encode("utf-8")
    start, end = span
    if not (0 <= start < end <= len(raw)):
        return None
    try:
        return raw[start:end].decode("utf-8")
    except UnicodeDecodeError:
        return None


def _check_track(t: InstanceTrack, path: str, c: _Collector) -> None:
    _check_chunk(t.chunk, f"{path}.chunk", c)
    if not c.check(len(t.per_frame) > 0, f"{path}.per_frame", "per_frame must be non-empty"):
        return
    for idx, entry in t.per_frame.items():
        c.check(isinstance(idx, int) and idx >= 1, f"{path}.per_frame[{idx}]", "frame index must be >= 1")
        _check_box(entry.box, f"{path}.per_frame[{idx}].box", c)
        c.check(bool(entry.segment_uri), f"{path}.per_frame[{idx}].segment_uri", "segment_uri must be non-empty")
    overlap = t.lost_frames & set(t.per_frame)
    c.check(not overlap, f"{path}.lost_frames", f"lost frames also present in per_frame: {sorted(overlap)}")


def _check_frame_pair(s: FramePairSample, path: str, c: _Collector) -> None:
    c.check(bool(s.video_id), f"{path}.video_id", "video_id must be non-empty")
    _check_frame(s.target_frame, f"{path}.target_frame", c)
    c.check(isinstance(s.t_ref, int) and s.t_ref >= 1, f"{path}.t_ref", "t_ref must be >= 1")
    if s.reference_frame_index != s.target_frame.index + s.t_ref:
        c.fail(
            f"{path}.reference_frame_index",
            f"must equal target_frame.index + t_ref "
            f"({s.target_frame.index} + {s.t_ref} != {s.reference_frame_index})",
        )
    c.check(bool(s.caption), f"{path}.caption", "caption must be non-empty")
    spans: list[tuple[int, int, int]] = []
    for i, inst in enumerate(s.instances):
        ipath = f"{path}.instances[{i}]"
        _check_chunk(inst.chunk, f"{ipath}.chunk", c)
        _check_box(inst.box, f"{ipath}.box", c)
        c.check(bool(inst.segment_uri), f"{ipath}.segment_uri", "segment_uri must be non-empty")
        got = _span_text(s.caption, inst.chunk.char_span)
        if got is None:
            c.fail(f"{ipath}.chunk.char_span", "span is not a valid UTF-8 byte range of caption")
        elif got != inst.chunk.text:
            c.fail(
                f"{ipath}.chunk",
                f"caption at char_span reads {got!r}, chunk text is {inst.chunk.text!r}",
            )
        spans.append((inst.chunk.char_span[0], inst.chunk.char_span[1], i))
    spans.sort()
    for (s1, e1, i1), (s2, e2, i2) in zip(spans, spans[1:]):
        if s2 < e1:
            c.fail(f"{path}.instances[{i2}].chunk.char_span", f"overlaps instances[{i1}]")


def _check_interleaved(s: InterleavedSample, path: str, c: _Collector) -> None:
    from . import seqformat  # local import: seqformat depends on types

    c.check(bool(s.target_image_uri), f"{path}.target_image_uri", "target_image_uri must be non-empty")
    c.check(
        isinstance(s.rng_seed, int) and 0 <= s.rng_seed < 2**64,
        f"{path}.rng_seed",
        "rng_seed must be a 64-bit unsigned integer",
    )
    try:
        parsed = seqformat.parse(s.serialized_text)
    except seqformat.SequenceParseError as err:
        c.fail(f"{path}.serialized_text", f"does not parse: {err}")
        return
    uris = tuple(g.segment_uri for g in parsed.groups() if g.segment_uri is not None)
    if uris != tuple(s.attachments):
        c.fail(
            f"{path}.attachments",
            f"must list the surviving <img> URIs in order (expected {list(uris)}, got {list(s.attachments)})",
        )


def _check_psr(s: PsrSample, path: str, c: _Collector) -> None:
    from . import prompt_rewrite  # local import: avoids a module cycle

    c.check(bool(s.c_brief), f"{path}.c_brief", "c_brief must be non-empty")
    c.check(bool(s.c_dense), f"{path}.c_dense", "c_dense must be non-empty")
    c.check(bool(s.image_uri), f"{path}.image_uri", "image_uri must be non-empty")
    if s.user_turn != prompt_rewrite.render_user_turn(s.c_brief):
        c.fail(f"{path}.user_turn", "does not match the rewrite-prompt template byte-for-byte")
    if s.assistant_turn != prompt_rewrite.render_assistant_turn(s.c_dense, s.image_uri):
        c.fail(f"{path}.assistant_turn", "does not match the rewrite-response template byte-for-byte")


def _check_distribution(d: CategoricalDistribution, path: str, c: _Collector) -> None:
    if not c.check(
        len(d.probs) == len(d.vocab_ids) and len(d.probs) >= 1,
        f"{path}",
        "probs and vocab_ids must be parallel and non-empty",
    ):
        return
    for i, p in enumerate(d.probs):
        c.check(p >= 0.0, f"{path}.probs[{i}]", "probabilities must be non-negative")
    total = sum(d.probs)
    c.check(abs(total - 1.0) <= 1e-9, f"{path}.probs", f"must sum to 1 within 1e-9 (got {total!r})")


_CHECKERS = {
    FrameRef: _check_frame,
    VideoRecord: _check_video,
    NounChunk: _check_chunk,
    BoundingBox: _check_box,
    InstanceTrack: _check_track,
    FramePairSample: _check_frame_pair,
    InterleavedSample: _check_interleaved,
    PsrSample: _check_psr,
    CategoricalDistribution: _check_distribution,
}


def validate(record: object) -> ValidationReport:
    """Check every invariant of a core record; never raises.

    Returns an empty report iff all invariants hold, otherwise one
    :class:`Violation` per broken invariant with its field path.
    """
    checker = _CHECKERS.get(type(record))
    if checker is None:
        return ValidationReport((Violation("$", f"no validator for {type(record).__name__}"),))
    c = _Collector()
    checker(record, "$", c)
    return c.report()


def validate_track_against_video(track: InstanceTrack, video: VideoRecord) -> ValidationReport:
    """Context check: a track may only reference frames its video has."""
    c = _Collector()
    _check_track(track, "$", c)
    valid = set(range(1, video.frame_count + 1))
    stray = (set(track.per_frame) | set(track.lost_frames)) - valid
    c.check(not stray, "$.per_frame", f"frame indices outside video: {sorted(stray)}")
    return c.report()
