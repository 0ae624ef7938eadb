"""Serializer and parser for the interleaved grounded-caption format.

A grounded caption rewrites each noun-chunk span of the plain caption as

    <p>{chunk}</p><b>[x1,y1,x2,y2]</b><img>{segment_uri}</img>

with the box and segment parts each independently dropped with
``drop_prob`` (default 0.3) — phrase tags are never dropped.  Non-chunk
caption text is copied verbatim, so with ``drop_prob=0`` the format is a
lossless, byte-exact encoding of the sample's caption, boxes, and
segment URIs.

Drop decisions come from a counter-based deterministic generator keyed by
``(seed, video_id, chunk_id, field)``: serialization order, worker count,
and previous draws cannot change any decision.

The parser is total, single-pass, and linear-time: every input string
yields either a :class:`ParsedSequence` or a :class:`SequenceParseError`
carrying a byte offset (offsets index the UTF-8 encoding, matching the
core-model span convention).  Grammar::

    TEXT  := (plain | group)*
    group := "<p>" chunk "</p>" [ "<b>[" int "," int "," int "," int "]</b>" ] [ "<img>" uri "</img>" ]

with integers canonical decimals in [0, 999] and plain/chunk/uri free of
the six tag literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import seeding
from .types import FramePairSample, InterleavedSample, validate

TAG_LITERALS = ("<p>", "</p>", "<b>", "</b>", "<img>", "</img>")
_TAG_RE = re.compile(rb"</?p>|</?b>|</?img>")

__all__ = [
    "TAG_LITERALS",
    "DropConfig",
    "ParsedGroup",
    "ParsedSequence",
    "SequenceParseError",
    "serialize",
    "parse",
    "render",
]


@dataclass(frozen=True)
class DropConfig:
    """Augmentation knobs for box/segment dropping."""

    drop_prob: float = 0.3
    seed: int = 0
    independent: bool = True  # False: one draw drops (or keeps) box and segment together

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ParsedGroup:
    chunk_text: str
    box: tuple[int, int, int, int] | None
    segment_uri: str | None


@dataclass(frozen=True)
class ParsedSequence:
    """Alternating plain-text strings and grounded groups, in input order."""

    parts: tuple[str | ParsedGroup, ...]

    def groups(self) -> tuple[ParsedGroup, ...]:
        return tuple(p for p in self.parts if isinstance(p, ParsedGroup))

    def skeleton(self) -> str:
        """The caption with each group collapsed back to its chunk text."""
        return "".join(p if isinstance(p, str) else p.chunk_text for p in self.parts)


class SequenceParseError(ValueError):
    def __init__(self, message: str, offset: int):
        self.message = message
        self.offset = offset
        super().__init__(f"offset {offset}: {message}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _survives(drop: DropConfig, video_id: str, chunk_id: int, field: str) -> bool:
    return seeding.unit_draw(drop.seed, video_id, chunk_id, field) >= drop.drop_prob


def serialize(sample: FramePairSample, drop: DropConfig) -> InterleavedSample:
    """Rewrite the caption's chunk spans into grounded groups.

    Raises ValueError if the sample is invalid or if the caption or any
    segment URI contains one of the reserved tag literals (the format has
    no escaping — such inputs are rejected, not mangled).
    """
    validate(sample).raise_for_violations()
    for lit in TAG_LITERALS:
        if lit in sample.caption:
            raise ValueError(f"caption contains reserved tag literal {lit!r}")
        for inst in sample.instances:
            if lit in inst.segment_uri:
                raise ValueError(f"segment uri {inst.segment_uri!r} contains reserved tag literal {lit!r}")

    caption_bytes = sample.caption.encode("utf-8")
    ordered = sorted(sample.instances, key=lambda inst: inst.chunk.char_span[0])
    out: list[bytes] = []
    attachments: list[str] = []
    pos = 0
    for inst in ordered:
        start, end = inst.chunk.char_span
        out.append(caption_bytes[pos:start])
        out.append(b"<p>" + caption_bytes[start:end] + b"</p>")
        if drop.independent:
            keep_box = _survives(drop, sample.video_id, inst.chunk.chunk_id, "box")
            keep_seg = _survives(drop, sample.video_id, inst.chunk.chunk_id, "segment")
        else:
            keep_box = keep_seg = _survives(drop, sample.video_id, inst.chunk.chunk_id, "joint")
        if keep_box:
            b = inst.box
            out.append(f"<b>[{b.x1},{b.y1},{b.x2},{b.y2}]</b>".encode("utf-8"))
        if keep_seg:
            out.append(b"<img>" + inst.segment_uri.encode("utf-8") + b"</img>")
            attachments.append(inst.segment_uri)
        pos = end
    out.append(caption_bytes[pos:])
    return InterleavedSample(
        serialized_text=b"".join(out).decode("utf-8"),
        target_image_uri=sample.target_frame.uri,
        attachments=tuple(attachments),
        rng_seed=drop.seed,
    )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_int(data: bytes, i: int) -> tuple[int, int]:
    j = i
    while j < len(data) and 0x30 <= data[j] <= 0x39:
        j += 1
    if j == i:
        raise SequenceParseError("expected digit", i)
    if j - i > 1 and data[i] == 0x30:
        raise SequenceParseError("malformed integer (leading zeros)", i)
    value = int(data[i:j])
    if value > 999:
        raise SequenceParseError("coordinate out of range", i)
    return value, j


def _expect(data: bytes, i: int, literal: bytes, what: str) -> int:
    if not data.startswith(literal, i):
        raise SequenceParseError(f"expected {what}", i)
    return i + len(literal)


def _parse_group(data: bytes, i: int) -> tuple[ParsedGroup, int]:
    group_start = i
    i += len(b"<p>")
    m = _TAG_RE.search(data, i)
    if m is None or m.group() != b"</p>":
        raise SequenceParseError("unclosed <p>", group_start)
    chunk_text = data[i : m.start()].decode("utf-8")
    i = m.end()

    box = None
    if data.startswith(b"<b>", i):
        box_start = i
        i += len(b"<b>")
        i = _expect(data, i, b"[", "'[' after <b>")
        coords = []
        for k in range(4):
            value, i = _parse_int(data, i)
            coords.append(value)
            if k < 3:
                i = _expect(data, i, b",", "','")
        i = _expect(data, i, b"]", "']'")
        if not data.startswith(b"</b>", i):
            raise SequenceParseError("unclosed <b>", box_start)
        i += len(b"</b>")
        box = tuple(coords)

    segment_uri = None
    if data.startswith(b"<img>", i):
        img_start = i
        i += len(b"<img>")
        m = _TAG_RE.search(data, i)
        if m is None or m.group() != b"</img>":
            raise SequenceParseError("unclosed <img>", img_start)
        segment_uri = data[i : m.start()].decode("utf-8")
        i = m.end()

    return ParsedGroup(chunk_text=chunk_text, box=box, segment_uri=segment_uri), i


def parse(text: str) -> ParsedSequence:
    """Parse serialized grounded-caption text; never crashes or hangs.

    Raises :class:`SequenceParseError` with a byte offset on malformed
    input; every other string yields a structure.
    """
    data = text.encode("utf-8")
    parts: list[str | ParsedGroup] = []
    i = 0
    while i < len(data):
        m = _TAG_RE.search(data, i)
        if m is None:
            parts.append(data[i:].decode("utf-8"))
            break
        if m.start() > i:
            parts.append(data[i : m.start()].decode("utf-8"))
        tag = m.group()
        if tag == b"<p>":
            group, i = _parse_group(data, m.start())
            parts.append(group)
        elif tag in (b"<b>", b"<img>"):
            raise SequenceParseError(
                f"{tag.decode()} must immediately follow a group", m.start()
            )
        else:
            raise SequenceParseError(f"unexpected {tag.decode()}", m.start())
    return ParsedSequence(tuple(parts))


def render(parsed: ParsedSequence) -> str:
    """Inverse of :func:`parse`: reproduces the exact input text."""
    out: list[str] = []
    for part in parsed.parts:
        if isinstance(part, str):
            out.append(part)
            continue
        out.append(f"<p>{part.chunk_text}</p>")
        if part.box is not None:
            x1, y1, x2, y2 = part.box
            out.append(f"<b>[{x1},{y1},{x2},{y2}]</b>")
        if part.segment_uri is not None:
            out.append(f"<img>{part.segment_uri}</img>")
    return "".join(out)
