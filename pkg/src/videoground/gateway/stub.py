"""Deterministic in-process gateway used by every primary test.

The stub is not a network mock: it is a full implementation of the
:class:`~videoground.gateway.Gateway` interface whose behavior is a pure
function of a :class:`StubConfig`.  Fixture tables drive each service;
anything not covered by a table falls back to a documented deterministic
rule (hash-derived embeddings, default scores), so the same config plus
the same request always yields a byte-identical response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .. import seeding
from ..types import (
    BoundingBox,
    CategoricalDistribution,
    FrameRef,
    InstanceTrack,
    NounChunk,
    TrackEntry,
    VideoRecord,
    validate,
)
from . import (
    EMBED_SPACES,
    Gateway,
    ServiceError,
    TrackInit,
    check_caption,
    check_chunks,
    check_detections,
    check_distribution,
    check_scalar,
    check_track,
    check_unit_vector,
)
from .chunking import Lexicon, default_lexicon, extract_chunks, strip_leading_determiners

__all__ = ["LmTable", "StubConfig", "StubGateway", "default_lm_table", "segment_uri"]


def segment_uri(video_id: str, chunk_id: int, frame_index: int) -> str:
    """The deterministic segment naming scheme shared with real trackers."""
    return f"{video_id}/{chunk_id}/{frame_index}.png"


# ---------------------------------------------------------------------------
# Language-model table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LmTable:
    """A bigram language model over string tokens.

    ``start`` is the distribution over the first token; ``transitions``
    maps a token to its next-token distribution.  Tokens absent from
    ``transitions`` (and the eos token itself) are terminal: their next
    distribution puts all mass on ``eos_token``.  Vocab ids are indices
    into the sorted vocabulary, which keeps ids stable across processes.
    """

    start: Mapping[str, float]
    transitions: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    eos_token: str = "<eos>"

    def __post_init__(self) -> None:
        rows: list[tuple[str, Mapping[str, float]]] = [("start", self.start)]
        rows += [(f"transitions[{k!r}]", row) for k, row in self.transitions.items()]
        for label, row in rows:
            if not row:
                raise ValueError(f"LmTable {label} must be non-empty")
            if any(p < 0 for p in row.values()):
                raise ValueError(f"LmTable {label} has negative probabilities")
            total = sum(row.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"LmTable {label} sums to {total!r}, expected 1 within 1e-9")
        tokens = {self.eos_token}
        tokens.update(self.start)
        for tok, row in self.transitions.items():
            tokens.add(tok)
            tokens.update(row)
        vocab = tuple(sorted(tokens))
        object.__setattr__(self, "_vocab", vocab)
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(vocab)})

    @property
    def vocab(self) -> tuple[str, ...]:
        return self._vocab  # type: ignore[attr-defined]

    @property
    def eos_id(self) -> int:
        return self._ids[self.eos_token]  # type: ignore[attr-defined]

    def token_id(self, token: str) -> int:
        return self._ids[token]  # type: ignore[attr-defined]

    def token_text(self, token_id: int) -> str:
        return self.vocab[token_id]

    def next_row(self, prefix: Sequence[int]) -> Mapping[str, float]:
        if not prefix:
            return self.start
        last_id = prefix[-1]
        if not 0 <= last_id < len(self.vocab):
            raise ValueError(f"token id {last_id} outside vocabulary of size {len(self.vocab)}")
        last = self.vocab[last_id]
        if last == self.eos_token or last not in self.transitions:
            return {self.eos_token: 1.0}  # terminal / absorbing state
        return self.transitions[last]

    def distribution(self, prefix: Sequence[int]) -> CategoricalDistribution:
        """Full-vocabulary distribution (zeros off-support, eos always present)."""
        row = self.next_row(prefix)
        probs = [0.0] * len(self.vocab)
        for tok, p in row.items():
            probs[self.token_id(tok)] = float(p)
        return CategoricalDistribution(tuple(probs), tuple(range(len(self.vocab))))

    def to_json_dict(self) -> dict:
        return {
            "start": dict(self.start),
            "transitions": {k: dict(v) for k, v in self.transitions.items()},
            "eos_token": self.eos_token,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "LmTable":
        return cls(
            start=dict(d["start"]),
            transitions={k: dict(v) for k, v in d.get("transitions", {}).items()},
            eos_token=d.get("eos_token", "<eos>"),
        )


def default_lm_table() -> LmTable:
    """A small caption-shaped bigram model, used when no table is configured."""
    return LmTable(
        start={"a": 0.6, "the": 0.4},
        transitions={
            "a": {"brown": 0.5, "small": 0.3, "fluffy": 0.2},
            "the": {"green": 0.5, "quiet": 0.5},
            "brown": {"dog": 1.0},
            "small": {"dog": 0.6, "cat": 0.4},
            "fluffy": {"cat": 1.0},
            "green": {"park": 1.0},
            "quiet": {"garden": 1.0},
            "dog": {"running": 0.7, "sitting": 0.3},
            "cat": {"sleeping": 1.0},
            "running": {"on": 1.0},
            "sitting": {"on": 1.0},
            "sleeping": {"on": 1.0},
            "on": {"grass": 0.5, "sand": 0.5},
            "grass": {"under": 0.6, "<eos>": 0.4},
            "sand": {"<eos>": 1.0},
            "under": {"sunlight": 1.0},
            "sunlight": {"<eos>": 1.0},
            "park": {"<eos>": 1.0},
            "garden": {"<eos>": 1.0},
        },
    )


# ---------------------------------------------------------------------------
# Stub configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StubConfig:
    """Fixture tables plus deterministic fallbacks for every service.

    All tables are keyed by the request's natural identifier (frame URI,
    phrase, video id, ...).  ``error_uris`` marks assets whose every
    request fails with a service error, for failure-path tests.
    """

    seed: int = 0
    canned_captions: Mapping[str, str] = field(default_factory=dict)
    ocr_ratios: Mapping[str, float] = field(default_factory=dict)
    motion_scores: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    aesthetic_scores: Mapping[str, float] = field(default_factory=dict)
    # frame uri -> phrase -> list of (x1, y1, x2, y2, confidence)
    detections: Mapping[str, Mapping[str, Sequence[Sequence[float]]]] = field(default_factory=dict)
    # video_id -> chunk_id (stringified for JSON) -> first lost frame index
    track_lost_from: Mapping[str, Mapping[str, int]] = field(default_factory=dict)
    # space -> payload -> explicit unit vector
    embeddings: Mapping[str, Mapping[str, Sequence[float]]] = field(default_factory=dict)
    lm: LmTable | None = None
    error_uris: frozenset[str] = frozenset()
    default_ocr_ratio: float = 0.0
    default_motion_score: float = 0.1
    default_aesthetic_score: float = 5.0
    embed_dim: int = 16

    def __post_init__(self) -> None:
        object.__setattr__(self, "error_uris", frozenset(self.error_uris))

    def with_lm(self, lm: LmTable) -> "StubConfig":
        return replace(self, lm=lm)

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "canned_captions": dict(self.canned_captions),
            "ocr_ratios": dict(self.ocr_ratios),
            "motion_scores": {a: dict(row) for a, row in self.motion_scores.items()},
            "aesthetic_scores": dict(self.aesthetic_scores),
            "detections": {
                uri: {phrase: [list(b) for b in boxes] for phrase, boxes in table.items()}
                for uri, table in self.detections.items()
            },
            "track_lost_from": {v: {str(c): f for c, f in row.items()} for v, row in self.track_lost_from.items()},
            "embeddings": {s: {p: list(v) for p, v in row.items()} for s, row in self.embeddings.items()},
            "lm": self.lm.to_json_dict() if self.lm is not None else None,
            "error_uris": sorted(self.error_uris),
            "default_ocr_ratio": self.default_ocr_ratio,
            "default_motion_score": self.default_motion_score,
            "default_aesthetic_score": self.default_aesthetic_score,
            "embed_dim": self.embed_dim,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "StubConfig":
        lm = d.get("lm")
        return cls(
            seed=d.get("seed", 0),
            canned_captions=dict(d.get("canned_captions", {})),
            ocr_ratios=dict(d.get("ocr_ratios", {})),
            motion_scores={a: dict(r) for a, r in d.get("motion_scores", {}).items()},
            aesthetic_scores=dict(d.get("aesthetic_scores", {})),
            detections={
                uri: {ph: [list(b) for b in boxes] for ph, boxes in tbl.items()}
                for uri, tbl in d.get("detections", {}).items()
            },
            track_lost_from={v: {str(c): int(f) for c, f in r.items()} for v, r in d.get("track_lost_from", {}).items()},
            embeddings={s: {p: tuple(v) for p, v in r.items()} for s, r in d.get("embeddings", {}).items()},
            lm=LmTable.from_json_dict(lm) if lm else None,
            error_uris=frozenset(d.get("error_uris", ())),
            default_ocr_ratio=d.get("default_ocr_ratio", 0.0),
            default_motion_score=d.get("default_motion_score", 0.1),
            default_aesthetic_score=d.get("default_aesthetic_score", 5.0),
            embed_dim=d.get("embed_dim", 16),
        )


# ---------------------------------------------------------------------------
# Stub gateway
# ---------------------------------------------------------------------------


class StubGateway(Gateway):
    """Gateway implementation driven entirely by :class:`StubConfig`."""

    def __init__(self, config: StubConfig | None = None, lexicon: Lexicon | None = None):
        self.config = config or StubConfig()
        self._lexicon = lexicon or default_lexicon()
        self._lm = self.config.lm or default_lm_table()

    # -- helpers ----------------------------------------------------------

    def _check_uri(self, uri: str, service: str) -> None:
        if uri in self.config.error_uris:
            raise ServiceError(f"configured failure for uri {uri!r}", service=service)

    # -- vision/text services ----------------------------------------------

    def caption(self, frame: FrameRef) -> str:
        self._check_uri(frame.uri, "caption")
        text = self.config.canned_captions.get(frame.uri)
        if text is None:
            raise ServiceError(f"no canned caption for frame uri {frame.uri!r}", service="caption")
        return check_caption(text)

    def noun_chunks(self, caption: str) -> tuple[NounChunk, ...]:
        if not caption:
            raise ValueError("caption must be non-empty")
        return check_chunks(extract_chunks(caption, self._lexicon))

    def detect(self, frame: FrameRef, phrase: str) -> tuple[BoundingBox, ...]:
        if not phrase:
            raise ValueError("phrase must be non-empty")
        self._check_uri(frame.uri, "detect")
        table = self.config.detections.get(frame.uri, {})
        specs = table.get(phrase)
        if specs is None:
            specs = table.get(strip_leading_determiners(phrase, self._lexicon), ())
        boxes = [
            BoundingBox(int(s[0]), int(s[1]), int(s[2]), int(s[3]), float(s[4]) if len(s) > 4 else 1.0)
            for s in specs
        ]
        boxes.sort(key=lambda b: -b.confidence)
        return check_detections(boxes)

    def track(self, video: VideoRecord, chunk: NounChunk, init: TrackInit) -> InstanceTrack:
        validate(video).raise_for_violations()
        validate(init.box).raise_for_violations()
        if not 1 <= init.frame_index <= video.frame_count:
            raise ValueError(
                f"init frame {init.frame_index} outside video {video.video_id!r} (1..{video.frame_count})"
            )
        self._check_uri(video.frame_at(init.frame_index).uri, "track")
        lost_from = self.config.track_lost_from.get(video.video_id, {}).get(str(chunk.chunk_id))
        per_frame: dict[int, TrackEntry] = {}
        lost: set[int] = set()
        for idx in range(init.frame_index, video.frame_count + 1):
            if lost_from is not None and idx >= lost_from:
                lost.add(idx)
            else:
                per_frame[idx] = TrackEntry(init.box, segment_uri(video.video_id, chunk.chunk_id, idx))
        track = InstanceTrack(chunk=chunk, per_frame=per_frame, lost_frames=frozenset(lost))
        return check_track(track, video)

    # -- scalar scoring services --------------------------------------------

    def ocr_text_ratio(self, frame: FrameRef) -> float:
        self._check_uri(frame.uri, "ocr")
        return check_scalar(self.config.ocr_ratios.get(frame.uri, self.config.default_ocr_ratio), 0.0, 1.0, "ocr")

    def motion_score(self, a: FrameRef, b: FrameRef) -> float:
        self._check_uri(a.uri, "motion")
        self._check_uri(b.uri, "motion")
        row = self.config.motion_scores.get(a.uri, {})
        score = row.get(b.uri)
        if score is None:
            score = self.config.motion_scores.get(b.uri, {}).get(a.uri, self.config.default_motion_score)
        return check_scalar(score, 0.0, math.inf, "motion")

    def aesthetic_score(self, frame: FrameRef) -> float:
        self._check_uri(frame.uri, "aesthetic")
        score = self.config.aesthetic_scores.get(frame.uri, self.config.default_aesthetic_score)
        return check_scalar(score, 0.0, 10.0, "aesthetic")

    # -- embeddings / perceptual ---------------------------------------------

    def embed(self, payload: str, space: str) -> tuple[float, ...]:
        if space not in EMBED_SPACES:
            raise ValueError(f"unknown embedding space {space!r}; expected one of {EMBED_SPACES}")
        self._check_uri(payload, "embed")
        vec = self.config.embeddings.get(space, {}).get(payload)
        if vec is None:
            vec = seeding.hash_unit_vector(self.config.embed_dim, self.config.seed, space, payload)
        return check_unit_vector(vec)

    def perceptual_distance(self, a, b) -> float:
        if isinstance(a, str) or isinstance(b, str):
            raise ValueError("the stub perceptual backend works on pixel buffers, not URIs")
        if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
            raise ValueError(
                f"dimension mismatch: {a.width}x{a.height}x{a.channels} vs {b.width}x{b.height}x{b.channels}"
            )
        # Stub backend: mean absolute pixel difference scaled to [0, 1].
        total = sum(abs(x - y) for x, y in zip(a.data, b.data))
        return total / (len(a.data) * 255.0)

    # -- language model -------------------------------------------------------

    def lm_next_distribution(self, prefix: Sequence[int], conditioning: str) -> CategoricalDistribution:
        del conditioning  # the stub's table is conditioning-independent
        return check_distribution(self._lm.distribution(prefix), self._lm.eos_id)

    def lm_eos_id(self) -> int:
        return self._lm.eos_id

    def lm_decode(self, token_ids: Sequence[int]) -> str:
        return " ".join(self._lm.token_text(i) for i in token_ids)
