"""Instance annotation: caption → chunks → boxes → tracks → frame pairs.

The four steps run per video, strictly in sequence (each consumes the
previous step's output), and every emitted :class:`FramePairSample` passes
core-model validation before it leaves this module.  Failures narrow as
much as possible: a chunk without a qualifying detection is dropped, an
instance whose tracking call fails is dropped, a video whose gateway calls
fail is isolated as an error — none of these abort the corpus run.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .gateway import Gateway, GatewayError, TrackInit
from .types import (
    BoundingBox,
    FramePairSample,
    GroundedInstance,
    InstanceTrack,
    NounChunk,
    VideoRecord,
    validate,
)

logger = logging.getLogger(__name__)

# Skip/outcome labels used in reports.
OUTCOME_SAMPLE = "sample"
SKIP_TOO_SHORT = "too_short"
SKIP_NO_CHUNKS = "no_chunks"
SKIP_NO_DETECTIONS = "no_detections"
SKIP_NO_SURVIVORS = "no_surviving_instances"
OUTCOME_ERROR = "error"
SKIP_REASONS = (SKIP_TOO_SHORT, SKIP_NO_CHUNKS, SKIP_NO_DETECTIONS, SKIP_NO_SURVIVORS)

DROP_NO_DETECTION = "no_detection"
DROP_LOW_CONFIDENCE = "low_confidence"
DROP_TRACK_FAILED = "track_failed"

__all__ = [
    "AnnotationConfig",
    "AnnotationReport",
    "identify_instances",
    "detect_instances",
    "track_instances",
    "select_frame_pair",
    "annotate_corpus",
]


@dataclass(frozen=True)
class AnnotationConfig:
    t_ref: int = 25  # frames between target and reference annotations
    detection_confidence_min: float = 0.35
    max_instances_per_frame: int = 12
    # Emit one pair per eligible target frame instead of only frame 1.
    # Off by default; the standard construction targets the initial frame.
    sliding_window: bool = False

    def __post_init__(self) -> None:
        if self.t_ref < 1:
            raise ValueError("t_ref must be >= 1")
        if not 0.0 <= self.detection_confidence_min <= 1.0:
            raise ValueError("detection_confidence_min must be in [0, 1]")
        if self.max_instances_per_frame < 1:
            raise ValueError("max_instances_per_frame must be a positive integer")

    def to_json_dict(self) -> dict:
        return {
            "t_ref": self.t_ref,
            "detection_confidence_min": self.detection_confidence_min,
            "max_instances_per_frame": self.max_instances_per_frame,
            "sliding_window": self.sliding_window,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "AnnotationConfig":
        return cls(
            t_ref=int(d.get("t_ref", 25)),
            detection_confidence_min=d.get("detection_confidence_min", 0.35),
            max_instances_per_frame=int(d.get("max_instances_per_frame", 12)),
            sliding_window=bool(d.get("sliding_window", False)),
        )


@dataclass(frozen=True)
class AnnotationReport:
    videos_in: int
    samples: int
    skips: Mapping[str, int]
    instance_drops: Mapping[str, int]
    errors: int
    per_video: tuple[tuple[str, str], ...]  # (video_id, outcome label)

    def to_json_dict(self) -> dict:
        return {
            "videos_in": self.videos_in,
            "samples": self.samples,
            "skips": dict(self.skips),
            "instance_drops": dict(self.instance_drops),
            "errors": self.errors,
            "per_video": [{"video_id": v, "outcome": o} for v, o in self.per_video],
        }


def identify_instances(
    video: VideoRecord, gateway: Gateway, config: AnnotationConfig
) -> tuple[str, tuple[NounChunk, ...]]:
    """Caption the initial frame and extract its concrete noun chunks.

    Chunks come back ordered by span start; at most
    ``max_instances_per_frame`` are kept (first by caption order).
    """
    try:
        caption = gateway.caption(video.frame_at(1))
        chunks = gateway.noun_chunks(caption)
    except GatewayError as err:
        raise err.add_context(video_id=video.video_id)
    if len(chunks) > config.max_instances_per_frame:
        chunks = chunks[: config.max_instances_per_frame]
    return caption, chunks


def _detect_with_reasons(
    frame, chunks: Sequence[NounChunk], gateway: Gateway, config: AnnotationConfig
) -> tuple[list[tuple[NounChunk, BoundingBox]], Counter]:
    detections: list[tuple[NounChunk, BoundingBox]] = []
    drops: Counter = Counter()
    for chunk in chunks:
        boxes = gateway.detect(frame, chunk.text)
        if not boxes:
            logger.debug("chunk %r: no detection, dropped", chunk.text)
            drops[DROP_NO_DETECTION] += 1
            continue
        best = boxes[0]  # gateway contract: sorted by confidence descending
        if best.confidence < config.detection_confidence_min:
            logger.debug(
                "chunk %r: best confidence %.3f < %.3f, dropped",
                chunk.text, best.confidence, config.detection_confidence_min,
            )
            drops[DROP_LOW_CONFIDENCE] += 1
            continue
        detections.append((chunk, best))
    return detections, drops


def detect_instances(
    frame, chunks: Sequence[NounChunk], gateway: Gateway, config: AnnotationConfig
) -> list[tuple[NounChunk, BoundingBox]]:
    """One best box per chunk (argmax confidence, must clear the minimum)."""
    if not chunks:
        raise ValueError("chunks must be non-empty")
    detections, _ = _detect_with_reasons(frame, chunks, gateway, config)
    return detections


def track_instances(
    video: VideoRecord,
    detections: Sequence[tuple[NounChunk, BoundingBox]],
    gateway: Gateway,
) -> list[InstanceTrack]:
    """Track each detected instance from frame 1; a failed instance is dropped."""
    tracks: list[InstanceTrack] = []
    for chunk, box in detections:
        try:
            tracks.append(gateway.track(video, chunk, TrackInit.from_box(1, box)))
        except GatewayError as err:
            logger.warning("video %s chunk %r: tracking failed, instance dropped: %s",
                           video.video_id, chunk.text, err)
    return tracks


def select_frame_pair(
    video: VideoRecord,
    tracks: Sequence[InstanceTrack],
    caption: str,
    config: AnnotationConfig,
    *,
    target_index: int = 1,
) -> FramePairSample | None:
    """Pair the target frame with reference-frame annotations, or skip.

    Skips (returns None) when the video is too short for the configured
    interval or when no instance survives to the reference frame.
    """
    reference_index = target_index + config.t_ref
    if reference_index > video.frame_count:
        return None
    instances = tuple(
        GroundedInstance(t.chunk, t.per_frame[reference_index].box, t.per_frame[reference_index].segment_uri)
        for t in tracks
        if reference_index in t.per_frame
    )
    if not instances:
        return None
    sample = FramePairSample(
        video_id=video.video_id,
        target_frame=video.frame_at(target_index),
        reference_frame_index=reference_index,
        t_ref=config.t_ref,
        instances=instances,
        caption=caption,
    )
    validate(sample).raise_for_violations()
    return sample


def _annotate_one(
    video: VideoRecord, gateway: Gateway, config: AnnotationConfig
) -> tuple[str, list[FramePairSample], Counter]:
    """Returns (outcome label, samples, instance drop counts) for one video."""
    drops: Counter = Counter()
    report = validate(video)
    if not report.ok:
        logger.warning("video %s failed validation: %s", video.video_id, report.violations[0])
        return OUTCOME_ERROR, [], drops
    try:
        caption, chunks = identify_instances(video, gateway, config)
        if not chunks:
            return SKIP_NO_CHUNKS, [], drops
        detections, drops = _detect_with_reasons(video.frame_at(1), chunks, gateway, config)
        if not detections:
            return SKIP_NO_DETECTIONS, [], drops
        n_tracks_expected = len(detections)
        tracks = track_instances(video, detections, gateway)
        drops[DROP_TRACK_FAILED] += n_tracks_expected - len(tracks)
    except (GatewayError, ValueError) as err:
        logger.warning("video %s errored during annotation: %s", video.video_id, err)
        return OUTCOME_ERROR, [], drops

    targets = [1]
    if config.sliding_window:
        targets = list(range(1, video.frame_count - config.t_ref + 1)) or [1]
    samples = []
    for t in targets:
        sample = select_frame_pair(video, tracks, caption, config, target_index=t)
        if sample is not None:
            samples.append(sample)
    if samples:
        return OUTCOME_SAMPLE, samples, drops
    if video.frame_count < 1 + config.t_ref:
        return SKIP_TOO_SHORT, [], drops
    return SKIP_NO_SURVIVORS, [], drops


def annotate_corpus(
    videos: Sequence[VideoRecord],
    gateway: Gateway,
    config: AnnotationConfig,
    *,
    workers: int = 1,
) -> tuple[list[FramePairSample], AnnotationReport]:
    """Run the four annotation steps over a filtered corpus.

    Pure function of (corpus, stub config, annotation config): outputs are
    byte-identical across reruns and worker counts, merged in corpus order.
    """
    videos = list(videos)
    if workers < 1:
        raise ValueError("workers must be >= 1")

    if workers == 1:
        results = [_annotate_one(v, gateway, config) for v in videos]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda v: _annotate_one(v, gateway, config), videos))

    samples: list[FramePairSample] = []
    skips: Counter = Counter()
    drops: Counter = Counter()
    errors = 0
    per_video: list[tuple[str, str]] = []
    for video, (outcome, video_samples, video_drops) in zip(videos, results):
        per_video.append((video.video_id, outcome))
        drops.update(video_drops)
        if outcome == OUTCOME_SAMPLE:
            samples.extend(video_samples)
        elif outcome == OUTCOME_ERROR:
            errors += 1
        else:
            skips[outcome] += 1
    report = AnnotationReport(
        videos_in=len(videos),
        samples=len(samples),
        skips=dict(skips),
        instance_drops=dict(drops),
        errors=errors,
        per_video=tuple(per_video),
    )
    return samples, report
