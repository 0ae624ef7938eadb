"""Three-stage video filter cascade: subtitles, scene changes, aesthetics.

Stages run in a fixed order (subtitle → scene-change → aesthetic) and a
rejected video is charged to the *first* stage that rejects it.  Boundary
rules are deliberate and tested: rejection thresholds are strict
(``score > max`` rejects, exactly-at-threshold keeps), the aesthetic keep
rule is inclusive (``mean >= min`` keeps).

Per-video failures (gateway errors, invalid records) never abort a corpus
run: the video gets an ``"error"`` verdict and the cascade moves on, so
``total == retained + rejected + errors`` always holds exactly.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .gateway import Gateway, GatewayError
from .types import VideoRecord, validate

logger = logging.getLogger(__name__)

STAGE_SUBTITLE = "subtitle"
STAGE_SCENE_CHANGE = "scene_change"
STAGE_AESTHETIC = "aesthetic"
VERDICT_ERROR = "error"
STAGES = (STAGE_SUBTITLE, STAGE_SCENE_CHANGE, STAGE_AESTHETIC)

__all__ = [
    "FilterConfig",
    "FilterReport",
    "STAGES",
    "VERDICT_ERROR",
    "sample_frame_indices",
    "subtitle_filter",
    "scene_change_filter",
    "aesthetic_filter",
    "run_filters",
]


@dataclass(frozen=True)
class FilterConfig:
    subtitle_ratio_max: float = 0.01  # max OCR text ratio before a video counts as subtitled
    motion_score_max: float = 0.8  # max consecutive-pair motion before it counts as a cut
    aesthetic_min: float = 4.5  # min mean aesthetic score to keep
    frames_sampled_per_video: int = 8  # uniform sample, always includes first and last frame

    def __post_init__(self) -> None:
        if not 0.0 <= self.subtitle_ratio_max <= 1.0:
            raise ValueError("subtitle_ratio_max must be in [0, 1]")
        if not self.motion_score_max >= 0.0:
            raise ValueError("motion_score_max must be >= 0")
        if not 0.0 <= self.aesthetic_min <= 10.0:
            raise ValueError("aesthetic_min must be in [0, 10]")
        if self.frames_sampled_per_video < 1:
            raise ValueError("frames_sampled_per_video must be a positive integer")

    def to_json_dict(self) -> dict:
        d = {
            "subtitle_ratio_max": self.subtitle_ratio_max,
            "motion_score_max": self.motion_score_max,
            "aesthetic_min": self.aesthetic_min,
            "frames_sampled_per_video": self.frames_sampled_per_video,
        }
        if math.isinf(self.motion_score_max):
            d["motion_score_max"] = "inf"  # JSON has no Infinity literal
        return d

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "FilterConfig":
        def num(value, default):
            if value is None:
                return default
            if isinstance(value, str):
                return float(value)  # accepts "inf"
            return value

        return cls(
            subtitle_ratio_max=num(d.get("subtitle_ratio_max"), 0.01),
            motion_score_max=num(d.get("motion_score_max"), 0.8),
            aesthetic_min=num(d.get("aesthetic_min"), 4.5),
            frames_sampled_per_video=int(d.get("frames_sampled_per_video", 8)),
        )


@dataclass(frozen=True)
class FilterReport:
    total: int
    retained: int
    rejected_by_stage: Mapping[str, int]
    errors: int
    per_video_verdicts: tuple[tuple[str, str | None], ...]

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "retained": self.retained,
            "rejected_by_stage": dict(self.rejected_by_stage),
            "errors": self.errors,
            "per_video_verdicts": [
                {"video_id": vid, "verdict": verdict} for vid, verdict in self.per_video_verdicts
            ],
        }


def sample_frame_indices(frame_count: int, k: int) -> tuple[int, ...]:
    """Evenly spaced 1-based indices including the first and last frame."""
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    if k >= frame_count:
        return tuple(range(1, frame_count + 1))
    if k == 1:
        return (1,)
    raw = [1 + round((frame_count - 1) * i / (k - 1)) for i in range(k)]
    out: list[int] = []
    for idx in raw:
        if not out or idx != out[-1]:
            out.append(idx)
    return tuple(out)


def _sampled_frames(video: VideoRecord, config: FilterConfig):
    return [video.frame_at(i) for i in sample_frame_indices(video.frame_count, config.frames_sampled_per_video)]


def subtitle_filter(video: VideoRecord, gateway: Gateway, config: FilterConfig) -> bool:
    """Keep unless any sampled frame's OCR text ratio exceeds the threshold."""
    try:
        ratios = [gateway.ocr_text_ratio(f) for f in _sampled_frames(video, config)]
    except GatewayError as err:
        raise err.add_context(video_id=video.video_id)
    return max(ratios) <= config.subtitle_ratio_max


def scene_change_filter(video: VideoRecord, gateway: Gateway, config: FilterConfig) -> bool:
    """Keep unless any consecutive sampled-frame pair scores above the motion cap."""
    if video.frame_count < 2:
        raise ValueError(f"scene_change_filter needs >= 2 frames, video {video.video_id!r} has {video.frame_count}")
    frames = _sampled_frames(video, config)
    try:
        scores = [gateway.motion_score(a, b) for a, b in zip(frames, frames[1:])]
    except GatewayError as err:
        raise err.add_context(video_id=video.video_id)
    return max(scores) <= config.motion_score_max


def aesthetic_filter(video: VideoRecord, gateway: Gateway, config: FilterConfig) -> bool:
    """Keep iff the mean sampled aesthetic score reaches the minimum (inclusive)."""
    frames = _sampled_frames(video, config)
    try:
        scores = [gateway.aesthetic_score(f) for f in frames]
    except GatewayError as err:
        raise err.add_context(video_id=video.video_id)
    return sum(scores) / len(scores) >= config.aesthetic_min


_STAGE_FNS = (
    (STAGE_SUBTITLE, subtitle_filter),
    (STAGE_SCENE_CHANGE, scene_change_filter),
    (STAGE_AESTHETIC, aesthetic_filter),
)


def _verdict(video: VideoRecord, gateway: Gateway, config: FilterConfig) -> str | None:
    """None = keep; otherwise the rejecting stage or the error pseudo-verdict."""
    report = validate(video)
    if not report.ok:
        logger.warning("video %s failed validation: %s", video.video_id, report.violations[0])
        return VERDICT_ERROR
    try:
        for stage, fn in _STAGE_FNS:
            if not fn(video, gateway, config):
                return stage
    except (GatewayError, ValueError) as err:
        logger.warning("video %s errored during filtering: %s", video.video_id, err)
        return VERDICT_ERROR
    return None


def run_filters(
    corpus: Sequence[VideoRecord],
    gateway: Gateway,
    config: FilterConfig,
    *,
    workers: int = 1,
) -> tuple[list[VideoRecord], FilterReport]:
    """Apply the cascade to a corpus; verdicts merge in corpus order.

    Worker count affects throughput only: per-video verdicts are a pure
    function of (video, config, gateway stub), so reports are identical
    for any ``workers`` value.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    if workers == 1:
        verdicts = [_verdict(v, gateway, config) for v in corpus]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(lambda v: _verdict(v, gateway, config), corpus))

    retained = [v for v, verdict in zip(corpus, verdicts) if verdict is None]
    rejected = {stage: 0 for stage in STAGES}
    errors = 0
    for verdict in verdicts:
        if verdict in rejected:
            rejected[verdict] += 1
        elif verdict == VERDICT_ERROR:
            errors += 1
    report = FilterReport(
        total=len(corpus),
        retained=len(retained),
        rejected_by_stage=rejected,
        errors=errors,
        per_video_verdicts=tuple((v.video_id, verdict) for v, verdict in zip(corpus, verdicts)),
    )
    return retained, report
