import dataclasses

import pytest

from videoground.annotate import (
    DROP_LOW_CONFIDENCE,
    DROP_NO_DETECTION,
    OUTCOME_ERROR,
    OUTCOME_SAMPLE,
    SKIP_NO_CHUNKS,
    SKIP_NO_DETECTIONS,
    SKIP_NO_SURVIVORS,
    SKIP_TOO_SHORT,
    AnnotationConfig,
    annotate_corpus,
    detect_instances,
    identify_instances,
    select_frame_pair,
    track_instances,
)
from videoground.fixtures import annotation_corpus
from videoground.gateway import GatewayError
from videoground.gateway.stub import StubGateway
from videoground.types import validate


def test_corpus_outcomes_cover_every_label(anno_env, anno_config):
    videos, gateway = anno_env
    _, report = annotate_corpus(videos, gateway, anno_config)
    outcomes = dict(report.per_video)
    assert outcomes == {
        "anno01": OUTCOME_SAMPLE,
        "anno02": OUTCOME_SAMPLE,
        "anno03": OUTCOME_SAMPLE,
        "anno04": SKIP_NO_SURVIVORS,
        "anno05": SKIP_TOO_SHORT,
        "anno06": SKIP_NO_CHUNKS,
        "anno07": SKIP_NO_DETECTIONS,
        "anno08": OUTCOME_ERROR,
        "anno09": SKIP_NO_DETECTIONS,
        "anno10": OUTCOME_SAMPLE,
    }
    assert report.samples == 4
    assert report.errors == 1
    assert report.videos_in == 10


def test_every_sample_validates_and_matches_the_interval(anno_env, anno_config):
    videos, gateway = anno_env
    samples, _ = annotate_corpus(videos, gateway, anno_config)
    for sample in samples:
        validate(sample).raise_for_violations()
        assert sample.reference_frame_index - sample.target_frame.index == anno_config.t_ref


def test_instances_carry_reference_frame_annotations(anno_env, anno_config):
    videos, gateway = anno_env
    samples, _ = annotate_corpus(videos, gateway, anno_config)
    by_video = {s.video_id: s for s in samples}
    girl = by_video["anno01"]
    assert [i.chunk.text for i in girl.instances] == ["A girl", "her golden retriever", "the bed"]
    # Segment URIs point at the reference frame, not the target.
    assert all(i.segment_uri.endswith("/26.png") for i in girl.instances)


def test_instance_drop_accounting(anno_env, anno_config):
    videos, gateway = anno_env
    _, report = annotate_corpus(videos, gateway, anno_config)
    assert report.instance_drops[DROP_NO_DETECTION] == 8
    assert report.instance_drops[DROP_LOW_CONFIDENCE] == 2


def test_detection_confidence_threshold(anno_env):
    videos, gateway = anno_env
    config = AnnotationConfig(detection_confidence_min=0.75)
    samples, _ = annotate_corpus(videos, gateway, config)
    girl = next(s for s in samples if s.video_id == "anno01")
    # bed (0.72) falls below the raised bar; girl (0.95) and retriever (0.88) stay.
    assert [i.chunk.text for i in girl.instances] == ["A girl", "her golden retriever"]


def test_max_instances_cap_applies_before_detection(anno_env):
    videos, gateway = anno_env
    config = AnnotationConfig(max_instances_per_frame=1)
    samples, _ = annotate_corpus(videos, gateway, config)
    girl = next(s for s in samples if s.video_id == "anno01")
    assert [i.chunk.text for i in girl.instances] == ["A girl"]


def test_lost_track_recovers_at_short_interval(anno_env):
    """anno04's instance is lost from frame 20: gone at t_ref 25, present at 2."""
    videos, gateway = anno_env
    long_cfg = AnnotationConfig(t_ref=25)
    short_cfg = AnnotationConfig(t_ref=2)
    _, long_report = annotate_corpus(videos, gateway, long_cfg)
    short_samples, short_report = annotate_corpus(videos, gateway, short_cfg)
    assert dict(long_report.per_video)["anno04"] == SKIP_NO_SURVIVORS
    assert dict(short_report.per_video)["anno04"] == OUTCOME_SAMPLE
    bird = next(s for s in short_samples if s.video_id == "anno04")
    assert bird.reference_frame_index == 3


@pytest.mark.parametrize("t_ref", [2, 8, 25, 50])
def test_interval_arithmetic_for_all_sweep_settings(anno_env, t_ref):
    videos, gateway = anno_env
    samples, report = annotate_corpus(videos, gateway, AnnotationConfig(t_ref=t_ref))
    frame_counts = {v.video_id: v.frame_count for v in videos}
    for sample in samples:
        assert sample.t_ref == t_ref
        assert sample.reference_frame_index == sample.target_frame.index + t_ref
        assert sample.reference_frame_index <= frame_counts[sample.video_id]
    for video_id, outcome in report.per_video:
        if frame_counts[video_id] < 1 + t_ref:
            assert outcome in (SKIP_TOO_SHORT, SKIP_NO_CHUNKS, SKIP_NO_DETECTIONS, OUTCOME_ERROR)


def test_sliding_window_emits_one_sample_per_eligible_target(anno_env):
    videos, gateway = anno_env
    config = AnnotationConfig(t_ref=25, sliding_window=True)
    samples, _ = annotate_corpus(videos, gateway, config)
    girl = [s for s in samples if s.video_id == "anno01"]
    # 60 frames, interval 25: targets 1..35.
    assert [s.target_frame.index for s in girl] == list(range(1, 36))
    assert all(s.reference_frame_index == s.target_frame.index + 25 for s in girl)


def test_worker_count_does_not_change_results(anno_env, anno_config):
    videos, gateway = anno_env
    serial = annotate_corpus(videos, gateway, anno_config, workers=1)
    threaded = annotate_corpus(videos, gateway, anno_config, workers=8)
    assert serial == threaded


def test_gateway_error_carries_video_context(anno_env, anno_config):
    videos, gateway = anno_env
    anno08 = next(v for v in videos if v.video_id == "anno08")
    with pytest.raises(GatewayError, match="video_id=anno08"):
        identify_instances(anno08, gateway, anno_config)


def test_step_functions_compose(anno_env, anno_config):
    videos, gateway = anno_env
    video = videos[0]
    caption, chunks = identify_instances(video, gateway, anno_config)
    assert caption.startswith("A girl")
    assert len(chunks) == 5
    detections = detect_instances(video.frame_at(1), chunks, gateway, anno_config)
    assert [c.text for c, _ in detections] == ["A girl", "her golden retriever", "the bed"]
    tracks = track_instances(video, detections, gateway)
    assert len(tracks) == 3
    sample = select_frame_pair(video, tracks, caption, anno_config)
    assert sample is not None and len(sample.instances) == 3


def test_select_frame_pair_skips_when_too_short(anno_env, anno_config):
    videos, gateway = anno_env
    video = next(v for v in videos if v.video_id == "anno05")  # 20 frames
    caption, chunks = identify_instances(video, gateway, anno_config)
    detections = detect_instances(video.frame_at(1), chunks, gateway, anno_config)
    tracks = track_instances(video, detections, gateway)
    assert select_frame_pair(video, tracks, caption, anno_config) is None


def test_detect_requires_chunks(anno_env, anno_config):
    videos, gateway = anno_env
    with pytest.raises(ValueError):
        detect_instances(videos[0].frame_at(1), [], gateway, anno_config)


def test_config_validation_and_json():
    with pytest.raises(ValueError):
        AnnotationConfig(t_ref=0)
    with pytest.raises(ValueError):
        AnnotationConfig(detection_confidence_min=1.5)
    config = AnnotationConfig(t_ref=8, sliding_window=True)
    assert AnnotationConfig.from_json_dict(config.to_json_dict()) == config


def test_report_serializes(anno_env, anno_config):
    videos, gateway = anno_env
    _, report = annotate_corpus(videos, gateway, anno_config)
    d = report.to_json_dict()
    assert d["videos_in"] == 10 and d["samples"] == 4
    assert {row["outcome"] for row in d["per_video"]} >= {OUTCOME_SAMPLE, OUTCOME_ERROR}


def test_annotation_corpus_fixture_is_stable():
    a_videos, a_config = annotation_corpus()
    b_videos, b_config = annotation_corpus()
    assert a_videos == b_videos
    assert a_config == b_config
