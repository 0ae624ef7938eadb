import dataclasses

import pytest

from videoground.types import (
    BoundingBox,
    CategoricalDistribution,
    FramePairSample,
    FrameRef,
    GroundedInstance,
    InstanceTrack,
    NounChunk,
    TrackEntry,
    ValidationError,
    VideoRecord,
    validate,
    validate_track_against_video,
)


def _frame(i: int, vid: str = "v1") -> FrameRef:
    return FrameRef(index=i, uri=f"{vid}/frame/{i}.png", width=640, height=360)


def _video(n: int, vid: str = "v1") -> VideoRecord:
    return VideoRecord(video_id=vid, frames=tuple(_frame(i, vid) for i in range(1, n + 1)), fps=24.0)


def _pair(caption: str, chunks: list[tuple[str, int, int]]) -> FramePairSample:
    instances = tuple(
        GroundedInstance(
            NounChunk(text=t, char_span=(s, e), chunk_id=i + 1),
            BoundingBox(10 * (i + 1), 10, 10 * (i + 1) + 5, 500, 0.8),
            f"v1/{i + 1}/26.png",
        )
        for i, (t, s, e) in enumerate(chunks)
    )
    return FramePairSample(
        video_id="v1",
        target_frame=_frame(1),
        reference_frame_index=26,
        t_ref=25,
        instances=instances,
        caption=caption,
    )


class TestVideoRecord:
    def test_valid(self):
        assert validate(_video(3)).ok

    def test_frame_indices_must_be_contiguous_from_one(self):
        v = VideoRecord("v1", (_frame(1), _frame(3)), fps=24.0)
        report = validate(v)
        assert not report.ok
        assert any("contiguously" in viol.message for viol in report.violations)

    def test_empty_frames_rejected(self):
        assert not validate(VideoRecord("v1", (), fps=24.0)).ok

    def test_fps_positive(self):
        assert not validate(VideoRecord("v1", (_frame(1),), fps=0.0)).ok

    def test_frame_at_is_one_based(self):
        v = _video(5)
        assert v.frame_at(1) is v.frames[0]
        assert v.frame_at(5) is v.frames[4]
        assert v.frame_count == 5


class TestBoundingBox:
    @pytest.mark.parametrize("box", [
        BoundingBox(0, 0, 999, 999),
        BoundingBox(1, 2, 3, 4, 0.0),
        BoundingBox(1, 2, 3, 4, 1.0),
    ])
    def test_valid(self, box):
        assert validate(box).ok

    @pytest.mark.parametrize("box", [
        BoundingBox(5, 0, 5, 10),        # x1 == x2
        BoundingBox(5, 10, 6, 10),       # y1 == y2
        BoundingBox(-1, 0, 10, 10),      # below range
        BoundingBox(0, 0, 1000, 10),     # above range
        BoundingBox(0, 0, 10, 10, 1.5),  # confidence out of range
    ])
    def test_invalid(self, box):
        assert not validate(box).ok

    def test_non_integer_coordinates_rejected(self):
        assert not validate(BoundingBox(0.5, 0, 10, 10)).ok


class TestFramePair:
    def test_valid_sample(self):
        sample = _pair("a dog on the bed", [("a dog", 0, 5), ("the bed", 9, 16)])
        validate(sample).raise_for_violations()

    def test_span_text_mismatch(self):
        sample = _pair("a dog on the bed", [("a cat", 0, 5)])
        report = validate(sample)
        assert any("chunk text" in v.message for v in report.violations)

    def test_reference_arithmetic_enforced(self):
        good = _pair("a dog", [("a dog", 0, 5)])
        bad = dataclasses.replace(good, reference_frame_index=27)
        assert validate(good).ok
        assert any("target_frame.index + t_ref" in v.message for v in validate(bad).violations)

    def test_spans_are_byte_offsets(self):
        # "café " is 6 bytes; the chunk starts after it.
        sample = _pair("café dog", [("dog", 6, 9)])
        assert validate(sample).ok

    def test_span_must_fall_on_utf8_boundaries(self):
        sample = _pair("café dog", [("caf", 0, 4)])  # splits the two-byte é
        report = validate(sample)
        assert any("UTF-8" in v.message for v in report.violations)

    def test_overlapping_spans_rejected(self):
        sample = _pair("a dog bed", [("a dog", 0, 5), ("dog bed", 2, 9)])
        assert any("overlaps" in v.message for v in validate(sample).violations)

    def test_raise_for_violations(self):
        sample = _pair("a dog", [("a dog", 0, 99)])
        with pytest.raises(ValidationError) as exc_info:
            validate(sample).raise_for_violations()
        assert exc_info.value.violations


def test_instance_track_mapping_is_immutable():
    track = InstanceTrack(
        chunk=NounChunk("a dog", (0, 5), 1),
        per_frame={1: TrackEntry(BoundingBox(0, 0, 10, 10), "v1/1/1.png")},
    )
    with pytest.raises(TypeError):
        track.per_frame[2] = TrackEntry(BoundingBox(0, 0, 10, 10), "x")  # type: ignore[index]


def test_track_lost_and_present_frames_disjoint():
    track = InstanceTrack(
        chunk=NounChunk("a dog", (0, 5), 1),
        per_frame={1: TrackEntry(BoundingBox(0, 0, 10, 10), "v1/1/1.png")},
        lost_frames=frozenset({1}),
    )
    assert any("lost frames" in v.message for v in validate(track).violations)


def test_track_frames_must_exist_in_video():
    track = InstanceTrack(
        chunk=NounChunk("a dog", (0, 5), 1),
        per_frame={1: TrackEntry(BoundingBox(0, 0, 10, 10), "v1/1/1.png"),
                   9: TrackEntry(BoundingBox(0, 0, 10, 10), "v1/1/9.png")},
    )
    assert validate_track_against_video(track, _video(9)).ok
    report = validate_track_against_video(track, _video(5))
    assert any("outside video" in v.message for v in report.violations)


class TestCategoricalDistribution:
    def test_probabilities_must_sum_to_one(self):
        assert validate(CategoricalDistribution((0.5, 0.5), (0, 1))).ok
        assert not validate(CategoricalDistribution((0.5, 0.4), (0, 1))).ok

    def test_negative_probability_rejected(self):
        assert not validate(CategoricalDistribution((1.5, -0.5), (0, 1))).ok

    def test_parallel_lengths(self):
        assert not validate(CategoricalDistribution((1.0,), (0, 1))).ok

    def test_coercion(self):
        d = CategoricalDistribution([1], [0])
        assert d.probs == (1.0,) and isinstance(d.probs[0], float)


def test_validate_unknown_type_reports_rather_than_raises():
    report = validate(object())
    assert not report.ok
    assert "no validator" in report.violations[0].message
